#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "perbranch/verify.hpp"

using namespace perbranch;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Vec parse_vector(const std::string& csv) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        values.push_back(std::stod(csv.substr(pos, next - pos)));
        pos = next + 1;
    }
    Vec v(static_cast<int>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<int>(i)] = values[i];
    return v;
}

// Box syntax: "lo:hi,lo:hi,..." or "lo..hi,..." (one pair per axis), or one
// pair replicated over all axes.
Box parse_box(const std::string& text, int dim) {
    std::vector<std::pair<double, double>> pairs;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        std::string token = text.substr(pos, next - pos);
        if (const std::size_t dots = token.find(".."); dots != std::string::npos)
            token.replace(dots, 2, ":");
        const std::size_t colon = token.find(':');
        if (colon == std::string::npos)
            throw ConfigError("box axis \"" + token + "\" is not lo:hi");
        pairs.emplace_back(std::stod(token.substr(0, colon)),
                           std::stod(token.substr(colon + 1)));
        pos = next + 1;
    }
    if (pairs.size() == 1) pairs.assign(static_cast<std::size_t>(dim), pairs.front());
    if (static_cast<int>(pairs.size()) != dim)
        throw ConfigError("box must list one lo:hi pair per axis (" +
                          std::to_string(dim) + " expected)");
    Vec lo(dim), hi(dim);
    for (int i = 0; i < dim; ++i) {
        lo[i] = pairs[static_cast<std::size_t>(i)].first;
        hi[i] = pairs[static_cast<std::size_t>(i)].second;
    }
    return Box(lo, hi);
}

json config_header(const ProblemSpec& spec) {
    json j;
    j["problem"] = spec.name();
    if (!spec.config_text().empty()) {
        j["config"] = json::parse(spec.config_text());
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(spec_hash(spec.config_text())));
        j["hash"] = buf;
    }
    return j;
}

void write_csv_header(std::ostream& out, const ProblemSpec& spec) {
    out << "# " << config_header(spec).dump() << "\n";
}

json zero_records_json(const DegreeResult& r) {
    json zeros = json::array();
    for (const auto& z : r.zeros) {
        json zj;
        zj["location"] = std::vector<double>(z.location.begin(), z.location.end());
        zj["sign"] = z.sign;
        zj["newton_residual"] = z.newton_residual;
        zj["jacobian_det"] = z.jacobian_det;
        zj["degenerate"] = z.degenerate;
        zeros.push_back(zj);
    }
    return zeros;
}

json degree_json(const DegreeResult& r) {
    json j;
    j["value"] = r.value;
    j["certified"] = r.certified;
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    j["zeros"] = zero_records_json(r);
    return j;
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        out << j.dump(2) << "\n";
    }
}

int run_flow(const std::string& problem, double lambda, double t1, double tol,
             const std::string& x0_csv, const std::string& csv_path) {
    ProblemSpec spec = build_problem(problem);
    IntegrateOptions io;
    io.tol = tol;
    Vec x0 = parse_vector(x0_csv);
    if (x0.size() != spec.state_dim())
        throw ConfigError("--x0 must have " + std::to_string(spec.state_dim()) +
                          " components");

    TrajectorySegment seg;
    if (lambda == 0.0 || !spec.has_perturbation()) {
        seg = integrate_ode(spec, x0, 0.0, t1, io);
    } else {
        seg = integrate_dde(spec, lambda, constant_history(x0, spec.lag()), t1, io);
    }

    std::ofstream out(csv_path);
    if (!out) throw ConfigError("cannot open CSV output: " + csv_path);
    write_csv_header(out, spec);
    out << "t";
    for (int i = 0; i < spec.state_dim(); ++i) out << ",x" << i;
    out << ",constraint_residual\n";
    for (std::size_t i = 0; i < seg.nodes().size(); ++i) {
        out << fmt17(seg.nodes()[i]);
        for (int c = 0; c < spec.state_dim(); ++c)
            out << "," << fmt17(seg.states()[i][c]);
        const double res = spec.manifold().is_flat()
                               ? 0.0
                               : spec.manifold().residual(seg.states()[i]);
        out << "," << fmt17(res) << "\n";
    }
    std::cout << "wrote " << seg.nodes().size() << " rows to " << csv_path
              << (seg.truncated() ? " (truncated at the escape radius)" : "") << "\n";
    return kExitOk;
}

int run_poincare(const std::string& problem, bool with_coefficient,
                 const std::string& x0_csv, double tol, bool want_index,
                 const std::string& box_text, int threads, std::uint64_t seed) {
    ProblemSpec spec = build_problem(problem);
    IntegrateOptions io;
    io.tol = tol;
    std::cout << "# " << config_header(spec).dump() << "\n";
    if (want_index) {
        DegreeOptions dopts;
        dopts.threads = threads;
        dopts.seed = seed;
        dopts.newton_xtol = 1e-9;
        dopts.newton_ftol = 1e-7;
        dopts.boundary_floor = 10.0 * dopts.newton_ftol;
        const Box box = parse_box(box_text, spec.state_dim());
        auto pmap = [&](const Vec& x) { return poincare_map(spec, with_coefficient, x, io); };
        std::cout << "fixed_point_index = " << fixed_point_index(pmap, box, dopts)
                  << "\n";
        return kExitOk;
    }
    const Vec image = poincare_map(spec, with_coefficient, parse_vector(x0_csv), io);
    std::cout << "P_T(x0) =";
    for (int i = 0; i < image.size(); ++i) std::cout << " " << fmt17(image[i]);
    std::cout << "\n";
    return kExitOk;
}

int run_degree(const std::string& problem, const std::string& box_text,
               const std::string& out_path, int threads, std::uint64_t seed) {
    ProblemSpec spec = build_problem(problem);
    DegreeOptions dopts;
    dopts.threads = threads;
    dopts.seed = seed;
    const Box box = parse_box(box_text, spec.state_dim());
    auto f = [&spec](const Vec& p) { return spec.f(p); };
    const FieldDegreeResult r = field_degree(spec.manifold(), f, box, dopts);

    json j = config_header(spec);
    j["magnitude"] = r.magnitude;
    j["sign_ambiguous"] = r.sign_ambiguous;
    j["brouwer"] = degree_json(r.brouwer);
    emit(j, out_path);
    return kExitOk;
}

int run_trivial_pairs(const std::string& problem, const std::string& box_text,
                      const std::string& out_path, int threads, std::uint64_t seed) {
    ProblemSpec spec = build_problem(problem);
    ContinuationOptions copts;
    DegreeOptions dopts;
    dopts.threads = threads;
    dopts.seed = seed;
    const Box box = parse_box(box_text, spec.state_dim());
    const TrivialPairsResult r = find_trivial_pairs(spec, box, copts, dopts);

    json j = config_header(spec);
    j["degree_magnitude"] = r.degree.magnitude;
    j["degree"] = degree_json(r.degree.brouwer);
    json pairs = json::array();
    for (const auto& pair : r.pairs) {
        json pj;
        const Vec& p = pair.history.values.front();
        pj["point"] = std::vector<double>(p.begin(), p.end());
        pj["residual"] = pair.residual_norm;
        pj["is_trivial"] = pair.is_trivial;
        if (pair.index) pj["index"] = *pair.index;
        pj["uncertified"] = pair.uncertified;
        pairs.push_back(pj);
    }
    j["pairs"] = pairs;
    emit(j, out_path);
    return kExitOk;
}

int run_branch(const std::string& problem, double lambda_max,
               const std::string& box_text, const std::string& out_path,
               const std::string& csv_path, double tol, int threads,
               std::uint64_t seed) {
    ProblemSpec spec = build_problem(problem);
    ContinuationOptions copts;
    copts.integrate.tol = tol;
    DegreeOptions dopts;
    dopts.threads = threads;
    dopts.seed = seed;
    const Box state_box = parse_box(box_text, spec.state_dim());

    const TrivialPairsResult trivial = find_trivial_pairs(spec, state_box, copts, dopts);
    if (trivial.degree.magnitude == 0 || trivial.pairs.empty())
        throw NumericError("the field degree over the state box is zero (or no "
                           "trivial pair was found); the branch hypothesis fails");

    BranchRegion region{0.0, lambda_max, state_box};
    const Branch branch = continue_branch(spec, trivial.pairs.front(), region, copts);

    json j = config_header(spec);
    j["degree_magnitude"] = trivial.degree.magnitude;
    j["degree"] = degree_json(trivial.degree.brouwer);
    j["termination"] = to_string(branch.termination);
    j["arclength"] = branch.arclength;
    j["lambda_zero_nontrivial"] = branch.lambda_zero_nontrivial;
    json pairs = json::array();
    for (const auto& pair : branch.pairs) {
        json pj;
        pj["lambda"] = pair.lambda;
        pj["residual"] = pair.residual_norm;
        pj["is_trivial"] = pair.is_trivial;
        json nodes = json::array();
        for (const auto& v : pair.history.values)
            nodes.push_back(std::vector<double>(v.begin(), v.end()));
        pj["nodes"] = nodes;
        pj["orbit_max_norm"] = pair.orbit.max_norm(0.0, spec.period());
        json samples = json::array();
        const int n_samples = 33;
        for (int s = 0; s <= n_samples; ++s) {
            const double t = spec.period() * s / n_samples;
            const Vec y = pair.orbit.eval(t);
            json row = json::array();
            row.push_back(t);
            for (int c = 0; c < y.size(); ++c) row.push_back(y[c]);
            samples.push_back(row);
        }
        pj["orbit_samples"] = samples;
        pairs.push_back(pj);
    }
    j["pairs"] = pairs;
    if (!out_path.empty()) emit(j, out_path);

    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw ConfigError("cannot open CSV output: " + csv_path);
        write_csv_header(out, spec);
        out << "lambda,orbit_max_norm,residual\n";
        for (const auto& pair : branch.pairs)
            out << fmt17(pair.lambda) << ","
                << fmt17(pair.orbit.max_norm(0.0, spec.period())) << ","
                << fmt17(pair.residual_norm) << "\n";
    }
    std::cout << "branch: " << branch.pairs.size() << " pairs, termination "
              << to_string(branch.termination) << ", arclength "
              << fmt17(branch.arclength) << ", |degree| = "
              << trivial.degree.magnitude << "\n";
    return kExitOk;
}

int run_verify_cmd(const std::string& suite, const std::string& out_path, int threads,
                   std::uint64_t seed) {
    VerifyOptions vo;
    vo.threads = threads;
    vo.seed = seed;
    const VerifyReport report = run_verify(suite, vo);
    for (const auto& c : report.checks)
        std::printf("%-4s %-40s measured=%-12.5g tol=%-10.3g (%.2fs) %s\n",
                    c.passed ? "PASS" : "FAIL", c.name.c_str(), c.measured,
                    c.tolerance, c.seconds, c.detail.c_str());
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << verify_report_json(report, vo).dump(2) << "\n";
    }
    std::printf("%s: %zu checks, %s\n", suite.c_str(), report.checks.size(),
                report.passed() ? "all passed" : "FAILURES PRESENT");
    return report.passed() ? kExitOk : kExitVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"periodic-branch toolkit: flows, translation operators, degrees, "
                 "and branches of periodic solutions of delay-perturbed "
                 "separated-variables systems"};
    app.require_subcommand(1);

    std::string problem, x0_csv = "0", box_text = "-1:1", out_path, csv_path;
    double lambda = 0.0, t1 = 1.0, tol = 1e-10, lambda_max = 10.0;
    bool with_coefficient = false, want_index = false;
    int threads = 1;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_problem = true) {
        if (needs_problem)
            cmd->add_option("--problem", problem, "registry name or config file path")
                ->required();
        cmd->add_option("--tol", tol, "integrator tolerance");
        cmd->add_option("--seed", seed, "sampling seed");
        cmd->add_option("--threads", threads, "degree subdivision workers");
    };

    CLI::App* flow = app.add_subcommand("flow", "integrate and emit a CSV trajectory");
    add_common(flow);
    flow->add_option("--lambda", lambda, "perturbation parameter");
    flow->add_option("--t1", t1, "final time")->required();
    flow->add_option("--x0", x0_csv, "initial point, comma separated")->required();
    flow->add_option("--csv", csv_path, "CSV output path")->required();

    CLI::App* poincare = app.add_subcommand("poincare", "T-translation operator");
    add_common(poincare);
    poincare->add_flag("--with-coefficient", with_coefficient,
                       "use the weighted equation a(t) Phi");
    poincare->add_option("--x0", x0_csv, "initial point, comma separated");
    poincare->add_flag("--index", want_index, "fixed point index over --box");
    poincare->add_option("--box", box_text, "box as lo:hi per axis");

    CLI::App* degree = app.add_subcommand("degree", "field degree over a box");
    add_common(degree);
    degree->add_option("--box", box_text, "box as lo:hi per axis")->required();
    degree->add_option("--out", out_path, "JSON output path (stdout otherwise)");

    CLI::App* trivial = app.add_subcommand("trivial-pairs",
                                           "zeros of the field as trivial pairs");
    add_common(trivial);
    trivial->add_option("--box", box_text, "box as lo:hi per axis")->required();
    trivial->add_option("--out", out_path, "JSON output path (stdout otherwise)");

    CLI::App* branch = app.add_subcommand("branch", "continue a branch of pairs");
    add_common(branch);
    branch->add_option("--lambda-max", lambda_max, "continuation endpoint in lambda");
    branch->add_option("--box", box_text, "state box as lo:hi per axis")->required();
    branch->add_option("--out", out_path, "JSON output path");
    branch->add_option("--csv", csv_path, "CSV output path");

    CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
    std::string suite = "all";
    verify->add_option("suite", suite, "rescale|degree-laws|index-chain|dae|branches|all");
    verify->add_option("--out", out_path, "JSON report path");
    add_common(verify, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (flow->parsed()) return run_flow(problem, lambda, t1, tol, x0_csv, csv_path);
        if (poincare->parsed())
            return run_poincare(problem, with_coefficient, x0_csv, tol, want_index,
                                box_text, threads, seed);
        if (degree->parsed()) return run_degree(problem, box_text, out_path, threads, seed);
        if (trivial->parsed())
            return run_trivial_pairs(problem, box_text, out_path, threads, seed);
        if (branch->parsed())
            return run_branch(problem, lambda_max, box_text, out_path, csv_path, tol,
                              threads, seed);
        if (verify->parsed()) return run_verify_cmd(suite, out_path, threads, seed);
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
