// Acceptance suite: one pass/fail line per criterion, with the measured
// quantity, its tolerance, and the wall time against the runtime budget.
// The determinism criterion reruns the whole verification and byte-compares
// the serialized reports.

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "perbranch/verify.hpp"

using namespace perbranch;

namespace {

struct Criterion {
    std::string label;
    std::vector<std::string> checks;  // names in the verify report
    double budget_seconds;            // 0 = no stated budget
};

const VerifyCheck* find_check(const VerifyReport& report, const std::string& name) {
    for (const auto& c : report.checks)
        if (c.name == name) return &c;
    return nullptr;
}

}  // namespace

int main() {
    VerifyOptions vo;
    std::printf("running the verification battery (first pass)...\n");
    const VerifyReport first = run_verify("all", vo);
    std::printf("running the verification battery (second pass, determinism)...\n");
    const VerifyReport second = run_verify("all", vo);

    const std::vector<Criterion> criteria = {
        {"rescale-equivalence", {"rescale/endpoint-agreement"}, 10.0},
        {"degree-laws",
         {"degree/scaling-law", "degree/additivity", "degree/block-law"},
         30.0},
        {"index-degree-chain", {"index/p-map-chain"}, 60.0},
        {"manifold-degree-consistency", {"degree/manifold-consistency"}, 30.0},
        {"linear3d-quantities", {"degree/linear3d-quantities"}, 10.0},
        {"dae-equivalence", {"dae/constraint-circle", "dae/constraint-sphere"}, 20.0},
        {"branch-closed-form", {"branch/closed-form-amplitude"}, 30.0},
        {"branch-existence", {"branch/linear3d", "branch/two-species"}, 120.0},
        {"dde-oracle", {"dde/method-of-steps-oracle"}, 0.0},
    };

    bool all_ok = true;
    int index = 0;
    std::set<std::string> consumed;
    for (const auto& criterion : criteria) {
        ++index;
        bool passed = true;
        double seconds = 0.0;
        double worst_ratio = 0.0;
        std::string detail;
        for (const auto& name : criterion.checks) {
            consumed.insert(name);
            const VerifyCheck* check = find_check(first, name);
            if (!check) {
                passed = false;
                detail += " missing:" + name;
                continue;
            }
            passed = passed && check->passed;
            seconds += check->seconds;
            const double ratio = check->tolerance > 0
                                     ? check->measured / check->tolerance
                                     : check->measured;
            worst_ratio = std::max(worst_ratio, ratio);
            if (!check->passed) detail += " failed:" + name;
        }
        if (criterion.budget_seconds > 0 && seconds >= criterion.budget_seconds) {
            passed = false;
            detail += " over-budget";
        }
        all_ok = all_ok && passed;
        if (criterion.budget_seconds > 0)
            std::printf("%s %02d %-28s worst(measured/tol)=%-10.3g (%.2fs < %.0fs)%s\n",
                        passed ? "PASS" : "FAIL", index, criterion.label.c_str(),
                        worst_ratio, seconds, criterion.budget_seconds,
                        detail.c_str());
        else
            std::printf("%s %02d %-28s worst(measured/tol)=%-10.3g (%.2fs)%s\n",
                        passed ? "PASS" : "FAIL", index, criterion.label.c_str(),
                        worst_ratio, seconds, detail.c_str());
    }

    // Determinism: identical serialized reports across the two passes.
    {
        ++index;
        const std::string a = verify_report_json(first, vo).dump();
        const std::string b = verify_report_json(second, vo).dump();
        const bool passed = (a == b) && first.passed() && second.passed();
        all_ok = all_ok && passed;
        std::printf("%s %02d %-28s byte-compare of %zu-byte reports%s\n",
                    passed ? "PASS" : "FAIL", index, "determinism", a.size(),
                    a == b ? "" : " (reports differ)");
    }

    // Every remaining verification check must pass as well.
    int extra_total = 0, extra_passed = 0;
    for (const auto& check : first.checks) {
        if (consumed.count(check.name)) continue;
        ++extra_total;
        if (check.passed) {
            ++extra_passed;
        } else {
            all_ok = false;
            std::printf("FAIL --  supplementary %s\n", check.name.c_str());
        }
    }
    std::printf("supplementary checks: %d/%d passed\n", extra_passed, extra_total);
    std::printf("acceptance: %s\n", all_ok ? "ALL CRITERIA PASS" : "FAILURES PRESENT");
    return all_ok ? 0 : 1;
}
