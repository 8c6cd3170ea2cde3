#pragma once

#include <json.hpp>

#include "perbranch/continuation.hpp"
#include "perbranch/problems.hpp"

namespace perbranch {

struct VerifyOptions {
    int threads = 1;
    std::uint64_t seed = 0;
};

struct VerifyCheck {
    std::string name;
    bool passed = false;
    double measured = 0.0;   // worst measured deviation (or mismatch count)
    double tolerance = 0.0;  // allowed bound
    std::string detail;
    double seconds = 0.0;    // wall time; reported on stdout, never serialized
};

struct VerifyReport {
    std::string suite;
    std::vector<VerifyCheck> checks;
    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

/// Suite names accepted by run_verify: rescale, degree-laws, index-chain,
/// dae, branches, all.
const std::vector<std::string>& verify_suite_names();

VerifyReport run_verify(const std::string& suite, const VerifyOptions& opts = {});

/// Deterministic JSON form of a report (no timestamps, no timings).
nlohmann::json verify_report_json(const VerifyReport& report, const VerifyOptions& opts);

}  // namespace perbranch
