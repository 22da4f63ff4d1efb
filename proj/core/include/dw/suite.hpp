#pragma once

#include <string>
#include <vector>

namespace dw {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    bool relaxed = false;  // reduced-scale run with adjusted tolerances
    double seconds = 0.0;
    double budget_seconds = 0.0;
    std::vector<std::pair<std::string, double>> metrics;
    std::string detail;

    std::string line() const;  // one formatted pass/fail line
};

struct SuiteConfig {
    bool reduced = false;        // 32x32-class smoke variant, flagged as relaxed
    unsigned long long seed = 20260810ull;
    std::string out_dir;         // when set, criteria drop CSV artifacts here
    bool enforce_budget = true;  // fold the wall-clock budget into pass/fail
};

// Criteria are numbered 1..10.
CriterionResult run_criterion(int id, const SuiteConfig& cfg);
std::vector<CriterionResult> run_acceptance_suite(const SuiteConfig& cfg);

}  // namespace dw
