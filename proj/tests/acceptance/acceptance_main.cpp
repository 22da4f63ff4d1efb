// Acceptance gate: runs every criterion at the stated scale and tolerance,
// prints one pass/fail line each, exits nonzero on any failure.
#include <cstring>
#include <iostream>

#include "dw/suite.hpp"

int main(int argc, char** argv) {
    dw::SuiteConfig cfg;
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--reduced") == 0)
            cfg.reduced = true;
        else if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            only = std::atoi(argv[++i]);
        else if (std::strcmp(argv[i], "--no-budget") == 0)
            cfg.enforce_budget = false;
    }
    bool all = true;
    if (only > 0) {
        dw::CriterionResult r = dw::run_criterion(only, cfg);
        std::cout << r.line() << std::endl;
        all = r.pass;
    } else {
        for (int id = 1; id <= 10; ++id) {
            dw::CriterionResult r = dw::run_criterion(id, cfg);
            std::cout << r.line() << std::endl;
            all = all && r.pass;
        }
    }
    std::cout << (all ? "ACCEPTANCE: ALL PASS" : "ACCEPTANCE: FAILURES PRESENT") << std::endl;
    return all ? 0 : 1;
}
