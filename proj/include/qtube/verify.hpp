#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qtube {

struct CheckResult {
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<CheckResult> verify_loss(std::uint64_t seed = 20240817);
std::vector<CheckResult> verify_models(std::uint64_t seed = 20240817);
std::vector<CheckResult> verify_analysis(int n_mc = 20000,
                                         std::uint64_t seed = 20240817);

/// Loss, model, and analysis suites combined (the `verify` subcommand).
std::vector<CheckResult> verify_all(int n_mc = 20000,
                                    std::uint64_t seed = 20240817);

} // namespace qtube
