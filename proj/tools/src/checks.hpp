#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace fbsc::cli {

struct CheckRow {
    std::string name;
    double value;
    double tolerance;
    bool pass;
};

// Consistency battery on the configured model at small N: finite-difference
// residual and Hessian, endpoint gradient, branch antisymmetry, the zero
// (+-) diagonal, Hessian symmetry and the free-particle determinant.
std::vector<CheckRow> run_checks(const RunConfig& config, int n_steps = 12, int repeats = 5);

}  // namespace fbsc::cli
