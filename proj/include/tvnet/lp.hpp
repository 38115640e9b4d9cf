#pragma once

#include <string>
#include <vector>

#include "tvnet/types.hpp"

namespace tvnet::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(Status s);

struct Options {
    int max_iterations = 0;  // 0 picks 50 * (rows + columns)
    double pivot_tol = 1e-10;
    double cost_tol = 1e-11;
    double feasibility_tol = 1e-9;
    // Consecutive degenerate pivots tolerated before switching to Bland's rule.
    int degenerate_limit = 50;
};

struct Result {
    Status status = Status::iteration_limit;
    Vector x;
    double objective = 0.0;
    int iterations = 0;
    // Phase-one residual: sum of artificial variables at the end of phase one.
    double infeasibility = 0.0;
};

/// Dense two-phase primal simplex for
///     minimize c^T x  subject to  A x <= b,  x >= 0.
/// The optimal basis is re-solved with an LU factorization of the original
/// data, so vertex solutions carry full working precision.
Result solve(const Vector& c, const Matrix& A, const Vector& b, const Options& opts = {});

}  // namespace tvnet::lp
