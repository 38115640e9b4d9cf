#include "tvnet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvnet::lp {

std::string to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Tableau in canonical form w.r.t. `basis`: columns of `basis` are unit vectors.
class Tableau {
public:
    Tableau(RowMatrix t, Vector rhs, std::vector<Index> basis, const Options& opts)
        : t_(std::move(t)), rhs_(std::move(rhs)), basis_(std::move(basis)), opts_(opts) {}

    // Minimizes cost over columns with allowed[j] set. Returns false on unboundedness.
    Status optimize(const Vector& cost, const std::vector<bool>& allowed, int& iterations, int max_iterations) {
        const Index m = t_.rows();
        const Index ncol = t_.cols();
        // Reduced costs d = cost - cost_B^T T.
        Vector d = cost;
        for (Index i = 0; i < m; ++i) {
            const double cb = cost[basis_[static_cast<std::size_t>(i)]];
            if (cb != 0.0) d -= cb * t_.row(i).transpose();
        }
        int degenerate_run = 0;
        while (true) {
            if (iterations >= max_iterations) return Status::iteration_limit;
            const bool bland = degenerate_run > opts_.degenerate_limit;
            Index enter = -1;
            double best = -opts_.cost_tol;
            for (Index j = 0; j < ncol; ++j) {
                if (!allowed[static_cast<std::size_t>(j)]) continue;
                if (d[j] < best) {
                    enter = j;
                    if (bland) break;
                    best = d[j];
                }
            }
            if (enter < 0) return Status::optimal;

            Index leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < m; ++i) {
                const double a = t_(i, enter);
                if (a <= opts_.pivot_tol) continue;
                const double ratio = std::max(rhs_[i], 0.0) / a;
                const double slack = 1e-12 * std::max(1.0, std::abs(best_ratio));
                if (leave < 0 || ratio < best_ratio - slack) {
                    leave = i;
                    best_ratio = ratio;
                } else if (ratio <= best_ratio + slack) {
                    const bool take = bland ? basis_[static_cast<std::size_t>(i)] <
                                                  basis_[static_cast<std::size_t>(leave)]
                                            : a > t_(leave, enter);
                    if (take) {
                        leave = i;
                        best_ratio = std::min(best_ratio, ratio);
                    }
                }
            }
            if (leave < 0) return Status::unbounded;

            degenerate_run = best_ratio <= 1e-13 ? degenerate_run + 1 : 0;
            pivot(leave, enter);
            const double dj = d[enter];
            if (dj != 0.0) d -= dj * t_.row(leave).transpose();
            d[enter] = 0.0;
            ++iterations;
        }
    }

    void pivot(Index r, Index c) {
        const double piv = t_(r, c);
        t_.row(r) /= piv;
        rhs_[r] /= piv;
        t_(r, c) = 1.0;
        for (Index i = 0; i < t_.rows(); ++i) {
            if (i == r) continue;
            const double f = t_(i, c);
            if (f == 0.0) continue;
            t_.row(i) -= f * t_.row(r);
            rhs_[i] -= f * rhs_[r];
            t_(i, c) = 0.0;
        }
        basis_[static_cast<std::size_t>(r)] = c;
    }

    [[nodiscard]] const RowMatrix& table() const { return t_; }
    [[nodiscard]] const Vector& rhs() const { return rhs_; }
    [[nodiscard]] const std::vector<Index>& basis() const { return basis_; }

private:
    RowMatrix t_;
    Vector rhs_;
    std::vector<Index> basis_;
    Options opts_;
};

}  // namespace

Result solve(const Vector& c, const Matrix& A, const Vector& b, const Options& opts) {
    const Index m = A.rows();
    const Index n = A.cols();
    if (c.size() != n || b.size() != m) throw InvalidArgument("LP dimensions do not agree");
    if (!A.allFinite() || !b.allFinite() || !c.allFinite()) throw InvalidArgument("LP data must be finite");

    std::vector<Index> negative_rows;
    for (Index i = 0; i < m; ++i)
        if (b[i] < 0.0) negative_rows.push_back(i);
    const Index k = static_cast<Index>(negative_rows.size());
    const Index ncol = n + m + k;

    // Standard form [A | I | art] with rows of negative rhs negated.
    RowMatrix std_form = RowMatrix::Zero(m, ncol);
    Vector rhs(m);
    std::vector<Index> basis(static_cast<std::size_t>(m));
    Index art = 0;
    for (Index i = 0; i < m; ++i) {
        const double sign = b[i] < 0.0 ? -1.0 : 1.0;
        std_form.row(i).head(n) = sign * A.row(i);
        std_form(i, n + i) = sign;
        rhs[i] = sign * b[i];
        if (sign < 0.0) {
            std_form(i, n + m + art) = 1.0;
            basis[static_cast<std::size_t>(i)] = n + m + art;
            ++art;
        } else {
            basis[static_cast<std::size_t>(i)] = n + i;
        }
    }

    Options o = opts;
    const double scale = std::max(1.0, A.size() ? A.cwiseAbs().maxCoeff() : 1.0);
    o.pivot_tol = opts.pivot_tol * scale;
    const int max_it = opts.max_iterations > 0 ? opts.max_iterations : static_cast<int>(50 * (m + ncol));

    Tableau tab(std_form, rhs, basis, o);
    Result res;
    std::vector<bool> allowed(static_cast<std::size_t>(ncol), true);

    if (k > 0) {
        Vector phase1 = Vector::Zero(ncol);
        phase1.tail(k).setOnes();
        const Status s1 = tab.optimize(phase1, allowed, res.iterations, max_it);
        if (s1 == Status::iteration_limit) {
            res.status = s1;
            return res;
        }
        double infeas = 0.0;
        for (Index i = 0; i < m; ++i)
            if (tab.basis()[static_cast<std::size_t>(i)] >= n + m) infeas += std::max(tab.rhs()[i], 0.0);
        res.infeasibility = infeas;
        if (infeas > opts.feasibility_tol * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
            res.status = Status::infeasible;
            return res;
        }
        // Drive zero-level artificials out of the basis where possible.
        for (Index i = 0; i < m; ++i) {
            if (tab.basis()[static_cast<std::size_t>(i)] < n + m) continue;
            Index col = -1;
            double mag = o.pivot_tol;
            for (Index j = 0; j < n + m; ++j) {
                if (std::abs(tab.table()(i, j)) > mag) {
                    mag = std::abs(tab.table()(i, j));
                    col = j;
                }
            }
            if (col >= 0) tab.pivot(i, col);
        }
        for (Index j = n + m; j < ncol; ++j) allowed[static_cast<std::size_t>(j)] = false;
    }

    Vector cost = Vector::Zero(ncol);
    cost.head(n) = c;
    const Status s2 = tab.optimize(cost, allowed, res.iterations, max_it);
    res.status = s2;
    if (s2 != Status::optimal) return res;

    Vector full = Vector::Zero(ncol);
    for (Index i = 0; i < m; ++i) full[tab.basis()[static_cast<std::size_t>(i)]] = tab.rhs()[i];

    // Re-solve the optimal basis against the untouched data.
    Matrix basis_cols(m, m);
    for (Index i = 0; i < m; ++i) basis_cols.col(i) = std_form.col(tab.basis()[static_cast<std::size_t>(i)]);
    const Eigen::PartialPivLU<Matrix> lu(basis_cols);
    const Vector refined = lu.solve(rhs);
    const double residual = (basis_cols * refined - rhs).cwiseAbs().maxCoeff();
    const double tol = opts.feasibility_tol * std::max(1.0, rhs.cwiseAbs().maxCoeff());
    if (refined.allFinite() && refined.minCoeff() >= -tol && residual <= tol) {
        const double tiny = 1e-13 * std::max(1.0, refined.cwiseAbs().maxCoeff());
        full.setZero();
        for (Index i = 0; i < m; ++i) {
            const double v = refined[i];
            full[tab.basis()[static_cast<std::size_t>(i)]] = std::abs(v) <= tiny ? 0.0 : std::max(v, 0.0);
        }
    }
    res.x = full.head(n);
    res.objective = c.dot(res.x);
    return res;
}

}  // namespace tvnet::lp
