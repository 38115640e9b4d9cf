#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tvnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Time indices are 1-based throughout the public API: observation i sits at
// t_i = i / n for i = 1..n.
using Index = std::ptrdiff_t;

// Bad input or violated precondition. Maps to CLI exit code 1.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Solver failure, infeasibility or ill-conditioning. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An n x p panel of observations sampled on the grid t_i = i/n.
class TimeSeriesPanel {
public:
    TimeSeriesPanel() = default;
    explicit TimeSeriesPanel(Matrix data);

    [[nodiscard]] const Matrix& data() const noexcept { return data_; }
    [[nodiscard]] Index n() const noexcept { return data_.rows(); }
    [[nodiscard]] Index p() const noexcept { return data_.cols(); }

    // Row for 1-based time index i.
    [[nodiscard]] auto row(Index i) const { return data_.row(i - 1); }

    [[nodiscard]] double time_of(Index i) const noexcept {
        return static_cast<double>(i) / static_cast<double>(n());
    }

private:
    Matrix data_;
};

enum class CovarianceSource { truth, smoothed, reflected };

std::string to_string(CovarianceSource s);

/// A p x p covariance estimate (or ground truth) at time t.
struct CovarianceSnapshot {
    Matrix matrix;
    double t = 0.0;
    CovarianceSource source = CovarianceSource::smoothed;
};

/// Thresholded adjacency of a precision matrix at time t.
struct GraphEstimate {
    BoolMatrix adjacency;
    double t = 0.0;
    double u = 0.0;

    [[nodiscard]] Index p() const noexcept { return adjacency.rows(); }
};

// Largest absolute entry.
inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace tvnet
