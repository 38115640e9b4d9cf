#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tvnet/types.hpp"

namespace tvnet::kernel {

enum class Family { uniform, triangular, epanechnikov };

std::string to_string(Family f);
Family family_from_string(std::string_view name);

struct KernelSpec {
    Family family = Family::uniform;
    double bandwidth = 0.2;
};

/// K(u) on [-1, 1]; each family integrates to one.
double kernel_eval(const KernelSpec& spec, double u);

/// Normalized weights w(t, i) over the grid t_i = i/n, i = 1..n.
struct WeightVector {
    Vector weights;  // weights[i-1] belongs to time index i
    double t = 0.0;
    Index first = 0;  // 1-based range of nonzero weights
    Index last = -1;
};

WeightVector kernel_weights(Index n, double t, const KernelSpec& spec);

/// Sum_i w(t, t_i) X_i X_i^T, symmetrized.
CovarianceSnapshot smoothed_covariance(const TimeSeriesPanel& panel, double t, const KernelSpec& spec);

struct ReflectOptions {
    // Clamp mirrored indices into [1, n]; otherwise out-of-range mirrors throw.
    bool clamp = true;
};

/// Kernel covariance where samples on the far side of `change_point` (a
/// 1-based index) are replaced by their mirror images x_{2c - i}. The index c
/// itself belongs to the left segment when deciding which side t is on.
CovarianceSnapshot reflected_covariance(const TimeSeriesPanel& panel, double t, const KernelSpec& spec,
                                        Index change_point, ReflectOptions opts = {});

/// Picks the change point to reflect about: exactly one detected point must
/// fall inside the kernel window around t, otherwise this reduces to
/// smoothed_covariance.
CovarianceSnapshot reflected_covariance(const TimeSeriesPanel& panel, double t, const KernelSpec& spec,
                                        const std::vector<Index>& change_points, ReflectOptions opts = {});

}  // namespace tvnet::kernel
