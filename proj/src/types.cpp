#include "tvnet/types.hpp"

#include <cmath>

namespace tvnet {

TimeSeriesPanel::TimeSeriesPanel(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 2 || data_.cols() < 2) {
        throw InvalidArgument("panel must have at least 2 rows and 2 columns, got " +
                              std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()));
    }
    if (!data_.allFinite()) {
        throw InvalidArgument("panel contains non-finite entries");
    }
}

std::string to_string(CovarianceSource s) {
    switch (s) {
        case CovarianceSource::truth: return "true";
        case CovarianceSource::smoothed: return "smoothed";
        case CovarianceSource::reflected: return "reflected";
    }
    return "unknown";
}

}  // namespace tvnet
