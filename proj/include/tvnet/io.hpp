#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "tvnet/types.hpp"

namespace tvnet::io {

/// Shortest decimal (fixed notation) that round-trips the double exactly.
std::string format_number(double v);

/// Headerless comma-separated matrix, one row per line.
std::string matrix_csv(const Matrix& m);
std::string adjacency_csv(const BoolMatrix& m);
Matrix parse_matrix_csv(const std::string& text);

Matrix read_matrix_csv(const std::filesystem::path& path);
TimeSeriesPanel read_panel_csv(const std::filesystem::path& path);

/// "j,k,weight" rows for j < k with an edge; weight is omega_jk. 1-based indices.
std::string edge_list_csv(const BoolMatrix& adjacency, const Matrix& omega);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal standalone SVG line chart.
std::string svg_line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                          const std::string& y_label);

}  // namespace tvnet::io
