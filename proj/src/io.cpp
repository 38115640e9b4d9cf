#include "tvnet/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tvnet::io {

std::string format_number(double v) {
    if (!std::isfinite(v)) throw InvalidArgument("cannot write a non-finite number");
    if (v == 0.0) return "0";  // also folds -0
    char buf[512];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    if (res.ec != std::errc{}) throw InvalidArgument("number formatting failed");
    return std::string(buf, res.ptr);
}

std::string matrix_csv(const Matrix& m) {
    std::string out;
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            out += format_number(m(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string adjacency_csv(const BoolMatrix& m) {
    std::string out;
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            out += m(r, c) ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

Matrix parse_matrix_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t end = std::min(line.find(',', pos), line.size());
            std::string cell = line.substr(pos, end - pos);
            cell.erase(0, cell.find_first_not_of(" \t"));
            cell.erase(cell.find_last_not_of(" \t") + 1);
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw InvalidArgument("CSV line " + std::to_string(line_no) + ": cannot parse '" + cell + "'");
            }
            row.push_back(v);
            pos = end + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InvalidArgument("CSV line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                                  " fields, expected " + std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidArgument("CSV input is empty");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Matrix read_matrix_csv(const std::filesystem::path& path) { return parse_matrix_csv(read_text(path)); }

TimeSeriesPanel read_panel_csv(const std::filesystem::path& path) { return TimeSeriesPanel(read_matrix_csv(path)); }

std::string edge_list_csv(const BoolMatrix& adjacency, const Matrix& omega) {
    std::string out = "j,k,weight\n";
    for (Index k = 0; k < adjacency.cols(); ++k) {
        for (Index j = 0; j < k; ++j) {
            if (!adjacency(j, k)) continue;
            out += std::to_string(j + 1) + ',' + std::to_string(k + 1) + ',' + format_number(omega(j, k)) + '\n';
        }
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt2(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

std::string tick(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

}  // namespace

std::string svg_line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                          const std::string& y_label) {
    constexpr double width = 640, height = 400, left = 70, right = 20, top = 40, bottom = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (first) {
                x0 = x1 = s.x[k];
                y0 = y1 = s.y[k];
                first = false;
            }
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, s.y[k]);
            y1 = std::max(y1, s.y[k]);
        }
    }
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    const double pw = width - left - right, ph = height - top - bottom;
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
        << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        svg << "<text x=\"" << fmt2(sx(xv)) << "\" y=\"" << height - bottom + 16 << "\" text-anchor=\"middle\">"
            << tick(xv) << "</text>\n";
        svg << "<text x=\"" << left - 6 << "\" y=\"" << fmt2(sy(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
            << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
        << escape_xml(x_label) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << top + ph / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        const char* color = palette[s % (sizeof(palette) / sizeof(palette[0]))];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < ser.x.size(); ++k) {
            if (k) svg << ' ';
            svg << fmt2(sx(ser.x[k])) << ',' << fmt2(sy(ser.y[k]));
        }
        svg << "\"/>\n";
        if (!ser.label.empty()) {
            svg << "<text x=\"" << left + pw - 4 << "\" y=\"" << top + 16 + 14 * static_cast<double>(s)
                << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape_xml(ser.label) << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace tvnet::io
