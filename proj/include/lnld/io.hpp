#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lnld/analysis.hpp"
#include "lnld/discretization.hpp"
#include "lnld/evolution.hpp"

namespace lnld::io {

/// Shortest round-trip-safe text for a double (17 significant digits).
inline std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) { add_line(header); }

    template <class... Cells>
    void row(const Cells&... cells) {
        static_assert(sizeof...(Cells) > 0);
        std::vector<std::string> line{cell(cells)...};
        if (line.size() != columns_) throw std::logic_error("csv row width does not match header");
        add_line(line);
    }

    const std::string& str() const { return text_; }
    void save(const std::filesystem::path& path) const { write_atomic(path, text_); }

private:
    static std::string cell(double v) { return format_number(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "true" : "false"; }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    void add_line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }

    std::size_t columns_;
    std::string text_;
};

inline CsvTable timeseries_csv(const Trajectory& traj) {
    CsvTable t({"t", "mass", "energy_total", "energy_local", "energy_nonlocal", "energy_coupling", "dist_to_mean"});
    for (const auto& r : traj.series)
        t.row(r.t, r.mass, r.energy.total, r.energy.local_term, r.energy.nonlocal_term, r.energy.coupling_term,
              r.dist_to_mean);
    return t;
}

inline CsvTable snapshot_csv(const Grid& grid, const StateField& w) {
    check_field(grid, w);
    CsvTable t({"x", "w", "region"});
    for (int a = 0; a < grid.size(); ++a) t.row(grid.x[a], w[a], grid.is_local(a) ? "local" : "nonlocal");
    return t;
}

/// Reads a snapshot CSV back into a state on `grid`; positions must match.
inline StateField read_snapshot(const Grid& grid, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open snapshot " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "x,w,region") throw std::runtime_error("snapshot " + path.string() + " has an unexpected header");
    StateField w(grid.size());
    int a = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (a >= grid.size()) throw std::runtime_error("snapshot has more rows than the grid");
        std::stringstream ss(line);
        std::string xs, ws, region;
        std::getline(ss, xs, ',');
        std::getline(ss, ws, ',');
        std::getline(ss, region, ',');
        const double x = std::stod(xs);
        if (std::abs(x - grid.x[a]) > 1e-12) throw std::runtime_error("snapshot positions do not match the grid");
        if (region != (grid.is_local(a) ? "local" : "nonlocal"))
            throw std::runtime_error("snapshot region tags do not match the grid");
        w[a++] = std::stod(ws);
    }
    if (a != grid.size()) throw std::runtime_error("snapshot has fewer rows than the grid");
    return w;
}

inline CsvTable sweep_csv(const std::vector<SweepRow>& rows) {
    CsvTable t({"epsilon", "n_nonlocal", "dt", "sup_error_l2", "beta1_eps"});
    for (const auto& r : rows) t.row(r.epsilon, r.n_nonlocal, r.dt, r.sup_error, r.beta1_eps);
    return t;
}

inline CsvTable decay_csv(const DecayReport& d) {
    CsvTable t({"fitted_rate", "beta1", "lambda2", "r_squared", "bound_satisfied"});
    t.row(d.fitted_rate, d.beta1_used, d.lambda2, d.r_squared, d.bound_satisfied);
    return t;
}

/// Minimal SVG line plot with optional log axes.
struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<double> xs;
    std::vector<double> ys;

    std::string render() const {
        constexpr double w = 640, h = 420, ml = 70, mr = 20, mt = 40, mb = 50;
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
            if ((log_x && xs[i] <= 0) || (log_y && ys[i] <= 0)) continue;
            pts.emplace_back(log_x ? std::log10(xs[i]) : xs[i], log_y ? std::log10(ys[i]) : ys[i]);
        }
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
           << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
           << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\" font-size=\"13\">"
           << x_label << (log_x ? " (log10)" : "") << "</text>\n"
           << "<text x=\"16\" y=\"" << h / 2 << "\" transform=\"rotate(-90 16 " << h / 2
           << ")\" text-anchor=\"middle\" font-size=\"13\">" << y_label << (log_y ? " (log10)" : "") << "</text>\n"
           << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\""
           << h - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
        if (!pts.empty()) {
            double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
            for (auto [x, y] : pts) {
                x0 = std::min(x0, x), x1 = std::max(x1, x);
                y0 = std::min(y0, y), y1 = std::max(y1, y);
            }
            if (x1 == x0) x1 = x0 + 1;
            if (y1 == y0) y1 = y0 + 1;
            const auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
            const auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };
            os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
            for (auto [x, y] : pts) os << px(x) << ',' << py(y) << ' ';
            os << "\"/>\n";
            os << "<text x=\"" << ml << "\" y=\"" << h - mb + 16 << "\" font-size=\"11\">" << x0 << "</text>\n"
               << "<text x=\"" << w - mr << "\" y=\"" << h - mb + 16 << "\" text-anchor=\"end\" font-size=\"11\">"
               << x1 << "</text>\n"
               << "<text x=\"" << ml - 4 << "\" y=\"" << h - mb << "\" text-anchor=\"end\" font-size=\"11\">" << y0
               << "</text>\n"
               << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 10 << "\" text-anchor=\"end\" font-size=\"11\">" << y1
               << "</text>\n";
        }
        os << "</svg>\n";
        return os.str();
    }
};

} // namespace lnld::io
