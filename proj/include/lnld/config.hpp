#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lnld/analysis.hpp"
#include "lnld/discretization.hpp"
#include "lnld/evolution.hpp"
#include "lnld/io.hpp"
#include "lnld/kernels.hpp"

namespace lnld {

/// Invalid configuration; `key()` names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class InitKind { constant, step, cosine, gaussian, file };

struct SimConfig {
    KernelFamily kernel_family = KernelFamily::triangle;
    double kernel_radius = 1.0;
    double kernel_epsilon = 1.0;

    int n_local = 200;
    int n_nonlocal = 200;

    SchemeKind scheme = SchemeKind::implicit_euler;
    std::optional<double> dt; // empty: auto
    double horizon = 1.0;
    int snapshot_stride = 100;

    std::optional<double> picard_window; // empty: 0.8 of the contraction limit
    double picard_tol = 1e-10;
    int picard_max_iters = 50;

    InitKind init_kind = InitKind::step;
    double init_value = 1.0;
    double init_amplitude = 1.0;
    double init_center = -0.5;
    double init_width = 0.15;
    int init_mode = 1;
    std::string init_path;

    int spectrum_samples = 500;
    bool spectrum_heat_diagnostic = false;

    std::vector<double> sweep_eps{0.4, 0.2, 0.1, 0.05};
    double sweep_dt = 1e-4;
    double sweep_horizon = 0.5;
    int sweep_modes = 256;

    std::string output_dir = "out";
    std::uint64_t seed = 12345;

    Kernel kernel() const { return make_kernel(kernel_family, kernel_radius, kernel_epsilon); }
    Grid grid() const { return build_grid(n_local, n_nonlocal); }

    double resolved_picard_window() const {
        return picard_window ? *picard_window : 0.8 * picard_window_limit(coupling_constants(kernel()));
    }

    StepScheme step_scheme() const {
        StepScheme s;
        s.kind = scheme;
        s.dt = dt;
        s.picard_window = resolved_picard_window();
        s.picard_tol = picard_tol;
        s.picard_max_iters = picard_max_iters;
        return s;
    }
};

inline std::string_view to_string(InitKind kind) {
    switch (kind) {
    case InitKind::constant: return "constant";
    case InitKind::step: return "step";
    case InitKind::cosine: return "cosine";
    case InitKind::gaussian: return "gaussian";
    case InitKind::file: return "file";
    }
    return "unknown";
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double d = std::stod(value, &used);
        if (used != value.size() || !std::isfinite(d)) throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a finite number, got '" + value + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return i;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected an integer, got '" + value + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + value + "'");
}

} // namespace detail

/// Applies one `key = value` assignment. Unknown keys are rejected.
inline void apply_setting(SimConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    const auto positive = [&](double d) {
        if (!(d > 0.0)) throw ConfigError(key, "must be positive");
        return d;
    };
    const auto count = [&](long long i, long long min) {
        if (i < min) throw ConfigError(key, "must be >= " + std::to_string(min));
        return static_cast<int>(i);
    };
    try {
        if (key == "kernel.family") c.kernel_family = parse_family(value);
        else if (key == "kernel.radius") c.kernel_radius = positive(parse_double(key, value));
        else if (key == "kernel.epsilon") c.kernel_epsilon = positive(parse_double(key, value));
        else if (key == "grid.n_local") c.n_local = count(parse_int(key, value), 4);
        else if (key == "grid.n_nonlocal") c.n_nonlocal = count(parse_int(key, value), 4);
        else if (key == "time.scheme") c.scheme = parse_scheme(value);
        else if (key == "time.dt") c.dt = value == "auto" ? std::nullopt : std::optional(positive(parse_double(key, value)));
        else if (key == "time.horizon") c.horizon = positive(parse_double(key, value));
        else if (key == "time.snapshot_stride") c.snapshot_stride = count(parse_int(key, value), 0);
        else if (key == "picard.window")
            c.picard_window = value == "auto" ? std::nullopt : std::optional(positive(parse_double(key, value)));
        else if (key == "picard.tol") c.picard_tol = positive(parse_double(key, value));
        else if (key == "picard.max_iters") c.picard_max_iters = count(parse_int(key, value), 1);
        else if (key == "init.kind") {
            if (value == "constant") c.init_kind = InitKind::constant;
            else if (value == "step") c.init_kind = InitKind::step;
            else if (value == "cosine") c.init_kind = InitKind::cosine;
            else if (value == "gaussian") c.init_kind = InitKind::gaussian;
            else if (value == "file") c.init_kind = InitKind::file;
            else throw ConfigError(key, "unknown initial condition '" + value + "'");
        } else if (key == "init.value") c.init_value = parse_double(key, value);
        else if (key == "init.amplitude") c.init_amplitude = parse_double(key, value);
        else if (key == "init.center") c.init_center = parse_double(key, value);
        else if (key == "init.width") c.init_width = positive(parse_double(key, value));
        else if (key == "init.mode") c.init_mode = count(parse_int(key, value), 0);
        else if (key == "init.path") c.init_path = value;
        else if (key == "spectrum.n_samples") c.spectrum_samples = count(parse_int(key, value), 10);
        else if (key == "spectrum.heat_diagnostic") c.spectrum_heat_diagnostic = parse_bool(key, value);
        else if (key == "sweep.eps_list") {
            std::vector<double> eps;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) eps.push_back(positive(parse_double(key, trim(item))));
            if (eps.empty()) throw ConfigError(key, "needs at least one value");
            for (std::size_t i = 1; i < eps.size(); ++i)
                if (!(eps[i] < eps[i - 1])) throw ConfigError(key, "must be strictly decreasing");
            c.sweep_eps = std::move(eps);
        } else if (key == "sweep.dt") c.sweep_dt = positive(parse_double(key, value));
        else if (key == "sweep.horizon") c.sweep_horizon = positive(parse_double(key, value));
        else if (key == "sweep.n_modes") c.sweep_modes = count(parse_int(key, value), 1);
        else if (key == "output.dir") c.output_dir = value;
        else if (key == "seed") {
            const long long s = parse_int(key, value);
            if (s < 0) throw ConfigError(key, "must be nonnegative");
            c.seed = static_cast<std::uint64_t>(s);
        } else throw ConfigError(key, "unknown configuration key");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

/// Parses `key = value` lines; '#' starts a comment.
inline SimConfig parse_config(std::istream& in, SimConfig base = {}) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        apply_setting(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return base;
}

inline SimConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path.string());
    return parse_config(in);
}

/// Applies a `key=value` override string (the CLI --set form).
inline void apply_override(SimConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, "override must look like key=value");
    apply_setting(c, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

/// Cross-field checks that need the kernel and grid.
inline void validate(const SimConfig& c) {
    const Kernel k = c.kernel();
    const Grid g = c.grid();
    try {
        check_resolution(g, k);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("grid.n_nonlocal", e.what());
    }
    const CouplingConstants cc = coupling_constants(k);
    if (c.scheme == SchemeKind::picard) {
        const double tw = c.resolved_picard_window();
        if (!(tw < picard_window_limit(cc)))
            throw ConfigError("picard.window", "must be below 1/(2 c1 + c2) = " +
                                                   io::format_number(picard_window_limit(cc)));
    }
    if (c.scheme == SchemeKind::explicit_euler && c.dt) {
        const GeneratorMatrix gen = assemble_generator(g, k, cc);
        const double limit = cfl_limit(gen);
        if (*c.dt > limit * (1.0 + 1e-12))
            throw ConfigError("time.dt", "explicit step " + io::format_number(*c.dt) + " exceeds CFL limit " +
                                             io::format_number(limit));
    }
    if (c.init_kind == InitKind::file && c.init_path.empty()) throw ConfigError("init.path", "required for init.kind = file");
}

inline InitialProfile initial_profile(const SimConfig& c) {
    switch (c.init_kind) {
    case InitKind::constant: return [v = c.init_value](double, bool) { return v; };
    case InitKind::step: return [](double, bool local) { return local ? 1.0 : 0.0; };
    case InitKind::cosine:
        return [a = c.init_amplitude, m = c.init_mode](double x, bool) {
            return a * std::cos(m * std::numbers::pi * (x + 1.0) / 2.0);
        };
    case InitKind::gaussian:
        return [a = c.init_amplitude, x0 = c.init_center, s = c.init_width](double x, bool) {
            return a * std::exp(-(x - x0) * (x - x0) / (2.0 * s * s));
        };
    case InitKind::file: break;
    }
    throw ConfigError("init.kind", "file initial data has no analytic profile");
}

inline StateField initial_state(const SimConfig& c, const Grid& grid) {
    if (c.init_kind == InitKind::file) {
        try {
            return io::read_snapshot(grid, c.init_path);
        } catch (const std::exception& e) {
            throw ConfigError("init.path", e.what());
        }
    }
    return sample(grid, initial_profile(c));
}

/// Fully resolved configuration in the input format; re-parsing it reproduces the run.
inline std::string manifest(const SimConfig& c, std::optional<double> resolved_dt = std::nullopt) {
    using io::format_number;
    std::ostringstream os;
    os << "# resolved run parameters\n";
    os << "kernel.family = " << to_string(c.kernel_family) << '\n';
    os << "kernel.radius = " << format_number(c.kernel_radius) << '\n';
    os << "kernel.epsilon = " << format_number(c.kernel_epsilon) << '\n';
    os << "grid.n_local = " << c.n_local << '\n';
    os << "grid.n_nonlocal = " << c.n_nonlocal << '\n';
    os << "time.scheme = " << to_string(c.scheme) << '\n';
    const std::optional<double> dt = resolved_dt ? resolved_dt : c.dt;
    os << "time.dt = " << (dt ? format_number(*dt) : "auto") << '\n';
    os << "time.horizon = " << format_number(c.horizon) << '\n';
    os << "time.snapshot_stride = " << c.snapshot_stride << '\n';
    os << "picard.window = " << format_number(c.resolved_picard_window()) << '\n';
    os << "picard.tol = " << format_number(c.picard_tol) << '\n';
    os << "picard.max_iters = " << c.picard_max_iters << '\n';
    os << "init.kind = " << to_string(c.init_kind) << '\n';
    os << "init.value = " << format_number(c.init_value) << '\n';
    os << "init.amplitude = " << format_number(c.init_amplitude) << '\n';
    os << "init.center = " << format_number(c.init_center) << '\n';
    os << "init.width = " << format_number(c.init_width) << '\n';
    os << "init.mode = " << c.init_mode << '\n';
    if (!c.init_path.empty()) os << "init.path = " << c.init_path << '\n';
    os << "spectrum.n_samples = " << c.spectrum_samples << '\n';
    os << "spectrum.heat_diagnostic = " << (c.spectrum_heat_diagnostic ? "true" : "false") << '\n';
    os << "sweep.eps_list = ";
    for (std::size_t i = 0; i < c.sweep_eps.size(); ++i) os << (i ? "," : "") << format_number(c.sweep_eps[i]);
    os << '\n';
    os << "sweep.dt = " << format_number(c.sweep_dt) << '\n';
    os << "sweep.horizon = " << format_number(c.sweep_horizon) << '\n';
    os << "sweep.n_modes = " << c.sweep_modes << '\n';
    os << "output.dir = " << c.output_dir << '\n';
    os << "seed = " << c.seed << '\n';
    return os.str();
}

} // namespace lnld
