#include "membrane/config.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace membrane {

namespace {

std::string render(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& v, int line) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        fail(line, "expected a number, got '" + v + "'");
    }
    if (used != v.size()) fail(line, "trailing characters after number '" + v + "'");
    return out;
}

int parse_int(const std::string& v, int line) {
    std::size_t used = 0;
    long out = 0;
    try {
        out = std::stol(v, &used);
    } catch (const std::exception&) {
        fail(line, "expected an integer, got '" + v + "'");
    }
    if (used != v.size()) fail(line, "trailing characters after integer '" + v + "'");
    return static_cast<int>(out);
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(line, "expected true or false, got '" + v + "'");
}

InitialShape parse_shape(const std::string& v, int line) {
    if (v == "bump") return InitialShape::Bump;
    if (v == "angular-bump") return InitialShape::AngularBump;
    if (v == "zero") return InitialShape::Zero;
    fail(line, "unknown profile '" + v + "' (bump, angular-bump, zero)");
}

const char* shape_token(InitialShape s) {
    switch (s) {
        case InitialShape::Bump: return "bump";
        case InitialShape::AngularBump: return "angular-bump";
        case InitialShape::Zero: return "zero";
    }
    return "bump";
}

const char* mode_token(EvolutionMode m) {
    switch (m) {
        case EvolutionMode::Linear: return "linear";
        case EvolutionMode::FlatNullOnly: return "flat-null";
        case EvolutionMode::Full: return "full";
    }
    return "full";
}

const char* metric_token(MetricKind k) {
    switch (k) {
        case MetricKind::Minkowski: return "minkowski";
        case MetricKind::PerturbedAnalytic: return "perturbed";
        case MetricKind::UserTabulated: return "tabulated";
    }
    return "minkowski";
}

// upper-triangle order of the symmetric amplitude matrix
constexpr std::array<std::pair<int, int>, 6> amplitude_entries{
    {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};

}  // namespace

LabConfig parse_config(const std::string& text) {
    LabConfig cfg;
    std::map<std::string, int> seen;  // key -> first line

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string entry = trim(raw);
        if (entry.empty()) continue;

        const auto eq = entry.find('=');
        if (eq == std::string::npos) fail(line, "expected 'key = value'");
        const std::string key = trim(entry.substr(0, eq));
        const std::string value = trim(entry.substr(eq + 1));
        if (key.empty()) fail(line, "missing key before '='");

        if (const auto [it, fresh] = seen.emplace(key, line); !fresh)
            fail(line, "duplicate key '" + key + "' (first on line " +
                           std::to_string(it->second) + ")");

        ScenarioConfig& sc = cfg.scenario;
        if (key == "geometry") {
            if (value == "planar")
                cfg.geometry = GeometryKind::Planar;
            else if (value == "radial")
                cfg.geometry = GeometryKind::Radial;
            else
                fail(line, "unknown geometry '" + value + "' (planar, radial)");
        } else if (key == "spatial_dim") {
            cfg.spatial_dim = parse_int(value, line);
        } else if (key == "mode") {
            if (value == "linear")
                sc.mode = EvolutionMode::Linear;
            else if (value == "flat-null")
                sc.mode = EvolutionMode::FlatNullOnly;
            else if (value == "full")
                sc.mode = EvolutionMode::Full;
            else
                fail(line, "unknown mode '" + value + "' (linear, flat-null, full)");
        } else if (key == "epsilon") {
            sc.epsilon = parse_number(value, line);
        } else if (key == "support_radius") {
            sc.support_radius = parse_number(value, line);
        } else if (key == "grid_spacing") {
            sc.grid_spacing = parse_number(value, line);
        } else if (key == "cfl") {
            sc.cfl = parse_number(value, line);
        } else if (key == "s_max") {
            sc.s_max = parse_number(value, line);
        } else if (key == "m_diag") {
            sc.m_diag = parse_int(value, line);
        } else if (key == "domain_pad") {
            sc.domain_pad = parse_number(value, line);
        } else if (key == "max_grid_points") {
            sc.max_grid_points = parse_int(value, line);
        } else if (key == "blowup_threshold") {
            sc.blowup_threshold = parse_number(value, line);
        } else if (key == "threads") {
            sc.threads = parse_int(value, line);
        } else if (key == "position_shape") {
            sc.data.position_shape = parse_shape(value, line);
        } else if (key == "position_amplitude") {
            sc.data.position_amplitude = parse_number(value, line);
        } else if (key == "velocity_shape") {
            sc.data.velocity_shape = parse_shape(value, line);
        } else if (key == "velocity_amplitude") {
            sc.data.velocity_amplitude = parse_number(value, line);
        } else if (key == "metric") {
            if (value == "minkowski")
                sc.metric.kind = MetricKind::Minkowski;
            else if (value == "perturbed")
                sc.metric.kind = MetricKind::PerturbedAnalytic;
            else if (value == "tabulated")
                sc.metric.kind = MetricKind::UserTabulated;
            else
                fail(line, "unknown metric '" + value + "' (minkowski, perturbed, tabulated)");
        } else if (key == "metric_delta") {
            sc.metric.delta = parse_number(value, line);
        } else if (key == "metric_gamma") {
            sc.metric.gamma_decay = parse_number(value, line);
        } else if (key == "metric_shape") {
            if (value == "constant")
                sc.metric.shape = PerturbationShape::ConstantSymmetric;
            else if (value == "cosine")
                sc.metric.shape = PerturbationShape::CosineModulated;
            else
                fail(line, "unknown metric shape '" + value + "' (constant, cosine)");
        } else if (key.rfind("metric_amplitude_", 0) == 0) {
            const std::string which = key.substr(17);
            bool matched = false;
            for (const auto& [i, j] : amplitude_entries) {
                if (which == std::to_string(i) + std::to_string(j)) {
                    const double a = parse_number(value, line);
                    sc.metric.amplitude(i, j) = a;
                    sc.metric.amplitude(j, i) = a;
                    matched = true;
                    break;
                }
            }
            if (!matched) fail(line, "unknown amplitude entry '" + key + "'");
        } else if (key == "metric_wave_k1") {
            sc.metric.wave_k[0] = parse_number(value, line);
        } else if (key == "metric_wave_k2") {
            sc.metric.wave_k[1] = parse_number(value, line);
        } else if (key == "metric_cutoff_width") {
            sc.metric.cutoff_width = parse_number(value, line);
        } else if (key == "metric_table") {
            sc.metric.table_path = value;
        } else if (key == "uniform_ds") {
            sc.uniform_ds = parse_bool(value, line);
        } else if (key == "ds0") {
            sc.ds0 = parse_number(value, line);
        } else if (key == "ds_growth") {
            sc.ds_growth = parse_number(value, line);
        } else if (key == "ds_max") {
            sc.ds_max = parse_number(value, line);
        } else {
            fail(line, "unknown key '" + key + "'");
        }
    }
    return cfg;
}

LabConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const LabConfig& cfg) {
    const ScenarioConfig& sc = cfg.scenario;
    std::ostringstream out;
    out << "# geometry and evolution\n";
    out << "geometry = " << (cfg.geometry == GeometryKind::Planar ? "planar" : "radial") << "\n";
    out << "spatial_dim = " << cfg.spatial_dim << "\n";
    out << "mode = " << mode_token(sc.mode) << "\n";
    out << "epsilon = " << render(sc.epsilon) << "\n";
    out << "support_radius = " << render(sc.support_radius) << "  # B\n";
    out << "grid_spacing = " << render(sc.grid_spacing) << "\n";
    out << "cfl = " << render(sc.cfl) << "\n";
    out << "s_max = " << render(sc.s_max) << "\n";
    out << "m_diag = " << sc.m_diag << "\n";
    out << "domain_pad = " << render(sc.domain_pad) << "\n";
    out << "max_grid_points = " << sc.max_grid_points << "\n";
    out << "blowup_threshold = " << render(sc.blowup_threshold) << "\n";
    out << "threads = " << sc.threads << "\n";
    out << "\n# initial data, profiles scaled by epsilon\n";
    out << "position_shape = " << shape_token(sc.data.position_shape) << "\n";
    out << "position_amplitude = " << render(sc.data.position_amplitude) << "\n";
    out << "velocity_shape = " << shape_token(sc.data.velocity_shape) << "\n";
    out << "velocity_amplitude = " << render(sc.data.velocity_amplitude) << "\n";
    out << "\n# background metric\n";
    out << "metric = " << metric_token(sc.metric.kind) << "\n";
    out << "metric_delta = " << render(sc.metric.delta) << "  # delta\n";
    out << "metric_gamma = " << render(sc.metric.gamma_decay) << "  # gamma\n";
    out << "metric_shape = "
        << (sc.metric.shape == PerturbationShape::ConstantSymmetric ? "constant" : "cosine")
        << "\n";
    for (const auto& [i, j] : amplitude_entries)
        out << "metric_amplitude_" << i << j << " = " << render(sc.metric.amplitude(i, j))
            << "\n";
    out << "metric_wave_k1 = " << render(sc.metric.wave_k[0]) << "\n";
    out << "metric_wave_k2 = " << render(sc.metric.wave_k[1]) << "\n";
    out << "metric_cutoff_width = " << render(sc.metric.cutoff_width) << "\n";
    out << "metric_table = " << sc.metric.table_path << "\n";
    out << "\n# hyperboloidal slice schedule, s0 = support_radius + 1\n";
    out << "uniform_ds = " << (sc.uniform_ds ? "true" : "false") << "\n";
    out << "ds0 = " << render(sc.ds0) << "\n";
    out << "ds_growth = " << render(sc.ds_growth) << "\n";
    out << "ds_max = " << render(sc.ds_max) << "\n";
    return out.str();
}

std::uint64_t config_hash(const LabConfig& config) { return fnv1a(serialize_config(config)); }

ScenarioConfig LabConfig::planar_config() const {
    if (geometry != GeometryKind::Planar)
        throw ConfigError("config describes a radial run, not a planar one");
    if (spatial_dim != 2)
        throw ConfigError("planar runs are two-dimensional; spatial_dim must be 2");
    ScenarioConfig out = scenario;
    out.metric.dim = 2;
    return out;
}

RadialConfig LabConfig::radial_config() const {
    if (geometry != GeometryKind::Radial)
        throw ConfigError("config describes a planar run, not a radial one");
    if (scenario.metric.kind != MetricKind::Minkowski)
        throw ConfigError("radial runs use the flat background; set metric = minkowski");
    RadialConfig out;
    out.mode = scenario.mode;
    out.spatial_dim = spatial_dim;
    out.epsilon = scenario.epsilon;
    out.support_radius = scenario.support_radius;
    out.grid_spacing = scenario.grid_spacing;
    out.cfl = scenario.cfl;
    out.s_max = scenario.s_max;
    out.m_diag = scenario.m_diag;
    out.data = scenario.data;
    out.domain_pad = scenario.domain_pad;
    out.max_grid_points = scenario.max_grid_points;
    out.blowup_threshold = scenario.blowup_threshold;
    out.uniform_ds = scenario.uniform_ds;
    out.ds0 = scenario.ds0;
    out.ds_growth = scenario.ds_growth;
    out.ds_max = scenario.ds_max;
    return out;
}

}  // namespace membrane
