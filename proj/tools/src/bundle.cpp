#include "bundle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#ifndef MEMBRANE_VERSION
#define MEMBRANE_VERSION "0.0.0"
#endif

namespace membrane::bundle {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

std::string render(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    return cells;
}

double cell_value(const std::string& cell, const std::filesystem::path& path) {
    try {
        return std::stod(cell);
    } catch (const std::exception&) {
        throw IoError("malformed number '" + cell + "' in " + path.string());
    }
}

}  // namespace

const std::vector<std::string>& energy_columns() {
    static const std::vector<std::string> cols = {
        "s",
        "energy_0", "energy_1", "energy_2",
        "generalized_0", "generalized_1", "generalized_2",
        "ratio_0", "ratio_1", "ratio_2",
        "sup_s_grad_0", "sup_s_grad_1",
        "sup_t_tangent_0", "sup_t_tangent_1",
        "sup_ts_second_0", "sup_ts_second_1",
        "sup_time_second_0", "sup_time_second_1",
        "sobolev", "min_abs_coefficient",
        "flat_energy_time", "flat_energy",
    };
    return cols;
}

void write_energy_csv(const std::filesystem::path& path,
                      const std::vector<EnergyRecord>& records, int m_diag) {
    std::ofstream out = open_out(path);
    const auto& cols = energy_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        out << cols[i] << (i + 1 < cols.size() ? ',' : '\n');

    for (const auto& r : records) {
        std::vector<double> row;
        row.reserve(cols.size());
        row.push_back(r.s);
        for (int k = 0; k < 3; ++k) row.push_back(k <= m_diag ? r.energy[k] : nan_v);
        for (int k = 0; k < 3; ++k) row.push_back(k <= m_diag ? r.generalized[k] : nan_v);
        for (int k = 0; k < 3; ++k) row.push_back(k <= m_diag ? r.ratio[k] : nan_v);
        const auto& obs = r.observables;
        const auto obs_cell = [&](const std::array<double, 2>& a, int j) {
            return j < obs.orders ? a[j] : nan_v;
        };
        for (int j = 0; j < 2; ++j) row.push_back(obs_cell(obs.sup_s_grad, j));
        for (int j = 0; j < 2; ++j) row.push_back(obs_cell(obs.sup_t_tangent, j));
        for (int j = 0; j < 2; ++j) row.push_back(obs_cell(obs.sup_ts_second, j));
        for (int j = 0; j < 2; ++j) row.push_back(obs_cell(obs.sup_time_second, j));
        row.push_back(r.sobolev);
        row.push_back(r.min_abs_coefficient);
        row.push_back(r.flat_energy_time);
        row.push_back(r.flat_energy);

        for (std::size_t i = 0; i < row.size(); ++i)
            out << render(row[i]) << (i + 1 < row.size() ? ',' : '\n');
    }
}

std::vector<EnergyRecord> read_energy_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw IoError("empty file " + path.string());
    const auto& cols = energy_columns();
    {
        const auto head = split_csv_line(line);
        if (std::vector<std::string>(head.begin(), head.end()) != cols)
            throw IoError("unrecognized energy.csv header in " + path.string());
    }

    std::vector<EnergyRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != cols.size())
            throw IoError("row with " + std::to_string(cells.size()) + " cells (expected " +
                          std::to_string(cols.size()) + ") in " + path.string());
        std::vector<double> v(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) v[i] = cell_value(cells[i], path);

        EnergyRecord r;
        std::size_t c = 0;
        r.s = v[c++];
        for (int k = 0; k < 3; ++k) r.energy[k] = v[c++];
        for (int k = 0; k < 3; ++k) r.generalized[k] = v[c++];
        for (int k = 0; k < 3; ++k) r.ratio[k] = v[c++];
        for (int j = 0; j < 2; ++j) r.observables.sup_s_grad[j] = v[c++];
        for (int j = 0; j < 2; ++j) r.observables.sup_t_tangent[j] = v[c++];
        for (int j = 0; j < 2; ++j) r.observables.sup_ts_second[j] = v[c++];
        for (int j = 0; j < 2; ++j) r.observables.sup_time_second[j] = v[c++];
        r.observables.orders = 0;
        for (int j = 0; j < 2; ++j)
            if (std::isfinite(r.observables.sup_s_grad[j])) r.observables.orders = j + 1;
        r.sobolev = v[c++];
        r.min_abs_coefficient = v[c++];
        r.flat_energy_time = v[c++];
        r.flat_energy = v[c++];
        records.push_back(r);
    }
    return records;
}

void write_identity_csv(const std::filesystem::path& path,
                        const std::vector<IdentityRow>& rows) {
    std::ofstream out = open_out(path);
    out << "s_mid,lhs,rhs,residual\n";
    for (const auto& r : rows)
        out << render(r.s_mid) << ',' << render(r.lhs) << ',' << render(r.rhs) << ','
            << render(r.residual) << '\n';
}

std::vector<IdentityRow> read_identity_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "s_mid,lhs,rhs,residual")
        throw IoError("unrecognized identity.csv header in " + path.string());
    std::vector<IdentityRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 4) throw IoError("malformed identity row in " + path.string());
        IdentityRow r;
        r.s_mid = cell_value(cells[0], path);
        r.lhs = cell_value(cells[1], path);
        r.rhs = cell_value(cells[2], path);
        r.residual = cell_value(cells[3], path);
        rows.push_back(r);
    }
    return rows;
}

std::vector<EnergyRecord> lift_radial_records(const std::vector<RadialEnergyRecord>& records) {
    std::vector<EnergyRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        EnergyRecord e;
        e.s = r.s;
        e.energy = {r.e0, r.e1, nan_v};
        // linear flat-background runs have no coefficient corrections
        e.generalized = e.energy;
        e.ratio = {1.0, 1.0, nan_v};
        e.observables.orders = 0;
        e.observables.sup_s_grad = {nan_v, nan_v};
        e.observables.sup_t_tangent = {nan_v, nan_v};
        e.observables.sup_ts_second = {nan_v, nan_v};
        e.observables.sup_time_second = {nan_v, nan_v};
        e.sobolev = nan_v;
        e.min_abs_coefficient = nan_v;
        e.flat_energy_time = r.flat_energy_time;
        e.flat_energy = r.flat_energy;
        out.push_back(e);
    }
    return out;
}

std::vector<Verdict> run_verdicts(const RunSeries& series) {
    std::vector<Verdict> out;
    for (int m = 0; m <= series.m_diag; ++m) out.push_back(boundedness_verdict(series, m));

    // Weighted sup-norm decay: the observables are pre-weighted, so a
    // conforming run shows an exponent near zero.  The window tolerates
    // mild drift but rejects genuine growth.
    constexpr double decay_slope_min = -0.3;
    constexpr double decay_slope_max = 0.1;
    const struct {
        ObservableKind kind;
        const char* slug;
        const char* text;
    } kinds[] = {
        {ObservableKind::GradientSup, "gradient", "s-weighted full gradient"},
        {ObservableKind::TangentSup, "tangential", "t-weighted tangential derivatives"},
        {ObservableKind::MixedSecondSup, "mixed-second", "ts-weighted second derivatives"},
        {ObservableKind::TimeSecondSup, "time-second", "(s^3/t)-weighted time-time derivative"},
    };
    const int orders = series.records.front().observables.orders;
    for (const auto& k : kinds) {
        for (int j = 0; j < orders; ++j) {
            const DecayFit fit = decay_fit(series, {k.kind, j});
            Verdict v;
            v.claim = std::string("decay-") + k.slug + "-order-" + std::to_string(j);
            v.anchor = std::string("the ") + k.text + " sup-norm of order-" +
                       std::to_string(j) + " commuted fields stays bounded along the foliation";
            v.statistic = fit.exponent;
            v.threshold = decay_slope_max;
            v.inconclusive = fit.inconclusive;
            if (fit.inconclusive) {
                v.pass = false;
                v.notes = fit.reason;
            } else {
                v.pass = fit.exponent >= decay_slope_min && fit.exponent <= decay_slope_max;
                std::ostringstream notes;
                notes << "fitted exponent " << fit.exponent << " +/- " << fit.std_error
                      << " over " << fit.points << " slices; window [" << decay_slope_min
                      << ", " << decay_slope_max << "]";
                v.notes = notes.str();
            }
            out.push_back(std::move(v));
        }
    }

    // Equivalence of the coefficient-corrected and plain energies.
    if (std::isfinite(series.records.front().ratio[series.m_diag])) {
        const EquivalenceReport eq = equivalence_ratio(series);
        Verdict v;
        v.claim = "energy-equivalence-order-" + std::to_string(eq.order);
        v.anchor = "the coefficient-corrected energy stays uniformly comparable to the plain "
                   "energy along the run";
        v.statistic = eq.max_deviation;
        v.threshold = 0.5;
        v.pass = eq.max_deviation <= v.threshold;
        std::ostringstream notes;
        notes << "max |generalized/plain - 1| = " << eq.max_deviation << " at s = "
              << eq.s_at_max;
        v.notes = notes.str();
        out.push_back(std::move(v));
    }

    // Pointwise-to-integral norm ratio: the final value must stay within
    // twice the early-run value (measured two s-units after the first slice).
    const auto& recs = series.records;
    if (std::isfinite(recs.front().sobolev)) {
        Verdict v;
        v.claim = "norm-ratio-comparison";
        v.anchor = "the weighted pointwise-to-integral norm ratio at the final slice stays "
                   "within twice its early-run value";
        v.threshold = 2.0;
        const double s_ref = recs.front().s + 2.0;
        const auto early = std::find_if(recs.begin(), recs.end(),
                                        [&](const EnergyRecord& r) { return r.s >= s_ref; });
        if (early == recs.end() || &*early == &recs.back()) {
            v.inconclusive = true;
            v.notes = "series too short to separate an early-run reference slice";
        } else if (early->sobolev <= observable_floor) {
            v.inconclusive = true;
            v.notes = "reference ratio at the observable floor";
        } else {
            v.statistic = recs.back().sobolev / early->sobolev;
            v.pass = v.statistic <= v.threshold;
            std::ostringstream notes;
            notes << "ratio " << recs.back().sobolev << " at s = " << recs.back().s
                  << " against " << early->sobolev << " at s = " << early->s;
            v.notes = notes.str();
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Verdict> write_bundle(const std::filesystem::path& dir, const LabConfig& config,
                                  const GridStats& grid,
                                  const std::vector<EnergyRecord>& records,
                                  const std::vector<IdentityRow>& identity,
                                  const RunOutcome& outcome) {
    std::filesystem::create_directories(dir);

    open_out(dir / "config.cfg") << serialize_config(config);
    write_energy_csv(dir / "energy.csv", records, config.scenario.m_diag);
    write_identity_csv(dir / "identity.csv", identity);

    std::vector<Verdict> verdicts;
    if (!records.empty()) {
        const RunSeries series =
            make_series(records, config.scenario.m_diag, config_hash(config),
                        ResolutionMeta{grid.spacing, grid.dt});
        verdicts = run_verdicts(series);
    }
    open_out(dir / "verdicts.json") << verdict_bundle_json(verdicts) << '\n';

    nlohmann::json run;
    run["format"] = "membrane-run/1";
    run["version"] = MEMBRANE_VERSION;
    run["status"] = outcome.status;
    run["error"] = outcome.error;
    run["wall_seconds"] = outcome.wall_seconds;
    run["steps"] = outcome.steps;
    run["last_time"] = outcome.last_time;
    run["geometry"] = grid.geometry;
    run["grid"] = {{"points", grid.points},
                   {"spacing", grid.spacing},
                   {"dt", grid.dt},
                   {"extent", grid.extent}};
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(config_hash(config)));
    run["scenario_hash"] = hash_hex;
    run["m_diag"] = config.scenario.m_diag;
    run["records"] = records.size();
    if (!records.empty()) {
        run["s_first"] = records.front().s;
        run["s_last"] = records.back().s;
    } else {
        run["s_first"] = nullptr;
        run["s_last"] = nullptr;
    }
    open_out(dir / "run.json") << run.dump(2) << '\n';
    return verdicts;
}

BundleInfo read_bundle_info(const std::filesystem::path& dir) {
    BundleInfo info;
    info.dir = dir;
    info.config = load_config(dir / "config.cfg");
    info.scenario_hash = config_hash(info.config);

    std::ifstream in(dir / "run.json");
    if (!in) throw IoError("cannot read " + (dir / "run.json").string());
    nlohmann::json run;
    try {
        in >> run;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed run.json in " + dir.string() + ": " + e.what());
    }
    info.outcome.status = run.value("status", "completed");
    info.outcome.error = run.value("error", "");
    info.outcome.wall_seconds = run.value("wall_seconds", 0.0);
    info.outcome.steps = run.value("steps", 0);
    info.outcome.last_time = run.value("last_time", 0.0);
    info.grid.geometry = run.value("geometry", "planar");
    if (run.contains("grid")) {
        const auto& g = run["grid"];
        info.grid.points = g.value("points", 0);
        info.grid.spacing = g.value("spacing", 0.0);
        info.grid.dt = g.value("dt", 0.0);
        info.grid.extent = g.value("extent", 0.0);
    }
    return info;
}

RunSeries read_series(const BundleInfo& info) {
    return make_series(read_energy_csv(info.dir / "energy.csv"), info.config.scenario.m_diag,
                       info.scenario_hash, ResolutionMeta{info.grid.spacing, info.grid.dt});
}

}  // namespace membrane::bundle
