#include "membrane/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace membrane {

namespace {

std::string format(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// Records at or past the given s, with one energy column as ordinate.
void collect_energy(const RunSeries& series, int m, double s_cut, std::vector<double>& xs,
                    std::vector<double>& ys) {
    for (const EnergyRecord& r : series.records) {
        if (r.s < s_cut) continue;
        xs.push_back(r.s);
        ys.push_back(r.energy[m]);
    }
}

void require_order(const RunSeries& series, int m, const char* what) {
    if (m < 0 || m > series.m_diag)
        throw ConfigError(std::string(what) + ": order " + std::to_string(m) +
                          " outside the series' diagnostic range");
}

}  // namespace

RunSeries make_series(std::vector<EnergyRecord> records, int m_diag,
                      std::uint64_t scenario_hash, ResolutionMeta resolution) {
    if (records.empty()) throw ConfigError("run series: no records");
    if (m_diag < 0 || m_diag > 2)
        throw ConfigError("run series: diagnostic order must be 0, 1, or 2");
    for (std::size_t k = 1; k < records.size(); ++k)
        if (!(records[k].s > records[k - 1].s))
            throw ConfigError("run series: slice times must be strictly increasing");
    return RunSeries{std::move(records), m_diag, scenario_hash, resolution};
}

PowerLawFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ConfigError("power-law fit: length mismatch");
    const int n = static_cast<int>(x.size());
    if (n < 2) throw ConfigError("power-law fit: need at least two points");

    PowerLawFit fit;
    fit.points = n;
    for (int k = 0; k < n; ++k) {
        if (!(x[k] > 0.0)) throw ConfigError("power-law fit: abscissae must be positive");
        if (k > 0 && !(x[k] > x[k - 1]))
            throw ConfigError("power-law fit: abscissae must be strictly increasing");
        if (y[k] < observable_floor) fit.at_floor = true;
    }
    if (fit.at_floor) return fit;

    double mean_x = 0.0, mean_y = 0.0;
    for (int k = 0; k < n; ++k) {
        mean_x += std::log(x[k]);
        mean_y += std::log(y[k]);
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0, sxy = 0.0;
    for (int k = 0; k < n; ++k) {
        const double dx = std::log(x[k]) - mean_x;
        sxx += dx * dx;
        sxy += dx * (std::log(y[k]) - mean_y);
    }
    fit.exponent = sxy / sxx;

    if (n > 2) {
        double rss = 0.0;
        for (int k = 0; k < n; ++k) {
            const double dx = std::log(x[k]) - mean_x;
            const double res = std::log(y[k]) - mean_y - fit.exponent * dx;
            rss += res * res;
        }
        fit.std_error = std::sqrt(rss / (n - 2) / sxx);
    }
    return fit;
}

PowerLawFit energy_tail_fit(const RunSeries& series, int m) {
    require_order(series, m, "energy tail fit");
    const double s_cut =
        0.5 * (series.records.front().s + series.records.back().s) - 1e-12;
    std::vector<double> xs, ys;
    collect_energy(series, m, s_cut, xs, ys);
    if (xs.size() < 2) throw ConfigError("energy tail fit: fewer than two slices in the tail");
    return log_log_fit(xs, ys);
}

Verdict boundedness_verdict(const RunSeries& series, int m) {
    require_order(series, m, "boundedness verdict");

    Verdict v;
    v.claim = "energy-boundedness-order-" + std::to_string(m);
    v.anchor = "the order-" + std::to_string(m) +
               " hyperboloidal energy stays uniformly bounded in hyperboloidal time";
    v.threshold = boundedness_ratio_bound;

    const auto& recs = series.records;
    const double s_first = recs.front().s;
    const double s_last = recs.back().s;
    if (s_last / s_first < boundedness_span_ratio - 1e-9) {
        v.inconclusive = true;
        v.notes = "series spans s in [" + format(s_first) + ", " + format(s_last) +
                  "], less than the required factor " + format(boundedness_span_ratio);
        return v;
    }

    const double e_first = recs.front().energy[m];
    double e_max = 0.0, s_at_max = s_first;
    for (const EnergyRecord& r : recs)
        if (r.energy[m] > e_max) {
            e_max = r.energy[m];
            s_at_max = r.s;
        }

    if (e_first == 0.0) {
        if (e_max == 0.0) {
            v.statistic = 0.0;
            v.pass = true;
            v.notes = "energy identically zero along the series";
            return v;
        }
        v.statistic = std::numeric_limits<double>::infinity();
        v.notes = "growth from zero initial energy to " + format(e_max) + " at s = " +
                  format(s_at_max);
        return v;
    }
    v.statistic = e_max / e_first;

    const double tail_cut = 0.5 * (s_first + s_last) - 1e-12;
    int tail_count = 0;
    for (const EnergyRecord& r : recs)
        if (r.s >= tail_cut) ++tail_count;
    if (tail_count < 3) {
        v.inconclusive = true;
        v.notes = "only " + std::to_string(tail_count) +
                  " slices in the tail half, need three for a slope";
        return v;
    }

    const PowerLawFit tail = energy_tail_fit(series, m);
    if (tail.at_floor) {
        v.inconclusive = true;
        v.notes = "tail energies fall below the observable floor";
        return v;
    }

    const bool slope_ok = tail.exponent >= tail_slope_min && tail.exponent <= tail_slope_max;
    v.pass = v.statistic <= v.threshold && slope_ok;
    v.notes = "max ratio " + format(v.statistic) + " at s = " + format(s_at_max) +
              "; tail slope " + format(tail.exponent) + " over " +
              std::to_string(tail.points) + " slices, window [" + format(tail_slope_min) +
              ", " + format(tail_slope_max) + "]";
    return v;
}

double observable_value(const DecayObservables& obs, ObservableId id) {
    if (id.order < 0 || id.order >= obs.orders)
        throw ConfigError("observable value: order " + std::to_string(id.order) +
                          " not tracked by this record");
    switch (id.kind) {
        case ObservableKind::GradientSup: return obs.sup_s_grad[id.order];
        case ObservableKind::TangentSup: return obs.sup_t_tangent[id.order];
        case ObservableKind::MixedSecondSup: return obs.sup_ts_second[id.order];
        case ObservableKind::TimeSecondSup: return obs.sup_time_second[id.order];
    }
    throw ConfigError("observable value: unknown kind");
}

DecayFit decay_fit(const RunSeries& series, ObservableId id) {
    DecayFit out;
    out.id = id;
    if (series.records.size() < 8) {
        out.inconclusive = true;
        out.reason = "needs at least eight slices, have " +
                     std::to_string(series.records.size());
        return out;
    }

    const double s_first = series.records.front().s;
    const double s_last = series.records.back().s;
    const double s_cut = s_first + 0.1 * (s_last - s_first) - 1e-12;

    std::vector<double> xs, ys;
    for (const EnergyRecord& r : series.records) {
        if (r.s < s_cut) continue;
        xs.push_back(r.s);
        ys.push_back(observable_value(r.observables, id));
    }

    const PowerLawFit fit = log_log_fit(xs, ys);
    out.points = fit.points;
    if (fit.at_floor) {
        out.inconclusive = true;
        out.reason = "observable falls below the floor " + format(observable_floor);
        return out;
    }
    out.exponent = fit.exponent;
    out.std_error = fit.std_error;
    return out;
}

EquivalenceReport equivalence_ratio(const RunSeries& series, int m) {
    if (m < 0) m = series.m_diag;
    require_order(series, m, "equivalence ratio");

    EquivalenceReport report;
    report.order = m;
    report.s_at_max = series.records.front().s;
    for (const EnergyRecord& r : series.records) {
        const double dev = std::abs(r.ratio[m] - 1.0);
        if (dev > report.max_deviation) {
            report.max_deviation = dev;
            report.s_at_max = r.s;
        }
    }
    return report;
}

FoliationContrast foliation_comparison(const RunSeries& series, int m) {
    require_order(series, m, "foliation comparison");

    const double s_first = series.records.front().s;
    const double s_last = series.records.back().s;
    const double s_cut = s_first + 0.1 * (s_last - s_first) - 1e-12;

    std::vector<double> xs, ys, xt, yt;
    for (const EnergyRecord& r : series.records) {
        if (r.s < s_cut) continue;
        xs.push_back(r.s);
        ys.push_back(r.energy[m]);
        // adjacent slices can close within one step and share a stamp time;
        // keep the first of each stamp so the abscissae stay increasing
        if (xt.empty() || r.flat_energy_time > xt.back()) {
            xt.push_back(r.flat_energy_time);
            yt.push_back(r.flat_energy);
        }
    }

    FoliationContrast out;
    if (xs.size() < 3 || xt.size() < 3) {
        out.inconclusive = true;
        return out;
    }
    const PowerLawFit hyp = log_log_fit(xs, ys);
    const PowerLawFit flat = log_log_fit(xt, yt);
    if (hyp.at_floor || flat.at_floor) {
        out.inconclusive = true;
        return out;
    }
    out.hyperboloidal_slope = hyp.exponent;
    out.constant_time_slope = flat.exponent;
    return out;
}

Verdict mark_resolution_sensitivity(Verdict fine, const Verdict& coarse) {
    if (fine.claim != coarse.claim)
        throw ConfigError("resolution sensitivity: verdicts test different claims (" +
                          fine.claim + " vs " + coarse.claim + ")");
    fine.sensitivity_checked = true;
    fine.resolution_sensitive =
        fine.pass != coarse.pass || fine.inconclusive != coarse.inconclusive;
    fine.notes += "; coarse twin: statistic " + format(coarse.statistic) + ", " +
                  (coarse.inconclusive ? "inconclusive" : (coarse.pass ? "pass" : "fail"));
    return fine;
}

namespace {

nlohmann::json verdict_object(const Verdict& v) {
    nlohmann::json j;
    j["claim"] = v.claim;
    j["anchor"] = v.anchor;
    j["statistic"] = std::isfinite(v.statistic) ? nlohmann::json(v.statistic)
                                                : nlohmann::json(nullptr);
    j["threshold"] = v.threshold;
    j["pass"] = v.pass;
    j["inconclusive"] = v.inconclusive;
    j["notes"] = v.notes;
    j["sensitivity"] = v.sensitivity_checked ? nlohmann::json(v.resolution_sensitive)
                                             : nlohmann::json(nullptr);
    return j;
}

}  // namespace

std::string verdict_json(const Verdict& verdict) { return verdict_object(verdict).dump(2); }

std::string verdict_bundle_json(const std::vector<Verdict>& verdicts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Verdict& v : verdicts) arr.push_back(verdict_object(v));
    return arr.dump(2);
}

}  // namespace membrane
