#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "bundle.hpp"
#include "json.hpp"

namespace membrane::report {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

json read_verdicts(const std::filesystem::path& dir, const RunSeries* series) {
    std::ifstream in(dir / "verdicts.json");
    if (in) {
        try {
            json stored;
            in >> stored;
            if (stored.is_array()) return stored;
        } catch (const json::exception&) {
            // fall through to recomputation
        }
    }
    if (series == nullptr) return json::array();
    return json::parse(verdict_bundle_json(bundle::run_verdicts(*series)));
}

std::string verdict_status(const json& v) {
    if (v.value("inconclusive", false)) return "INCONCLUSIVE";
    return v.value("pass", false) ? "PASS" : "FAIL";
}

void render_verdicts(const json& verdicts, std::ostream& out) {
    for (const auto& v : verdicts) {
        char head[160];
        std::snprintf(head, sizeof head, "[%s] %s\n", verdict_status(v).c_str(),
                      v.value("claim", "?").c_str());
        out << head;
        out << "       " << v.value("anchor", "") << "\n";
        if (v.contains("statistic") && !v["statistic"].is_null()) {
            char line[160];
            std::snprintf(line, sizeof line, "       statistic %.6g against threshold %.6g",
                          v["statistic"].get<double>(), v.value("threshold", 0.0));
            out << line;
        } else {
            out << "       statistic unavailable";
        }
        if (v.contains("sensitivity") && !v["sensitivity"].is_null())
            out << (v["sensitivity"].get<bool>() ? "; resolution-sensitive"
                                                 : "; resolution-stable");
        out << "\n";
        const std::string notes = v.value("notes", "");
        if (!notes.empty()) out << "       " << notes << "\n";
    }
}

// Column indices (1-based, gnuplot convention) in the frozen energy.csv.
int column_of(const std::string& name) {
    const auto& cols = bundle::energy_columns();
    const auto it = std::find(cols.begin(), cols.end(), name);
    return int(it - cols.begin()) + 1;
}

void write_energy_plot(const std::filesystem::path& path, int m_diag) {
    std::ofstream out = open_out(path);
    out << "# gnuplot script; run from this directory: gnuplot energy_vs_s.gp\n"
        << "set datafile separator comma\n"
        << "set terminal pngcairo size 900,600\n"
        << "set output 'energy_vs_s.png'\n"
        << "set logscale xy\n"
        << "set key top left\n"
        << "set xlabel 's'\n"
        << "set ylabel 'slice energy'\n";
    out << "plot";
    for (int m = 0; m <= m_diag; ++m) {
        out << (m == 0 ? " " : ", \\\n     ") << "'../energy.csv' using 1:"
            << column_of("energy_" + std::to_string(m)) << " with linespoints title 'order "
            << m << "'";
        out << ", \\\n     '' using 1:" << column_of("generalized_" + std::to_string(m))
            << " with lines dashtype 2 title 'order " << m << ", corrected'";
    }
    out << "\n";
}

void write_decay_plot(const std::filesystem::path& path, int orders) {
    std::ofstream out = open_out(path);
    out << "# gnuplot script; run from this directory: gnuplot decay_fits.gp\n"
        << "set datafile separator comma\n"
        << "set terminal pngcairo size 900,600\n"
        << "set output 'decay_fits.png'\n"
        << "set logscale xy\n"
        << "set key outside right\n"
        << "set xlabel 's'\n"
        << "set ylabel 'weighted sup-norm'\n";
    const char* names[] = {"sup_s_grad", "sup_t_tangent", "sup_ts_second", "sup_time_second"};
    out << "plot";
    bool first = true;
    for (const char* name : names) {
        for (int j = 0; j < orders; ++j) {
            const std::string col = std::string(name) + "_" + std::to_string(j);
            out << (first ? " " : ", \\\n     ") << "'../energy.csv' using 1:"
                << column_of(col) << " with linespoints title '" << col << "'";
            first = false;
        }
    }
    out << "\n";
}

void write_identity_plot(const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "# gnuplot script; run from this directory: gnuplot identity_residuals.gp\n"
        << "set datafile separator comma\n"
        << "set terminal pngcairo size 900,600\n"
        << "set output 'identity_residuals.png'\n"
        << "set logscale y\n"
        << "set xlabel 's at interval midpoint'\n"
        << "set ylabel 'absolute residual'\n"
        << "plot '../identity.csv' using 1:4 with linespoints title "
           "'|energy rate - flux integral|'\n";
}

char resolution_tag(const bundle::BundleInfo& a, const bundle::BundleInfo& b) {
    return a.grid.spacing <= b.grid.spacing ? 'A' : 'B';
}

}  // namespace

int cmd_report(const std::filesystem::path& bundle_dir, std::ostream& out) {
    const bundle::BundleInfo info = bundle::read_bundle_info(bundle_dir);
    const std::vector<EnergyRecord> records =
        bundle::read_energy_csv(bundle_dir / "energy.csv");
    std::vector<IdentityRow> identity;
    if (std::filesystem::exists(bundle_dir / "identity.csv"))
        identity = bundle::read_identity_csv(bundle_dir / "identity.csv");

    const bool have_series = !records.empty();
    RunSeries series;
    if (have_series)
        series = make_series(records, info.config.scenario.m_diag, info.scenario_hash,
                             ResolutionMeta{info.grid.spacing, info.grid.dt});
    const json verdicts = read_verdicts(bundle_dir, have_series ? &series : nullptr);

    const std::filesystem::path report_dir = bundle_dir / "report";
    std::filesystem::create_directories(report_dir);

    const bool truncated = info.outcome.status != "completed";
    const int orders = have_series ? records.front().observables.orders : 0;

    // ---- summary.txt -------------------------------------------------------
    {
        std::ofstream s = open_out(report_dir / "summary.txt");
        s << "run summary\n===========\n";
        s << "bundle:    " << bundle_dir.string() << "\n";
        s << "status:    " << info.outcome.status;
        if (truncated) s << " -- " << info.outcome.error;
        s << "\n";
        char line[256];
        std::snprintf(line, sizeof line,
                      "geometry:  %s; %d grid points%s, spacing %.6g, dt %.6g\n",
                      info.grid.geometry.c_str(), info.grid.points,
                      info.grid.geometry == "planar" ? " per axis" : "", info.grid.spacing,
                      info.grid.dt);
        s << line;
        std::snprintf(line, sizeof line, "scenario:  fingerprint %016llx, diagnostics order %d\n",
                      static_cast<unsigned long long>(info.scenario_hash),
                      info.config.scenario.m_diag);
        s << line;
        if (have_series) {
            std::snprintf(line, sizeof line, "slices:    %zu records, s in [%.6g, %.6g]\n",
                          records.size(), records.front().s, records.back().s);
            s << line;
        } else {
            s << "slices:    none completed\n";
        }
        std::snprintf(line, sizeof line, "evolution: %d steps, reached t = %.6g, wall %.1f s\n",
                      info.outcome.steps, info.outcome.last_time, info.outcome.wall_seconds);
        s << line;
        if (truncated && have_series) {
            std::snprintf(line, sizeof line,
                          "truncated: records end at the last stable slice s = %.6g\n",
                          records.back().s);
            s << line;
        }

        s << "\nverdicts\n--------\n";
        if (verdicts.empty())
            s << "none (no completed slices)\n";
        else
            render_verdicts(verdicts, s);

        if (have_series) {
            s << "\nobserved trends\n---------------\n";
            const FoliationContrast fc = foliation_comparison(series, series.m_diag);
            if (fc.inconclusive) {
                s << "foliation contrast: inconclusive (series too short or at the floor)\n";
            } else {
                std::snprintf(line, sizeof line,
                              "foliation contrast (order %d): hyperboloidal slope %.4g vs "
                              "constant-time slope %.4g\n",
                              series.m_diag, fc.hyperboloidal_slope, fc.constant_time_slope);
                s << line;
            }
            if (!identity.empty()) {
                const auto worst = std::max_element(
                    identity.begin(), identity.end(),
                    [](const IdentityRow& a, const IdentityRow& b) {
                        return a.residual < b.residual;
                    });
                std::snprintf(line, sizeof line,
                              "energy identity: worst |rate - flux| = %.4g at s_mid = %.4g "
                              "(%zu intervals)\n",
                              worst->residual, worst->s_mid, identity.size());
                s << line;
            }
        }

        s << "\nplots\n-----\n";
        s << "energy_vs_s.gp";
        if (orders > 0) s << ", decay_fits.gp";
        if (!identity.empty()) s << ", identity_residuals.gp";
        s << "  (gnuplot, run from the report directory)\n";
    }

    // ---- report.json -------------------------------------------------------
    {
        json rep;
        rep["format"] = "membrane-report/1";
        rep["bundle"] = bundle_dir.string();
        rep["status"] = info.outcome.status;
        rep["truncated"] = truncated;
        rep["records"] = records.size();
        if (have_series) {
            rep["s_first"] = records.front().s;
            rep["s_last"] = records.back().s;
            rep["last_stable_s"] = records.back().s;
        } else {
            rep["s_first"] = nullptr;
            rep["s_last"] = nullptr;
            rep["last_stable_s"] = nullptr;
        }
        rep["verdicts"] = verdicts;

        if (have_series) {
            json decay = json::array();
            const struct {
                ObservableKind kind;
                const char* name;
            } kinds[] = {{ObservableKind::GradientSup, "sup_s_grad"},
                         {ObservableKind::TangentSup, "sup_t_tangent"},
                         {ObservableKind::MixedSecondSup, "sup_ts_second"},
                         {ObservableKind::TimeSecondSup, "sup_time_second"}};
            for (const auto& k : kinds) {
                for (int j = 0; j < orders; ++j) {
                    const DecayFit fit = decay_fit(series, {k.kind, j});
                    json f;
                    f["observable"] = k.name;
                    f["order"] = j;
                    f["exponent"] = fit.inconclusive ? json(nullptr) : json(fit.exponent);
                    f["std_error"] = fit.std_error;
                    f["points"] = fit.points;
                    f["inconclusive"] = fit.inconclusive;
                    f["reason"] = fit.reason;
                    decay.push_back(std::move(f));
                }
            }
            rep["decay_fits"] = decay;

            json tails = json::array();
            for (int m = 0; m <= series.m_diag; ++m) {
                const PowerLawFit fit = energy_tail_fit(series, m);
                tails.push_back({{"order", m},
                                 {"exponent", fit.exponent},
                                 {"std_error", fit.std_error},
                                 {"points", fit.points},
                                 {"at_floor", fit.at_floor}});
            }
            rep["energy_tail_fits"] = tails;

            const FoliationContrast fc = foliation_comparison(series, series.m_diag);
            rep["foliation"] = {{"order", series.m_diag},
                                {"hyperboloidal_slope",
                                 fc.inconclusive ? json(nullptr) : json(fc.hyperboloidal_slope)},
                                {"constant_time_slope",
                                 fc.inconclusive ? json(nullptr) : json(fc.constant_time_slope)},
                                {"inconclusive", fc.inconclusive}};

            if (std::isfinite(records.front().ratio[series.m_diag])) {
                const EquivalenceReport eq = equivalence_ratio(series);
                rep["equivalence"] = {{"order", eq.order},
                                      {"max_deviation", eq.max_deviation},
                                      {"s_at_max", eq.s_at_max}};
            }
        }
        if (!identity.empty()) {
            const auto worst = std::max_element(identity.begin(), identity.end(),
                                                [](const IdentityRow& a, const IdentityRow& b) {
                                                    return a.residual < b.residual;
                                                });
            rep["identity"] = {{"intervals", identity.size()},
                               {"worst_residual", worst->residual},
                               {"at_s_mid", worst->s_mid}};
        }
        open_out(report_dir / "report.json") << rep.dump(2) << '\n';
    }

    // ---- plot scripts ------------------------------------------------------
    write_energy_plot(report_dir / "energy_vs_s.gp", info.config.scenario.m_diag);
    if (orders > 0) write_decay_plot(report_dir / "decay_fits.gp", orders);
    if (!identity.empty()) write_identity_plot(report_dir / "identity_residuals.gp");

    out << "wrote " << (report_dir / "summary.txt").string() << ", report.json, and "
        << (1 + (orders > 0 ? 1 : 0) + (identity.empty() ? 0 : 1)) << " plot script(s)\n";
    if (truncated)
        out << "note: run was truncated (" << info.outcome.status << "); see summary\n";
    return 0;
}

int cmd_compare(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b,
                std::ostream& out) {
    const bundle::BundleInfo ia = bundle::read_bundle_info(dir_a);
    const bundle::BundleInfo ib = bundle::read_bundle_info(dir_b);
    const RunSeries sa = bundle::read_series(ia);
    const RunSeries sb = bundle::read_series(ib);

    char line[256];
    out << "bundle comparison\n=================\n";
    std::snprintf(line, sizeof line, "A: %s  (spacing %.6g, dt %.6g, fingerprint %016llx)\n",
                  dir_a.string().c_str(), ia.grid.spacing, ia.grid.dt,
                  static_cast<unsigned long long>(ia.scenario_hash));
    out << line;
    std::snprintf(line, sizeof line, "B: %s  (spacing %.6g, dt %.6g, fingerprint %016llx)\n",
                  dir_b.string().c_str(), ib.grid.spacing, ib.grid.dt,
                  static_cast<unsigned long long>(ib.scenario_hash));
    out << line;

    const bool a_fine = ia.grid.spacing <= ib.grid.spacing;
    const RunSeries& fine = a_fine ? sa : sb;
    const RunSeries& coarse = a_fine ? sb : sa;
    out << "fine resolution: bundle " << resolution_tag(ia, ib) << "\n";

    out << "\nboundedness by order\n--------------------\n";
    const int m_common = std::min(sa.m_diag, sb.m_diag);
    for (int m = 0; m <= m_common; ++m) {
        const Verdict vf = boundedness_verdict(fine, m);
        const Verdict vc = boundedness_verdict(coarse, m);
        const Verdict marked = mark_resolution_sensitivity(vf, vc);
        std::snprintf(line, sizeof line,
                      "order %d: fine ratio %.6g [%s], coarse ratio %.6g [%s] -> %s\n", m,
                      vf.statistic, vf.inconclusive ? "inconclusive" : (vf.pass ? "pass" : "fail"),
                      vc.statistic, vc.inconclusive ? "inconclusive" : (vc.pass ? "pass" : "fail"),
                      marked.resolution_sensitive ? "RESOLUTION-SENSITIVE" : "resolution-stable");
        out << line;
    }

    out << "\nfoliation contrast (hyperboloidal slope vs constant-time slope)\n"
        << "---------------------------------------------------------------\n";
    for (int m = 0; m <= m_common; ++m) {
        const FoliationContrast fa = foliation_comparison(sa, m);
        const FoliationContrast fb = foliation_comparison(sb, m);
        const auto cell = [&](const FoliationContrast& f) {
            if (f.inconclusive) return std::string("inconclusive");
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.4g vs %.4g", f.hyperboloidal_slope,
                          f.constant_time_slope);
            return std::string(buf);
        };
        out << "order " << m << ": A " << cell(fa) << "; B " << cell(fb) << "\n";
    }
    return 0;
}

}  // namespace membrane::report
