#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bundle.hpp"
#include "membrane/hyperboloid.hpp"
#include "membrane/metrics.hpp"
#include "report.hpp"
#include "suites.hpp"

namespace {

using namespace membrane;

std::filesystem::path default_out_dir(const std::string& cfg_path) {
    const std::string stem = std::filesystem::path(cfg_path).stem().string();
    const char* env = std::getenv("MEMBRANE_OUT");
    const std::filesystem::path base = env != nullptr ? std::filesystem::path(env)
                                                      : std::filesystem::path(".");
    return base / (stem + ".run");
}

int run_simulate(const std::string& cfg_path, const std::string& out_opt, int threads,
                 const std::string& resolution) {
    LabConfig lab = load_config(cfg_path);
    if (threads > 0) lab.scenario.threads = threads;
    if (resolution == "coarse") lab.scenario.grid_spacing *= 2.0;
    const std::filesystem::path dir =
        out_opt.empty() ? default_out_dir(cfg_path) : std::filesystem::path(out_opt);

    bundle::RunOutcome outcome;
    bundle::GridStats grid;
    std::vector<EnergyRecord> records;
    std::vector<IdentityRow> identity;
    int exit_code = 0;
    const auto t0 = std::chrono::steady_clock::now();

    if (lab.geometry == GeometryKind::Planar) {
        const ScenarioConfig sc = lab.planar_config();
        sc.validate();
        PlanarSolver solver(sc);
        SliceMonitor monitor(sc, solver.grid(), solver.dt());
        try {
            solver.run(monitor.observer());
        } catch (const DegeneracyError& e) {
            outcome.status = "degeneracy";
            outcome.error = e.what();
            exit_code = 2;
        } catch (const BlowupError& e) {
            outcome.status = "blowup";
            outcome.error = e.what();
            exit_code = 2;
        }
        outcome.steps = solver.step_count();
        outcome.last_time = solver.time();
        grid = {"planar", solver.grid().n, solver.grid().h, solver.dt(), sc.half_width()};
        records = monitor.records();
        identity = monitor.identity_rows();
    } else {
        const RadialConfig rc = lab.radial_config();
        rc.validate();
        RadialSolver solver(rc);
        RadialSliceMonitor monitor(rc, solver.dt());
        try {
            solver.run(monitor.observer());
        } catch (const DegeneracyError& e) {
            outcome.status = "degeneracy";
            outcome.error = e.what();
            exit_code = 2;
        } catch (const BlowupError& e) {
            outcome.status = "blowup";
            outcome.error = e.what();
            exit_code = 2;
        }
        outcome.steps = solver.step_count();
        outcome.last_time = solver.time();
        grid = {"radial", solver.points(), solver.dr(), solver.dt(), rc.half_width()};
        records = bundle::lift_radial_records(monitor.records());
    }
    outcome.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::vector<Verdict> verdicts =
        bundle::write_bundle(dir, lab, grid, records, identity, outcome);

    char line[256];
    std::snprintf(line, sizeof line, "wrote run bundle to %s (%zu slices, %s in %.1f s)\n",
                  dir.string().c_str(), records.size(), outcome.status.c_str(),
                  outcome.wall_seconds);
    std::cout << line;
    if (exit_code != 0) std::cout << "aborted: " << outcome.error << "\n";
    for (const Verdict& v : verdicts) {
        const char* tag = v.inconclusive ? "INCONCLUSIVE" : (v.pass ? "PASS" : "FAIL");
        if (std::isfinite(v.statistic))
            std::snprintf(line, sizeof line, "[%s] %s (statistic %.4g against %.4g)\n", tag,
                          v.claim.c_str(), v.statistic, v.threshold);
        else
            std::snprintf(line, sizeof line, "[%s] %s\n", tag, v.claim.c_str());
        std::cout << line;
    }
    return exit_code;
}

int run_verify(const std::string& suite, const std::string& resolution) {
    suites::SuiteReport rep;
    if (suite == "frames")
        rep = suites::frames_suite();
    else if (suite == "nullform")
        rep = suites::nullform_suite();
    else if (suite == "metric")
        rep = suites::metric_suite();
    else
        rep = suites::mms_suite(resolution == "coarse" ? 65 : 129);
    suites::print_report(rep, std::cout);
    return rep.pass() ? 0 : 1;
}

int run_check_metric(const std::string& cfg_path, int max_order) {
    const LabConfig lab = load_config(cfg_path);
    const MetricConfig& mc = lab.scenario.metric;
    mc.validate();

    DecayRegion region;
    const ValidationReport rep = validate_decay(mc, region, max_order);
    char line[192];
    std::printf("metric decay validation (claimed delta %.6g, tolerance %.2g)\n", rep.delta,
                rep.tolerance);
    for (const auto& row : rep.rows) {
        std::snprintf(line, sizeof line,
                      "  order %d: max ratio %.6g (upper indices) / %.6g (lower), worst at "
                      "t = %.4g, x = (%.4g, %.4g)\n",
                      row.order, row.max_ratio_upper, row.max_ratio_lower, row.argmax_t,
                      row.argmax_x1, row.argmax_x2);
        std::printf("%s", line);
    }

    // Trend of the per-slice worst ratio; a conforming family stays flat.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& [s, ratio] : rep.per_s_max_ratio) {
        if (ratio <= 0.0) continue;
        const double lx = std::log(s), ly = std::log(ratio);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n >= 2) {
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        std::printf("  per-slice ratio trend: slope %.4g over s in [%.3g, %.3g]\n", slope,
                    rep.per_s_max_ratio.front().first, rep.per_s_max_ratio.back().first);
    }
    std::printf("gate: order-0 ratio %.6g %s %.6g -> %s\n", rep.gate_ratio,
                rep.pass ? "<=" : ">", 1.0 + rep.tolerance, rep.pass ? "pass" : "FAIL");
    return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the relativistic membrane equation on "
                 "hyperboloidal foliations"};
    app.require_subcommand(1);

    std::string cfg_path, out_dir, suite, metric_cfg, report_dir, cmp_a, cmp_b;
    std::string resolution = "fine";
    int threads = 0;
    int metric_order = 1;

    CLI::App* sim = app.add_subcommand("simulate", "evolve a scenario and write its run bundle");
    sim->add_option("config", cfg_path, "scenario configuration file")->required();
    sim->add_option("--out", out_dir, "bundle directory (default <config stem>.run, "
                                      "under $MEMBRANE_OUT when set)");
    sim->add_option("--threads", threads, "worker thread count");
    sim->add_option("--resolution", resolution, "fine runs the configured grid, coarse doubles "
                                                "the spacing for a sensitivity twin")
        ->check(CLI::IsMember({"fine", "coarse"}));

    CLI::App* ver = app.add_subcommand("verify", "run one of the property suites");
    ver->add_option("suite", suite, "frames | nullform | metric | mms")
        ->required()
        ->check(CLI::IsMember({"frames", "nullform", "metric", "mms"}));
    ver->add_option("--resolution", resolution, "mms base grid: fine starts at 129, coarse at 65")
        ->check(CLI::IsMember({"fine", "coarse"}));

    CLI::App* chk = app.add_subcommand("check-metric", "validate a configured background "
                                                       "metric against its decay envelope");
    chk->add_option("config", metric_cfg, "scenario configuration file")->required();
    chk->add_option("--order", metric_order, "highest derivative order to sample (0-2)")
        ->check(CLI::Range(0, 2));

    CLI::App* rpt = app.add_subcommand("report", "summarize a run bundle and emit plot scripts");
    rpt->add_option("bundle", report_dir, "run bundle directory")->required();

    CLI::App* cmp = app.add_subcommand("compare", "contrast two bundles of the same scenario "
                                                  "at different resolutions");
    cmp->add_option("bundle_a", cmp_a, "first bundle directory")->required();
    cmp->add_option("bundle_b", cmp_b, "second bundle directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return run_simulate(cfg_path, out_dir, threads, resolution);
        if (ver->parsed()) return run_verify(suite, resolution);
        if (chk->parsed()) return run_check_metric(metric_cfg, metric_order);
        if (rpt->parsed()) return report::cmd_report(report_dir, std::cout);
        if (cmp->parsed()) return report::cmd_compare(cmp_a, cmp_b, std::cout);
    } catch (const DegeneracyError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 2;
    } catch (const BlowupError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
