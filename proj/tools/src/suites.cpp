#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "membrane/analytic_fields.hpp"
#include "membrane/frames.hpp"
#include "membrane/metrics.hpp"
#include "membrane/nullforms.hpp"
#include "membrane/solver.hpp"

namespace membrane::suites {

namespace {

// Deterministic cone points, log-uniform in t so early and late times are
// both exercised.
class ConeSampler {
  public:
    explicit ConeSampler(std::uint64_t seed) : rng_(seed) {}

    SpacetimePoint next(double t_min = 2.0, double t_max = 40.0, double frac_max = 0.95) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double t = t_min * std::pow(t_max / t_min, unit(rng_));
        const double r = frac_max * (t - 1.0) * unit(rng_);
        const double th = 2.0 * M_PI * unit(rng_);
        return SpacetimePoint::cartesian(t, r * std::cos(th), r * std::sin(th));
    }

  private:
    std::mt19937_64 rng_;
};

MetricConfig conforming_metric(double delta, double gamma) {
    MetricConfig cfg;
    cfg.kind = MetricKind::PerturbedAnalytic;
    cfg.delta = delta;
    cfg.gamma_decay = gamma;
    cfg.shape = PerturbationShape::ConstantSymmetric;
    cfg.amplitude = SmallMat::zero(3);
    cfg.amplitude(0, 0) = 1.0;
    cfg.amplitude(0, 1) = cfg.amplitude(1, 0) = 0.4;
    cfg.amplitude(1, 1) = -0.6;
    cfg.amplitude(1, 2) = cfg.amplitude(2, 1) = 0.2;
    cfg.amplitude(2, 2) = 0.8;
    return cfg;
}

}  // namespace

bool SuiteReport::pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass(); });
}

double SuiteReport::worst_margin() const {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        const double scale = std::max(std::abs(r.threshold), 1e-300);
        const double slack =
            (r.gate == Gate::AtMost ? r.threshold - r.value : r.value - r.threshold) / scale;
        worst = std::min(worst, slack);
    }
    return worst;
}

SuiteReport frames_suite() {
    SuiteReport rep;
    rep.name = "frames";

    // phi * psi against the identity; entries are exact or one rounding away.
    ConeSampler pts(0xF8A3E5u);
    double worst_inverse = 0.0;
    for (int k = 0; k < 100; ++k) {
        const SpacetimePoint p = pts.next();
        const FrameMatrix fm = frame_matrices(p);
        worst_inverse = std::max(worst_inverse, max_abs_diff(fm.phi * fm.psi,
                                                             SmallMat::identity(3)));
    }
    rep.rows.push_back({"max |phi*psi - I| entry", worst_inverse, 1e-16, Gate::AtMost});

    // Frame commutator [D_0, D_a] = -(x^a/t^2) D_0 on exact corpus jets,
    // normalized by the participating derivative magnitudes.
    ConeSampler cpts(0x51CEu);
    double worst_comm = 0.0;
    for (const auto& f : analytic_field_corpus()) {
        for (int k = 0; k < 20; ++k) {
            const SpacetimePoint p = cpts.next();
            const CartesianJet jet = f->jet_to_order(p, 3);
            double ff[3][3];
            frame_second_derivatives(jet, p, ff);
            const auto u = frame_first_derivatives(jet, p);
            const double scale =
                std::abs(ff[0][1]) + std::abs(ff[1][0]) + std::abs(u[0]) + 1e-30;
            for (int a = 1; a <= 2; ++a) {
                const double lhs = ff[0][a] - ff[a][0];
                const double rhs = -(p.x[a - 1] / (p.t * p.t)) * u[0];
                worst_comm = std::max(worst_comm, std::abs(lhs - rhs) / scale);
            }
        }
    }
    rep.rows.push_back({"max commutator residual", worst_comm, 1e-10, Gate::AtMost});

    // The flat metric in the frame against its closed-form display, checked
    // through both signature conventions at random cone points.
    ConeSampler dpts(0xBEE5u);
    double worst_display = 0.0;
    for (int k = 0; k < 100; ++k) {
        const SpacetimePoint p = dpts.next();
        SmallMat display = SmallMat::zero(3);
        display(0, 0) = (p.s * p.s) / (p.t * p.t);
        for (int a = 1; a <= 2; ++a) {
            display(0, a) = display(a, 0) = p.x[a - 1] / p.t;
            display(a, a) = -1.0;
        }
        const SmallMat conj_mm = minkowski_frame_conjugation(p, Signature::MostlyMinus);
        const SmallMat conj_mp = minkowski_frame_conjugation(p, Signature::MostlyPlus);
        worst_display = std::max({worst_display, max_abs_diff(conj_mm, display),
                                  max_abs_diff(-1.0 * conj_mp, display)});
    }
    rep.rows.push_back({"max frame display residual", worst_display, 1e-14, Gate::AtMost});
    return rep;
}

SuiteReport nullform_suite(int points_per_field) {
    SuiteReport rep;
    rep.name = "nullform";

    const auto corpus = analytic_field_corpus();
    ConeSampler bulk(902);
    ConeSampler edge(903);
    const int n_edge = points_per_field / 10;  // near-boundary band r/(t-1) in [0.9, 0.95)
    const int n_bulk = points_per_field - n_edge;

    double worst = 0.0;
    long evaluated = 0;
    for (const auto& f : corpus) {
        for (int k = 0; k < points_per_field; ++k) {
            const SpacetimePoint p = k < n_bulk ? bulk.next()
                                                : edge.next(5.0, 200.0, 0.949);
            const CartesianJet jet = f->jet_to_order(p, 2);
            const auto b = DerivativeBundle::from_cartesian(jet, p);
            const double cart = cubic_flat_cartesian(jet);
            const double frame = cubic_flat_frame(b, p);
            const double scale = std::max(cubic_flat_magnitude(jet), 1e-300);
            worst = std::max(worst, std::abs(cart - frame) / scale);
            ++evaluated;
        }
    }
    rep.rows.push_back({"max relative residual, " + std::to_string(corpus.size()) +
                            " fields x " + std::to_string(points_per_field) + " points",
                        worst, 1e-9, Gate::AtMost});
    rep.rows.push_back(
        {"points evaluated", double(evaluated),
         double(corpus.size()) * points_per_field, Gate::AtLeast});
    return rep;
}

SuiteReport metric_suite() {
    SuiteReport rep;
    rep.name = "metric";

    // Conforming family: constant amplitudes inside the decay envelope.
    DecayRegion region;
    const ValidationReport good = validate_decay(conforming_metric(1e-3, 0.5), region, 0);
    rep.rows.push_back({"conforming family gate ratio", good.gate_ratio, 1.05, Gate::AtMost});

    // Violating family: actual decay s^{-1/2} slower than the claimed
    // envelope s^{-1/2-gamma}; its gate ratio must exceed the tolerance and
    // its per-slice trend must diverge at least like s^0.4 over a decade.
    DecayRegion wide;
    wide.s_min = 3.0;
    wide.s_max = 30.0;
    wide.n_s = 10;
    const ValidationReport bad =
        validate_decay(conforming_metric(1e-3, -0.5), wide, 0, 1e-3, 0.5);
    rep.rows.push_back({"violating family gate ratio", bad.gate_ratio, 1.05, Gate::AtLeast});

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = int(bad.per_s_max_ratio.size());
    for (const auto& [s, ratio] : bad.per_s_max_ratio) {
        const double lx = std::log(s), ly = std::log(std::max(ratio, 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double slope =
        n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
    rep.rows.push_back({"violating family ratio trend slope", slope, 0.4, Gate::AtLeast});
    return rep;
}

SuiteReport mms_suite(int n_base) {
    SuiteReport rep;
    rep.name = "mms";

    struct ModeCase {
        const char* label;
        EvolutionMode mode;
        MetricConfig metric;
    };
    MetricConfig curved = conforming_metric(1e-3, 0.5);
    const ModeCase cases[] = {
        {"linear", EvolutionMode::Linear, MetricConfig{}},
        {"flat-null", EvolutionMode::FlatNullOnly, MetricConfig{}},
        {"full, perturbed metric", EvolutionMode::Full, curved},
    };

    for (const auto& c : cases) {
        ManufacturedConfig mc;
        mc.mode = c.mode;
        mc.metric = c.metric;
        double err[3];
        for (int level = 0; level < 3; ++level) {
            mc.n = ((n_base - 1) << level) + 1;
            err[level] = run_manufactured(mc).sup_error;
        }
        const double order_coarse = std::log2(err[0] / err[1]);
        const double order_fine = std::log2(err[1] / err[2]);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: order at n %d->%d (sup err %.3e -> %.3e)",
                      c.label, n_base, 2 * (n_base - 1) + 1, err[0], err[1]);
        rep.rows.push_back({buf, order_coarse, 1.8, Gate::AtLeast});
        std::snprintf(buf, sizeof buf, "%s: order at n %d->%d (sup err %.3e -> %.3e)",
                      c.label, 2 * (n_base - 1) + 1, 4 * (n_base - 1) + 1, err[1], err[2]);
        rep.rows.push_back({buf, order_fine, 1.8, Gate::AtLeast});
    }
    return rep;
}

void print_report(const SuiteReport& report, std::ostream& out) {
    out << "suite: " << report.name << "\n";
    for (const auto& r : report.rows) {
        char line[256];
        std::snprintf(line, sizeof line, "  [%s] %-64s %12.5e %s %.5e\n",
                      r.pass() ? "ok" : "FAIL", r.quantity.c_str(), r.value,
                      r.gate == Gate::AtMost ? "<=" : ">=", r.threshold);
        out << line;
    }
    out << (report.pass() ? "suite passed" : "suite FAILED") << "\n";
}

}  // namespace membrane::suites
