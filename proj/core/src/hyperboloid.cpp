#include "membrane/hyperboloid.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "membrane/constants.hpp"
#include "membrane/nullforms.hpp"

namespace membrane {

namespace {

const MetricSample& flat_sample() {
    static const MetricSample ms = [] {
        MetricSample m;
        m.g_upper = SmallMat::minkowski(3);
        m.g_lower = SmallMat::minkowski(3);
        return m;
    }();
    return ms;
}

// Metric sample with a caller-provided buffer so the flat background costs
// nothing per point.
const MetricSample& sample_for(const MetricConfig& cfg, const SpacetimePoint& p,
                               MetricSample& buf) {
    if (cfg.kind == MetricKind::Minkowski) return flat_sample();
    buf = sample_metric(cfg, p);
    return buf;
}

void first_derivatives(const CartesianJet& jet, double d[3]) {
    d[0] = jet.at(1, 0, 0);
    d[1] = jet.at(0, 1, 0);
    d[2] = jet.at(0, 0, 1);
}

void second_derivatives(const CartesianJet& jet, double dd[3][3]) {
    dd[0][0] = jet.at(2, 0, 0);
    dd[0][1] = dd[1][0] = jet.at(1, 1, 0);
    dd[0][2] = dd[2][0] = jet.at(1, 0, 1);
    dd[1][1] = jet.at(0, 2, 0);
    dd[1][2] = dd[2][1] = jet.at(0, 1, 1);
    dd[2][2] = jet.at(0, 0, 2);
}

// d_c of the quadratic correction q g^{mn} - (gd)^m (gd)^n + (g - m)^{mn},
// chained through the field jet and the metric derivatives.
void quadratic_derivatives(const MetricSample& ms, const CartesianJet& jet, double out[3][3][3]) {
    double d[3], dd[3][3];
    first_derivatives(jet, d);
    second_derivatives(jet, dd);

    double q = 0.0;
    double gd[3] = {};
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            q += ms.g_upper(m, n) * d[m] * d[n];
            gd[m] += ms.g_upper(m, n) * d[n];
        }

    for (int c = 0; c < 3; ++c) {
        double dq = 0.0;
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n)
                dq += ms.dg_upper[c][m][n] * d[m] * d[n] +
                      2.0 * ms.g_upper(m, n) * dd[c][m] * d[n];
        double dgd[3];
        for (int m = 0; m < 3; ++m) {
            dgd[m] = 0.0;
            for (int n = 0; n < 3; ++n)
                dgd[m] += ms.dg_upper[c][m][n] * d[n] + ms.g_upper(m, n) * dd[c][n];
        }
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n)
                out[c][m][n] = ms.dg_upper[c][m][n] * (1.0 + q) + dq * ms.g_upper(m, n) -
                               dgd[m] * gd[n] - gd[m] * dgd[n];
    }
}

// Manufactured source S = C[phi*] : dd phi* - F[phi*]; identical to the
// forcing injected by the evolution kernel, so forced runs satisfy the same
// identities with F replaced by F + S.
double manufactured_source(const AnalyticField& exact, const MetricConfig& metric,
                           EvolutionMode mode, const SpacetimePoint& p) {
    const CartesianJet jet = exact.jet_to_order(p, 2);
    MetricSample buf;
    const MetricSample& ms = sample_for(metric, p, buf);
    const SmallMat C = SmallMat::minkowski(3) + principal_correction(ms, jet, mode);
    double dd[3][3];
    second_derivatives(jet, dd);
    double cdd = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) cdd += C(a, b) * dd[a][b];
    return cdd - semilinear_terms(ms, jet, mode);
}

// ---------------------------------------------------------------------------
// Precomposed operator tables: d_alpha Z^I for energies, the full 2-jet of
// Z^J for decay observables.  Built once per (order, order) pair.
// ---------------------------------------------------------------------------

struct EnergyWordOps {
    int len = 0;
    std::array<DiffOp, 3> d;  // d_alpha (Z^I phi)
};

struct ObsWordOps {
    int len = 0;
    DiffOp value;
    std::array<DiffOp, 3> d1;
    DiffOp d2[3][3];
};

struct WordTable {
    std::vector<EnergyWordOps> energy_words;
    std::vector<ObsWordOps> obs_words;

    static WordTable build(int m_energy, int j_max) {
        WordTable tbl;
        if (m_energy >= 0) {
            for (const auto& w : vector_field_words(m_energy)) {
                EnergyWordOps ops;
                ops.len = static_cast<int>(w.size());
                const DiffOp base = DiffOp::word(w);
                for (int a = 0; a < 3; ++a)
                    ops.d[a] = DiffOp::generator(VectorFieldId::translation(a)).compose(base);
                tbl.energy_words.push_back(std::move(ops));
            }
        }
        if (j_max >= 0) {
            for (const auto& w : vector_field_words(j_max)) {
                ObsWordOps ops;
                ops.len = static_cast<int>(w.size());
                ops.value = DiffOp::word(w);
                for (int a = 0; a < 3; ++a)
                    ops.d1[a] = DiffOp::generator(VectorFieldId::translation(a)).compose(ops.value);
                for (int a = 0; a < 3; ++a)
                    for (int b = a; b < 3; ++b) {
                        const DiffOp op =
                            DiffOp::generator(VectorFieldId::translation(a)).compose(ops.d1[b]);
                        ops.d2[a][b] = op;
                        ops.d2[b][a] = op;
                    }
                tbl.obs_words.push_back(std::move(ops));
            }
        }
        return tbl;
    }
};

const WordTable& word_table(int m_energy, int j_max) {
    static const auto tables = [] {
        std::array<std::array<WordTable, 3>, 4> t;
        for (int m = -1; m <= 2; ++m)
            for (int j = -1; j <= 1; ++j) t[m + 1][j + 1] = WordTable::build(m, j);
        return t;
    }();
    return tables[m_energy + 1][j_max + 1];
}

// ---------------------------------------------------------------------------
// One-pass accumulation of every per-slice functional, shared between the
// standalone slice operations and the evolution-attached monitor.
// ---------------------------------------------------------------------------

struct SliceSums {
    std::array<double, 3> e_ord{};     // energy integrand by word length
    std::array<double, 3> corr_ord{};  // coefficient-correction integrals
    DecayObservables obs;
    double sup_tphi = 0.0;
    double l2_phi = 0.0, l2_b1 = 0.0, l2_b2 = 0.0;
    double min_c00 = std::numeric_limits<double>::infinity();
    double rhs_sum = 0.0;  // midpoint flux integrand (before the -2 factor)
};

struct FeedPlan {
    int m_energy = -1;  // highest energy word length; -1 skips energies
    int j_max = -1;     // highest observable word length; -1 skips observables
    bool corrections = false;
    bool sobolev = false;
    bool track_c00 = false;
    bool identity_rhs = false;
    EvolutionMode mode = EvolutionMode::Full;
    const MetricConfig* metric = nullptr;
    const AnalyticField* forcing = nullptr;
    const WordTable* words = nullptr;
};

void feed_point(const FeedPlan& plan, const SpacetimePoint& p, const CartesianJet& jet, double w,
                SliceSums& sums) {
    const double t = p.t;
    const double s = p.s;
    const double st = s / t;
    const double n1 = p.x[0] / t;
    const double n2 = p.x[1] / t;

    MetricSample msbuf;
    const MetricSample* ms = nullptr;
    if (plan.corrections || plan.track_c00 || plan.identity_rhs)
        ms = &sample_for(*plan.metric, p, msbuf);

    SmallMat G = SmallMat::zero(3);
    if (plan.corrections || plan.track_c00) G = principal_correction(*ms, jet, plan.mode);
    if (plan.track_c00)
        sums.min_c00 = std::fmin(sums.min_c00, std::abs(-1.0 + G(0, 0)));

    if (plan.m_energy >= 0) {
        for (const EnergyWordOps& ops : plan.words->energy_words) {
            if (ops.len > plan.m_energy) continue;
            double W[3];
            for (int a = 0; a < 3; ++a) W[a] = ops.d[a].apply(jet, p);
            const double u1 = n1 * W[0] + W[1];
            const double u2 = n2 * W[0] + W[2];
            const double w0 = st * W[0];
            sums.e_ord[ops.len] += w * (u1 * u1 + u2 * u2 + w0 * w0);
            if (plan.corrections) {
                double GV[3];
                for (int a = 0; a < 3; ++a)
                    GV[a] = G(a, 0) * W[0] + G(a, 1) * W[1] + G(a, 2) * W[2];
                const double flux = W[0] * (GV[0] - n1 * GV[1] - n2 * GV[2]);
                const double quad = W[0] * GV[0] + W[1] * GV[1] + W[2] * GV[2];
                sums.corr_ord[ops.len] += w * (-2.0 * flux + quad);
            }
        }
    }

    if (plan.j_max >= 0) {
        for (const ObsWordOps& ops : plan.words->obs_words) {
            if (ops.len > plan.j_max) continue;
            CartesianJet j2;
            j2.order = 2;
            j2.at(0, 0, 0) = ops.value.apply(jet, p);
            j2.at(1, 0, 0) = ops.d1[0].apply(jet, p);
            j2.at(0, 1, 0) = ops.d1[1].apply(jet, p);
            j2.at(0, 0, 1) = ops.d1[2].apply(jet, p);
            j2.at(2, 0, 0) = ops.d2[0][0].apply(jet, p);
            j2.at(1, 1, 0) = ops.d2[0][1].apply(jet, p);
            j2.at(1, 0, 1) = ops.d2[0][2].apply(jet, p);
            j2.at(0, 2, 0) = ops.d2[1][1].apply(jet, p);
            j2.at(0, 1, 1) = ops.d2[1][2].apply(jet, p);
            j2.at(0, 0, 2) = ops.d2[2][2].apply(jet, p);

            const int L = ops.len;
            double d1[3];
            first_derivatives(j2, d1);
            for (int a = 0; a < 3; ++a)
                sums.obs.sup_s_grad[L] = std::fmax(sums.obs.sup_s_grad[L], s * std::abs(d1[a]));
            const double u1 = n1 * d1[0] + d1[1];
            const double u2 = n2 * d1[0] + d1[2];
            sums.obs.sup_t_tangent[L] =
                std::fmax(sums.obs.sup_t_tangent[L], t * std::fmax(std::abs(u1), std::abs(u2)));
            double ff[3][3];
            frame_second_derivatives(j2, p, ff);
            for (int a = 1; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    const double m = std::fmax(std::abs(ff[a][b]), std::abs(ff[b][a]));
                    sums.obs.sup_ts_second[L] = std::fmax(sums.obs.sup_ts_second[L], t * s * m);
                }
            sums.obs.sup_time_second[L] =
                std::fmax(sums.obs.sup_time_second[L], (s * s * s / t) * std::abs(j2.at(2, 0, 0)));
        }
    }

    if (plan.sobolev) {
        const double v = jet.at(0, 0, 0);
        sums.sup_tphi = std::fmax(sums.sup_tphi, t * std::abs(v));
        const double b1 = p.x[0] * jet.at(1, 0, 0) + t * jet.at(0, 1, 0);
        const double b2 = p.x[1] * jet.at(1, 0, 0) + t * jet.at(0, 0, 1);
        sums.l2_phi += w * v * v;
        sums.l2_b1 += w * b1 * b1;
        sums.l2_b2 += w * b2 * b2;
    }

    if (plan.identity_rhs) {
        double dG[3][3][3];
        principal_correction_derivatives(*ms, jet, plan.mode, dG);
        double d[3];
        first_derivatives(jet, d);
        double F = semilinear_terms(*ms, jet, plan.mode);
        if (plan.forcing) F += manufactured_source(*plan.forcing, *plan.metric, plan.mode, p);
        double div_dot = 0.0;
        for (int b = 0; b < 3; ++b)
            div_dot += (dG[0][0][b] + dG[1][1][b] + dG[2][2][b]) * d[0] * d[b];
        double dt_quad = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) dt_quad += dG[0][a][b] * d[a] * d[b];
        sums.rhs_sum += w * st * (div_dot - 0.5 * dt_quad + d[0] * F);
    }
}

SpacetimePoint point_of(const SlicePoint& sp) {
    return SpacetimePoint::cartesian(sp.t, sp.x1, sp.x2);
}

double sobolev_of(const SliceSums& sums) {
    const double denom =
        std::sqrt(sums.l2_phi) + std::sqrt(sums.l2_b1) + std::sqrt(sums.l2_b2);
    return denom > 0.0 ? sums.sup_tphi / denom : 0.0;
}

EnergyRecord make_record(double s, const SliceSums& sums, int m_top, int j_max) {
    EnergyRecord rec;
    rec.s = s;
    double e = 0.0, ge = 0.0;
    for (int m = 0; m < 3; ++m) {
        if (m <= m_top) {
            e += sums.e_ord[m];
            ge += sums.e_ord[m] + sums.corr_ord[m];
            rec.energy[m] = e;
            rec.generalized[m] = ge;
        }
        rec.ratio[m] = rec.energy[m] == 0.0 ? 1.0 : rec.generalized[m] / rec.energy[m];
    }
    rec.observables = sums.obs;
    rec.observables.orders = j_max + 1;
    rec.sobolev = sobolev_of(sums);
    rec.min_abs_coefficient = sums.min_c00;
    return rec;
}

// ---------------------------------------------------------------------------
// Jet reconstruction at an off-level time from the stored ring.
// ---------------------------------------------------------------------------

struct TimeStencil {
    int k0 = 0;
    double wv[5], w1[5], w2[5];
};

TimeStencil time_stencil(const TimeLevelRing& ring, double tc) {
    const int count = static_cast<int>(ring.size());
    if (count < 5)
        throw InsufficientHistoryError("slice interpolation needs five stored time levels, have " +
                                       std::to_string(count));
    const double t0 = ring.oldest().t;
    const double tN = ring.newest().t;
    if (tc < t0 - 1e-9 || tc > tN + 1e-9)
        throw InsufficientHistoryError("slice point at t=" + std::to_string(tc) +
                                       " lies outside the stored levels [" + std::to_string(t0) +
                                       ", " + std::to_string(tN) + "]");
    const double dt = (tN - t0) / (count - 1);
    int k0 = static_cast<int>(std::floor((tc - t0) / dt)) - 2;
    k0 = std::clamp(k0, 0, count - 5);

    TimeStencil st;
    st.k0 = k0;
    double times[5];
    for (int l = 0; l < 5; ++l) times[l] = ring.level(k0 + l).t;
    time_interpolation_weights(times, tc, st.wv, st.w1, st.w2);
    return st;
}

CartesianJet build_point_jet(const TimeLevelRing& ring, const Grid2D& grid, int i, int j,
                             double tc) {
    if (i < 2 || j < 2 || i + 2 >= grid.n || j + 2 >= grid.n)
        throw DomainError("slice point too close to the grid edge for the spatial stencil");
    const TimeStencil st = time_stencil(ring, tc);

    // 5x5 patches of the time-interpolated field, velocity and acceleration.
    double fp[5][5] = {}, sp[5][5] = {}, tp[5][5] = {};
    double psi_tt = 0.0;
    for (int l = 0; l < 5; ++l) {
        const TimeLevel& L = ring.level(st.k0 + l);
        const double wv = st.wv[l], w1 = st.w1[l];
        for (int a = 0; a < 5; ++a) {
            const std::size_t base = grid.idx(i + a - 2, j - 2);
            for (int b = 0; b < 5; ++b) {
                const double f = L.phi[base + b];
                const double v = L.psi[base + b];
                fp[a][b] += wv * f;
                sp[a][b] += wv * v;
                tp[a][b] += w1 * v;
            }
        }
        psi_tt += st.w2[l] * L.psi[grid.idx(i, j)];
    }

    const double h = grid.h;
    const double i12h = 1.0 / (12.0 * h);
    const double i12h2 = 1.0 / (12.0 * h * h);
    const double i144h2 = 1.0 / (144.0 * h * h);
    const double i2h3 = 1.0 / (2.0 * h * h * h);
    auto col = [](const double p[5][5], int b, double v[5]) {
        for (int a = 0; a < 5; ++a) v[a] = p[a][b];
    };
    auto d1 = [i12h](const double v[5]) {
        return (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) * i12h;
    };
    auto d2 = [i12h2](const double v[5]) {
        return (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) * i12h2;
    };
    auto d3 = [i2h3](const double v[5]) {
        return (v[4] - 2.0 * v[3] + 2.0 * v[1] - v[0]) * i2h3;
    };
    // nested fourth-order cross derivative
    auto d11 = [i144h2](const double p[5][5]) {
        static constexpr double W[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
        double acc = 0.0;
        for (int a = 0; a < 5; ++a) {
            if (W[a] == 0.0) continue;
            double row = 0.0;
            for (int b = 0; b < 5; ++b) row += W[b] * p[a][b];
            acc += W[a] * row;
        }
        return acc * i144h2;
    };
    // second in the first axis, first in the second (and transposed)
    auto d21 = [h](const double p[5][5]) {
        const double qm = (p[1][1] - 2.0 * p[2][1] + p[3][1]) / (h * h);
        const double qp = (p[1][3] - 2.0 * p[2][3] + p[3][3]) / (h * h);
        return (qp - qm) / (2.0 * h);
    };
    auto d12 = [h](const double p[5][5]) {
        const double qm = (p[1][1] - 2.0 * p[1][2] + p[1][3]) / (h * h);
        const double qp = (p[3][1] - 2.0 * p[3][2] + p[3][3]) / (h * h);
        return (qp - qm) / (2.0 * h);
    };

    double c1[5], c2f[5], c1s[5], c1t[5];
    col(fp, 2, c1);   // phi along x1
    col(sp, 2, c1s);  // psi along x1
    col(tp, 2, c1t);  // psi_t along x1
    for (int a = 0; a < 5; ++a) c2f[a] = fp[2][a];  // phi along x2

    CartesianJet jet;
    jet.order = 3;
    jet.at(0, 0, 0) = fp[2][2];
    jet.at(1, 0, 0) = sp[2][2];
    jet.at(2, 0, 0) = tp[2][2];
    jet.at(3, 0, 0) = psi_tt;

    jet.at(0, 1, 0) = d1(c1);
    jet.at(0, 0, 1) = d1(c2f);
    jet.at(0, 2, 0) = d2(c1);
    jet.at(0, 0, 2) = d2(c2f);
    jet.at(0, 1, 1) = d11(fp);
    jet.at(0, 3, 0) = d3(c1);
    jet.at(0, 0, 3) = d3(c2f);
    jet.at(0, 2, 1) = d21(fp);
    jet.at(0, 1, 2) = d12(fp);

    jet.at(1, 1, 0) = d1(c1s);
    jet.at(1, 0, 1) = d1(sp[2]);
    jet.at(1, 2, 0) = d2(c1s);
    jet.at(1, 0, 2) = d2(sp[2]);
    jet.at(1, 1, 1) = d11(sp);

    jet.at(2, 1, 0) = d1(c1t);
    jet.at(2, 0, 1) = d1(tp[2]);
    return jet;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mode coefficient split.
// ---------------------------------------------------------------------------

SmallMat principal_correction(const MetricSample& ms, const CartesianJet& jet,
                              EvolutionMode mode) {
    switch (mode) {
        case EvolutionMode::Linear:
            return ms.g_upper - SmallMat::minkowski(3);
        case EvolutionMode::FlatNullOnly:
            return quadratic_coefficients(flat_sample(), jet);
        case EvolutionMode::Full:
            return quadratic_coefficients(ms, jet);
    }
    throw ConfigError("unknown evolution mode");
}

double semilinear_terms(const MetricSample& ms, const CartesianJet& jet, EvolutionMode mode) {
    switch (mode) {
        case EvolutionMode::Linear:
            return ms.contracted[0] * jet.at(1, 0, 0) + ms.contracted[1] * jet.at(0, 1, 0) +
                   ms.contracted[2] * jet.at(0, 0, 1);
        case EvolutionMode::FlatNullOnly:
            return 0.0;
        case EvolutionMode::Full:
            return semilinear_rhs(ms, jet);
    }
    throw ConfigError("unknown evolution mode");
}

void principal_correction_derivatives(const MetricSample& ms, const CartesianJet& jet,
                                      EvolutionMode mode, double out[3][3][3]) {
    switch (mode) {
        case EvolutionMode::Linear:
            for (int c = 0; c < 3; ++c)
                for (int m = 0; m < 3; ++m)
                    for (int n = 0; n < 3; ++n) out[c][m][n] = ms.dg_upper[c][m][n];
            return;
        case EvolutionMode::FlatNullOnly:
            quadratic_derivatives(flat_sample(), jet, out);
            return;
        case EvolutionMode::Full:
            quadratic_derivatives(ms, jet, out);
            return;
    }
    throw ConfigError("unknown evolution mode");
}

// ---------------------------------------------------------------------------
// Slice extraction.
// ---------------------------------------------------------------------------

void time_interpolation_weights(const double times[5], double t, double val[5], double d1[5],
                                double d2[5]) {
    for (int j = 0; j < 5; ++j) {
        double denom = 1.0;
        for (int k = 0; k < 5; ++k)
            if (k != j) denom *= times[j] - times[k];

        double pv = 1.0;
        for (int k = 0; k < 5; ++k)
            if (k != j) pv *= t - times[k];

        double p1 = 0.0;
        for (int i = 0; i < 5; ++i) {
            if (i == j) continue;
            double prod = 1.0;
            for (int k = 0; k < 5; ++k)
                if (k != j && k != i) prod *= t - times[k];
            p1 += prod;
        }

        double p2 = 0.0;
        for (int i = 0; i < 5; ++i) {
            if (i == j) continue;
            for (int l = 0; l < 5; ++l) {
                if (l == j || l == i) continue;
                double prod = 1.0;
                for (int k = 0; k < 5; ++k)
                    if (k != j && k != i && k != l) prod *= t - times[k];
                p2 += prod;
            }
        }

        val[j] = pv / denom;
        d1[j] = p1 / denom;
        d2[j] = p2 / denom;
    }
}

HyperboloidSlice extract_slice(const TimeLevelRing& ring, const Grid2D& grid, double s,
                               int m_diag) {
    if (s <= 0.0) throw ConfigError("slice: hyperboloidal time must be positive");
    if (m_diag < 0 || m_diag > 2) throw ConfigError("slice: diagnostic order must be 0, 1 or 2");

    HyperboloidSlice slice;
    slice.s = s;
    slice.m_diag = m_diag;
    slice.h = grid.h;

    const double rc = 0.5 * (s * s - 1.0);
    if (rc <= 0.0) return slice;

    struct Cell {
        double r2;
        int i, j;
    };
    std::vector<Cell> cells;
    for (int i = 0; i < grid.n; ++i) {
        const double x1 = grid.coord(i);
        for (int j = 0; j < grid.n; ++j) {
            const double x2 = grid.coord(j);
            const double r2 = x1 * x1 + x2 * x2;
            if (r2 < rc * rc) cells.push_back({r2, i, j});
        }
    }
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        if (a.r2 != b.r2) return a.r2 < b.r2;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    slice.points.reserve(cells.size());
    const double w = grid.h * grid.h;
    for (const Cell& c : cells) {
        SlicePoint pt;
        pt.x1 = grid.coord(c.i);
        pt.x2 = grid.coord(c.j);
        pt.t = std::sqrt(s * s + c.r2);
        pt.weight = w;
        pt.jet = build_point_jet(ring, grid, c.i, c.j, pt.t);
        slice.points.push_back(std::move(pt));
    }
    return slice;
}

// ---------------------------------------------------------------------------
// Slice functionals.
// ---------------------------------------------------------------------------

EnergyBreakdown energy(const HyperboloidSlice& slice, int m) {
    if (m < 0 || m > 2) throw ConfigError("energy: commuted order must be 0, 1 or 2");
    if (m > slice.m_diag) throw ConfigError("energy: order exceeds the slice diagnostic order");
    FeedPlan plan;
    plan.m_energy = m;
    plan.words = &word_table(m, -1);
    SliceSums sums;
    for (const SlicePoint& sp : slice.points) feed_point(plan, point_of(sp), sp.jet, sp.weight, sums);
    EnergyBreakdown out;
    for (int k = 0; k <= m; ++k) {
        out.by_order[k] = sums.e_ord[k];
        out.total += sums.e_ord[k];
    }
    return out;
}

EnergyBreakdown generalized_energy(const HyperboloidSlice& slice, const MetricConfig& metric,
                                   EvolutionMode mode, int m) {
    if (m < 0 || m > 2) throw ConfigError("energy: commuted order must be 0, 1 or 2");
    if (m > slice.m_diag) throw ConfigError("energy: order exceeds the slice diagnostic order");
    FeedPlan plan;
    plan.m_energy = m;
    plan.corrections = true;
    plan.mode = mode;
    plan.metric = &metric;
    plan.words = &word_table(m, -1);
    SliceSums sums;
    for (const SlicePoint& sp : slice.points) feed_point(plan, point_of(sp), sp.jet, sp.weight, sums);
    EnergyBreakdown out;
    for (int k = 0; k <= m; ++k) {
        out.by_order[k] = sums.e_ord[k] + sums.corr_ord[k];
        out.total += out.by_order[k];
    }
    return out;
}

IdentityResult energy_identity_residual(const HyperboloidSlice& lo, const HyperboloidSlice& mid,
                                        const HyperboloidSlice& hi, const MetricConfig& metric,
                                        EvolutionMode mode, const AnalyticField* forcing) {
    if (!(hi.s > lo.s)) throw ConfigError("identity: slices must be ordered in s");
    IdentityResult out;
    out.lhs = (generalized_energy(hi, metric, mode, 0).total -
               generalized_energy(lo, metric, mode, 0).total) /
              (hi.s - lo.s);
    FeedPlan plan;
    plan.identity_rhs = true;
    plan.mode = mode;
    plan.metric = &metric;
    plan.forcing = forcing;
    SliceSums sums;
    for (const SlicePoint& sp : mid.points) feed_point(plan, point_of(sp), sp.jet, sp.weight, sums);
    out.rhs = -2.0 * sums.rhs_sum;
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

double sobolev_check(const HyperboloidSlice& slice) {
    FeedPlan plan;
    plan.sobolev = true;
    SliceSums sums;
    for (const SlicePoint& sp : slice.points) feed_point(plan, point_of(sp), sp.jet, sp.weight, sums);
    return sobolev_of(sums);
}

DecayObservables decay_observables(const HyperboloidSlice& slice, int j_max) {
    if (j_max < 0 || j_max > 1) throw ConfigError("observables: word order must be 0 or 1");
    if (j_max > slice.m_diag)
        throw ConfigError("observables: order exceeds the slice diagnostic order");
    FeedPlan plan;
    plan.j_max = j_max;
    plan.words = &word_table(-1, j_max);
    SliceSums sums;
    for (const SlicePoint& sp : slice.points) feed_point(plan, point_of(sp), sp.jet, sp.weight, sums);
    DecayObservables out = sums.obs;
    out.orders = j_max + 1;
    return out;
}

FrameWaveCheck frame_wave_identity_check(const HyperboloidSlice& slice, const MetricConfig& metric,
                                         EvolutionMode mode, const AnalyticField* forcing) {
    FrameWaveCheck out;
    MetricSample buf;
    for (const SlicePoint& sp : slice.points) {
        const SpacetimePoint p = point_of(sp);
        const MetricSample& ms = sample_for(metric, p, buf);
        const SmallMat G = principal_correction(ms, sp.jet, mode);
        const SmallMat C = SmallMat::minkowski(3) + G;

        double F = semilinear_terms(ms, sp.jet, mode);
        if (forcing) F += manufactured_source(*forcing, metric, mode, p);
        const double principal = second_order_frame_decomposition(C, sp.jet, p);
        out.sup_residual = std::fmax(out.sup_residual, std::abs(principal - F));

        const SmallMat Gbar = tensor_to_frame(G, p);
        const double st = p.s / p.t;
        out.min_denominator = std::fmin(out.min_denominator, st * st - Gbar(0, 0));

        double ff[3][3];
        frame_second_derivatives(sp.jet, p, ff);
        double dd[3][3];
        second_derivatives(sp.jet, dd);
        double d[3];
        first_derivatives(sp.jet, d);
        double mixed = 0.0;
        for (int a = 1; a < 3; ++a)
            for (int b = 0; b < 3; ++b) mixed += std::abs(ff[a][b]);
        const double firsts = std::abs(d[0]) + std::abs(d[1]) + std::abs(d[2]);
        const double bound = second_derivative_bound_constant *
                             (std::abs(dd[0][0]) + mixed + firsts / p.t);
        if (bound > 0.0) {
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    out.second_derivative_ratio =
                        std::fmax(out.second_derivative_ratio, std::abs(dd[a][b]) / bound);
        }
    }
    return out;
}

double min_principal_coefficient(const HyperboloidSlice& slice, const MetricConfig& metric,
                                 EvolutionMode mode) {
    FeedPlan plan;
    plan.track_c00 = true;
    plan.mode = mode;
    plan.metric = &metric;
    SliceSums sums;
    for (const SlicePoint& sp : slice.points) feed_point(plan, point_of(sp), sp.jet, sp.weight, sums);
    return sums.min_c00;
}

double flat_grid_energy(const TimeLevel& level, const Grid2D& grid) {
    const int n = grid.n;
    const double i12h = 1.0 / (12.0 * grid.h);
    double acc = 0.0;
    for (int i = 2; i < n - 2; ++i) {
        for (int j = 2; j < n - 2; ++j) {
            const std::size_t c = grid.idx(i, j);
            const double g1 = (level.phi[grid.idx(i - 2, j)] - 8.0 * level.phi[grid.idx(i - 1, j)] +
                               8.0 * level.phi[grid.idx(i + 1, j)] - level.phi[grid.idx(i + 2, j)]) *
                              i12h;
            const double g2 = (level.phi[c - 2] - 8.0 * level.phi[c - 1] + 8.0 * level.phi[c + 1] -
                               level.phi[c + 2]) *
                              i12h;
            acc += level.psi[c] * level.psi[c] + g1 * g1 + g2 * g2;
        }
    }
    return acc * grid.h * grid.h;
}

// ---------------------------------------------------------------------------
// Slice schedule and the evolution-attached monitor.
// ---------------------------------------------------------------------------

std::vector<double> slice_schedule(double s_first, double s_last, bool uniform, double ds0,
                                   double growth, double ds_max) {
    if (!(s_last > s_first)) throw ConfigError("slice schedule: empty time span");
    if (ds0 <= 0.0 || growth < 1.0 || ds_max < ds0)
        throw ConfigError("slice schedule: step parameters out of range");

    std::vector<double> out{s_first};
    double ds = uniform ? ds0 : std::min(ds0, ds_max);
    while (out.back() + ds < s_last - 1e-9) {
        out.push_back(out.back() + ds);
        if (!uniform) ds = std::min(ds * growth, ds_max);
    }
    // Land on s_last exactly; absorb a degenerate trailing interval into the
    // previous one so difference quotients stay well conditioned.
    if (out.size() >= 2 && s_last - out.back() < 0.25 * ds)
        out.back() = s_last;
    else
        out.push_back(s_last);
    return out;
}

struct SliceMonitor::Pending {
    double s = 0.0;
    bool midpoint = false;
    int index = 0;  // schedule index for mains, interval index for midpoints
    bool done = false;
    std::vector<int> cells;  // flat grid indices, near to far
    std::size_t cursor = 0;
    SliceSums sums;
};

SliceMonitor::SliceMonitor(const ScenarioConfig& cfg, const Grid2D& grid, double dt)
    : cfg_(cfg), grid_(grid), dt_(dt) {
    if (dt <= 0.0) throw ConfigError("slice monitor: time step must be positive");
    schedule_ = slice_schedule(cfg.start_time(), cfg.s_max, cfg.uniform_ds, cfg.ds0, cfg.ds_growth,
                               cfg.ds_max);
    const int count = static_cast<int>(schedule_.size());
    main_e0_.assign(count, 0.0);
    main_done_.assign(count, false);
    mid_rhs_.assign(count > 0 ? count - 1 : 0, 0.0);
    mid_done_.assign(count > 0 ? count - 1 : 0, false);

    pending_.reserve(2 * count - 1);
    for (int k = 0; k < count; ++k) {
        Pending p;
        p.s = schedule_[k];
        p.index = k;
        pending_.push_back(std::move(p));
    }
    for (int k = 0; k + 1 < count; ++k) {
        Pending p;
        p.s = 0.5 * (schedule_[k] + schedule_[k + 1]);
        p.midpoint = true;
        p.index = k;
        pending_.push_back(std::move(p));
    }
    std::sort(pending_.begin(), pending_.end(),
              [](const Pending& a, const Pending& b) { return a.s < b.s; });
    records_.reserve(count);
    identity_rows_.reserve(mid_rhs_.size());
}

SliceMonitor::~SliceMonitor() = default;

void SliceMonitor::activate_ready(double t_now) {
    while (next_activation_ < pending_.size() &&
           pending_[next_activation_].s <= t_now - 2.0 * dt_ + 1e-12) {
        Pending& p = pending_[next_activation_];
        const double rc = 0.5 * (p.s * p.s - 1.0);
        if (rc > 0.0) {
            struct Cell {
                double r2;
                int flat;
            };
            std::vector<Cell> cells;
            for (int i = 0; i < grid_.n; ++i) {
                const double x1 = grid_.coord(i);
                if (std::abs(x1) >= rc) continue;
                for (int j = 0; j < grid_.n; ++j) {
                    const double x2 = grid_.coord(j);
                    const double r2 = x1 * x1 + x2 * x2;
                    if (r2 < rc * rc) cells.push_back({r2, i * grid_.n + j});
                }
            }
            std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
                if (a.r2 != b.r2) return a.r2 < b.r2;
                return a.flat < b.flat;
            });
            p.cells.reserve(cells.size());
            for (const Cell& c : cells) p.cells.push_back(c.flat);
        }
        ++next_activation_;
    }
}

void SliceMonitor::process(Pending& p, const TimeLevelRing& ring, double t_now) {
    if (p.cursor < p.cells.size()) {
        if (ring.size() < 5) return;
        FeedPlan plan;
        plan.mode = cfg_.mode;
        plan.metric = &cfg_.metric;
        if (p.midpoint) {
            plan.identity_rhs = true;
        } else {
            plan.m_energy = std::min(2, cfg_.m_diag);
            plan.j_max = std::min(1, cfg_.m_diag);
            plan.corrections = true;
            plan.sobolev = true;
            plan.track_c00 = true;
            plan.words = &word_table(plan.m_energy, plan.j_max);
        }
        const double top = t_now - 2.0 * dt_ + 1e-12;
        const double w = grid_.h * grid_.h;
        while (p.cursor < p.cells.size()) {
            const int flat = p.cells[p.cursor];
            const int i = flat / grid_.n;
            const int j = flat % grid_.n;
            const double x1 = grid_.coord(i);
            const double x2 = grid_.coord(j);
            const double tc = std::sqrt(p.s * p.s + x1 * x1 + x2 * x2);
            if (tc > top) return;
            const CartesianJet jet = build_point_jet(ring, grid_, i, j, tc);
            feed_point(plan, SpacetimePoint::cartesian(tc, x1, x2), jet, w, p.sums);
            ++p.cursor;
        }
    }
    finalize(p, ring);
}

void SliceMonitor::finalize(Pending& p, const TimeLevelRing& ring) {
    p.done = true;
    p.cells.clear();
    p.cells.shrink_to_fit();

    if (p.midpoint) {
        mid_rhs_[p.index] = -2.0 * p.sums.rhs_sum;
        mid_done_[p.index] = true;
    } else {
        EnergyRecord rec =
            make_record(p.s, p.sums, std::min(2, cfg_.m_diag), std::min(1, cfg_.m_diag));
        rec.flat_energy_time = ring.newest().t;
        rec.flat_energy = flat_grid_energy(ring.newest(), grid_);
        records_.push_back(rec);
        main_e0_[p.index] = rec.generalized[0];
        main_done_[p.index] = true;
    }

    // Slices complete in s order, so interval k closes when main k+1 does.
    if (!p.midpoint && p.index >= 1) {
        const int k = p.index - 1;
        if (!main_done_[k] || !mid_done_[k])
            throw DomainError("slice monitor: interval pieces completed out of order");
        IdentityRow row;
        row.s_mid = 0.5 * (schedule_[k] + schedule_[k + 1]);
        row.lhs = (main_e0_[k + 1] - main_e0_[k]) / (schedule_[k + 1] - schedule_[k]);
        row.rhs = mid_rhs_[k];
        row.residual = std::abs(row.lhs - row.rhs);
        identity_rows_.push_back(row);
    }
}

void SliceMonitor::observe(const TimeLevelRing& ring, const StepInfo& info) {
    activate_ready(info.t);
    for (std::size_t k = 0; k < next_activation_; ++k) {
        Pending& p = pending_[k];
        if (!p.done) process(p, ring, info.t);
    }
}

StepObserver SliceMonitor::observer() {
    return [this](const TimeLevelRing& ring, const StepInfo& info) { observe(ring, info); };
}

bool SliceMonitor::complete() const {
    if (next_activation_ != pending_.size()) return false;
    return std::all_of(pending_.begin(), pending_.end(),
                       [](const Pending& p) { return p.done; });
}

// ---------------------------------------------------------------------------
// Radial monitor.
// ---------------------------------------------------------------------------

namespace {

double ghost(const std::vector<double>& v, int i) {
    if (i < 0) return v[static_cast<std::size_t>(-1 - i)];  // even reflection at r = 0
    if (i >= static_cast<int>(v.size())) return 0.0;
    return v[static_cast<std::size_t>(i)];
}

double radial_weight_constant(int spatial_dim) {
    constexpr double pi = 3.14159265358979323846;
    return spatial_dim == 3 ? 4.0 * pi : 2.0 * pi;
}

}  // namespace

struct RadialSliceMonitor::Pending {
    double s = 0.0;
    int count = 0;  // cells [0, count) ordered by radius
    int cursor = 0;
    bool done = false;
    double e0 = 0.0;
    double e1 = 0.0;
};

RadialSliceMonitor::RadialSliceMonitor(const RadialConfig& cfg, double dt) : cfg_(cfg), dt_(dt) {
    if (dt <= 0.0) throw ConfigError("radial monitor: time step must be positive");
    if (cfg.m_diag < 0 || cfg.m_diag > 1)
        throw ConfigError("radial monitor: diagnostics are limited to first order");
    dr_ = cfg.grid_spacing;
    points_ = cfg.grid_points();
    const std::vector<double> schedule = slice_schedule(cfg.start_time(), cfg.s_max,
                                                        cfg.uniform_ds, cfg.ds0, cfg.ds_growth,
                                                        cfg.ds_max);
    pending_.reserve(schedule.size());
    for (double s : schedule) {
        Pending p;
        p.s = s;
        const double rc = 0.5 * (s * s - 1.0);
        while (p.count < points_ && (p.count + 0.5) * dr_ < rc) ++p.count;
        pending_.push_back(p);
    }
    records_.reserve(schedule.size());
}

RadialSliceMonitor::~RadialSliceMonitor() = default;

void RadialSliceMonitor::process(Pending& p, const TimeLevelRing& ring, double t_now) {
    if (p.cursor < p.count) {
        if (ring.size() < 5) return;
        const double top = t_now - 2.0 * dt_ + 1e-12;
        const int dim = cfg_.spatial_dim;
        const double cw = radial_weight_constant(dim) * dr_;
        while (p.cursor < p.count) {
            const double r = (p.cursor + 0.5) * dr_;
            const double tc = std::sqrt(p.s * p.s + r * r);
            if (tc > top) return;
            const TimeStencil st = time_stencil(ring, tc);

            double fv[5] = {}, sv[5] = {};
            double psi_t = 0.0;
            for (int l = 0; l < 5; ++l) {
                const TimeLevel& L = ring.level(st.k0 + l);
                for (int k = 0; k < 5; ++k) {
                    fv[k] += st.wv[l] * ghost(L.phi, p.cursor + k - 2);
                    sv[k] += st.wv[l] * ghost(L.psi, p.cursor + k - 2);
                }
                psi_t += st.w1[l] * ghost(L.psi, p.cursor);
            }
            const double i12h = 1.0 / (12.0 * dr_);
            const double i12h2 = 1.0 / (12.0 * dr_ * dr_);
            const double phi_r = (fv[0] - 8.0 * fv[1] + 8.0 * fv[3] - fv[4]) * i12h;
            const double phi_rr =
                (-fv[0] + 16.0 * fv[1] - 30.0 * fv[2] + 16.0 * fv[3] - fv[4]) * i12h2;
            const double psi = sv[2];
            const double psi_r = (sv[0] - 8.0 * sv[1] + 8.0 * sv[3] - sv[4]) * i12h;

            const double rt = r / tc;
            const double stc = p.s / tc;
            auto scalar = [rt, stc](double wt, double wr) {
                const double good = rt * wt + wr;
                const double time = stc * wt;
                return good * good + time * time;
            };
            auto vec = [rt, stc, dim, r](double Wt, double Wr, double W) {
                const double good = rt * Wt + Wr;
                const double time = stc * Wt;
                const double ang = W / r;
                return good * good + (dim - 1) * ang * ang + time * time;
            };

            const double w = cw * (dim == 3 ? r * r : r);
            p.e0 += w * scalar(psi, phi_r);
            if (cfg_.m_diag >= 1) {
                const double V = r * psi + tc * phi_r;
                const double Vt = r * psi_t + phi_r + tc * psi_r;
                const double Vr = psi + r * psi_r + tc * phi_rr;
                p.e1 += w * (scalar(psi_t, psi_r) + vec(psi_r, phi_rr, phi_r) + vec(Vt, Vr, V));
            }
            ++p.cursor;
        }
    }
    p.done = true;
    RadialEnergyRecord rec;
    rec.s = p.s;
    rec.e0 = p.e0;
    rec.e1 = p.e1;
    rec.flat_energy_time = ring.newest().t;
    rec.flat_energy = radial_flat_energy(ring.newest(), cfg_);
    records_.push_back(rec);
}

void RadialSliceMonitor::observe(const TimeLevelRing& ring, const StepInfo& info) {
    for (Pending& p : pending_) {
        if (p.done) continue;
        if (p.s > info.t - 2.0 * dt_ + 1e-12) break;  // pending list is ordered in s
        process(p, ring, info.t);
    }
}

StepObserver RadialSliceMonitor::observer() {
    return [this](const TimeLevelRing& ring, const StepInfo& info) { observe(ring, info); };
}

bool RadialSliceMonitor::complete() const {
    return std::all_of(pending_.begin(), pending_.end(),
                       [](const Pending& p) { return p.done; });
}

double radial_flat_energy(const TimeLevel& level, const RadialConfig& cfg) {
    const int n = static_cast<int>(level.phi.size());
    const double dr = cfg.grid_spacing;
    const double i12h = 1.0 / (12.0 * dr);
    const int dim = cfg.spatial_dim;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = (i + 0.5) * dr;
        const double phi_r = (ghost(level.phi, i - 2) - 8.0 * ghost(level.phi, i - 1) +
                              8.0 * ghost(level.phi, i + 1) - ghost(level.phi, i + 2)) *
                             i12h;
        const double psi = level.psi[static_cast<std::size_t>(i)];
        acc += (psi * psi + phi_r * phi_r) * (dim == 3 ? r * r : r);
    }
    return acc * radial_weight_constant(dim) * dr;
}

}  // namespace membrane
