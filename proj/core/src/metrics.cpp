#include "membrane/metrics.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace membrane {

static_assert(std::endian::native == std::endian::little,
              "tabulated metric I/O assumes a little-endian host");

void MetricConfig::validate() const {
    if (dim != 2) throw ConfigError("metric: only dim = 2 backgrounds are supported");
    if (kind == MetricKind::Minkowski) return;
    if (kind == MetricKind::PerturbedAnalytic) {
        if (delta < 0.0) throw ConfigError("metric: delta must be >= 0");
        if (!(gamma_decay > 0.0 && gamma_decay < 1.0))
            throw ConfigError("metric: gamma must lie in (0, 1)");
        if (!(cutoff_width > 0.0 && cutoff_width <= 1.0))
            throw ConfigError("metric: cutoff width must lie in (0, 1]");
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (std::abs(amplitude(i, j)) > 1.0)
                    throw ConfigError("metric: amplitude entries must have magnitude <= 1");
                if (amplitude(i, j) != amplitude(j, i))
                    throw ConfigError("metric: amplitude matrix must be symmetric");
            }
        return;
    }
    if (kind == MetricKind::UserTabulated) {
        if (!table && table_path.empty())
            throw ConfigError("metric: tabulated metric needs a table or a table path");
        return;
    }
}

double cone_cutoff(double u, double width) {
    if (u <= 0.0) return 0.0;
    if (u >= width) return 1.0;
    const double y = u / width;
    // 9th-order smoothstep: C^4 at both ends, S'(y) = 630 y^4 (1-y)^4.
    return ((((70.0 * y - 315.0) * y + 540.0) * y - 420.0) * y + 126.0) * y * y * y * y * y;
}

double cone_cutoff_derivative(double u, double width) {
    if (u <= 0.0 || u >= width) return 0.0;
    const double y = u / width;
    const double a = y * (1.0 - y);
    return 630.0 * a * a * a * a / width;
}

namespace {

// Envelope E(t, r) = (s/t)^2 s^{-1-gamma} = s^{1-gamma} / t^2 and its exact
// first derivatives (using d_t s = t/s, d_a s = -x_a/s).
struct Envelope {
    double value;
    double dt;
    std::array<double, 2> dx;
};

Envelope envelope(const SpacetimePoint& p, double gamma) {
    Envelope e;
    const double s = p.s, t = p.t;
    e.value = std::pow(s, 1.0 - gamma) / (t * t);
    e.dt = e.value * ((1.0 - gamma) * t / (s * s) - 2.0 / t);
    for (int a = 0; a < 2; ++a) e.dx[a] = -e.value * (1.0 - gamma) * p.x[a] / (s * s);
    return e;
}

// Shape H^{mu nu}(x) and its spatial gradient.
void shape_matrix(const MetricConfig& cfg, const SpacetimePoint& p, SmallMat& H,
                  SmallMat dH[2]) {
    if (cfg.shape == PerturbationShape::ConstantSymmetric) {
        H = cfg.amplitude;
        dH[0] = SmallMat::zero(3);
        dH[1] = SmallMat::zero(3);
        return;
    }
    const double arg = cfg.wave_k[0] * p.x[0] + cfg.wave_k[1] * p.x[1];
    H = std::cos(arg) * cfg.amplitude;
    const double s = -std::sin(arg);
    dH[0] = (s * cfg.wave_k[0]) * cfg.amplitude;
    dH[1] = (s * cfg.wave_k[1]) * cfg.amplitude;
}

void finish_sample_from_upper(MetricSample& out) {
    out.g_lower = inverse(out.g_upper);
    // d(g_lower) = -g_lower dg_upper g_lower.
    for (int l = 0; l < 3; ++l) {
        SmallMat d = SmallMat::zero(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) d(i, j) = out.dg_upper[l][i][j];
        const SmallMat dl = -1.0 * (out.g_lower * d * out.g_lower);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out.dg_lower[l][i][j] = dl(i, j);
    }
}

void finish_sample_from_lower(MetricSample& out) {
    out.g_upper = inverse(out.g_lower);
    for (int l = 0; l < 3; ++l) {
        SmallMat d = SmallMat::zero(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) d(i, j) = out.dg_lower[l][i][j];
        const SmallMat du = -1.0 * (out.g_upper * d * out.g_upper);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out.dg_upper[l][i][j] = du(i, j);
    }
}

void fill_christoffel(MetricSample& out) {
    for (int g = 0; g < 3; ++g)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                double v = 0.0;
                for (int d = 0; d < 3; ++d)
                    v += out.g_upper(g, d) * (out.dg_lower[a][d][b] + out.dg_lower[b][d][a] -
                                              out.dg_lower[d][a][b]);
                out.christoffel[g][a][b] = 0.5 * v;
            }
    for (int m = 0; m < 3; ++m) {
        double v = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) v += out.g_upper(a, b) * out.christoffel[m][a][b];
        out.contracted[m] = v;
    }
}

}  // namespace

MetricSample sample_metric(const MetricConfig& cfg, const SpacetimePoint& p) {
    MetricSample out;
    out.g_upper = SmallMat::minkowski(3);
    out.g_lower = SmallMat::minkowski(3);

    if (cfg.kind == MetricKind::Minkowski || (cfg.kind == MetricKind::PerturbedAnalytic && cfg.delta == 0.0))
        return out;  // flat: zero derivatives, zero Christoffels

    if (cfg.kind == MetricKind::PerturbedAnalytic) {
        const Envelope env = envelope(p, cfg.gamma_decay);
        const double u = p.t - p.r - 1.0;
        const double chi = cone_cutoff(u, cfg.cutoff_width);
        const double dchi = cone_cutoff_derivative(u, cfg.cutoff_width);

        SmallMat H;
        SmallMat dH[2];
        shape_matrix(cfg, p, H, dH);

        const double w = env.value * chi;                      // scalar weight
        const double wt = env.dt * chi + env.value * dchi;     // d_t weight
        double wx[2];
        for (int a = 0; a < 2; ++a) {
            const double dru = (p.r > 1e-12) ? -p.x[a] / p.r : 0.0;  // d_a u = -x_a/r
            wx[a] = env.dx[a] * chi + env.value * dchi * dru;
        }

        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                out.g_upper(i, j) += cfg.delta * w * H(i, j);
                out.dg_upper[0][i][j] = cfg.delta * wt * H(i, j);
                for (int a = 0; a < 2; ++a)
                    out.dg_upper[a + 1][i][j] =
                        cfg.delta * (wx[a] * H(i, j) + w * dH[a](i, j));
            }
        finish_sample_from_upper(out);
        fill_christoffel(out);
        return out;
    }

    // UserTabulated
    const TabulatedMetric* tab = cfg.table.get();
    if (tab == nullptr) throw ConfigError("metric: tabulated metric not loaded");
    out.g_lower = tab->lower_at(p.t, p.x[0], p.x[1]);
    tab->lower_derivatives(p.t, p.x[0], p.x[1], out.dg_lower);
    finish_sample_from_lower(out);
    fill_christoffel(out);
    return out;
}

// ---------------------------------------------------------------------------
// TabulatedMetric
// ---------------------------------------------------------------------------

namespace {
constexpr int kComps = 6;
constexpr int comp_index[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
}  // namespace

TabulatedMetric::TabulatedMetric(GridSpec spec, std::vector<double> lower_components)
    : spec_(spec), vals_(std::move(lower_components)) {
    if (spec_.nt < 2 || spec_.n1 < 2 || spec_.n2 < 2)
        throw ConfigError("tabulated metric: need at least 2 nodes per axis");
    const std::size_t expect =
        std::size_t(spec_.nt) * std::size_t(spec_.n1) * std::size_t(spec_.n2) * kComps;
    if (vals_.size() != expect) throw ConfigError("tabulated metric: node count mismatch");
}

double TabulatedMetric::node(int it, int i1, int i2, int comp) const {
    return vals_[((std::size_t(it) * spec_.n1 + i1) * spec_.n2 + i2) * kComps + comp];
}

SmallMat TabulatedMetric::lower_at(double t, double x1, double x2) const {
    const auto locate = [](double v, double v0, double dv, int n, const char* axis) {
        const double f = (v - v0) / dv;
        if (f < -1e-9 || f > double(n - 1) + 1e-9)
            throw DomainError(std::string("tabulated metric: sample outside table on axis ") + axis);
        int i = int(std::floor(f));
        i = std::max(0, std::min(i, n - 2));
        return std::pair<int, double>(i, f - i);
    };
    const auto [it, ft] = locate(t, spec_.t0, spec_.dt, spec_.nt, "t");
    const auto [i1, f1] = locate(x1, spec_.x10, spec_.dx1, spec_.n1, "x1");
    const auto [i2, f2] = locate(x2, spec_.x20, spec_.dx2, spec_.n2, "x2");

    SmallMat g = SmallMat::zero(3);
    for (int c = 0; c < kComps; ++c) {
        double v = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int d = 0; d < 2; ++d) {
                    const double w = (a ? ft : 1 - ft) * (b ? f1 : 1 - f1) * (d ? f2 : 1 - f2);
                    v += w * node(it + a, i1 + b, i2 + d, c);
                }
        // scatter into the symmetric matrix
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (comp_index[i][j] == c) g(i, j) = v;
    }
    return g;
}

void TabulatedMetric::lower_derivatives(double t, double x1, double x2, double dg[3][3][3]) const {
    const auto deriv = [&](int axis) {
        const double h = (axis == 0) ? spec_.dt : (axis == 1 ? spec_.dx1 : spec_.dx2);
        double lo[3] = {t, x1, x2}, hi[3] = {t, x1, x2};
        lo[axis] -= h;
        hi[axis] += h;
        // Clamp the stencil into the table (one-sided at the edges).
        const double amin = (axis == 0) ? spec_.t0 : (axis == 1 ? spec_.x10 : spec_.x20);
        const double amax = amin + h * ((axis == 0 ? spec_.nt : (axis == 1 ? spec_.n1 : spec_.n2)) - 1);
        lo[axis] = std::max(lo[axis], amin);
        hi[axis] = std::min(hi[axis], amax);
        const SmallMat gl = lower_at(lo[0], lo[1], lo[2]);
        const SmallMat gh = lower_at(hi[0], hi[1], hi[2]);
        SmallMat d = SmallMat::zero(3);
        const double span = hi[axis] - lo[axis];
        if (span > 0) d = (1.0 / span) * (gh - gl);
        return d;
    };
    for (int axis = 0; axis < 3; ++axis) {
        const SmallMat d = deriv(axis);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) dg[axis][i][j] = d(i, j);
    }
}

TabulatedMetric TabulatedMetric::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open metric table: " + path.string());
    std::string l1, l2, l3, l4;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    std::getline(in, l4);
    if (l1 != "membrane-metric-table v1") throw IoError("metric table: bad magic line");
    GridSpec s;
    int dim = 0;
    if (std::sscanf(l2.c_str(), "dim=%d nt=%d nx1=%d nx2=%d", &dim, &s.nt, &s.n1, &s.n2) != 4 ||
        dim != 2)
        throw IoError("metric table: bad dimensions line");
    if (std::sscanf(l3.c_str(), "t0=%lf dt=%lf x10=%lf dx1=%lf x20=%lf dx2=%lf", &s.t0, &s.dt,
                    &s.x10, &s.dx1, &s.x20, &s.dx2) != 6)
        throw IoError("metric table: bad grid line");
    if (l4 != "components=lower order=t,x1,x2 layout=row-major endian=little")
        throw IoError("metric table: bad layout line");
    const std::size_t count = std::size_t(s.nt) * s.n1 * s.n2 * kComps;
    std::vector<double> v(count);
    in.read(reinterpret_cast<char*>(v.data()), std::streamsize(count * sizeof(double)));
    if (!in) throw IoError("metric table: truncated payload");
    return TabulatedMetric(s, std::move(v));
}

void TabulatedMetric::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write metric table: " + path.string());
    out << "membrane-metric-table v1\n";
    out << "dim=2 nt=" << spec_.nt << " nx1=" << spec_.n1 << " nx2=" << spec_.n2 << "\n";
    char line[256];
    std::snprintf(line, sizeof line, "t0=%.17g dt=%.17g x10=%.17g dx1=%.17g x20=%.17g dx2=%.17g",
                  spec_.t0, spec_.dt, spec_.x10, spec_.dx1, spec_.x20, spec_.dx2);
    out << line << "\n";
    out << "components=lower order=t,x1,x2 layout=row-major endian=little\n";
    out.write(reinterpret_cast<const char*>(vals_.data()),
              std::streamsize(vals_.size() * sizeof(double)));
    if (!out) throw IoError("metric table: write failed");
}

TabulatedMetric TabulatedMetric::sample_from(const MetricConfig& cfg, const GridSpec& spec) {
    std::vector<double> v;
    v.reserve(std::size_t(spec.nt) * spec.n1 * spec.n2 * kComps);
    const SmallMat flat = SmallMat::minkowski(3);
    for (int it = 0; it < spec.nt; ++it)
        for (int i1 = 0; i1 < spec.n1; ++i1)
            for (int i2 = 0; i2 < spec.n2; ++i2) {
                const double t = spec.t0 + it * spec.dt;
                const double x1 = spec.x10 + i1 * spec.dx1;
                const double x2 = spec.x20 + i2 * spec.dx2;
                // Lattice nodes on or outside the shifted cone r >= t-1 lie
                // beyond the cutoff's support, where the metric is exactly
                // flat; sampling there directly would be ill-defined.
                const double r = std::sqrt(x1 * x1 + x2 * x2);
                const SmallMat lower = (r >= t - 1.0)
                                           ? flat
                                           : sample_metric(cfg, SpacetimePoint::cartesian(t, x1, x2))
                                                 .g_lower;
                v.push_back(lower(0, 0));
                v.push_back(lower(0, 1));
                v.push_back(lower(0, 2));
                v.push_back(lower(1, 1));
                v.push_back(lower(1, 2));
                v.push_back(lower(2, 2));
            }
    return TabulatedMetric(spec, std::move(v));
}

// ---------------------------------------------------------------------------
// validate_decay
// ---------------------------------------------------------------------------

namespace {

double order0_max_abs(const MetricSample& ms, bool upper) {
    const SmallMat m = SmallMat::minkowski(3);
    double v = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            v = std::max(v, std::abs((upper ? ms.g_upper : ms.g_lower)(i, j) - m(i, j)));
    return v;
}

double order1_max_abs(const MetricSample& ms, bool upper) {
    double v = 0.0;
    for (int l = 0; l < 3; ++l)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                v = std::max(v, std::abs(upper ? ms.dg_upper[l][i][j] : ms.dg_lower[l][i][j]));
    return v;
}

// Max |d_a d_b (g - m)| over components via 4th-order finite differences of
// the sampled metric components (the flat part drops out of differences).
double order2_max_abs(const MetricConfig& cfg, const SpacetimePoint& p, bool upper) {
    const double hfd = std::min(0.02 * p.s, (p.t - p.r) / 8.0);
    const auto comp_at = [&](double dt, double dx1, double dx2, int i, int j) {
        const MetricSample ms =
            sample_metric(cfg, SpacetimePoint::cartesian(p.t + dt, p.x[0] + dx1, p.x[1] + dx2));
        return upper ? ms.g_upper(i, j) : ms.g_lower(i, j);
    };
    static const double w1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};  // f'
    static const double w2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};  // f''
    double best = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            for (int a = 0; a < 3; ++a)
                for (int b = a; b < 3; ++b) {
                    double v = 0.0;
                    if (a == b) {
                        for (int k = -2; k <= 2; ++k) {
                            double off[3] = {0, 0, 0};
                            off[a] = k * hfd;
                            v += w2[k + 2] * comp_at(off[0], off[1], off[2], i, j);
                        }
                        v /= hfd * hfd;
                    } else {
                        for (int k = -2; k <= 2; ++k)
                            for (int l = -2; l <= 2; ++l) {
                                if (w1[k + 2] == 0.0 || w1[l + 2] == 0.0) continue;
                                double off[3] = {0, 0, 0};
                                off[a] = k * hfd;
                                off[b] = l * hfd;
                                v += w1[k + 2] * w1[l + 2] * comp_at(off[0], off[1], off[2], i, j);
                            }
                        v /= hfd * hfd;
                    }
                    best = std::max(best, std::abs(v));
                }
        }
    return best;
}

}  // namespace

ValidationReport validate_decay(const MetricConfig& cfg, const DecayRegion& region, int max_order,
                                double claimed_delta, double claimed_gamma) {
    const double delta = std::isnan(claimed_delta) ? cfg.delta : claimed_delta;
    const double gamma = std::isnan(claimed_gamma) ? cfg.gamma_decay : claimed_gamma;
    ValidationReport rep;
    rep.delta = delta;
    rep.tolerance = (cfg.kind == MetricKind::UserTabulated) ? 0.15 : 0.05;
    if (cfg.kind == MetricKind::UserTabulated) max_order = std::min(max_order, 1);
    rep.max_order = max_order;
    rep.rows.resize(max_order + 1);
    for (int m = 0; m <= max_order; ++m) rep.rows[m].order = m;

    const double denom_delta = (delta > 0.0) ? delta : 1.0;

    for (int is = 0; is < region.n_s; ++is) {
        const double fs = (region.n_s == 1) ? 0.0 : double(is) / double(region.n_s - 1);
        const double s = region.s_min * std::pow(region.s_max / region.s_min, fs);
        const double r_cone = 0.5 * (s * s - 1.0);
        const double r_hi = std::min(region.rho_max, 0.95 * r_cone);
        double s_ratio0 = 0.0;

        for (int ir = 0; ir < region.n_rho; ++ir) {
            const double r = (region.n_rho == 1) ? 0.0 : r_hi * double(ir) / double(region.n_rho - 1);
            for (int ia = 0; ia < region.n_angle; ++ia) {
                if (r == 0.0 && ia > 0) break;
                const double th = 2.0 * M_PI * double(ia) / double(region.n_angle);
                const double t = std::sqrt(s * s + r * r);
                const SpacetimePoint p =
                    SpacetimePoint::cartesian(t, r * std::cos(th), r * std::sin(th));
                const MetricSample ms = sample_metric(cfg, p);
                const double st2 = (p.s / p.t) * (p.s / p.t);

                for (int m = 0; m <= max_order; ++m) {
                    const double env = denom_delta * st2 * std::pow(p.s, -1.0 - double(m) - gamma);
                    for (int pos = 0; pos < 2; ++pos) {
                        const bool up = (pos == 0);
                        double num = 0.0;
                        if (m == 0)
                            num = order0_max_abs(ms, up);
                        else if (m == 1)
                            num = order1_max_abs(ms, up);
                        else
                            num = order2_max_abs(cfg, p, up);
                        const double ratio = (num == 0.0) ? 0.0 : num / env;
                        auto& row = rep.rows[m];
                        double& slot = up ? row.max_ratio_upper : row.max_ratio_lower;
                        if (ratio > slot) {
                            slot = ratio;
                            row.argmax_t = p.t;
                            row.argmax_x1 = p.x[0];
                            row.argmax_x2 = p.x[1];
                        }
                        if (m == 0) s_ratio0 = std::max(s_ratio0, ratio);
                    }
                }
            }
        }
        rep.per_s_max_ratio.emplace_back(s, s_ratio0);
    }

    rep.gate_ratio = std::max(rep.rows[0].max_ratio_upper, rep.rows[0].max_ratio_lower);
    rep.pass = rep.gate_ratio <= 1.0 + rep.tolerance;
    return rep;
}

}  // namespace membrane
