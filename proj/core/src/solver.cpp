#include "membrane/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include "membrane/nullforms.hpp"

namespace membrane {

// ---------------------------------------------------------------------------
// ScenarioConfig
// ---------------------------------------------------------------------------

double ScenarioConfig::half_width() const { return cone_edge_radius() + domain_pad; }

int ScenarioConfig::grid_points() const {
    const int half = int(std::ceil(half_width() / grid_spacing));
    return 2 * half + 1;
}

void ScenarioConfig::validate() const {
    if (epsilon < 0.0) throw ConfigError("scenario: epsilon must be nonnegative");
    if (support_radius < 1.0) throw ConfigError("scenario: support radius must be >= 1");
    if (grid_spacing <= 0.0) throw ConfigError("scenario: grid spacing must be positive");
    if (cfl <= 0.0 || cfl > 1.0) throw ConfigError("scenario: cfl must lie in (0, 1]");
    if (s_max <= start_time())
        throw ConfigError("scenario: s_max must exceed the first slice s = support_radius + 1");
    if (m_diag < 0 || m_diag > 2) throw ConfigError("scenario: m_diag must be 0, 1 or 2");
    if (threads < 1) throw ConfigError("scenario: threads must be >= 1");
    if (domain_pad < 4.0 * grid_spacing)
        throw ConfigError("scenario: domain pad must cover at least four grid cells");
    if (grid_points() > max_grid_points)
        throw ConfigError("scenario: grid exceeds the per-axis point budget");
    if (blowup_threshold <= 0.0) throw ConfigError("scenario: blowup threshold must be positive");
    if (ds0 <= 0.0 || ds_max < ds0 || ds_growth < 1.0)
        throw ConfigError("scenario: slice schedule parameters out of range");
    metric.validate();
    if (mode == EvolutionMode::FlatNullOnly) {
        const bool flat = metric.kind == MetricKind::Minkowski ||
                          (metric.kind == MetricKind::PerturbedAnalytic && metric.delta == 0.0);
        if (!flat)
            throw ConfigError(
                "scenario: the flat quasilinear mode is defined on the flat background only");
    }
}

namespace {

double shape_value(InitialShape s, double x1, double x2, double radius) {
    if (s == InitialShape::Zero) return 0.0;
    const double u = (x1 * x1 + x2 * x2) / (radius * radius);
    if (u >= 1.0) return 0.0;
    const double bump = std::exp(1.0 - 1.0 / (1.0 - u));
    if (s == InitialShape::AngularBump) return bump * (x1 * x1 - x2 * x2) / (radius * radius);
    return bump;
}

}  // namespace

// ---------------------------------------------------------------------------
// EvolutionKernel: one rhs evaluation  psi_dot = R(t, phi, psi)
// ---------------------------------------------------------------------------

class EvolutionKernel {
  public:
    struct GuardInfo {
        bool ok = true;
        double min_abs_a = std::numeric_limits<double>::infinity();
    };

    EvolutionKernel(Grid2D grid, EvolutionMode mode, MetricConfig metric, int threads)
        : grid_(grid), mode_(mode), metric_(std::move(metric)), threads_(threads) {
        flat_ = metric_.kind == MetricKind::Minkowski ||
                (metric_.kind == MetricKind::PerturbedAnalytic && metric_.delta == 0.0);
    }

    // Cone mask: points with r < t - 1 are active.  Band mask: the outermost
    // `band` cells are skipped (their values are imposed by the caller).
    void use_cone_mask() { band_ = -1; }
    void use_band_mask(int band) { band_ = band; }
    void set_forcing(const AnalyticField* exact) { forcing_ = exact; }

    GuardInfo dpsi(double t, const std::vector<double>& phi, const std::vector<double>& psi,
                   std::vector<double>& out) const {
        const int n = grid_.n;
        std::vector<GuardInfo> part(static_cast<std::size_t>(threads_));
        if (threads_ <= 1) {
            part[0] = rows(t, phi, psi, out, 0, n);
        } else {
            std::vector<std::thread> pool;
            const int chunk = (n + threads_ - 1) / threads_;
            for (int k = 0; k < threads_; ++k) {
                const int i0 = k * chunk, i1 = std::min(n, i0 + chunk);
                if (i0 >= i1) continue;
                pool.emplace_back([&, k, i0, i1] { part[k] = rows(t, phi, psi, out, i0, i1); });
            }
            for (auto& th : pool) th.join();
        }
        GuardInfo g;
        for (const auto& p : part) {
            g.ok = g.ok && p.ok;
            g.min_abs_a = std::fmin(g.min_abs_a, p.min_abs_a);
        }
        return g;
    }

  private:
    GuardInfo rows(double t, const std::vector<double>& phi, const std::vector<double>& psi,
                   std::vector<double>& out, int i_begin, int i_end) const {
        GuardInfo guard;
        const int n = grid_.n;
        const double h = grid_.h;
        const double inv12h = 1.0 / (12.0 * h);
        const double inv12h2 = 1.0 / (12.0 * h * h);
        const double inv144h2 = inv12h * inv12h;
        const double* P = phi.data();
        const double* S = psi.data();
        const double cone_r = t - 1.0;
        const auto id = [n](int i, int j) { return std::size_t(i) * n + j; };

        for (int i = i_begin; i < i_end; ++i) {
            const double x1 = grid_.coord(i);
            for (int j = 0; j < n; ++j) {
                const std::size_t c = id(i, j);
                if (band_ >= 0) {
                    if (i < band_ || j < band_ || i >= n - band_ || j >= n - band_) {
                        out[c] = 0.0;  // imposed by the band boundary condition
                        continue;
                    }
                } else {
                    const double x2 = grid_.coord(j);
                    if (x1 * x1 + x2 * x2 >= cone_r * cone_r) {
                        out[c] = 0.0;
                        continue;
                    }
                }
                const double x2 = grid_.coord(j);

                // fourth-order stencils; active points always have two-cell margin
                const double pt = S[c];
                const double p1 = (P[id(i - 2, j)] - 8.0 * P[id(i - 1, j)] +
                                   8.0 * P[id(i + 1, j)] - P[id(i + 2, j)]) *
                                  inv12h;
                const double p2 = (P[id(i, j - 2)] - 8.0 * P[id(i, j - 1)] +
                                   8.0 * P[id(i, j + 1)] - P[id(i, j + 2)]) *
                                  inv12h;
                const double s1 = (S[id(i - 2, j)] - 8.0 * S[id(i - 1, j)] +
                                   8.0 * S[id(i + 1, j)] - S[id(i + 2, j)]) *
                                  inv12h;
                const double s2 = (S[id(i, j - 2)] - 8.0 * S[id(i, j - 1)] +
                                   8.0 * S[id(i, j + 1)] - S[id(i, j + 2)]) *
                                  inv12h;
                const double q11 = (-P[id(i + 2, j)] + 16.0 * P[id(i + 1, j)] - 30.0 * P[c] +
                                    16.0 * P[id(i - 1, j)] - P[id(i - 2, j)]) *
                                   inv12h2;
                const double q22 = (-P[id(i, j + 2)] + 16.0 * P[id(i, j + 1)] - 30.0 * P[c] +
                                    16.0 * P[id(i, j - 1)] - P[id(i, j - 2)]) *
                                   inv12h2;
                const auto row_d1 = [&](int a) {
                    return P[id(i + a, j - 2)] - 8.0 * P[id(i + a, j - 1)] +
                           8.0 * P[id(i + a, j + 1)] - P[id(i + a, j + 2)];
                };
                const double q12 =
                    (row_d1(-2) - 8.0 * row_d1(-1) + 8.0 * row_d1(1) - row_d1(2)) * inv144h2;

                double c00, c01, c02, c11, c12, c22, rhs_f;
                if (flat_ && mode_ == EvolutionMode::Linear) {
                    // C = m: psi_dot = (S - q11 - q22) / (-1)
                    out[c] = q11 + q22 - forcing_term(t, x1, x2);
                    guard.min_abs_a = std::fmin(guard.min_abs_a, 1.0);
                    continue;
                } else if (flat_) {
                    const double g2 = p1 * p1 + p2 * p2;
                    const double q = -pt * pt + g2;
                    c00 = -1.0 - g2;
                    c01 = pt * p1;
                    c02 = pt * p2;
                    c11 = 1.0 + q - p1 * p1;
                    c22 = 1.0 + q - p2 * p2;
                    c12 = -p1 * p2;
                    rhs_f = 0.0;
                } else {
                    const auto ms =
                        sample_metric(metric_, SpacetimePoint::cartesian(t, x1, x2));
                    CartesianJet jet;
                    jet.order = 1;
                    jet.at(1, 0, 0) = pt;
                    jet.at(0, 1, 0) = p1;
                    jet.at(0, 0, 1) = p2;
                    if (mode_ == EvolutionMode::Linear) {
                        c00 = ms.g_upper(0, 0);
                        c01 = ms.g_upper(0, 1);
                        c02 = ms.g_upper(0, 2);
                        c11 = ms.g_upper(1, 1);
                        c12 = ms.g_upper(1, 2);
                        c22 = ms.g_upper(2, 2);
                        rhs_f = ms.contracted[0] * pt + ms.contracted[1] * p1 +
                                ms.contracted[2] * p2;
                    } else {
                        const SmallMat G = quadratic_coefficients(ms, jet);
                        c00 = -1.0 + G(0, 0);
                        c01 = G(0, 1);
                        c02 = G(0, 2);
                        c11 = 1.0 + G(1, 1);
                        c12 = G(1, 2);
                        c22 = 1.0 + G(2, 2);
                        rhs_f = semilinear_rhs(ms, jet);
                    }
                }

                if (!(c00 <= -0.5)) guard.ok = false;
                guard.min_abs_a = std::fmin(guard.min_abs_a, std::abs(c00));

                const double num = rhs_f + forcing_term(t, x1, x2) -
                                   2.0 * (c01 * s1 + c02 * s2) -
                                   (c11 * q11 + 2.0 * c12 * q12 + c22 * q22);
                out[c] = num / c00;
            }
        }
        return guard;
    }

    // Manufactured source S = C[phi*] : dd phi* - F[phi*], so the exact field
    // solves the forced equation.
    double forcing_term(double t, double x1, double x2) const {
        if (forcing_ == nullptr) return 0.0;
        const auto p = SpacetimePoint::cartesian(t, x1, x2);
        const CartesianJet jet = forcing_->jet_to_order(p, 2);
        const double dd[3][3] = {{jet.at(2, 0, 0), jet.at(1, 1, 0), jet.at(1, 0, 1)},
                                 {jet.at(1, 1, 0), jet.at(0, 2, 0), jet.at(0, 1, 1)},
                                 {jet.at(1, 0, 1), jet.at(0, 1, 1), jet.at(0, 0, 2)}};
        const double d[3] = {jet.at(1, 0, 0), jet.at(0, 1, 0), jet.at(0, 0, 1)};
        SmallMat C = SmallMat::minkowski(3);
        double f = 0.0;
        if (flat_ && mode_ == EvolutionMode::Linear) {
            // C = m, f = 0
        } else if (flat_) {
            MetricSample flat_ms;
            flat_ms.g_upper = SmallMat::minkowski(3);
            flat_ms.g_lower = SmallMat::minkowski(3);
            C = SmallMat::minkowski(3) + quadratic_coefficients(flat_ms, jet);
        } else {
            const auto ms = sample_metric(metric_, p);
            if (mode_ == EvolutionMode::Linear) {
                C = ms.g_upper;
                f = ms.contracted[0] * d[0] + ms.contracted[1] * d[1] + ms.contracted[2] * d[2];
            } else {
                // the quadratic block already carries the (g - m) linear part
                C = SmallMat::minkowski(3) + quadratic_coefficients(ms, jet);
                f = semilinear_rhs(ms, jet);
            }
        }
        double cdd = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) cdd += C(a, b) * dd[a][b];
        return cdd - f;
    }

    Grid2D grid_;
    EvolutionMode mode_;
    MetricConfig metric_;
    int threads_;
    bool flat_ = true;
    int band_ = -1;  // -1: cone mask, >= 0: box band width
    const AnalyticField* forcing_ = nullptr;
};

// ---------------------------------------------------------------------------
// PlanarSolver
// ---------------------------------------------------------------------------

namespace {
int ring_depth_for(int m_diag) { return std::max(6, 2 * m_diag + 4); }
}  // namespace

PlanarSolver::~PlanarSolver() = default;

PlanarSolver::PlanarSolver(const ScenarioConfig& cfg)
    : cfg_(cfg), ring_(ring_depth_for(cfg.m_diag)) {
    cfg_.validate();
    grid_.n = cfg_.grid_points();
    grid_.h = cfg_.grid_spacing;
    grid_.x0 = -0.5 * (grid_.n - 1) * grid_.h;
    dt_ = cfg_.cfl * cfg_.grid_spacing;
    t_ = cfg_.start_time();
    const double t_last_slice = 0.5 * (cfg_.s_max * cfg_.s_max + 1.0);
    t_end_ = t_last_slice + 4.0 * dt_;

    phi_.assign(grid_.size(), 0.0);
    psi_.assign(grid_.size(), 0.0);
    for (int i = 0; i < grid_.n; ++i)
        for (int j = 0; j < grid_.n; ++j) {
            const double x1 = grid_.coord(i), x2 = grid_.coord(j);
            const std::size_t c = grid_.idx(i, j);
            phi_[c] = cfg_.epsilon * cfg_.data.position_amplitude *
                      shape_value(cfg_.data.position_shape, x1, x2, cfg_.support_radius);
            psi_[c] = cfg_.epsilon * cfg_.data.velocity_amplitude *
                      shape_value(cfg_.data.velocity_shape, x1, x2, cfg_.support_radius);
        }

    tmp_phi_.assign(grid_.size(), 0.0);
    tmp_psi_.assign(grid_.size(), 0.0);
    k_psi_.assign(grid_.size(), 0.0);
    acc_phi_.assign(grid_.size(), 0.0);
    acc_psi_.assign(grid_.size(), 0.0);

    kernel_ = std::make_unique<EvolutionKernel>(grid_, cfg_.mode, cfg_.metric, cfg_.threads);
    kernel_->use_cone_mask();
    push_level();
}

void PlanarSolver::push_level() {
    TimeLevel lvl;
    lvl.t = t_;
    lvl.phi = phi_;
    lvl.psi = psi_;
    ring_.push(std::move(lvl));
}

void PlanarSolver::apply_cone_mask(double t, std::vector<double>& phi,
                                   std::vector<double>& psi) const {
    const double cone_r2 = (t - 1.0) * (t - 1.0);
    for (int i = 0; i < grid_.n; ++i) {
        const double x1 = grid_.coord(i);
        for (int j = 0; j < grid_.n; ++j) {
            const double x2 = grid_.coord(j);
            if (x1 * x1 + x2 * x2 >= cone_r2) {
                const std::size_t c = grid_.idx(i, j);
                phi[c] = 0.0;
                psi[c] = 0.0;
            }
        }
    }
}

void PlanarSolver::step() {
    const std::size_t m = grid_.size();
    const double dt = dt_;
    double min_abs_a = std::numeric_limits<double>::infinity();

    // classical four-stage scheme
    static constexpr double stage_c[4] = {0.0, 0.5, 0.5, 1.0};
    static constexpr double stage_w[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};

    std::fill(acc_phi_.begin(), acc_phi_.end(), 0.0);
    std::fill(acc_psi_.begin(), acc_psi_.end(), 0.0);

    for (int stage = 0; stage < 4; ++stage) {
        const double ts = t_ + stage_c[stage] * dt;
        if (stage == 0) {
            tmp_phi_ = phi_;
            tmp_psi_ = psi_;
        } else {
            // tmp_psi_ still holds the previous stage's phi_dot; consume it
            // before overwriting with the new stage's psi.
            const double a = stage_c[stage] * dt;
            for (std::size_t c = 0; c < m; ++c) {
                tmp_phi_[c] = phi_[c] + a * tmp_psi_[c];
                tmp_psi_[c] = psi_[c] + a * k_psi_[c];
            }
        }
        const auto guard = kernel_->dpsi(ts, tmp_phi_, tmp_psi_, k_psi_);
        min_abs_a = std::fmin(min_abs_a, guard.min_abs_a);
        if (!guard.ok) throw DegeneracyError(ts, guard.min_abs_a);
        const double w = stage_w[stage] * dt;
        for (std::size_t c = 0; c < m; ++c) {
            acc_phi_[c] += w * tmp_psi_[c];  // phi_dot = psi at the stage state
            acc_psi_[c] += w * k_psi_[c];
        }
    }

    const double t_prev = t_;
    for (std::size_t c = 0; c < m; ++c) {
        phi_[c] += acc_phi_[c];
        psi_[c] += acc_psi_[c];
    }
    t_ += dt;
    ++step_;
    apply_cone_mask(t_, phi_, psi_);

    double sup_phi = 0.0, sup_psi = 0.0;
    bool finite = true;
    for (std::size_t c = 0; c < m; ++c) {
        const double ap = std::abs(phi_[c]), as = std::abs(psi_[c]);
        if (!(ap < cfg_.blowup_threshold && as < cfg_.blowup_threshold)) finite = false;
        if (ap > sup_phi) sup_phi = ap;
        if (as > sup_psi) sup_psi = as;
    }
    if (!finite) throw BlowupError(t_prev, sup_phi, sup_psi);

    last_info_.step = step_;
    last_info_.t = t_;
    last_info_.min_abs_a = min_abs_a;
    last_info_.sup_phi = sup_phi;
    last_info_.sup_psi = sup_psi;
    push_level();
}

void PlanarSolver::run(const StepObserver& observer) {
    if (observer) observer(ring_, StepInfo{step_, t_, 0.0, 0.0, 0.0});
    while (t_ < t_end_ - 1e-9) {
        step();
        if (observer) observer(ring_, last_info_);
    }
}

void PlanarSolver::restore(const Checkpoint& ckpt) {
    if (ckpt.grid.n != grid_.n || ckpt.grid.h != grid_.h || ckpt.grid.x0 != grid_.x0)
        throw IoError("checkpoint: grid does not match the scenario");
    if (ckpt.levels.empty()) throw IoError("checkpoint: no time levels");
    ring_ = TimeLevelRing(ring_.depth());
    for (const auto& lvl : ckpt.levels) ring_.push(lvl);
    phi_ = ckpt.levels.back().phi;
    psi_ = ckpt.levels.back().psi;
    t_ = ckpt.levels.back().t;
    step_ = ckpt.step;
}

// ---------------------------------------------------------------------------
// Manufactured runs
// ---------------------------------------------------------------------------

std::shared_ptr<const AnalyticField> manufactured_solution() {
    return std::make_shared<GaussianField>(0.5, std::array<double, 3>{6.4, 0.4, -0.3},
                                           std::array<double, 3>{1.0, 1.2, 0.9});
}

ManufacturedResult run_manufactured(const ManufacturedConfig& cfg) {
    if (cfg.n < 17) throw ConfigError("manufactured run: grid too small");
    if (cfg.t_end <= cfg.t_start) throw ConfigError("manufactured run: empty time interval");
    if (cfg.t_start - 1.0 <= cfg.box_half * std::sqrt(2.0))
        throw ConfigError("manufactured run: box corners must stay inside the cone r < t - 1");
    cfg.metric.validate();
    const auto exact = manufactured_solution();

    Grid2D grid;
    grid.n = cfg.n;
    grid.h = 2.0 * cfg.box_half / (cfg.n - 1);
    grid.x0 = -cfg.box_half;
    const int band = 2;

    EvolutionKernel kernel(grid, cfg.mode, cfg.metric, cfg.threads);
    kernel.use_band_mask(band);
    kernel.set_forcing(exact.get());

    const int steps = std::max(1, int(std::ceil((cfg.t_end - cfg.t_start) / (cfg.cfl * grid.h))));
    const double dt = (cfg.t_end - cfg.t_start) / steps;

    const std::size_t m = grid.size();
    std::vector<double> phi(m), psi(m), tmp_phi(m), tmp_psi(m), k_psi(m), acc_phi(m), acc_psi(m);

    const auto fill_exact = [&](double t, std::vector<double>& f, std::vector<double>& g) {
        for (int i = 0; i < grid.n; ++i)
            for (int j = 0; j < grid.n; ++j) {
                const double x1 = grid.coord(i), x2 = grid.coord(j);
                const std::size_t c = grid.idx(i, j);
                f[c] = exact->value(t, x1, x2);
                g[c] = exact->jet(t, x1, x2, 1, 0, 0);
            }
    };
    const auto impose_band = [&](double t, std::vector<double>& f, std::vector<double>& g) {
        for (int i = 0; i < grid.n; ++i)
            for (int j = 0; j < grid.n; ++j) {
                if (i >= band && j >= band && i < grid.n - band && j < grid.n - band) continue;
                const double x1 = grid.coord(i), x2 = grid.coord(j);
                const std::size_t c = grid.idx(i, j);
                f[c] = exact->value(t, x1, x2);
                g[c] = exact->jet(t, x1, x2, 1, 0, 0);
            }
    };

    fill_exact(cfg.t_start, phi, psi);
    double t = cfg.t_start;

    static constexpr double stage_c[4] = {0.0, 0.5, 0.5, 1.0};
    static constexpr double stage_w[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};

    for (int step = 0; step < steps; ++step) {
        std::fill(acc_phi.begin(), acc_phi.end(), 0.0);
        std::fill(acc_psi.begin(), acc_psi.end(), 0.0);
        for (int stage = 0; stage < 4; ++stage) {
            const double ts = t + stage_c[stage] * dt;
            if (stage == 0) {
                tmp_phi = phi;
                tmp_psi = psi;
            } else {
                const double a = stage_c[stage] * dt;
                for (std::size_t c = 0; c < m; ++c) {
                    tmp_phi[c] = phi[c] + a * tmp_psi[c];
                    tmp_psi[c] = psi[c] + a * k_psi[c];
                }
                impose_band(ts, tmp_phi, tmp_psi);
            }
            const auto guard = kernel.dpsi(ts, tmp_phi, tmp_psi, k_psi);
            if (!guard.ok) throw DegeneracyError(ts, guard.min_abs_a);
            const double w = stage_w[stage] * dt;
            for (std::size_t c = 0; c < m; ++c) {
                acc_phi[c] += w * tmp_psi[c];
                acc_psi[c] += w * k_psi[c];
            }
        }
        for (std::size_t c = 0; c < m; ++c) {
            phi[c] += acc_phi[c];
            psi[c] += acc_psi[c];
        }
        t = cfg.t_start + (step + 1) * dt;
        impose_band(t, phi, psi);
    }

    ManufacturedResult res;
    res.steps = steps;
    double l2 = 0.0;
    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j) {
            const double e = phi[grid.idx(i, j)] - exact->value(t, grid.coord(i), grid.coord(j));
            res.sup_error = std::fmax(res.sup_error, std::abs(e));
            l2 += e * e;
        }
    res.l2_error = std::sqrt(l2 * grid.h * grid.h);
    return res;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

namespace {
constexpr char kCkptMagic[] = "MEMBRANE-CKPT-v1\n";

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void get(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot open for writing: " + path.string());
    os.write(kCkptMagic, sizeof(kCkptMagic) - 1);
    put(os, ckpt.config_hash);
    put(os, std::int32_t(ckpt.step));
    put(os, std::int32_t(ckpt.grid.n));
    put(os, ckpt.grid.h);
    put(os, ckpt.grid.x0);
    put(os, std::int32_t(ckpt.levels.size()));
    for (const auto& lvl : ckpt.levels) {
        put(os, lvl.t);
        os.write(reinterpret_cast<const char*>(lvl.phi.data()),
                 std::streamsize(lvl.phi.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(lvl.psi.data()),
                 std::streamsize(lvl.psi.size() * sizeof(double)));
    }
    if (!os) throw IoError("checkpoint: write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open: " + path.string());
    char magic[sizeof(kCkptMagic) - 1];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw IoError("checkpoint: bad header: " + path.string());
    Checkpoint ckpt;
    std::int32_t step = 0, n = 0, count = 0;
    get(is, ckpt.config_hash);
    get(is, step);
    get(is, n);
    get(is, ckpt.grid.h);
    get(is, ckpt.grid.x0);
    get(is, count);
    if (!is || n <= 0 || count <= 0 || count > 64)
        throw IoError("checkpoint: corrupt metadata: " + path.string());
    ckpt.step = step;
    ckpt.grid.n = n;
    const std::size_t sz = std::size_t(n) * n;
    ckpt.levels.resize(count);
    for (auto& lvl : ckpt.levels) {
        get(is, lvl.t);
        lvl.phi.resize(sz);
        lvl.psi.resize(sz);
        is.read(reinterpret_cast<char*>(lvl.phi.data()), std::streamsize(sz * sizeof(double)));
        is.read(reinterpret_cast<char*>(lvl.psi.data()), std::streamsize(sz * sizeof(double)));
    }
    if (!is) throw IoError("checkpoint: truncated data: " + path.string());
    return ckpt;
}

}  // namespace membrane
