#include "membrane/radial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace membrane {

int RadialConfig::grid_points() const { return int(std::ceil(half_width() / grid_spacing)); }

void RadialConfig::validate() const {
    if (mode == EvolutionMode::Full)
        throw ConfigError(
            "radial: the curved-background mode is not available; on the flat background the "
            "full equation coincides with the flat quasilinear mode");
    if (spatial_dim != 2 && spatial_dim != 3)
        throw ConfigError("radial: spatial dimension must be 2 or 3");
    if (epsilon < 0.0) throw ConfigError("radial: epsilon must be nonnegative");
    if (support_radius < 1.0) throw ConfigError("radial: support radius must be >= 1");
    if (grid_spacing <= 0.0) throw ConfigError("radial: grid spacing must be positive");
    if (cfl <= 0.0 || cfl > 1.0) throw ConfigError("radial: cfl must lie in (0, 1]");
    if (s_max <= start_time()) throw ConfigError("radial: s_max must exceed the first slice");
    if (m_diag < 0 || m_diag > 1)
        throw ConfigError("radial: diagnostics beyond first-order operators need the planar grid");
    if (data.position_shape == InitialShape::AngularBump ||
        data.velocity_shape == InitialShape::AngularBump)
        throw ConfigError("radial: angular initial data is not radially symmetric");
    if (domain_pad < 4.0 * grid_spacing)
        throw ConfigError("radial: domain pad must cover at least four grid cells");
    if (grid_points() > max_grid_points) throw ConfigError("radial: grid exceeds the point budget");
    if (blowup_threshold <= 0.0) throw ConfigError("radial: blowup threshold must be positive");
    if (ds0 <= 0.0 || ds_max < ds0 || ds_growth < 1.0)
        throw ConfigError("radial: slice schedule parameters out of range");
}

namespace {

double radial_shape(InitialShape s, double r, double radius) {
    if (s == InitialShape::Zero) return 0.0;
    const double u = (r * r) / (radius * radius);
    if (u >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u));
}

}  // namespace

RadialSolver::RadialSolver(const RadialConfig& cfg)
    : cfg_(cfg), ring_(std::max(6, 2 * cfg.m_diag + 4)) {
    cfg_.validate();
    n_ = cfg_.grid_points();
    dt_ = cfg_.cfl * cfg_.grid_spacing;
    t_ = cfg_.start_time();
    t_end_ = 0.5 * (cfg_.s_max * cfg_.s_max + 1.0) + 4.0 * dt_;

    phi_.assign(std::size_t(n_), 0.0);
    psi_.assign(std::size_t(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        const double r = radius(i);
        phi_[i] = cfg_.epsilon * cfg_.data.position_amplitude *
                  radial_shape(cfg_.data.position_shape, r, cfg_.support_radius);
        psi_[i] = cfg_.epsilon * cfg_.data.velocity_amplitude *
                  radial_shape(cfg_.data.velocity_shape, r, cfg_.support_radius);
    }
    tmp_phi_ = tmp_psi_ = k_psi_ = acc_phi_ = acc_psi_ = phi_;
    push_level();
}

void RadialSolver::push_level() {
    TimeLevel lvl;
    lvl.t = t_;
    lvl.phi = phi_;
    lvl.psi = psi_;
    ring_.push(std::move(lvl));
}

void RadialSolver::apply_cone_mask(double t, std::vector<double>& phi,
                                   std::vector<double>& psi) const {
    for (int i = 0; i < n_; ++i)
        if (radius(i) >= t - 1.0) {
            phi[i] = 0.0;
            psi[i] = 0.0;
        }
}

void RadialSolver::rhs(double t, const std::vector<double>& phi, const std::vector<double>& psi,
                       std::vector<double>& out) const {
    const double h = cfg_.grid_spacing;
    const double inv12h = 1.0 / (12.0 * h);
    const double inv12h2 = 1.0 / (12.0 * h * h);
    const double nm1 = cfg_.spatial_dim - 1;
    const bool membrane = cfg_.mode != EvolutionMode::Linear;
    const double cone_r = t - 1.0;

    // even reflection across r = 0 (staggered: mirror of node i is node -1-i),
    // zero extension beyond the outer edge (outside the cone)
    const auto at = [&](const std::vector<double>& v, int i) {
        if (i < 0) return v[std::size_t(-1 - i)];
        if (i >= n_) return 0.0;
        return v[std::size_t(i)];
    };

    for (int i = 0; i < n_; ++i) {
        const double r = radius(i);
        if (r >= cone_r) {
            out[i] = 0.0;
            continue;
        }
        const double pr =
            (at(phi, i - 2) - 8.0 * at(phi, i - 1) + 8.0 * at(phi, i + 1) - at(phi, i + 2)) *
            inv12h;
        const double prr = (-at(phi, i + 2) + 16.0 * at(phi, i + 1) - 30.0 * at(phi, i) +
                            16.0 * at(phi, i - 1) - at(phi, i - 2)) *
                           inv12h2;
        if (!membrane) {
            out[i] = prr + nm1 * pr / r;
            continue;
        }
        const double pt = psi[std::size_t(i)];
        const double ptr =
            (at(psi, i - 2) - 8.0 * at(psi, i - 1) + 8.0 * at(psi, i + 1) - at(psi, i + 2)) *
            inv12h;
        out[i] = (2.0 * pt * pr * ptr + (1.0 - pt * pt) * prr +
                  (1.0 - pt * pt + pr * pr) * nm1 * pr / r) /
                 (1.0 + pr * pr);
    }
}

void RadialSolver::step() {
    const std::size_t m = phi_.size();
    static constexpr double stage_c[4] = {0.0, 0.5, 0.5, 1.0};
    static constexpr double stage_w[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};

    std::fill(acc_phi_.begin(), acc_phi_.end(), 0.0);
    std::fill(acc_psi_.begin(), acc_psi_.end(), 0.0);

    for (int stage = 0; stage < 4; ++stage) {
        const double ts = t_ + stage_c[stage] * dt_;
        if (stage == 0) {
            tmp_phi_ = phi_;
            tmp_psi_ = psi_;
        } else {
            const double a = stage_c[stage] * dt_;
            for (std::size_t c = 0; c < m; ++c) {
                tmp_phi_[c] = phi_[c] + a * tmp_psi_[c];
                tmp_psi_[c] = psi_[c] + a * k_psi_[c];
            }
        }
        rhs(ts, tmp_phi_, tmp_psi_, k_psi_);
        const double w = stage_w[stage] * dt_;
        for (std::size_t c = 0; c < m; ++c) {
            acc_phi_[c] += w * tmp_psi_[c];
            acc_psi_[c] += w * k_psi_[c];
        }
    }

    const double t_prev = t_;
    for (std::size_t c = 0; c < m; ++c) {
        phi_[c] += acc_phi_[c];
        psi_[c] += acc_psi_[c];
    }
    t_ += dt_;
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

    last_info_ = StepInfo{step_, t_, 1.0, sup_phi, sup_psi};
    push_level();
}

void RadialSolver::run(const StepObserver& observer) {
    if (observer) observer(ring_, StepInfo{step_, t_, 0.0, 0.0, 0.0});
    while (t_ < t_end_ - 1e-9) {
        step();
        if (observer) observer(ring_, last_info_);
    }
}

}  // namespace membrane
