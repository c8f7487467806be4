#pragma once

#include "membrane/solver.hpp"

namespace membrane {

// Radially symmetric reduction on the flat background.  The field lives on a
// staggered radial grid r_i = (i + 1/2) h, which avoids the coordinate
// singularity and makes even reflection across r = 0 exact.
struct RadialConfig {
    EvolutionMode mode = EvolutionMode::Linear;  // Linear or FlatNullOnly
    int spatial_dim = 2;                         // 2 or 3 spatial dimensions
    double epsilon = 1e-2;
    double support_radius = 3.0;
    double grid_spacing = 0.05;
    double cfl = 0.4;
    double s_max = 24.0;
    int m_diag = 1;
    InitialData data;  // radial profiles; the angular shape is rejected
    double domain_pad = 3.0;
    int max_grid_points = 100000;
    double blowup_threshold = 1e6;
    // hyperboloidal slice schedule (consumed by the slice monitor)
    bool uniform_ds = false;
    double ds0 = 0.25;
    double ds_growth = 1.3;
    double ds_max = 1.0;

    double start_time() const { return support_radius + 1.0; }
    double cone_edge_radius() const { return 0.5 * (s_max * s_max - 1.0); }
    double half_width() const { return cone_edge_radius() + domain_pad; }
    int grid_points() const;
    void validate() const;
};

// Time levels reuse TimeLevel/TimeLevelRing with phi/psi indexed by radius.
class RadialSolver {
  public:
    explicit RadialSolver(const RadialConfig& cfg);

    int points() const { return n_; }
    double dr() const { return cfg_.grid_spacing; }
    double radius(int i) const { return (i + 0.5) * cfg_.grid_spacing; }
    double dt() const { return dt_; }
    double time() const { return t_; }
    double end_time() const { return t_end_; }
    int step_count() const { return step_; }
    const TimeLevelRing& ring() const { return ring_; }
    const RadialConfig& config() const { return cfg_; }

    void step();
    void run(const StepObserver& observer = {});

    const StepInfo& last_step_info() const { return last_info_; }

  private:
    void rhs(double t, const std::vector<double>& phi, const std::vector<double>& psi,
             std::vector<double>& out) const;
    void apply_cone_mask(double t, std::vector<double>& phi, std::vector<double>& psi) const;
    void push_level();

    RadialConfig cfg_;
    int n_ = 0;
    double dt_ = 0.0;
    double t_ = 0.0;
    double t_end_ = 0.0;
    int step_ = 0;
    TimeLevelRing ring_;
    StepInfo last_info_;
    std::vector<double> phi_, psi_;
    std::vector<double> tmp_phi_, tmp_psi_, k_psi_, acc_phi_, acc_psi_;
};

}  // namespace membrane
