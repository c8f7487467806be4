#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "membrane/analytic_fields.hpp"
#include "membrane/common.hpp"
#include "membrane/metrics.hpp"

namespace membrane {

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

enum class EvolutionMode {
    Linear,        // wave operator of the background metric
    FlatNullOnly,  // flat background, quasilinear membrane terms only
    Full,          // curved background with all quasilinear and semilinear terms
};

enum class InitialShape { Bump, AngularBump, Zero };

// Initial position/velocity profiles, both scaled by the scenario epsilon.
struct InitialData {
    InitialShape position_shape = InitialShape::Bump;
    InitialShape velocity_shape = InitialShape::Bump;
    double position_amplitude = 1.0;
    double velocity_amplitude = 1.0;
};

struct ScenarioConfig {
    EvolutionMode mode = EvolutionMode::Full;
    double epsilon = 1e-2;
    double support_radius = 2.0;  // initial data vanishes for r >= this
    double grid_spacing = 0.46;
    double cfl = 0.4;
    double s_max = 15.0;          // last hyperboloidal slice to cover
    int m_diag = 2;               // highest operator order tracked by diagnostics
    InitialData data;
    MetricConfig metric;
    int threads = 1;
    double domain_pad = 3.0;      // spatial margin beyond the last slice's edge
    int max_grid_points = 1200;   // per-axis budget guard
    double blowup_threshold = 1e6;
    // hyperboloidal slice schedule (consumed by the slice monitor)
    bool uniform_ds = false;
    double ds0 = 0.25;
    double ds_growth = 1.3;
    double ds_max = 1.0;

    double start_time() const { return support_radius + 1.0; }
    // edge radius of the last slice: r at which H_s meets the shifted cone
    double cone_edge_radius() const { return 0.5 * (s_max * s_max - 1.0); }
    double half_width() const;
    int grid_points() const;  // odd count per axis
    void validate() const;
};

// ---------------------------------------------------------------------------
// Grid and time-level history
// ---------------------------------------------------------------------------

struct Grid2D {
    int n = 0;
    double h = 0.0;
    double x0 = 0.0;  // coordinate of node 0 (both axes)

    double coord(int i) const { return x0 + i * h; }
    std::size_t idx(int i, int j) const { return std::size_t(i) * n + j; }
    std::size_t size() const { return std::size_t(n) * n; }
};

struct TimeLevel {
    double t = 0.0;
    std::vector<double> phi;
    std::vector<double> psi;  // d_t phi
};

// Sliding window of the most recent time levels, oldest first.  The depth is
// sized so that fourth-order temporal interpolation anywhere between the
// retained levels remains possible while slices are consumed lazily.
class TimeLevelRing {
  public:
    explicit TimeLevelRing(int depth) : depth_(depth) {}

    void push(TimeLevel level) {
        q_.push_back(std::move(level));
        if (int(q_.size()) > depth_) q_.pop_front();
    }
    int depth() const { return depth_; }
    int size() const { return int(q_.size()); }
    const TimeLevel& level(int k) const { return q_[k]; }  // k = 0 is oldest
    const TimeLevel& newest() const { return q_.back(); }
    const TimeLevel& oldest() const { return q_.front(); }

  private:
    int depth_;
    std::deque<TimeLevel> q_;
};

struct StepInfo {
    int step = 0;
    double t = 0.0;          // time after the step
    double min_abs_a = 0.0;  // smallest |C^00| seen during the step's stages
    double sup_phi = 0.0;
    double sup_psi = 0.0;
};

using StepObserver = std::function<void(const TimeLevelRing&, const StepInfo&)>;

// ---------------------------------------------------------------------------
// Planar (full 2d grid) evolution
// ---------------------------------------------------------------------------

class PlanarSolver {
  public:
    explicit PlanarSolver(const ScenarioConfig& cfg);
    ~PlanarSolver();

    const Grid2D& grid() const { return grid_; }
    double dt() const { return dt_; }
    double time() const { return t_; }
    double end_time() const { return t_end_; }
    int step_count() const { return step_; }
    const TimeLevelRing& ring() const { return ring_; }

    // Advance one RK4 step; throws DegeneracyError / BlowupError.
    void step();

    // Evolve until the monitor window past the last slice is covered.
    void run(const StepObserver& observer = {});

    // Restore state saved by write_checkpoint (configuration must match).
    void restore(const class Checkpoint& ckpt);

    const StepInfo& last_step_info() const { return last_info_; }

  private:
    void apply_cone_mask(double t, std::vector<double>& phi, std::vector<double>& psi) const;
    void push_level();

    ScenarioConfig cfg_;
    Grid2D grid_;
    double dt_ = 0.0;
    double t_ = 0.0;
    double t_end_ = 0.0;
    int step_ = 0;
    TimeLevelRing ring_;
    StepInfo last_info_;
    std::vector<double> phi_, psi_;
    std::vector<double> tmp_phi_, tmp_psi_, k_psi_, acc_phi_, acc_psi_;
    std::unique_ptr<class EvolutionKernel> kernel_;
};

// ---------------------------------------------------------------------------
// Manufactured-solution runs (convergence verification)
// ---------------------------------------------------------------------------

struct ManufacturedConfig {
    EvolutionMode mode = EvolutionMode::Full;
    MetricConfig metric;
    int n = 129;             // nodes per axis across the box
    double box_half = 3.0;   // box [-box_half, box_half]^2, centered at x = 0
    double t_start = 6.0;
    double t_end = 6.8;
    double cfl = 0.4;
    int threads = 1;
};

struct ManufacturedResult {
    double sup_error = 0.0;
    double l2_error = 0.0;
    int steps = 0;
};

// The exact solution used by manufactured runs (a spacetime Gaussian).
std::shared_ptr<const AnalyticField> manufactured_solution();

ManufacturedResult run_manufactured(const ManufacturedConfig& cfg);

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

class Checkpoint {
  public:
    int step = 0;
    Grid2D grid;
    std::uint64_t config_hash = 0;
    std::vector<TimeLevel> levels;  // oldest first
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace membrane
