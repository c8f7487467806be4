#pragma once

#include <array>
#include <limits>
#include <vector>

#include "membrane/analytic_fields.hpp"
#include "membrane/frames.hpp"
#include "membrane/metrics.hpp"
#include "membrane/radial.hpp"
#include "membrane/solver.hpp"

namespace membrane {

// ---------------------------------------------------------------------------
// Per-mode coefficient split.
//
// Every evolution mode solves  (m + G)^{ab} dd_ab phi = F  for some mode
// correction G and right side F:
//   Linear       G = g - m                      F = Gamma^mu d_mu phi
//   FlatNullOnly G = quadratic terms, flat g    F = 0
//   Full         G = deviation + quadratic      F = semilinear terms
// The derivatives d_c G^{ab} follow by the chain rule through the field jet
// and the metric sample; they feed the energy-identity right side.
// ---------------------------------------------------------------------------

SmallMat principal_correction(const MetricSample& ms, const CartesianJet& jet,
                              EvolutionMode mode);
double semilinear_terms(const MetricSample& ms, const CartesianJet& jet, EvolutionMode mode);
void principal_correction_derivatives(const MetricSample& ms, const CartesianJet& jet,
                                      EvolutionMode mode, double out[3][3][3]);

// ---------------------------------------------------------------------------
// Hyperboloidal slices.
//
// The slice of hyperboloidal time s collects every grid point x with
// |x| < (s^2 - 1)/2 (equivalently r < t - 1 at t = sqrt(s^2 + |x|^2)) and
// carries the order-3 Cartesian jet of phi at (t(x), x), reconstructed from
// the time-level ring by quartic interpolation in time and fourth-order
// differences in space (second order for third derivatives).  Quadrature is
// the plain h^2 cell sum of the x-projection.
// ---------------------------------------------------------------------------

struct SlicePoint {
    double x1 = 0.0;
    double x2 = 0.0;
    double t = 0.0;       // sqrt(s^2 + x1^2 + x2^2)
    double weight = 0.0;  // quadrature weight
    CartesianJet jet;     // order 3
};

struct HyperboloidSlice {
    double s = 0.0;
    int m_diag = 2;
    double h = 0.0;  // spacing of the generating grid
    std::vector<SlicePoint> points;
};

// Requires every point time t(x) to lie within [oldest, newest] of the ring
// (uniformly spaced levels, at least five); otherwise throws
// InsufficientHistoryError naming the required span.
HyperboloidSlice extract_slice(const TimeLevelRing& ring, const Grid2D& grid, double s,
                               int m_diag);

// Interpolation weights for value, first and second time derivative at t for
// five level times; exposed for direct testing.
void time_interpolation_weights(const double times[5], double t, double val[5], double d1[5],
                                double d2[5]);

// ---------------------------------------------------------------------------
// Functionals over one slice.
// ---------------------------------------------------------------------------

struct EnergyBreakdown {
    std::array<double, 3> by_order{};  // commuted-order contributions 0, 1, 2
    double total = 0.0;
};

// Quadrature of sum_a (D_a Z^I phi)^2 + ((s/t) d_t Z^I phi)^2 over the slice,
// summed over all vector-field words with |I| <= m.
EnergyBreakdown energy(const HyperboloidSlice& slice, int m);

// Adds the two coefficient-correction integrals of the generalized energy:
//   -2 int (G^{ab} nu_a d_t w d_b w) dx + int (G^{ab} d_a w d_b w) dx,
// nu = (1, -x/t), w = Z^I phi, with G of the base field per the mode.
EnergyBreakdown generalized_energy(const HyperboloidSlice& slice, const MetricConfig& metric,
                                   EvolutionMode mode, int m);

struct IdentityResult {
    double lhs = 0.0;       // (Etilde0(hi) - Etilde0(lo)) / (hi.s - lo.s)
    double rhs = 0.0;       // flux integral on the midpoint slice
    double residual = 0.0;  // |lhs - rhs|
};

// Two-slice difference quotient of the generalized energy against the
// midpoint flux integral
//   -2 int (s/t) [ d_a G^{ab} d_t phi d_b phi
//                  - (1/2) d_t G^{ab} d_a phi d_b phi + d_t phi F ] dx.
// `forcing` adds a manufactured source to F when the run was forced.
IdentityResult energy_identity_residual(const HyperboloidSlice& lo, const HyperboloidSlice& mid,
                                        const HyperboloidSlice& hi, const MetricConfig& metric,
                                        EvolutionMode mode,
                                        const AnalyticField* forcing = nullptr);

// sup_{H_s} t |phi|  /  (||phi|| + ||L_1 phi|| + ||L_2 phi||), L^2 over the
// slice; 0 for the zero field.
double sobolev_check(const HyperboloidSlice& slice);

// Weighted sup-norms per commuted order |J| (rows 0..orders-1):
//   sup |s d_a Z^J phi|, sup |t D_a Z^J phi|, sup |t s D_a D_b Z^J phi|
//   (both operator orders), sup |(s^3/t) d_t^2 Z^J phi|.
struct DecayObservables {
    int orders = 1;
    std::array<double, 2> sup_s_grad{};
    std::array<double, 2> sup_t_tangent{};
    std::array<double, 2> sup_ts_second{};
    std::array<double, 2> sup_time_second{};
};

DecayObservables decay_observables(const HyperboloidSlice& slice, int j_max);

// Degeneracy-solved form of the evolution equation on the slice (base field):
//   [(s/t)^2 - Gbar^{00}] d_t d_t phi
//     = sum_{(i,j) != (0,0)} Cbar^{ij} D_i D_j phi
//       + (C^{0b} x^b/t^2 - sum_a C^{aa}/t) d_t phi - F,
// with C = m + G and bars the frame conjugation.  Returns the sup residual,
// the smallest denominator (provably >= (s/t)^2 > 0 on the flat background),
// and the largest ratio of |dd phi| against the mixed-derivative bound
//   second_derivative_bound_constant * (|d_t d_t phi| + sum |D_a d_b phi|
//   + t^{-1} sum |d_c phi|).
struct FrameWaveCheck {
    double sup_residual = 0.0;
    double min_denominator = std::numeric_limits<double>::infinity();
    double second_derivative_ratio = 0.0;
};

FrameWaveCheck frame_wave_identity_check(const HyperboloidSlice& slice,
                                         const MetricConfig& metric, EvolutionMode mode,
                                         const AnalyticField* forcing = nullptr);

// Smallest |C^00| over the slice for the mode's principal coefficients.
double min_principal_coefficient(const HyperboloidSlice& slice, const MetricConfig& metric,
                                 EvolutionMode mode);

// Constant-time comparison column: int (psi^2 + |grad phi|^2) dx over the
// full grid at one stored level (fourth-order gradient).
double flat_grid_energy(const TimeLevel& level, const Grid2D& grid);

// ---------------------------------------------------------------------------
// Evolution-attached slice monitor.
//
// Grid time levels sweep upward while a slice's points sit at fixed times
// t(x); the monitor therefore consumes each point as soon as the ring covers
// its interpolation window and accumulates all functionals without ever
// holding a whole slice.  Records appear in slice order once complete.
// ---------------------------------------------------------------------------

struct EnergyRecord {
    double s = 0.0;
    std::array<double, 3> energy{};       // cumulative through order m
    std::array<double, 3> generalized{};  // with coefficient corrections
    std::array<double, 3> ratio{};        // generalized/energy, 1 when energy = 0
    DecayObservables observables;
    double sobolev = 0.0;
    double min_abs_coefficient = std::numeric_limits<double>::infinity();
    double flat_energy_time = 0.0;
    double flat_energy = 0.0;
};

struct IdentityRow {
    double s_mid = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};

// Slice times: s_0 = start, then steps ds_k = ds0 * growth^k capped at
// ds_max (or uniformly ds0), ending at s_max exactly.
std::vector<double> slice_schedule(double s_first, double s_last, bool uniform, double ds0,
                                   double growth, double ds_max);

class SliceMonitor {
  public:
    SliceMonitor(const ScenarioConfig& cfg, const Grid2D& grid, double dt);
    ~SliceMonitor();

    void observe(const TimeLevelRing& ring, const StepInfo& info);
    StepObserver observer();

    bool complete() const;
    const std::vector<EnergyRecord>& records() const { return records_; }
    const std::vector<IdentityRow>& identity_rows() const { return identity_rows_; }

  private:
    struct Pending;
    void activate_ready(double t_now);
    void process(Pending& p, const TimeLevelRing& ring, double t_now);
    void finalize(Pending& p, const TimeLevelRing& ring);

    ScenarioConfig cfg_;
    Grid2D grid_;
    double dt_ = 0.0;
    std::vector<double> schedule_;       // main slice times
    std::vector<Pending> pending_;       // main + midpoint, by s
    std::size_t next_activation_ = 0;
    std::vector<EnergyRecord> records_;
    std::vector<IdentityRow> identity_rows_;
    // midpoint bookkeeping: generalized E0 of main slices by schedule index
    std::vector<double> main_e0_;
    std::vector<bool> main_done_;
    std::vector<double> mid_rhs_;
    std::vector<bool> mid_done_;
};

// ---------------------------------------------------------------------------
// Radial profile monitor (m <= 1): scalar and vector reductions
//   E0:    ((r/t) w_t + w_r)^2 + ((s/t) w_t)^2          for w = phi
//   E1:    the same for w = d_t phi, plus the vector density
//          ((r/t) W_t + W_r)^2 + (dim-1)(W/r)^2 + ((s/t) W_t)^2
//          for W = phi_r and W = r phi_t + t phi_r,
// integrated with weight c_dim r^(dim-1) dr (c_2 = 2 pi, c_3 = 4 pi).
// ---------------------------------------------------------------------------

struct RadialEnergyRecord {
    double s = 0.0;
    double e0 = 0.0;
    double e1 = 0.0;
    double flat_energy_time = 0.0;
    double flat_energy = 0.0;
};

class RadialSliceMonitor {
  public:
    RadialSliceMonitor(const RadialConfig& cfg, double dt);
    ~RadialSliceMonitor();

    void observe(const TimeLevelRing& ring, const StepInfo& info);
    StepObserver observer();

    bool complete() const;
    const std::vector<RadialEnergyRecord>& records() const { return records_; }

  private:
    struct Pending;
    void process(Pending& p, const TimeLevelRing& ring, double t_now);

    RadialConfig cfg_;
    double dr_ = 0.0;
    double dt_ = 0.0;
    int points_ = 0;
    std::vector<Pending> pending_;
    std::vector<RadialEnergyRecord> records_;
};

double radial_flat_energy(const TimeLevel& level, const RadialConfig& cfg);

}  // namespace membrane
