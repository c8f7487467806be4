#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "membrane/hyperboloid.hpp"

namespace membrane {

// ---------------------------------------------------------------------------
// Cross-slice analysis: power-law fits, boundedness verdicts, equivalence
// ratios, and foliation contrast.  Everything here is a pure function of an
// immutable RunSeries with a fixed summation order, so identical series give
// bitwise-identical verdicts.
// ---------------------------------------------------------------------------

struct ResolutionMeta {
    double grid_spacing = 0.0;
    double dt = 0.0;
};

struct RunSeries {
    std::vector<EnergyRecord> records;  // strictly increasing in s
    int m_diag = 2;
    std::uint64_t scenario_hash = 0;
    ResolutionMeta resolution;
};

// Validates and packages monitor output; throws ConfigError on an empty or
// non-monotone record list or an out-of-range diagnostic order.
RunSeries make_series(std::vector<EnergyRecord> records, int m_diag,
                      std::uint64_t scenario_hash, ResolutionMeta resolution);

// ---------------------------------------------------------------------------
// Power-law fitting.  Observables below this floor carry no information at
// double precision, so fits touching it are declared inconclusive rather
// than fitted through noise.
// ---------------------------------------------------------------------------

inline constexpr double observable_floor = 1e-13;

struct PowerLawFit {
    double exponent = 0.0;
    double std_error = 0.0;  // of the slope; 0 for a two-point fit
    int points = 0;
    bool at_floor = false;  // some value was below observable_floor
};

// Least-squares slope of log y against log x.  Requires x positive and
// strictly increasing and at least two points (ConfigError otherwise).
PowerLawFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Verdicts.
//
// `claim` is a stable identifier, `anchor` is the mathematical statement the
// verdict tests, `statistic` is compared against `threshold`.  A verdict on
// a series too short to judge is inconclusive, which is distinct from fail.
// Sensitivity fields are populated by mark_resolution_sensitivity once a
// coarse-resolution twin of the same claim has been evaluated.
// ---------------------------------------------------------------------------

struct Verdict {
    std::string claim;
    std::string anchor;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    bool inconclusive = false;
    std::string notes;
    bool sensitivity_checked = false;
    bool resolution_sensitive = false;
};

// Boundedness thresholds: the ratio bound absorbs the discretization drift
// measured in linear-mode calibration runs, while the tail-slope window
// rejects s^0.2 growth over a decade of s.
inline constexpr double boundedness_ratio_bound = 1.2;
inline constexpr double tail_slope_min = -0.1;
inline constexpr double tail_slope_max = 0.05;
inline constexpr double boundedness_span_ratio = 5.0;

// Uniform-boundedness verdict for the order-m energy column:
//   statistic = max_s E_m(s) / E_m(s_first)   (threshold boundedness_ratio_bound)
// and the log-log slope over the last half of the s-range must lie within
// [tail_slope_min, tail_slope_max].  Inconclusive when the series spans less
// than boundedness_span_ratio in s or the tail has fewer than three slices.
Verdict boundedness_verdict(const RunSeries& series, int m);

// Log-log slope of the order-m energy column over the last half of the
// s-range; exposed because the acceptance gate also fits energy tails.
PowerLawFit energy_tail_fit(const RunSeries& series, int m);

// ---------------------------------------------------------------------------
// Decay-rate fits of the weighted sup-norm observables.
// ---------------------------------------------------------------------------

enum class ObservableKind {
    GradientSup,     // sup |s d_alpha Z^J phi|
    TangentSup,      // sup |t D_a Z^J phi|
    MixedSecondSup,  // sup |t s D_a D_beta Z^J phi|
    TimeSecondSup,   // sup |(s^3/t) d_t d_t Z^J phi|
};

struct ObservableId {
    ObservableKind kind = ObservableKind::GradientSup;
    int order = 0;  // commuted word order |J|
};

// The record's stored value for one observable; ConfigError when the record
// does not carry that order.
double observable_value(const DecayObservables& obs, ObservableId id);

struct DecayFit {
    ObservableId id;
    double exponent = 0.0;
    double std_error = 0.0;
    int points = 0;
    bool inconclusive = false;
    std::string reason;  // set when inconclusive
};

// Least-squares exponent of one observable against s.  The observables are
// pre-weighted, so conforming decay shows as an exponent near zero.  The
// first 10% of the s-range is excluded (initial-layer transients); fewer
// than eight slices or any value below observable_floor is inconclusive.
DecayFit decay_fit(const RunSeries& series, ObservableId id);

// ---------------------------------------------------------------------------
// Energy equivalence and foliation contrast.
// ---------------------------------------------------------------------------

struct EquivalenceReport {
    double max_deviation = 0.0;  // max_s |generalized/energy - 1|
    double s_at_max = 0.0;
    int order = 0;
};

// Largest deviation of the coefficient-corrected energy from the plain one
// over the series, at order m (default: the series' diagnostic order).
// Records with zero energy store ratio 1, so the zero field deviates by 0.
EquivalenceReport equivalence_ratio(const RunSeries& series, int m = -1);

struct FoliationContrast {
    double hyperboloidal_slope = 0.0;  // log E_m(s)   vs log s
    double constant_time_slope = 0.0;  // log E_flat(t) vs log t
    bool inconclusive = false;
};

// Growth contrast between the hyperboloidal energy and the constant-time
// comparison column of the same run.  Reported as-is, no pass/fail: the
// observation is the contrast between foliations.
FoliationContrast foliation_comparison(const RunSeries& series, int m);

// ---------------------------------------------------------------------------
// Resolution sensitivity and serialization.
// ---------------------------------------------------------------------------

// Stamps the fine verdict with the coarse twin's outcome; the verdicts must
// carry the same claim (ConfigError otherwise).  A pass/fail or
// inconclusiveness disagreement marks the fine verdict resolution-sensitive.
Verdict mark_resolution_sensitivity(Verdict fine, const Verdict& coarse);

// JSON object {claim, anchor, statistic, threshold, pass, sensitivity,
// inconclusive, notes}; sensitivity is null until checked.
std::string verdict_json(const Verdict& verdict);

// JSON array of the above, pretty-printed; the report command consumes it.
std::string verdict_bundle_json(const std::vector<Verdict>& verdicts);

}  // namespace membrane
