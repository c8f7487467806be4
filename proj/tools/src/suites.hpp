#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace membrane::suites {

// ---------------------------------------------------------------------------
// Self-contained verification suites: each runs a fixed deterministic corpus
// and reports measured quantities against their gates.  Shared between the
// `verify` subcommand and the acceptance runner.
// ---------------------------------------------------------------------------

enum class Gate { AtMost, AtLeast };

struct CheckRow {
    std::string quantity;
    double value = 0.0;
    double threshold = 0.0;
    Gate gate = Gate::AtMost;

    bool pass() const { return gate == Gate::AtMost ? value <= threshold : value >= threshold; }
};

struct SuiteReport {
    std::string name;
    std::vector<CheckRow> rows;

    bool pass() const;
    double worst_margin() const;  // min over rows of threshold-relative slack
};

// Frame transition matrices: phi * psi vs identity, the frame commutator
// identity on the analytic corpus, and the flat-metric frame display at
// random cone points.
SuiteReport frames_suite();

// Cubic-interaction identity: frame route vs Cartesian route over the
// analytic corpus, `points_per_field` cone points each (bulk and a
// near-boundary band), measured relative to the term-magnitude scale.
SuiteReport nullform_suite(int points_per_field = 10000);

// Metric decay validator: the conforming constant-amplitude family must pass
// its gate, and a family decaying slower than claimed must be flagged with a
// per-slice ratio trend diverging at least like s^0.4.
SuiteReport metric_suite();

// Manufactured-solution convergence in all three evolution modes at grids
// n, 2n-1, 4n-3 per axis; gates the measured order of both refinement pairs.
SuiteReport mms_suite(int n_base = 129);

// Fixed-width table of rows, one status line per row, then a suite verdict.
void print_report(const SuiteReport& report, std::ostream& out);

}  // namespace membrane::suites
