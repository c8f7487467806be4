#pragma once

#include <filesystem>
#include <iosfwd>

namespace membrane::report {

// Reads a run bundle and writes <dir>/report/: a human-readable summary, a
// machine-readable report.json, and gnuplot scripts for the energy history,
// the decay observables, and the identity residuals.  Throws IoError when
// the bundle is unreadable (missing energy.csv included).
int cmd_report(const std::filesystem::path& bundle_dir, std::ostream& out);

// Side-by-side table of two bundles of the same scenario at different
// resolutions: boundedness statistics with resolution-sensitivity marks and
// the foliation contrast of each run.
int cmd_compare(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b,
                std::ostream& out);

}  // namespace membrane::report
