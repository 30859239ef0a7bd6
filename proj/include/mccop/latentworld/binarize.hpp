#pragma once

#include <span>
#include <vector>

namespace mccop {

inline constexpr int kOtsuBins = 256;

/// Otsu threshold over a 256-bin equal-width histogram on [min, max]. The
/// candidates are the 255 interior bin edges; class statistics use the raw
/// values falling in each bin. Returns the first edge maximizing the
/// between-class variance w0 w1 (mu0 - mu1)^2. Values >= threshold form the
/// upper class. Throws DataError when all values are identical.
double otsu_threshold(std::span<const double> values);

/// Interior bin edges used by otsu_threshold, ascending.
std::vector<double> otsu_bin_edges(double lo, double hi);

struct TercileSplit {
    std::vector<int> labels;     // 0 / 1 for kept items, -1 for removed
    std::vector<bool> keep;
    double low_cut = 0.0;        // 33.3rd percentile (linear interpolation)
    double high_cut = 0.0;       // 66.7th percentile
};

/// Values strictly below the lower tercile cut are labeled 0, strictly above
/// the upper cut 1; everything else (including ties at a cut) is removed.
/// Throws DataError for fewer than 3 values, all-equal values, or an empty class.
TercileSplit binarize_middle_tercile(std::span<const double> values);

/// Linear-interpolation percentile (numpy's default), q in [0, 1].
double percentile(std::vector<double> values, double q);

}  // namespace mccop
