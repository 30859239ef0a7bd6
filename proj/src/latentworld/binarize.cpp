#include "mccop/latentworld/binarize.hpp"

#include "mccop/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mccop {

std::vector<double> otsu_bin_edges(double lo, double hi) {
    std::vector<double> edges(kOtsuBins - 1);
    const double width = (hi - lo) / kOtsuBins;
    for (int k = 1; k < kOtsuBins; ++k) edges[static_cast<std::size_t>(k - 1)] = lo + k * width;
    return edges;
}

double otsu_threshold(std::span<const double> values) {
    if (values.size() < 2) throw DataError("otsu: need at least two values");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) throw DataError("otsu: all values identical, no valid split");

    const auto edges = otsu_bin_edges(lo, hi);
    std::array<double, kOtsuBins> count{};
    std::array<double, kOtsuBins> sum{};
    for (double v : values) {
        // bin = number of interior edges <= v, consistent with the v >= edge rule
        const auto bin = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
        count[bin] += 1.0;
        sum[bin] += v;
    }
    const double n = static_cast<double>(values.size());
    double total_sum = 0.0;
    for (double s : sum) total_sum += s;

    double best = -1.0;
    double threshold = edges.front();
    double c0 = 0.0, s0 = 0.0;
    for (int k = 1; k < kOtsuBins; ++k) {
        c0 += count[static_cast<std::size_t>(k - 1)];
        s0 += sum[static_cast<std::size_t>(k - 1)];
        const double c1 = n - c0;
        if (c0 == 0.0 || c1 == 0.0) continue;
        const double mu0 = s0 / c0;
        const double mu1 = (total_sum - s0) / c1;
        const double between = (c0 / n) * (c1 / n) * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            threshold = edges[static_cast<std::size_t>(k - 1)];
        }
    }
    return threshold;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw DataError("percentile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(i);
    return values[i] + frac * (values[i + 1] - values[i]);
}

TercileSplit binarize_middle_tercile(std::span<const double> values) {
    if (values.size() < 3) throw DataError("tercile: need at least three values");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    if (!(*hi_it > *lo_it)) throw DataError("tercile: all values identical");

    std::vector<double> v(values.begin(), values.end());
    TercileSplit out;
    out.low_cut = percentile(v, 1.0 / 3.0);
    out.high_cut = percentile(v, 2.0 / 3.0);
    out.labels.assign(values.size(), -1);
    out.keep.assign(values.size(), false);
    std::size_t zeros = 0, ones = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < out.low_cut) {
            out.labels[i] = 0;
            out.keep[i] = true;
            ++zeros;
        } else if (values[i] > out.high_cut) {
            out.labels[i] = 1;
            out.keep[i] = true;
            ++ones;
        }
    }
    if (zeros == 0 || ones == 0) throw DataError("tercile: ties leave one class empty");
    return out;
}

}  // namespace mccop
