#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "isound/errors.hpp"
#include "isound/matrix.hpp"

namespace isound {

// Mean silhouette score: per point, (b - a) / max(a, b) where a is the mean
// distance to the rest of its own cluster and b the smallest mean distance to
// another cluster. Points in singleton clusters contribute 0.
inline double silhouette(const Matrix& x, std::span<const int> labels) {
    const std::size_t n = x.rows;
    if (labels.size() != n) throw data_error("silhouette: labels not row-aligned");
    if (n < 3) throw data_error("silhouette: need at least 3 points");

    int k = 0;
    for (int l : labels) {
        if (l < 0) throw data_error("silhouette: negative label");
        k = std::max(k, l + 1);
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    int present = 0;
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] > 0) ++present;
    if (present < 2) throw data_error("silhouette: needs at least 2 clusters");

    double total = 0.0;
    std::vector<double> sums(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(labels[i]);
        if (counts[own] == 1) continue; // singleton scores 0
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sums[static_cast<std::size_t>(labels[j])] += euclidean_distance(x.row(i), x.row(j));
        }
        const double a = sums[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < sums.size(); ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, sums[c] / static_cast<double>(counts[c]));
        }
        const double m = std::max(a, b);
        if (m > 0.0) total += (b - a) / m;
    }
    return total / static_cast<double>(n);
}

} // namespace isound
