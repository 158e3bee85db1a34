#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "isound/errors.hpp"
#include "isound/matrix.hpp"
#include "isound/rng.hpp"
#include "isound/silhouette.hpp"

namespace isound {

enum class ClusterMethod { kmeans, spectral };

inline const char* to_string(ClusterMethod m) {
    return m == ClusterMethod::kmeans ? "kmeans" : "spectral";
}

struct ClusterModel {
    int k = 0;
    Matrix centroids;         // k x d; for the spectral method these live in embedding space
    std::vector<int> labels;  // one label in [0, k) per row
    double inertia = 0.0;
    double silhouette = 0.0;
    std::uint64_t seed = 0;
    ClusterMethod method = ClusterMethod::kmeans;
    std::vector<double> inertia_history; // objective after each assignment, best restart
};

struct KmeansOptions {
    int n_init = 10;
    int max_iter = 300;
};

// Mean-squared-error objective of a labeling, with centroids recomputed as
// cluster means. Fixed accumulation order (row order) so independent callers
// get bit-identical values for identical partitions.
inline double labeling_inertia(const Matrix& x, std::span<const int> labels, int k) {
    const std::size_t n = x.rows, d = x.cols;
    Matrix centroids(static_cast<std::size_t>(k), d);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        auto c = centroids.row(static_cast<std::size_t>(labels[i]));
        for (std::size_t j = 0; j < d; ++j) c[j] += row[j];
        ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) continue;
        auto row = centroids.row(static_cast<std::size_t>(c));
        for (std::size_t j = 0; j < d; ++j)
            row[j] /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        total += squared_distance(x.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
    return total;
}

namespace kmeans_detail {

// D^2-weighted greedy seeding: each step samples a few candidates in
// proportion to the squared distance to the nearest chosen center and keeps
// the one that lowers the potential most. Every random draw comes from a
// stream derived from (seed, restart), so restarts are independent yet
// reproducible.
inline Matrix seed_centroids(const Matrix& x, int k, Rng& rng) {
    const std::size_t n = x.rows, d = x.cols;
    Matrix centroids(static_cast<std::size_t>(k), d);
    std::vector<bool> chosen(n, false);

    std::size_t first = rng.index(n);
    chosen[first] = true;
    std::copy(x.row(first).begin(), x.row(first).end(), centroids.row(0).begin());

    const int candidates = 2 + static_cast<int>(std::log(static_cast<double>(k)));
    std::vector<double> d2(n), trial_d2(n), best_d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), x.row(first));

    for (int c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            double best_potential = std::numeric_limits<double>::infinity();
            for (int t = 0; t < candidates; ++t) {
                const double target = rng.uniform() * total;
                std::size_t cand = n;
                double cum = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    cum += d2[i];
                    if (cum > target) {
                        cand = i;
                        break;
                    }
                }
                if (cand == n) { // fp slack: take the last point with mass
                    for (std::size_t i = n; i-- > 0;)
                        if (d2[i] > 0.0) {
                            cand = i;
                            break;
                        }
                }
                double potential = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    trial_d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(cand)));
                    potential += trial_d2[i];
                }
                if (potential < best_potential) {
                    best_potential = potential;
                    best_d2 = trial_d2;
                    pick = cand;
                }
            }
        }
        if (pick == n) { // fewer distinct points than k: lowest unchosen index
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            for (std::size_t i = 0; i < n; ++i)
                best_d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(pick)));
        }
        chosen[pick] = true;
        d2 = best_d2;
        std::copy(x.row(pick).begin(), x.row(pick).end(),
                  centroids.row(static_cast<std::size_t>(c)).begin());
    }
    return centroids;
}

// Nearest-centroid assignment; ties go to the lowest centroid index. Returns
// the objective under the given centroids.
inline double assign(const Matrix& x, const Matrix& centroids, std::vector<int>& labels) {
    const std::size_t n = x.rows;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        int best = 0;
        double best_d = squared_distance(row, centroids.row(0));
        for (std::size_t c = 1; c < centroids.rows; ++c) {
            const double d = squared_distance(row, centroids.row(c));
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[i] = best;
        total += best_d;
    }
    return total;
}

inline void update_centroids(const Matrix& x, std::span<const int> labels, Matrix& centroids,
                             std::vector<std::size_t>& counts) {
    std::fill(centroids.data.begin(), centroids.data.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        auto c = centroids.row(static_cast<std::size_t>(labels[i]));
        const auto row = x.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) c[j] += row[j];
        ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (std::size_t c = 0; c < centroids.rows; ++c) {
        if (counts[c] == 0) continue;
        auto row = centroids.row(c);
        for (std::size_t j = 0; j < x.cols; ++j) row[j] /= static_cast<double>(counts[c]);
    }
}

// An empty cluster seizes the point farthest from its own centroid (among
// clusters that can spare one); the donor clusters' means are then refreshed.
inline void repair_empty(const Matrix& x, std::vector<int>& labels, Matrix& centroids,
                         std::vector<std::size_t>& counts) {
    for (std::size_t c = 0; c < centroids.rows; ++c) {
        if (counts[c] != 0) continue;
        std::size_t worst = x.rows;
        double worst_d = -1.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const auto lab = static_cast<std::size_t>(labels[i]);
            if (counts[lab] <= 1) continue;
            const double d = squared_distance(x.row(i), centroids.row(lab));
            if (d > worst_d) {
                worst_d = d;
                worst = i;
            }
        }
        if (worst == x.rows) throw numeric_error("kmeans: cannot repair empty cluster");
        --counts[static_cast<std::size_t>(labels[worst])];
        labels[worst] = static_cast<int>(c);
        ++counts[c];
        update_centroids(x, labels, centroids, counts);
    }
}

} // namespace kmeans_detail

// Lloyd iterations from D^2-weighted starts, best of n_init restarts by final
// objective. Assignment ties break to the lowest centroid index and the loop
// stops when labels repeat, so identical (x, k, seed) give identical models.
inline ClusterModel kmeans(const Matrix& x, int k, std::uint64_t seed,
                           const KmeansOptions& opt = {}) {
    using namespace kmeans_detail;
    const std::size_t n = x.rows;
    if (k < 2) throw data_error("kmeans: k must be at least 2");
    if (static_cast<std::size_t>(k) > n)
        throw data_error("kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(n) +
                         " points");
    if (!all_finite(x)) throw data_error("kmeans: non-finite input");

    ClusterModel best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < opt.n_init; ++restart) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(restart)));
        Matrix centroids = seed_centroids(x, k, rng);
        std::vector<int> labels(n, 0), next(n, 0);
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        std::vector<double> history;

        history.push_back(assign(x, centroids, labels));
        for (int iter = 0; iter < opt.max_iter; ++iter) {
            update_centroids(x, labels, centroids, counts);
            repair_empty(x, labels, centroids, counts);
            const double obj = assign(x, centroids, next);
            history.push_back(obj);
            if (next == labels) break;
            labels.swap(next);
        }

        const double final_inertia = labeling_inertia(x, labels, k);
        if (final_inertia < best.inertia) {
            best.k = k;
            best.labels = std::move(labels);
            best.inertia = final_inertia;
            best.inertia_history = std::move(history);
            update_centroids(x, best.labels, centroids, counts);
            best.centroids = std::move(centroids);
        }
    }
    best.seed = seed;
    best.method = ClusterMethod::kmeans;
    best.silhouette = n >= 3 ? silhouette(x, best.labels) : 0.0;
    return best;
}

} // namespace isound
