#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "isound/csv.hpp"
#include "isound/errors.hpp"
#include "isound/features.hpp"
#include "isound/jacobi.hpp"
#include "isound/kmeans.hpp"
#include "isound/matrix.hpp"
#include "isound/pca.hpp"
#include "isound/silhouette.hpp"

namespace isound {

// Gaussian affinity W_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)), unit diagonal.
struct Affinity {
    Matrix matrix;
    double sigma = 0.0;
};

inline double median_positive_pairwise_distance(const Matrix& x) {
    std::vector<double> dists;
    dists.reserve(x.rows * (x.rows - 1) / 2);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = i + 1; j < x.rows; ++j) {
            const double d = euclidean_distance(x.row(i), x.row(j));
            if (d > 0.0) dists.push_back(d);
        }
    if (dists.empty())
        throw data_error("spectral: all points identical (affinity scale undefined)");
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    return m % 2 == 1 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
}

inline Affinity gaussian_affinity(const Matrix& x, double sigma) {
    if (sigma <= 0.0) throw data_error("spectral: sigma must be positive");
    Affinity a;
    a.sigma = sigma;
    a.matrix = Matrix(x.rows, x.rows);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < x.rows; ++i) {
        a.matrix(i, i) = 1.0;
        for (std::size_t j = i + 1; j < x.rows; ++j) {
            const double w = std::exp(-squared_distance(x.row(i), x.row(j)) * inv);
            a.matrix(i, j) = w;
            a.matrix(j, i) = w;
        }
    }
    return a;
}

struct SpectralOptions {
    std::optional<double> sigma; // default: median positive pairwise distance
    KmeansOptions kmeans;
    double jacobi_tol = 1e-10;
};

// Full eigensystem of the symmetric normalized Laplacian
// L = I - D^(-1/2) W D^(-1/2); eigenvalues ascend. Computing it once serves
// every cluster count k, which only selects how many leading eigenvectors
// make up the embedding.
struct SpectralEmbedding {
    EigenDecomposition eigen;
    double sigma = 0.0;
};

inline SpectralEmbedding spectral_embedding(const Matrix& x, const SpectralOptions& opt = {}) {
    const std::size_t n = x.rows;
    if (n < 2) throw data_error("spectral: need at least 2 points");
    const double sigma = opt.sigma ? *opt.sigma : median_positive_pairwise_distance(x);
    Affinity aff = gaussian_affinity(x, sigma);

    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += aff.matrix(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg); // deg >= W_ii = 1
    }
    Matrix lap(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        lap(i, i) = 1.0 - aff.matrix(i, i) * inv_sqrt_deg[i] * inv_sqrt_deg[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = -aff.matrix(i, j) * inv_sqrt_deg[i] * inv_sqrt_deg[j];
            lap(i, j) = v;
            lap(j, i) = v;
        }
    }

    SpectralEmbedding emb;
    emb.sigma = sigma;
    emb.eigen = jacobi_eigen(std::move(lap), opt.jacobi_tol);
    return emb;
}

// Embeds each point with the k eigenvectors of smallest eigenvalue,
// row-normalizes to the unit sphere (zero rows pass through) and k-means the
// embedding. The reported silhouette is evaluated in the original feature
// space so scores stay comparable across methods.
inline ClusterModel spectral_cluster_from(const SpectralEmbedding& emb, const Matrix& x, int k,
                                          std::uint64_t seed, const SpectralOptions& opt = {}) {
    const std::size_t n = x.rows;
    if (k < 2 || static_cast<std::size_t>(k) > n)
        throw data_error("spectral: k out of range [2, n]");

    Matrix u(n, static_cast<std::size_t>(k));
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
        const auto vec = emb.eigen.eigenvectors.row(c);
        for (std::size_t i = 0; i < n; ++i) u(i, c) = vec[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto row = u.row(i);
        double norm = 0.0;
        for (double v : row) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (double& v : row) v /= norm;
    }

    ClusterModel model = kmeans(u, k, seed, opt.kmeans);
    model.method = ClusterMethod::spectral;
    model.silhouette = n >= 3 ? silhouette(x, model.labels) : 0.0;
    return model;
}

inline ClusterModel spectral_cluster(const Matrix& x, int k, std::uint64_t seed,
                                     const SpectralOptions& opt = {}) {
    return spectral_cluster_from(spectral_embedding(x, opt), x, k, seed, opt);
}

// ---------------------------------------------------------------------------
// Method comparison over the standard input variants.

enum class ClusterInput { features, pca3, enhanced };

inline const char* to_string(ClusterInput in) {
    switch (in) {
        case ClusterInput::features: return "X";
        case ClusterInput::pca3: return "PCA(X,3)";
        case ClusterInput::enhanced: return "X_enh";
    }
    return "?";
}

struct ClusterRunConfig {
    ClusterInput input = ClusterInput::features;
    ClusterMethod method = ClusterMethod::kmeans;
    int k = 2;
};

// The shipped comparison grid: per cluster count, k-means on X, PCA(X,3) and
// X_enh plus spectral clustering on the unmodified features X.
inline std::vector<ClusterRunConfig> default_comparison_grid(std::span<const int> k_values) {
    std::vector<ClusterRunConfig> grid;
    for (int k : k_values) {
        grid.push_back({ClusterInput::features, ClusterMethod::kmeans, k});
        grid.push_back({ClusterInput::pca3, ClusterMethod::kmeans, k});
        grid.push_back({ClusterInput::enhanced, ClusterMethod::kmeans, k});
        grid.push_back({ClusterInput::features, ClusterMethod::spectral, k});
    }
    return grid;
}

struct ComparisonEntry {
    std::string input;
    std::string method;
    int k = 0;
    double silhouette = 0.0;
    ClusterModel model;
};

// Builds each input representation from the raw feature matrix (z-scored
// features, their 3-component PCA reduction, z-scored enhanced features),
// runs every requested clustering and records its silhouette.
inline std::vector<ComparisonEntry> compare_clusterings(const FeatureMatrix& raw,
                                                        std::span<const ClusterRunConfig> configs,
                                                        std::uint64_t seed,
                                                        const SpectralOptions& spectral_opt = {},
                                                        const KmeansOptions& kmeans_opt = {}) {
    if (raw.values.rows < 2) throw data_error("compare: need at least 2 rows");

    const Matrix x = standardize(raw).matrix.values;
    std::optional<Matrix> pca3;
    std::optional<Matrix> enhanced;
    std::optional<SpectralEmbedding> embedding;

    auto input_matrix = [&](ClusterInput in) -> const Matrix& {
        switch (in) {
            case ClusterInput::features: return x;
            case ClusterInput::pca3:
                if (!pca3) {
                    FeatureMatrix tmp;
                    tmp.ids = raw.ids;
                    tmp.positions = raw.positions;
                    tmp.column_names = raw.column_names;
                    tmp.values = x;
                    pca3 = pca_filter(tmp, std::min<std::size_t>(3, x.cols)).values;
                }
                return *pca3;
            case ClusterInput::enhanced:
                if (!enhanced) enhanced = standardize(enhance(raw)).matrix.values;
                return *enhanced;
        }
        throw data_error("compare: unknown input");
    };

    std::vector<ComparisonEntry> out;
    out.reserve(configs.size());
    for (const auto& cfg : configs) {
        const Matrix& input = input_matrix(cfg.input);
        ClusterModel model;
        if (cfg.method == ClusterMethod::kmeans) {
            model = kmeans(input, cfg.k, seed, kmeans_opt);
        } else {
            if (!embedding) embedding = spectral_embedding(input, spectral_opt);
            model = spectral_cluster_from(*embedding, input, cfg.k, seed, spectral_opt);
        }
        ComparisonEntry entry;
        entry.input = to_string(cfg.input);
        entry.method = to_string(cfg.method);
        entry.k = cfg.k;
        entry.silhouette = model.silhouette;
        entry.model = std::move(model);
        out.push_back(std::move(entry));
    }
    return out;
}

inline nlohmann::json comparison_to_json(std::span<const ComparisonEntry> entries) {
    auto arr = nlohmann::json::array();
    for (const auto& e : entries)
        arr.push_back({{"input", e.input},
                       {"method", e.method},
                       {"k", e.k},
                       {"silhouette", e.silhouette}});
    return arr;
}

// ---------------------------------------------------------------------------
// Label table I/O: `id,x_cm,y_cm,label`.

inline void write_labels_csv(std::ostream& out, std::span<const std::string> ids,
                             std::span<const Position> positions, std::span<const int> labels) {
    out << "id,x_cm,y_cm,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << ids[i] << ',' << format_double(positions[i].x_cm) << ','
            << format_double(positions[i].y_cm) << ',' << labels[i] << '\n';
}

struct LabelTable {
    std::vector<std::string> ids;
    std::vector<Position> positions;
    std::vector<int> labels;
};

inline LabelTable read_labels_csv(std::istream& in) {
    std::string line;
    if (!read_csv_line(in, line) || line != "id,x_cm,y_cm,label")
        throw data_error("labels csv: bad header (expected 'id,x_cm,y_cm,label')");
    LabelTable t;
    std::size_t row = 1;
    while (read_csv_line(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        const std::string where = "labels csv row " + std::to_string(row);
        if (fields.size() != 4) throw data_error(where + ": expected 4 fields");
        t.ids.push_back(fields[0]);
        t.positions.push_back({parse_double(fields[1], where + " x_cm"),
                               parse_double(fields[2], where + " y_cm")});
        t.labels.push_back(static_cast<int>(parse_long(fields[3], where + " label")));
    }
    return t;
}

} // namespace isound
