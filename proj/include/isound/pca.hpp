#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isound/errors.hpp"
#include "isound/features.hpp"
#include "isound/jacobi.hpp"
#include "isound/matrix.hpp"

namespace isound {

// Principal components of a feature matrix. components.row(i) pairs with
// eigenvalues[i] (descending). Ratios are taken against the total variance of
// the full eigenvalue spectrum, so they keep summing to 1 when every
// component is retained and stay comparable when fewer are.
struct PcaModel {
    std::vector<double> mean;
    Matrix components;
    std::vector<double> eigenvalues;
    std::vector<double> explained_variance_ratio;
    std::size_t input_dim = 0;
};

inline constexpr double kPcaJacobiTol = 1e-12;

// Fits on rows of x (callers pass the standardized matrix). Covariance uses
// 1/(N-1); rank-deficient input caps the retained components at the rank.
// Sign convention: the largest-magnitude entry of each component is positive,
// which makes the fit deterministic down to the bit.
inline PcaModel fit_pca(const Matrix& x, std::size_t n_components) {
    const std::size_t n = x.rows, d = x.cols;
    if (n < 2) throw data_error("pca: need at least 2 rows");
    if (n_components < 1 || n_components > d)
        throw data_error("pca: n_components out of range [1, " + std::to_string(d) + "]");
    if (!all_finite(x)) throw numeric_error("pca: non-finite input");

    PcaModel model;
    model.input_dim = d;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += x(i, j);
    for (double& m : model.mean) m /= static_cast<double>(n);

    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < d; ++a) {
            const double da = x(i, a) - model.mean[a];
            for (std::size_t b = a; b < d; ++b)
                cov(a, b) += da * (x(i, b) - model.mean[b]);
        }
    }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) /= static_cast<double>(n - 1);
            cov(b, a) = cov(a, b);
        }

    EigenDecomposition eig = jacobi_eigen(std::move(cov), kPcaJacobiTol);

    // descending order, tiny negatives clamped
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    std::vector<double> lambdas(d);
    for (std::size_t i = 0; i < d; ++i) lambdas[i] = std::max(0.0, eig.eigenvalues[order[i]]);

    const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
    if (total <= 0.0) throw data_error("pca: input has zero variance");
    std::size_t rank = 0;
    for (double l : lambdas)
        if (l > lambdas.front() * 1e-12) ++rank;
    const std::size_t keep = std::min(n_components, std::max<std::size_t>(rank, 1));

    model.eigenvalues.assign(lambdas.begin(), lambdas.begin() + keep);
    model.explained_variance_ratio.resize(keep);
    for (std::size_t i = 0; i < keep; ++i) model.explained_variance_ratio[i] = lambdas[i] / total;

    model.components = Matrix(keep, d);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto src = eig.eigenvectors.row(order[i]);
        auto dst = model.components.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(dst[j]) > std::abs(dst[arg])) arg = j;
        if (dst[arg] < 0.0)
            for (double& v : dst) v = -v;
    }
    return model;
}

// Projects rows onto the retained components: scores = (x - mean) C^T.
inline Matrix pca_transform(const PcaModel& model, const Matrix& x) {
    if (x.cols != model.input_dim) throw data_error("pca: dimension mismatch in transform");
    Matrix scores(x.rows, model.components.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t c = 0; c < model.components.rows; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.cols; ++j)
                s += (x(i, j) - model.mean[j]) * model.components(c, j);
            scores(i, c) = s;
        }
    return scores;
}

inline Matrix pca_inverse_transform(const PcaModel& model, const Matrix& scores) {
    if (scores.cols != model.components.rows)
        throw data_error("pca: dimension mismatch in inverse transform");
    Matrix x(scores.rows, model.input_dim);
    for (std::size_t i = 0; i < scores.rows; ++i)
        for (std::size_t j = 0; j < model.input_dim; ++j) {
            double v = model.mean[j];
            for (std::size_t c = 0; c < scores.cols; ++c)
                v += scores(i, c) * model.components(c, j);
            x(i, j) = v;
        }
    return x;
}

// Equal-weight sum of the first three score columns: one defect predictor per
// row out of three combined ones.
inline std::vector<double> combine_components(const Matrix& scores) {
    if (scores.cols != 3) throw data_error("pca: combine_components expects exactly 3 columns");
    std::vector<double> out(scores.rows);
    for (std::size_t i = 0; i < scores.rows; ++i)
        out[i] = scores(i, 0) + scores(i, 1) + scores(i, 2);
    return out;
}

// PCA as a filter: the score matrix becomes the reduced feature matrix fed to
// clustering.
inline FeatureMatrix pca_filter(const FeatureMatrix& m, std::size_t n_components) {
    const PcaModel model = fit_pca(m.values, n_components);
    FeatureMatrix out;
    out.ids = m.ids;
    out.positions = m.positions;
    out.values = pca_transform(model, m.values);
    out.column_names.resize(out.values.cols);
    for (std::size_t c = 0; c < out.values.cols; ++c)
        out.column_names[c] = "C" + std::to_string(c + 1);
    return out;
}

inline nlohmann::json pca_model_to_json(const PcaModel& model) {
    nlohmann::json j;
    j["input_dim"] = model.input_dim;
    j["mean"] = model.mean;
    j["eigenvalues"] = model.eigenvalues;
    j["explained_variance_ratio"] = model.explained_variance_ratio;
    auto comps = nlohmann::json::array();
    for (std::size_t i = 0; i < model.components.rows; ++i) {
        const auto row = model.components.row(i);
        comps.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["components"] = comps;
    return j;
}

inline PcaModel pca_model_from_json(const nlohmann::json& j) {
    PcaModel model;
    model.input_dim = j.at("input_dim").get<std::size_t>();
    model.mean = j.at("mean").get<std::vector<double>>();
    model.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    model.explained_variance_ratio = j.at("explained_variance_ratio").get<std::vector<double>>();
    const auto& comps = j.at("components");
    model.components = Matrix(comps.size(), model.input_dim);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto row = comps[i].get<std::vector<double>>();
        if (row.size() != model.input_dim) throw data_error("pca json: ragged components");
        std::copy(row.begin(), row.end(), model.components.row(i).begin());
    }
    return model;
}

} // namespace isound
