#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "isound/errors.hpp"
#include "isound/matrix.hpp"

namespace isound {

// Eigendecomposition of a symmetric matrix. eigenvalues[i] pairs with
// eigenvectors.row(i); eigenvalues ascend.
struct EigenDecomposition {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
};

namespace jacobi_detail {

struct Rotation {
    std::size_t p, q;
    double c, s;
};

inline void rotate_rows(Matrix& m, const std::vector<Rotation>& rots) {
    for (const auto& r : rots) {
        double* rp = m.data.data() + r.p * m.cols;
        double* rq = m.data.data() + r.q * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double vp = rp[j], vq = rq[j];
            rp[j] = r.c * vp - r.s * vq;
            rq[j] = r.s * vp + r.c * vq;
        }
    }
}

inline void rotate_cols(Matrix& m, const std::vector<Rotation>& rots) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.data.data() + i * m.cols;
        for (const auto& r : rots) {
            const double vp = row[r.p], vq = row[r.q];
            row[r.p] = r.c * vp - r.s * vq;
            row[r.q] = r.s * vp + r.c * vq;
        }
    }
}

inline double offdiag_norm(const Matrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = i + 1; j < m.cols; ++j) s += m(i, j) * m(i, j);
    return std::sqrt(2.0 * s);
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data) s += v * v;
    return std::sqrt(s);
}

} // namespace jacobi_detail

// Cyclic Jacobi with a round-robin (tournament) pivot ordering. Each round
// holds n/2 disjoint pivot pairs whose rotations commute, so the row and
// column updates apply in two streaming passes over the matrix, which scales
// to the dense graph Laplacians this library diagonalizes (n ~ 10^3). Sweeps
// stop once the off-diagonal Frobenius norm drops below tol * ||A||_F.
inline EigenDecomposition jacobi_eigen(Matrix a, double tol, int max_sweeps = 60) {
    using namespace jacobi_detail;
    const std::size_t n = a.rows;
    if (n == 0 || a.cols != n) throw data_error("jacobi: matrix must be square and non-empty");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-12 * std::max(1.0, std::abs(a(i, j))))
                throw data_error("jacobi: matrix is not symmetric");
    if (!all_finite(a)) throw numeric_error("jacobi: non-finite input");

    Matrix vt = Matrix::identity(n);
    const double norm = frobenius_norm(a);
    const double target = tol * norm;

    if (n > 1 && norm > 0.0) {
        // Round-robin schedule: player 0 fixed, the rest rotate. Pads with a
        // bye when n is odd. One sweep = m-1 rounds covering every pair once.
        const std::size_t m = (n % 2 == 0) ? n : n + 1;
        std::vector<std::size_t> ring(m);
        std::iota(ring.begin(), ring.end(), 0);

        // Rotations this small cannot block convergence: if every remaining
        // pivot is below the per-element cutoff, the off-diagonal norm is
        // already under target.
        const double skip = target / (static_cast<double>(n) * 4.0);

        bool converged = false;
        std::vector<Rotation> active;
        for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
            if (offdiag_norm(a) <= target) {
                converged = true;
                break;
            }
            for (std::size_t round = 0; round + 1 < m; ++round) {
                active.clear();
                for (std::size_t i = 0; i < m / 2; ++i) {
                    std::size_t p = ring[i], q = ring[m - 1 - i];
                    if (p >= n || q >= n) continue; // bye
                    if (p > q) std::swap(p, q);
                    const double apq = a(p, q);
                    if (std::abs(apq) <= skip) continue;
                    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                    double t;
                    if (std::abs(theta) > 1e150) {
                        t = 1.0 / (2.0 * theta);
                    } else {
                        t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                        if (theta < 0.0) t = -t;
                    }
                    const double c = 1.0 / std::sqrt(t * t + 1.0);
                    active.push_back({p, q, c, t * c});
                }
                if (!active.empty()) {
                    rotate_rows(a, active);
                    rotate_cols(a, active);
                    rotate_rows(vt, active);
                    for (const auto& r : active) a(r.p, r.q) = a(r.q, r.p) = 0.0;
                }
                // advance the tournament ring (ring[0] stays put)
                const std::size_t last = ring[m - 1];
                for (std::size_t i = m - 1; i > 1; --i) ring[i] = ring[i - 1];
                ring[1] = last;
            }
        }
        if (!converged && offdiag_norm(a) > target)
            throw numeric_error("jacobi: no convergence after " + std::to_string(max_sweeps) +
                                " sweeps");
    }

    // Sort ascending; stable on ties so the output is reproducible.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.eigenvalues[i] = a(order[i], order[i]);
        const auto src = vt.row(order[i]);
        auto dst = out.eigenvectors.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

} // namespace isound
