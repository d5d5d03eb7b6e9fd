#pragma once

// Small dense double-precision matrices and a cyclic Jacobi eigensolver for
// symmetric matrices. Everything here is sized for feature-space work
// (hundreds of dimensions), not for large linear systems.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"

namespace sslbench {

struct Mat {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> a;  // row-major

    Mat() = default;
    Mat(std::int64_t r, std::int64_t c)
        : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {
        if (r < 0 || c < 0) throw UsageError("matrix extents must be non-negative");
    }

    double& operator()(std::int64_t r, std::int64_t c) {
        return a[static_cast<std::size_t>(r) * cols + c];
    }
    double operator()(std::int64_t r, std::int64_t c) const {
        return a[static_cast<std::size_t>(r) * cols + c];
    }

    static Mat identity(std::int64_t n) {
        Mat m(n, n);
        for (std::int64_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Mat matmul(const Mat& x, const Mat& y) {
    if (x.cols != y.rows) throw UsageError("matmul: inner extents disagree");
    Mat out(x.rows, y.cols);
    for (std::int64_t i = 0; i < x.rows; ++i) {
        for (std::int64_t k = 0; k < x.cols; ++k) {
            const double xv = x(i, k);
            if (xv == 0.0) continue;
            for (std::int64_t j = 0; j < y.cols; ++j) out(i, j) += xv * y(k, j);
        }
    }
    return out;
}

inline Mat transpose(const Mat& x) {
    Mat out(x.cols, x.rows);
    for (std::int64_t i = 0; i < x.rows; ++i) {
        for (std::int64_t j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
    }
    return out;
}

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Mat vectors;                 // column j pairs with values[j]
};

// Cyclic Jacobi rotations on a symmetric matrix. Eigenpairs come back sorted
// by descending eigenvalue; the accumulated rotation matrix is orthogonal to
// working precision.
inline SymmetricEigen jacobi_eigen(const Mat& input) {
    if (input.rows != input.cols) throw UsageError("jacobi_eigen: matrix must be square");
    const std::int64_t n = input.rows;
    if (n == 0) throw UsageError("jacobi_eigen: empty matrix");

    double scale = 0.0;
    for (double v : input.a) scale = std::max(scale, std::abs(v));
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i + 1; j < n; ++j) {
            if (std::abs(input(i, j) - input(j, i)) > 1e-8 * std::max(1.0, scale)) {
                throw UsageError("jacobi_eigen: matrix is not symmetric");
            }
        }
    }

    Mat A = input;
    // enforce exact symmetry so rotations stay consistent
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (A(i, j) + A(j, i));
            A(i, j) = m;
            A(j, i) = m;
        }
    }
    Mat V = Mat::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = i + 1; j < n; ++j) s += A(i, j) * A(i, j);
        }
        return std::sqrt(2.0 * s);
    };

    const double tol = 1e-14 * std::max(scale, std::numeric_limits<double>::min());
    const int max_sweeps = 100;
    int sweep = 0;
    for (; sweep < max_sweeps && off_norm() > tol; ++sweep) {
        for (std::int64_t p = 0; p < n - 1; ++p) {
            for (std::int64_t q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (std::abs(apq) <= tol / (2.0 * n)) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::int64_t k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (std::int64_t k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (std::int64_t k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps && off_norm() > tol) {
        throw NumericError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) +
                           " sweeps");
    }

    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::int64_t i, std::int64_t j) { return A(i, i) > A(j, j); });

    SymmetricEigen out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors = Mat(n, n);
    for (std::int64_t j = 0; j < n; ++j) {
        out.values[static_cast<std::size_t>(j)] = A(order[static_cast<std::size_t>(j)],
                                                    order[static_cast<std::size_t>(j)]);
        for (std::int64_t i = 0; i < n; ++i) {
            out.vectors(i, j) = V(i, order[static_cast<std::size_t>(j)]);
        }
    }
    return out;
}

}  // namespace sslbench
