#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "adahi/errors.hpp"
#include "adahi/kernels.hpp"

namespace adahi {

using Vec = std::vector<double>;

// Dense row-major matrix, sized for the small systems used here
// (action/latent dimensions in the single digits).
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Vec matvec(const Mat& m, std::span<const double> x) {
    if (x.size() != m.cols) throw ContractError("matvec: dimension mismatch");
    Vec y(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        y[i] = kernels::dot(m.a.data() + i * m.cols, x.data(), m.cols);
    }
    return y;
}

inline double norm2(std::span<const double> v) {
    return std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
}

inline Vec sub(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("sub: dimension mismatch");
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Vec add(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("add: dimension mismatch");
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Vec scaled(std::span<const double> a, double s) {
    Vec out(a.begin(), a.end());
    for (auto& v : out) v *= s;
    return out;
}

// Solves M x = b in place via Gaussian elimination with partial pivoting.
// Throws if M is numerically singular.
Vec solve(Mat m, Vec b);

// A^T applied to x (A row-major rows x cols, x of length rows).
inline Vec matvec_t(const Mat& m, std::span<const double> x) {
    if (x.size() != m.rows) throw ContractError("matvec_t: dimension mismatch");
    Vec y(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        kernels::axpy(x[i], m.a.data() + i * m.cols, y.data(), m.cols);
    }
    return y;
}

}  // namespace adahi
