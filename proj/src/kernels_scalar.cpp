#include <algorithm>
#include <cmath>

#include "adahi/kernels.hpp"

namespace adahi::kernels::detail::scalar {

void l2sq_batch(const double* query, const double* entries, std::size_t k,
                std::size_t d, double* out) {
    for (std::size_t i = 0; i < k; ++i) {
        const double* row = entries + i * d;
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double diff = query[j] - row[j];
            acc += diff * diff;
        }
        out[i] = acc;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void softmax_inplace(double* row, std::size_t k) {
    double m = row[0];
    for (std::size_t i = 1; i < k; ++i) m = std::max(m, row[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        row[i] = std::exp(row[i] - m);
        sum += row[i];
    }
    double inv = 1.0 / sum;
    for (std::size_t i = 0; i < k; ++i) row[i] *= inv;
}

}  // namespace adahi::kernels::detail::scalar
