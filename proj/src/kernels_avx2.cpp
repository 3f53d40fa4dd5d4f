#include <immintrin.h>

#include <cmath>

#include "adahi/kernels.hpp"

namespace adahi::kernels::detail::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, shuf));
}

}  // namespace

void l2sq_batch(const double* query, const double* entries, std::size_t k,
                std::size_t d, double* out) {
    for (std::size_t i = 0; i < k; ++i) {
        const double* row = entries + i * d;
        __m256d acc = _mm256_setzero_pd();
        std::size_t j = 0;
        for (; j + 4 <= d; j += 4) {
            __m256d q = _mm256_loadu_pd(query + j);
            __m256d e = _mm256_loadu_pd(row + j);
            __m256d diff = _mm256_sub_pd(q, e);
            acc = _mm256_fmadd_pd(diff, diff, acc);
        }
        double tail = 0.0;
        for (; j < d; ++j) {
            double diff = query[j] - row[j];
            tail += diff * diff;
        }
        out[i] = hsum(acc) + tail;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return hsum(acc) + tail;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void softmax_inplace(double* row, std::size_t k) {
    // Vectorized max reduction and rescale; exp itself stays scalar so the
    // result matches the reference kernel bit-for-bit.
    double m;
    if (k >= 4) {
        __m256d vm = _mm256_loadu_pd(row);
        std::size_t i = 4;
        for (; i + 4 <= k; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(row + i));
        m = hmax(vm);
        for (; i < k; ++i) m = std::max(m, row[i]);
    } else {
        m = row[0];
        for (std::size_t i = 1; i < k; ++i) m = std::max(m, row[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        row[i] = std::exp(row[i] - m);
        sum += row[i];
    }
    __m256d inv = _mm256_set1_pd(1.0 / sum);
    std::size_t i = 0;
    for (; i + 4 <= k; i += 4) {
        _mm256_storeu_pd(row + i, _mm256_mul_pd(_mm256_loadu_pd(row + i), inv));
    }
    for (; i < k; ++i) row[i] *= 1.0 / sum;
}

}  // namespace adahi::kernels::detail::avx2
