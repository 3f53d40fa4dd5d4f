#include <cstdlib>

#include "adahi/kernels.hpp"

#ifdef ADAHI_NO_AVX2
// Non-x86 build: the avx2 entry points forward to the scalar reference.
namespace adahi::kernels::detail::avx2 {
void l2sq_batch(const double* q, const double* e, std::size_t k, std::size_t d,
                double* out) {
    scalar::l2sq_batch(q, e, k, d, out);
}
double dot(const double* a, const double* b, std::size_t n) {
    return scalar::dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
    scalar::axpy(alpha, x, y, n);
}
void softmax_inplace(double* row, std::size_t k) { scalar::softmax_inplace(row, k); }
}  // namespace adahi::kernels::detail::avx2
#endif

namespace adahi::kernels {

namespace {

Isa detect_isa() {
    if (std::getenv("ADAHI_FORCE_SCALAR") != nullptr) return Isa::scalar;
#if defined(__x86_64__) || defined(__i386__)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return Isa::avx2;
    }
#endif
    return Isa::scalar;
}

Isa g_isa = detect_isa();

}  // namespace

Isa active_isa() { return g_isa; }

void force_isa(Isa isa) { g_isa = isa; }

std::string isa_name(Isa isa) {
    switch (isa) {
        case Isa::avx2: return "avx2";
        default: return "scalar";
    }
}

void l2sq_batch(const double* query, const double* entries, std::size_t k,
                std::size_t d, double* out) {
    if (g_isa == Isa::avx2) {
        detail::avx2::l2sq_batch(query, entries, k, d, out);
    } else {
        detail::scalar::l2sq_batch(query, entries, k, d, out);
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    return g_isa == Isa::avx2 ? detail::avx2::dot(a, b, n)
                              : detail::scalar::dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    if (g_isa == Isa::avx2) {
        detail::avx2::axpy(alpha, x, y, n);
    } else {
        detail::scalar::axpy(alpha, x, y, n);
    }
}

void softmax_inplace(double* row, std::size_t k) {
    if (g_isa == Isa::avx2) {
        detail::avx2::softmax_inplace(row, k);
    } else {
        detail::scalar::softmax_inplace(row, k);
    }
}

}  // namespace adahi::kernels
