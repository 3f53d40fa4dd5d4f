#pragma once

#include <cstddef>
#include <string>

namespace adahi::kernels {

enum class Isa { scalar, avx2 };

// ISA selected at startup from CPUID; force_isa overrides it (used by the
// equivalence tests and the ADAHI_FORCE_SCALAR env var).
Isa active_isa();
void force_isa(Isa isa);
std::string isa_name(Isa isa);

// Squared L2 distance from query to each of the k rows of entries
// (k x d, row-major).
void l2sq_batch(const double* query, const double* entries, std::size_t k,
                std::size_t d, double* out);

double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Row-wise stabilized softmax, in place.
void softmax_inplace(double* row, std::size_t k);

namespace detail {
// Scalar reference kernels; the AVX2 variants are equivalence-tested
// against these.
namespace scalar {
void l2sq_batch(const double* query, const double* entries, std::size_t k,
                std::size_t d, double* out);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void softmax_inplace(double* row, std::size_t k);
}  // namespace scalar

namespace avx2 {
void l2sq_batch(const double* query, const double* entries, std::size_t k,
                std::size_t d, double* out);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void softmax_inplace(double* row, std::size_t k);
}  // namespace avx2
}  // namespace detail

}  // namespace adahi::kernels
