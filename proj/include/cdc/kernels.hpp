#ifndef CDC_KERNELS_HPP
#define CDC_KERNELS_HPP

#include <cstddef>
#include <string>

namespace cdc::kernels {

// Data-parallel inner-loop kernels with runtime ISA dispatch.
//
// Every variant of a reduction kernel evaluates the same fixed summation
// order: eight independent accumulators over elements with index i mod 8,
// combined as ((c0+c2)+(c1+c3)) with c_j = acc_j + acc_{j+4}, then the tail
// elements added sequentially. FMA contraction is disabled in the vector
// variants. Under these rules the scalar and SIMD paths produce bit-identical
// results, so backend selection never changes any output byte; the test suite
// asserts exact equality between variants.

double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double max(const double* x, std::size_t n);  // n must be >= 1
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
void scale(double alpha, double* x, std::size_t n);                  // x *= alpha

/// Name of the backend the dispatched entry points currently use.
std::string active_backend();

/// Force a backend: "scalar", "avx2" or "auto". Returns false if unavailable.
/// The CDC_KERNELS environment variable applies the same override at startup.
bool force_backend(const std::string& name);

bool avx2_available();

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double max(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define CDC_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double max(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
}  // namespace avx2
#endif

}  // namespace cdc::kernels

#endif  // CDC_KERNELS_HPP
