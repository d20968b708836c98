#include "cdc/kernels.hpp"

#if defined(CDC_HAVE_AVX2_KERNELS)

#include <immintrin.h>

// AVX2 variants. Two 4-lane accumulators hold elements i mod 8 in
// {0..3} and {4..7}; the horizontal reduction below reproduces the
// scalar reference order bit for bit. No FMA: this translation unit is
// built with plain AVX2 and uses separate mul/add intrinsics.

namespace cdc::kernels::avx2 {

namespace {

inline double reduce_pair(__m256d acc0, __m256d acc1, double tail) {
    __m256d c = _mm256_add_pd(acc0, acc1);                 // c_j = acc_j + acc_{j+4}
    __m128d lo = _mm256_castpd256_pd128(c);                // [c0, c1]
    __m128d hi = _mm256_extractf128_pd(c, 1);              // [c2, c3]
    __m128d p = _mm_add_pd(lo, hi);                        // [c0+c2, c1+c3]
    double head = _mm_cvtsd_f64(p) + _mm_cvtsd_f64(_mm_unpackhi_pd(p, p));
    return head + tail;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1,
                             _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    }
    double head = reduce_pair(acc0, acc1, 0.0);
    for (; i < n; ++i) head += a[i] * b[i];
    return head;
}

double sqdist(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
    }
    double head = reduce_pair(acc0, acc1, 0.0);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        head += d * d;
    }
    return head;
}

double sum(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    double head = reduce_pair(acc0, acc1, 0.0);
    for (; i < n; ++i) head += x[i];
    return head;
}

double max(const double* x, std::size_t n) {
    // Max is exact under any association, so the lane layout is free.
    std::size_t i = 0;
    double m = x[0];
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
        __m128d lo = _mm256_castpd256_pd128(vm);
        __m128d hi = _mm256_extractf128_pd(vm, 1);
        __m128d p = _mm_max_pd(lo, hi);
        m = _mm_cvtsd_f64(_mm_max_sd(p, _mm_unpackhi_pd(p, p)));
    } else {
        i = 1;
    }
    for (; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

}  // namespace cdc::kernels::avx2

#endif  // CDC_HAVE_AVX2_KERNELS
