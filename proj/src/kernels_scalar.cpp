#include "cdc/kernels.hpp"

// Reference kernels. The blocked accumulation below is the canonical
// summation order every SIMD variant must reproduce exactly.

namespace cdc::kernels::scalar {

namespace {

inline double combine8(const double acc[8], double tail) {
    double c0 = acc[0] + acc[4];
    double c1 = acc[1] + acc[5];
    double c2 = acc[2] + acc[6];
    double c3 = acc[3] + acc[7];
    return ((c0 + c2) + (c1 + c3)) + tail;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
    double head = combine8(acc, 0.0);
    for (; i < n; ++i) head += a[i] * b[i];
    return head;
}

double sqdist(const double* a, const double* b, std::size_t n) {
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t j = 0; j < 8; ++j) {
            double d = a[i + j] - b[i + j];
            acc[j] += d * d;
        }
    double head = combine8(acc, 0.0);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        head += d * d;
    }
    return head;
}

double sum(const double* x, std::size_t n) {
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t j = 0; j < 8; ++j) acc[j] += x[i + j];
    double head = combine8(acc, 0.0);
    for (; i < n; ++i) head += x[i];
    return head;
}

double max(const double* x, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace cdc::kernels::scalar
