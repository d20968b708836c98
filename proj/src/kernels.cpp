#include "cdc/kernels.hpp"

#include <cstdlib>

namespace cdc::kernels {

namespace {

struct Backend {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*max)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
    const char* name;
};

constexpr Backend kScalar = {scalar::dot, scalar::sqdist, scalar::sum,
                             scalar::max, scalar::axpy,   scalar::scale,
                             "scalar"};

#if defined(CDC_HAVE_AVX2_KERNELS)
constexpr Backend kAvx2 = {avx2::dot, avx2::sqdist, avx2::sum,
                           avx2::max, avx2::axpy,   avx2::scale,
                           "avx2"};
#endif

bool cpu_has_avx2() {
#if defined(CDC_HAVE_AVX2_KERNELS) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

const Backend* pick_auto() {
#if defined(CDC_HAVE_AVX2_KERNELS)
    if (cpu_has_avx2()) return &kAvx2;
#endif
    return &kScalar;
}

const Backend* initial_backend() {
    if (const char* env = std::getenv("CDC_KERNELS")) {
        std::string want(env);
        if (want == "scalar") return &kScalar;
#if defined(CDC_HAVE_AVX2_KERNELS)
        if (want == "avx2" && cpu_has_avx2()) return &kAvx2;
#endif
    }
    return pick_auto();
}

const Backend* g_backend = initial_backend();

}  // namespace

double dot(const double* a, const double* b, std::size_t n) { return g_backend->dot(a, b, n); }
double sqdist(const double* a, const double* b, std::size_t n) { return g_backend->sqdist(a, b, n); }
double sum(const double* x, std::size_t n) { return g_backend->sum(x, n); }
double max(const double* x, std::size_t n) { return g_backend->max(x, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { g_backend->axpy(alpha, x, y, n); }
void scale(double alpha, double* x, std::size_t n) { g_backend->scale(alpha, x, n); }

std::string active_backend() { return g_backend->name; }

bool avx2_available() { return cpu_has_avx2(); }

bool force_backend(const std::string& name) {
    if (name == "scalar") {
        g_backend = &kScalar;
        return true;
    }
#if defined(CDC_HAVE_AVX2_KERNELS)
    if (name == "avx2") {
        if (!cpu_has_avx2()) return false;
        g_backend = &kAvx2;
        return true;
    }
#endif
    if (name == "auto") {
        g_backend = pick_auto();
        return true;
    }
    return false;
}

}  // namespace cdc::kernels
