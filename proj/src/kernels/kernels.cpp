#include "msim/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace msim::kernels {

// ---------------------------------------------------------------------------
// scalar reference implementations
// ---------------------------------------------------------------------------

namespace scalar {

double sum(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
}

double dot(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double exp_pair_sum(std::span<const double> a, std::span<const double> b,
                    double alpha, double beta) {
    double acc = 0.0;
    if (b.empty()) {
        for (double v : a) acc += std::exp(alpha * v);
    } else {
        for (std::size_t i = 0; i < a.size(); ++i)
            acc += std::exp(alpha * a[i] + beta * b[i]);
    }
    return acc;
}

MomentSums central_moments(std::span<const double> x, double mean) {
    MomentSums m;
    for (double v : x) {
        const double d = v - mean;
        const double d2 = d * d;
        m.m2 += d2;
        m.m3 += d2 * d;
        m.m4 += d2 * d2;
    }
    return m;
}

std::size_t count_abs_exceed(std::span<const double> x, double mu,
                             double inv_scale, double z) {
    std::size_t n = 0;
    for (double v : x)
        if (std::abs((v - mu) * inv_scale) > z) ++n;
    return n;
}

}  // namespace scalar

// AVX2 variants live in kernels_avx2.cpp (compiled with -mavx2 -mfma).
namespace avx2 {
bool compiled_in();
double sum(std::span<const double>);
double dot(std::span<const double>, std::span<const double>);
double exp_pair_sum(std::span<const double>, std::span<const double>, double, double);
MomentSums central_moments(std::span<const double>, double);
std::size_t count_abs_exceed(std::span<const double>, double, double, double);
}  // namespace avx2

// ---------------------------------------------------------------------------
// backend selection
// ---------------------------------------------------------------------------

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return avx2::compiled_in() && __builtin_cpu_supports("avx2") &&
           __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Backend resolve() {
    if (const char* env = std::getenv("MSIM_KERNELS")) {
        const std::string v(env);
        if (v == "scalar") return Backend::scalar;
        if (v == "avx2") {
            if (!avx2_supported())
                throw std::runtime_error("MSIM_KERNELS=avx2 but AVX2 is unavailable");
            return Backend::avx2;
        }
        if (!v.empty() && v != "auto")
            throw std::runtime_error("MSIM_KERNELS must be scalar, avx2 or auto");
    }
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = resolve();

}  // namespace

Backend active() { return g_backend; }

std::string_view backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

void force(Backend b) {
    if (b == Backend::avx2 && !avx2_supported())
        throw std::runtime_error("AVX2 backend unavailable on this machine");
    g_backend = b;
}

void reset() { g_backend = resolve(); }

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

double sum(std::span<const double> x) {
    return g_backend == Backend::avx2 ? avx2::sum(x) : scalar::sum(x);
}

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
    return g_backend == Backend::avx2 ? avx2::dot(x, y) : scalar::dot(x, y);
}

double exp_pair_sum(std::span<const double> a, std::span<const double> b,
                    double alpha, double beta) {
    if (!b.empty() && a.size() != b.size())
        throw std::invalid_argument("exp_pair_sum: size mismatch");
    return g_backend == Backend::avx2 ? avx2::exp_pair_sum(a, b, alpha, beta)
                                      : scalar::exp_pair_sum(a, b, alpha, beta);
}

MomentSums central_moments(std::span<const double> x, double mean) {
    return g_backend == Backend::avx2 ? avx2::central_moments(x, mean)
                                      : scalar::central_moments(x, mean);
}

std::size_t count_abs_exceed(std::span<const double> x, double mu,
                             double inv_scale, double z) {
    return g_backend == Backend::avx2
               ? avx2::count_abs_exceed(x, mu, inv_scale, z)
               : scalar::count_abs_exceed(x, mu, inv_scale, z);
}

}  // namespace msim::kernels
