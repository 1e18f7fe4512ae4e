// AVX2 + FMA variants of the reduction kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; callers reach it through the dispatch
// table in kernels.cpp after a runtime CPU probe.

#include "msim/kernels.hpp"

#include <cmath>
#include <stdexcept>

#if defined(MSIM_HAVE_AVX2_TU)
#include <immintrin.h>
#endif

namespace msim::kernels::avx2 {

#if defined(MSIM_HAVE_AVX2_TU)

bool compiled_in() { return true; }

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Cephes-style exp for 4 doubles: range reduction by log(2) in two parts,
// rational approximation of expm1 on the reduced argument, exponent rebuild
// through the IEEE-754 bit layout. |rel err| is a few ulp over [-708, 709].
// Inputs below the underflow cutoff flush to 0, above the overflow cutoff
// saturate to +inf, matching std::exp up to subnormal flushing.
inline __m256d exp_pd(__m256d x) {
    const __m256d kLog2E = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d kC1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d kC2 = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d kP0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d kP1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d kP2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d kQ0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d kQ1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d kQ2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d kQ3 = _mm256_set1_pd(2.00000000000000000005e0);
    const __m256d kOne = _mm256_set1_pd(1.0);
    const __m256d kTwo = _mm256_set1_pd(2.0);
    const __m256d kMaxArg = _mm256_set1_pd(709.782712893383996843);
    const __m256d kMinArg = _mm256_set1_pd(-708.396418532264106224);

    const __m256d over = _mm256_cmp_pd(x, kMaxArg, _CMP_GT_OQ);
    const __m256d under = _mm256_cmp_pd(x, kMinArg, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, kMinArg), kMaxArg);

    __m256d n = _mm256_round_pd(_mm256_mul_pd(x, kLog2E),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(n, kC1, x);
    x = _mm256_fnmadd_pd(n, kC2, x);

    const __m256d xx = _mm256_mul_pd(x, x);
    __m256d px = _mm256_fmadd_pd(kP0, xx, kP1);
    px = _mm256_fmadd_pd(px, xx, kP2);
    px = _mm256_mul_pd(px, x);
    __m256d qx = _mm256_fmadd_pd(kQ0, xx, kQ1);
    qx = _mm256_fmadd_pd(qx, xx, kQ2);
    qx = _mm256_fmadd_pd(qx, xx, kQ3);
    __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    r = _mm256_fmadd_pd(kTwo, r, kOne);

    // 2^n via the exponent field; n is integral in [-1074, 1024] here.
    const __m128i n32 = _mm256_cvtpd_epi32(n);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    const __m256i bits =
        _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    r = _mm256_mul_pd(r, _mm256_castsi256_pd(bits));

    r = _mm256_blendv_pd(r, _mm256_set1_pd(HUGE_VAL), over);
    r = _mm256_blendv_pd(r, _mm256_setzero_pd(), under);
    return r;
}

}  // namespace

double sum(std::span<const double> x) {
    const std::size_t n = x.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double dot(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i),
                              _mm256_loadu_pd(y.data() + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double exp_pair_sum(std::span<const double> a, std::span<const double> b,
                    double alpha, double beta) {
    const std::size_t n = a.size();
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vb = _mm256_set1_pd(beta);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    if (b.empty()) {
        for (; i + 4 <= n; i += 4)
            acc = _mm256_add_pd(
                acc, exp_pd(_mm256_mul_pd(va, _mm256_loadu_pd(a.data() + i))));
        double s = hsum(acc);
        for (; i < n; ++i) s += std::exp(alpha * a[i]);
        return s;
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d arg = _mm256_fmadd_pd(vb, _mm256_loadu_pd(b.data() + i),
                                            _mm256_mul_pd(va, _mm256_loadu_pd(a.data() + i)));
        acc = _mm256_add_pd(acc, exp_pd(arg));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::exp(alpha * a[i] + beta * b[i]);
    return s;
}

MomentSums central_moments(std::span<const double> x, double mean) {
    const std::size_t n = x.size();
    const __m256d vm = _mm256_set1_pd(mean);
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    __m256d a4 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), vm);
        const __m256d d2 = _mm256_mul_pd(d, d);
        a2 = _mm256_add_pd(a2, d2);
        a3 = _mm256_fmadd_pd(d2, d, a3);
        a4 = _mm256_fmadd_pd(d2, d2, a4);
    }
    MomentSums m{hsum(a2), hsum(a3), hsum(a4)};
    for (; i < n; ++i) {
        const double d = x[i] - mean;
        const double d2 = d * d;
        m.m2 += d2;
        m.m3 += d2 * d;
        m.m4 += d2 * d2;
    }
    return m;
}

std::size_t count_abs_exceed(std::span<const double> x, double mu,
                             double inv_scale, double z) {
    const std::size_t n = x.size();
    const __m256d vmu = _mm256_set1_pd(mu);
    const __m256d vs = _mm256_set1_pd(inv_scale);
    const __m256d vz = _mm256_set1_pd(z);
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_mul_pd(
            _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), vmu), vs);
        t = _mm256_andnot_pd(sign_mask, t);
        const int mask = _mm256_movemask_pd(_mm256_cmp_pd(t, vz, _CMP_GT_OQ));
        count += static_cast<std::size_t>(__builtin_popcount(mask));
    }
    for (; i < n; ++i)
        if (std::abs((x[i] - mu) * inv_scale) > z) ++count;
    return count;
}

#else  // !MSIM_HAVE_AVX2_TU — scalar-only build; dispatch never routes here.

bool compiled_in() { return false; }

namespace {
[[noreturn]] void unavailable() {
    throw std::logic_error("AVX2 kernels not compiled into this build");
}
}  // namespace

double sum(std::span<const double>) { unavailable(); }
double dot(std::span<const double>, std::span<const double>) { unavailable(); }
double exp_pair_sum(std::span<const double>, std::span<const double>, double, double) {
    unavailable();
}
MomentSums central_moments(std::span<const double>, double) { unavailable(); }
std::size_t count_abs_exceed(std::span<const double>, double, double, double) {
    unavailable();
}

#endif

}  // namespace msim::kernels::avx2
