#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace msim::kernels {

/// Reduction kernels used by the Monte Carlo pricing and statistics paths.
/// Every kernel has a scalar reference implementation and an AVX2 variant;
/// the backend is picked once at runtime (CPU probe, overridable through the
/// MSIM_KERNELS environment variable or force()). Scalar and AVX2 results
/// differ only by floating-point reassociation; equivalence is covered in
/// tests/test_kernels.cpp.

enum class Backend { scalar, avx2 };

struct MomentSums {
    double m2 = 0.0;  // sum (x - mean)^2
    double m3 = 0.0;  // sum (x - mean)^3
    double m4 = 0.0;  // sum (x - mean)^4
};

bool avx2_supported();
Backend active();
std::string_view backend_name(Backend b);

/// Test hook: force a backend (throws if AVX2 is requested but unsupported).
void force(Backend b);
/// Re-resolve the backend from MSIM_KERNELS / CPU probe.
void reset();

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);

/// sum_i exp(alpha*a[i] + beta*b[i]); pass an empty b for sum_i exp(alpha*a[i]).
double exp_pair_sum(std::span<const double> a, std::span<const double> b,
                    double alpha, double beta);

MomentSums central_moments(std::span<const double> x, double mean);

/// Count of |(x[i] - mu) * inv_scale| > z.
std::size_t count_abs_exceed(std::span<const double> x, double mu,
                             double inv_scale, double z);

}  // namespace msim::kernels
