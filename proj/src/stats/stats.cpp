#include "msim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "msim/kernels.hpp"

namespace msim::stats {

ReturnSeries returns_from_prices(std::span<const double> prices,
                                 std::span<const bool> halted, bool log_mode) {
    if (!halted.empty() && halted.size() != prices.size())
        throw std::invalid_argument("returns_from_prices: halted mask size mismatch");
    ReturnSeries out;
    out.log_mode = log_mode;
    for (std::size_t k = 1; k < prices.size(); ++k) {
        const bool ok = halted.empty() || (!halted[k] && !halted[k - 1]);
        if (!ok) continue;
        if (log_mode) {
            if (!(prices[k] > 0.0) || !(prices[k - 1] > 0.0)) {
                ++out.dropped_nonpositive;
                continue;
            }
            out.diffs.push_back(std::log(prices[k] / prices[k - 1]));
        } else {
            out.diffs.push_back(prices[k] - prices[k - 1]);
        }
    }
    return out;
}

namespace {

struct StdMoments {
    double mean, m2, m3, m4;  // population central moments
};

StdMoments population_moments(std::span<const double> x) {
    if (x.size() < kMinSamples)
        throw std::invalid_argument("test statistic requires at least 8 samples");
    const double n = static_cast<double>(x.size());
    const double mean = kernels::sum(x) / n;
    const auto s = kernels::central_moments(x, mean);
    StdMoments m{mean, s.m2 / n, s.m3 / n, s.m4 / n};
    if (!(m.m2 > 0.0))
        throw std::invalid_argument("test statistic undefined on a constant series");
    return m;
}

}  // namespace

double skewness(std::span<const double> x) {
    const auto m = population_moments(x);
    return m.m3 / std::pow(m.m2, 1.5);
}

double excess_kurtosis(std::span<const double> x) {
    const auto m = population_moments(x);
    return m.m4 / (m.m2 * m.m2) - 3.0;
}

double chi2_sf_2dof(double x) { return std::exp(-0.5 * x); }

double jb_statistic(std::size_t n, double skew, double ex_kurtosis) {
    return static_cast<double>(n) / 6.0 *
           (skew * skew + 0.25 * ex_kurtosis * ex_kurtosis);
}

JarqueBera jarque_bera(std::span<const double> x) {
    const auto m = population_moments(x);
    const double s = m.m3 / std::pow(m.m2, 1.5);
    const double k = m.m4 / (m.m2 * m.m2) - 3.0;
    JarqueBera jb;
    jb.statistic = jb_statistic(x.size(), s, k);
    jb.p_value = chi2_sf_2dof(jb.statistic);
    return jb;
}

TailReport tail_exceedance(std::span<const double> x, double z) {
    if (x.size() < kMinSamples)
        throw std::invalid_argument("tail_exceedance requires at least 8 samples");
    const double n = static_cast<double>(x.size());
    const double mean = kernels::sum(x) / n;
    const auto s = kernels::central_moments(x, mean);
    const double sd = std::sqrt(s.m2 / (n - 1.0));
    if (!(sd > 0.0))
        throw std::invalid_argument("tail_exceedance undefined on a constant series");
    TailReport r;
    r.n = x.size();
    r.count = kernels::count_abs_exceed(x, mean, 1.0 / sd, z);
    r.frequency = static_cast<double>(r.count) / n;
    r.gaussian = std::erfc(z / std::sqrt(2.0));
    return r;
}

ExcursionReport excursions(std::span<const Condition> conditions,
                           std::span<const bool> jumps,
                           std::span<const double> jump_sizes) {
    if (conditions.size() != jumps.size() || conditions.size() != jump_sizes.size())
        throw std::invalid_argument("excursions: column length mismatch");
    ExcursionReport r;
    std::size_t non_halted = 0;
    std::size_t outside = 0;
    Condition run_kind = Condition::normal;
    std::size_t run_len = 0;
    const auto flush = [&] {
        if (run_len == 0) return;
        if (run_kind == Condition::bubble)
            ++r.n_bubbles;
        else
            ++r.n_depressions;
        r.durations.push_back(run_len);
        run_len = 0;
    };
    for (std::size_t k = 0; k < conditions.size(); ++k) {
        const Condition c = conditions[k];
        if (c != Condition::halted) ++non_halted;
        const bool is_outside = c == Condition::bubble || c == Condition::depression;
        if (is_outside) {
            ++outside;
            if (run_len > 0 && c != run_kind) flush();
            run_kind = c;
            ++run_len;
        } else {
            flush();
        }
        if (jumps[k]) {
            ++r.n_jumps;
            r.jump_sizes.push_back(jump_sizes[k]);
        }
    }
    flush();
    r.time_fraction_outside =
        non_halted == 0 ? 0.0
                        : static_cast<double>(outside) / static_cast<double>(non_halted);
    return r;
}

VarianceGrowth variance_growth(std::span<const std::vector<double>> paths,
                               std::span<const std::size_t> checkpoints, double dt) {
    if (paths.size() < 2)
        throw std::invalid_argument("variance_growth needs at least two paths");
    VarianceGrowth out;
    std::vector<double> at(paths.size());
    for (std::size_t k : checkpoints) {
        for (std::size_t i = 0; i < paths.size(); ++i) {
            if (k >= paths[i].size())
                throw std::invalid_argument("variance_growth: checkpoint out of range");
            at[i] = paths[i][k];
        }
        const double n = static_cast<double>(at.size());
        const double mean = kernels::sum(at) / n;
        const auto m = kernels::central_moments(at, mean);
        out.times.push_back(dt * static_cast<double>(k));
        out.variances.push_back(m.m2 / (n - 1.0));
    }

    const auto& t = out.times;
    const auto& v = out.variances;
    const double n = static_cast<double>(t.size());
    const double stt = kernels::dot(t, t);
    const double stv = kernels::dot(t, v);
    const double svv = kernels::dot(v, v);
    out.slope_origin = stt > 0.0 ? stv / stt : 0.0;
    double ss_res_o = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e = v[i] - out.slope_origin * t[i];
        ss_res_o += e * e;
    }
    out.r2_origin = svv > 0.0 ? 1.0 - ss_res_o / svv : 0.0;

    const double st = kernels::sum(t);
    const double sv = kernels::sum(v);
    const double denom = n * stt - st * st;
    out.slope = denom != 0.0 ? (n * stv - st * sv) / denom : 0.0;
    out.intercept = (sv - out.slope * st) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double v_mean = sv / n;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e = v[i] - (out.intercept + out.slope * t[i]);
        ss_res += e * e;
        ss_tot += (v[i] - v_mean) * (v[i] - v_mean);
    }
    out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return out;
}

std::vector<std::size_t> detect_jumps_mad(std::span<const double> x, double mult) {
    std::vector<std::size_t> hits;
    if (x.size() < kMinSamples) return hits;
    std::vector<double> tmp(x.begin(), x.end());
    const auto mid = tmp.begin() + tmp.size() / 2;
    std::nth_element(tmp.begin(), mid, tmp.end());
    const double median = *mid;
    for (auto& v : tmp) v = std::abs(v - median);
    std::nth_element(tmp.begin(), mid, tmp.end());
    const double scale = 1.4826 * *mid;
    if (!(scale > 0.0)) return hits;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i] - median) > mult * scale) hits.push_back(i);
    return hits;
}

}  // namespace msim::stats
