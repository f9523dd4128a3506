#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace frgp {

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.39894228040143267794; // 1/sqrt(2 pi)
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440); // x / sqrt(2)
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m; // all -inf stays -inf
    return m + std::log((v.array() - m).exp().sum());
}

// empirical quantile with linear interpolation between order statistics
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw std::domain_error("quantile: empty sample");
    if (p < 0.0 || p > 1.0) throw std::domain_error("quantile: level out of [0, 1]");
    std::sort(v.begin(), v.end());
    const double pos = p * (static_cast<double>(v.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

// Wilson score interval for a binomial proportion at 95% coverage
struct WilsonInterval {
    double estimate;
    double lower;
    double upper;
};

inline WilsonInterval wilson_interval(long successes, long trials) {
    if (trials <= 0) throw std::domain_error("wilson_interval: trials must be positive");
    const double z = 1.959963984540054; // 97.5% normal quantile
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // at the boundaries center == half analytically; rounding would otherwise
    // leave a ~1e-19 residue where the bound is exactly attained
    const double lower = successes == 0 ? 0.0 : std::max(0.0, center - half);
    const double upper = successes == trials ? 1.0 : std::min(1.0, center + half);
    return {p, lower, upper};
}

// one-sample Kolmogorov-Smirnov statistic against a continuous CDF
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf) {
    if (sample.empty()) throw std::domain_error("ks_statistic: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// asymptotic KS p-value with the Stephens small-sample correction
inline double ks_p_value(std::size_t n, double d) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double t = (sn + 0.12 + 0.11 / sn) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
        p += term;
        if (std::fabs(term) < 1e-12) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

inline double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) throw std::domain_error("total_variation: length mismatch");
    return 0.5 * (p - q).cwiseAbs().sum();
}

} // namespace frgp
