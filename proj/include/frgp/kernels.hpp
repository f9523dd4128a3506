#pragma once

#include <cmath>
#include <stdexcept>

namespace frgp {

/* Stationary covariance kernels.
 *
 * Matern:            K(t) = tau^2 * 2^(1-nu)/Gamma(nu) * (kappa t)^nu * K_nu(kappa t)
 * with the scaling   tau^2 = Gamma(nu) / (Gamma(nu + d/2) * (4 pi)^(d/2) * kappa^(2 nu)),
 * squared exponential: K(t) = exp(-kappa^2 t^2).
 *
 * Distances are Euclidean for d >= 2.  By default no unit-variance
 * normalization is applied; set unit_variance to drop the tau^2 factor and
 * evaluate the correlation form with k(0) = 1.  The spectral tau^2 decays
 * like kappa^(-2 nu), which for large nu shrinks the prior scale far below
 * any data scale, so regression benchmarks use the correlation form.
 */

enum class KernelFamily { Matern, SquaredExponential };

struct KernelSpec {
    KernelFamily family = KernelFamily::Matern;
    double kappa = 1.0;         // inverse length-scale, > 0
    double nu = 1.5;            // Matern smoothness, > 0 (ignored for SquaredExponential)
    int dim = 1;                // ambient dimension, >= 1
    bool unit_variance = false; // true: drop tau^2 so k(0) = 1 (Matern correlation form)
};

inline void validate(const KernelSpec& spec) {
    if (spec.kappa <= 0.0) throw std::domain_error("kernel: kappa must be positive");
    if (spec.family == KernelFamily::Matern && spec.nu <= 0.0)
        throw std::domain_error("kernel: nu must be positive");
    if (spec.dim < 1) throw std::domain_error("kernel: dim must be >= 1");
}

inline double tau_squared(double kappa, double nu, int dim) {
    if (kappa <= 0.0 || nu <= 0.0 || dim < 1)
        throw std::domain_error("tau_squared: arguments must be positive");
    const double d = static_cast<double>(dim);
    // log form avoids overflow of Gamma for large nu
    const double log_tau2 = std::lgamma(nu) - std::lgamma(nu + 0.5 * d)
                          - 0.5 * d * std::log(4.0 * M_PI) - 2.0 * nu * std::log(kappa);
    return std::exp(log_tau2);
}

/* Modified Bessel function of the second kind.
 * Half-integer orders nu = p + 1/2 use the finite closed form
 *   K_{p+1/2}(z) = sqrt(pi/(2z)) e^{-z} sum_{k=0}^{p} (p+k)! / (k! (p-k)! (2z)^k),
 * everything else defers to std::cyl_bessel_k. */
inline double bessel_k(double nu, double z) {
    if (z <= 0.0) throw std::domain_error("bessel_k: argument must be positive");
    nu = std::fabs(nu); // K_{-nu} = K_nu
    const double p_real = nu - 0.5;
    const int p = static_cast<int>(std::lround(p_real));
    if (p >= 0 && p <= 30 && p_real == static_cast<double>(p)) {
        double term = 1.0, sum = 1.0;
        for (int k = 1; k <= p; ++k) {
            term *= static_cast<double>((p - k + 1) * (p + k)) / (2.0 * k * z);
            sum += term;
        }
        return std::sqrt(M_PI / (2.0 * z)) * std::exp(-z) * sum;
    }
    return std::cyl_bessel_k(nu, z);
}

inline double matern_cov(double t, const KernelSpec& spec) {
    if (t < 0.0) throw std::domain_error("matern_cov: distance must be nonnegative");
    if (spec.family != KernelFamily::Matern)
        throw std::domain_error("matern_cov: spec is not a Matern kernel");
    validate(spec);
    const double tau2 =
        spec.unit_variance ? 1.0 : tau_squared(spec.kappa, spec.nu, spec.dim);
    const double z = spec.kappa * t;
    // limiting value (z/2)^nu K_nu(z) -> Gamma(nu)/2 * (z/2)^0 as z -> 0
    if (z < 1e-12) return tau2;
    const double log_pref = (1.0 - spec.nu) * std::log(2.0) - std::lgamma(spec.nu)
                          + spec.nu * std::log(z);
    const double k = bessel_k(spec.nu, z);
    if (k <= 0.0) return 0.0; // K_nu underflowed, kernel is below double range
    return tau2 * std::exp(log_pref + std::log(k));
}

inline double sq_exp_cov(double t, double kappa) {
    if (t < 0.0) throw std::domain_error("sq_exp_cov: distance must be nonnegative");
    if (kappa <= 0.0) throw std::domain_error("sq_exp_cov: kappa must be positive");
    return std::exp(-kappa * kappa * t * t);
}

inline double kernel_value(double t, const KernelSpec& spec) {
    return spec.family == KernelFamily::Matern ? matern_cov(t, spec)
                                               : sq_exp_cov(t, spec.kappa);
}

} // namespace frgp
