#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "frgp/inference.hpp"
#include "frgp/kernels.hpp"
#include "frgp/linalg.hpp"
#include "frgp/rng.hpp"

namespace frgp {

// cross-covariance matrix k(|a_i - b_j|) between two point sets (rows = points)
inline Eigen::MatrixXd kernel_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                   const KernelSpec& kernel) {
    if (a.cols() != b.cols()) throw std::domain_error("kernel_gram: dimension mismatch");
    Eigen::MatrixXd out(a.rows(), b.rows());
    if (a.data() == b.data() && a.rows() == b.rows()) {
        // same point set: evaluate the lower triangle only and mirror
        for (long i = 0; i < a.rows(); ++i) {
            out(i, i) = kernel_value(0.0, kernel);
            for (long j = 0; j < i; ++j) {
                const double v = kernel_value((a.row(i) - a.row(j)).norm(), kernel);
                out(i, j) = v;
                out(j, i) = v;
            }
        }
        return out;
    }
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < b.rows(); ++j)
            out(i, j) = kernel_value((a.row(i) - b.row(j)).norm(), kernel);
    return out;
}

struct GpFit {
    Eigen::MatrixXd query;      // p x dim
    Eigen::VectorXd mean;       // p
    Eigen::MatrixXd covariance; // p x p posterior covariance of f(query)
    double log_marginal = 0.0;  // log N(y; 0, K + sigma^2 I)
};

// dense exact GP regression: one Cholesky of (K + sigma^2 I), O(n^3)
inline GpFit gp_posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma_sq,
                          const Eigen::MatrixXd& query, const KernelSpec& kernel) {
    if (x.rows() != y.size()) throw std::domain_error("gp_posterior: x rows and y length differ");
    if (!(sigma_sq > 0.0)) throw std::domain_error("gp_posterior: sigma_sq must be positive");
    const long n = x.rows();
    Eigen::MatrixXd a = kernel_gram(x, x, kernel);
    a.diagonal().array() += sigma_sq;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw SingularMatrixError("gp_posterior: K + sigma^2 I not positive definite");
    const Eigen::VectorXd alpha = llt.solve(y);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    GpFit fit;
    fit.query = query;
    fit.log_marginal = -0.5 * y.dot(alpha) - 0.5 * log_det -
                       0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
    const Eigen::MatrixXd k_star = kernel_gram(query, x, kernel); // p x n
    fit.mean = k_star * alpha;
    const Eigen::MatrixXd v = llt.matrixL().solve(k_star.transpose()); // n x p
    Eigen::MatrixXd cov = kernel_gram(query, query, kernel) - v.transpose() * v;
    fit.covariance = (cov + cov.transpose()) / 2.0;
    return fit;
}

// log marginal likelihood only (no query work); used inside the kappa sampler
inline double gp_log_marginal(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma_sq,
                              const KernelSpec& kernel) {
    if (x.rows() != y.size()) throw std::domain_error("gp_log_marginal: x rows and y length differ");
    Eigen::MatrixXd a = kernel_gram(x, x, kernel);
    a.diagonal().array() += sigma_sq;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw SingularMatrixError("gp_log_marginal: K + sigma^2 I not positive definite");
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * y.dot(llt.solve(y)) - 0.5 * log_det -
           0.5 * static_cast<double>(x.rows()) * std::log(2.0 * M_PI);
}

// joint posterior draws of f(query); factors the covariance once
class GpSampler {
  public:
    explicit GpSampler(const GpFit& fit) : mean_(fit.mean) {
        JitteredCholesky chol = cholesky_with_jitter(fit.covariance);
        jitter_ = chol.jitter;
        lower_ = chol.llt.matrixL();
    }

    Eigen::VectorXd draw(Rng& rng) const {
        Eigen::VectorXd z(mean_.size());
        for (long i = 0; i < z.size(); ++i) z[i] = rng.normal();
        return mean_ + lower_ * z;
    }

    double jitter() const { return jitter_; }

  private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd lower_;
    double jitter_ = 0.0;
};

struct GpChainRecord {
    std::vector<double> kappas;        // post burn-in
    std::vector<Eigen::VectorXd> draws; // f(query) draws, aligned with kappas
    double acceptance_rate = 0.0;
    long iterations = 0;
    long burn_in = 0;
    long numerical_rejections = 0;
};

// Metropolis-Hastings over kappa with independence proposals from the prior;
// acceptance ratio reduces to the marginal-likelihood difference. Each
// proposal costs one O(n^3) factorization (cached per repeated kappa).
inline GpChainRecord gp_kappa_mh(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double sigma_sq,
                                 KernelSpec kernel, const KappaPrior& prior,
                                 const Eigen::MatrixXd& query, long iterations, long burn_in,
                                 Rng& rng) {
    validate(prior);
    if (iterations <= 0 || burn_in < 0 || burn_in >= iterations)
        throw std::domain_error("gp_kappa_mh: need 0 <= burn_in < iterations");

    std::unordered_map<std::int64_t, double> cache;
    auto marginal = [&](double kappa) {
        const auto key = static_cast<std::int64_t>(std::llround(kappa * 1e12));
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        KernelSpec spec = kernel;
        spec.kappa = kappa;
        const double v = gp_log_marginal(x, y, sigma_sq, spec);
        cache.emplace(key, v);
        return v;
    };

    // start at the best prior-typical kappa, mirroring the finite-rank sampler
    double cur_kappa = 0.0;
    double cur_ml = -std::numeric_limits<double>::infinity();
    for (double k : kappa_init_candidates(prior)) {
        try {
            const double ml = marginal(k) + log_prior_density(prior, k);
            if (ml > cur_ml) {
                cur_ml = ml;
                cur_kappa = k;
            }
        } catch (const SingularMatrixError&) {
        }
    }
    if (!std::isfinite(cur_ml)) throw std::runtime_error("gp_kappa_mh: no admissible initial kappa");
    cur_ml = marginal(cur_kappa);

    KernelSpec cur_spec = kernel;
    cur_spec.kappa = cur_kappa;
    GpSampler sampler(gp_posterior(x, y, sigma_sq, query, cur_spec));

    GpChainRecord record;
    record.iterations = iterations;
    record.burn_in = burn_in;
    record.kappas.reserve(static_cast<std::size_t>(iterations - burn_in));
    record.draws.reserve(static_cast<std::size_t>(iterations - burn_in));
    long accepted = 0;
    for (long it = 0; it < iterations; ++it) {
        const double k_prop = sample_kappa(prior, rng);
        bool ok = true;
        double ml_prop = 0.0;
        try {
            ml_prop = marginal(k_prop);
        } catch (const SingularMatrixError&) {
            ok = false;
            ++record.numerical_rejections;
        }
        if (ok && (ml_prop - cur_ml >= 0.0 || std::log(rng.uniform_pos()) < ml_prop - cur_ml)) {
            ++accepted;
            cur_kappa = k_prop;
            cur_ml = ml_prop;
            KernelSpec spec = kernel;
            spec.kappa = cur_kappa;
            sampler = GpSampler(gp_posterior(x, y, sigma_sq, query, spec));
        }
        Eigen::VectorXd draw = sampler.draw(rng);
        if (it >= burn_in) {
            record.kappas.push_back(cur_kappa);
            record.draws.push_back(std::move(draw));
        }
    }
    record.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(iterations);
    return record;
}

} // namespace frgp
