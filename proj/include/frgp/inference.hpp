#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <variant>
#include <vector>

#include "frgp/banded.hpp"
#include "frgp/basis.hpp"
#include "frgp/gpi.hpp"
#include "frgp/linalg.hpp"
#include "frgp/rng.hpp"
#include "frgp/spde.hpp"
#include "frgp/stats.hpp"

namespace frgp {

struct Dataset {
    Eigen::MatrixXd x; // n x dim, all coordinates in [0, 1]
    Eigen::VectorXd y; // n
    double sigma_sq = 1.0;
    int dim = 1;
};

inline void validate(const Dataset& data) {
    if (data.dim < 1) throw std::domain_error("Dataset: dim must be >= 1");
    if (data.x.cols() != data.dim) throw std::domain_error("Dataset: x must have dim columns");
    if (data.x.rows() != data.y.size()) throw std::domain_error("Dataset: x rows and y length differ");
    if (!(data.sigma_sq > 0.0)) throw std::domain_error("Dataset: sigma_sq must be positive");
    if (data.x.size() > 0 && (data.x.minCoeff() < 0.0 || data.x.maxCoeff() > 1.0))
        throw std::domain_error("Dataset: points must lie in the unit cube");
}

// ---------------------------------------------------------------------------
// hyperpriors

struct GammaPrior {
    double shape = 1.0;
    double scale = 1.0; // density ~ x^(shape-1) exp(-x/scale)
};

struct DiscretePrior {
    std::vector<double> values;
    std::vector<double> log_weights; // unnormalized
};

using KappaPrior = std::variant<GammaPrior, DiscretePrior>;

inline void validate(const KappaPrior& prior) {
    if (std::holds_alternative<GammaPrior>(prior)) {
        const auto& g = std::get<GammaPrior>(prior);
        if (!(g.shape > 0.0) || !(g.scale > 0.0))
            throw std::domain_error("GammaPrior: shape and scale must be positive");
    } else {
        const auto& d = std::get<DiscretePrior>(prior);
        if (d.values.empty() || d.values.size() != d.log_weights.size())
            throw std::domain_error("DiscretePrior: values/log_weights must be nonempty and match");
        for (double v : d.values)
            if (!(v > 0.0)) throw std::domain_error("DiscretePrior: kappa atoms must be positive");
    }
}

inline double log_prior_density(const KappaPrior& prior, double kappa) {
    if (std::holds_alternative<GammaPrior>(prior)) {
        const auto& g = std::get<GammaPrior>(prior);
        if (!(kappa > 0.0)) return -std::numeric_limits<double>::infinity();
        return (g.shape - 1.0) * std::log(kappa) - kappa / g.scale - std::lgamma(g.shape) -
               g.shape * std::log(g.scale);
    }
    const auto& d = std::get<DiscretePrior>(prior);
    Eigen::VectorXd lw = Eigen::Map<const Eigen::VectorXd>(d.log_weights.data(),
                                                           static_cast<long>(d.log_weights.size()));
    const double z = log_sum_exp(lw);
    for (std::size_t i = 0; i < d.values.size(); ++i)
        if (d.values[i] == kappa) return d.log_weights[i] - z;
    return -std::numeric_limits<double>::infinity();
}

inline double sample_kappa(const KappaPrior& prior, Rng& rng) {
    if (std::holds_alternative<GammaPrior>(prior)) {
        const auto& g = std::get<GammaPrior>(prior);
        return rng.gamma(g.shape, g.scale);
    }
    const auto& d = std::get<DiscretePrior>(prior);
    Eigen::VectorXd lw = Eigen::Map<const Eigen::VectorXd>(d.log_weights.data(),
                                                           static_cast<long>(d.log_weights.size()));
    const double z = log_sum_exp(lw);
    double u = rng.uniform();
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        u -= std::exp(d.log_weights[i] - z);
        if (u < 0.0) return d.values[i];
    }
    return d.values.back();
}

struct HyperPrior {
    std::vector<int> n_support;          // admissible resolutions, strictly increasing
    std::vector<double> n_log_weights;   // unnormalized, aligned with n_support
    KappaPrior kappa;
};

inline void validate(const HyperPrior& prior) {
    if (prior.n_support.empty() || prior.n_support.size() != prior.n_log_weights.size())
        throw std::domain_error("HyperPrior: n_support/n_log_weights must be nonempty and match");
    for (std::size_t i = 0; i < prior.n_support.size(); ++i) {
        if (prior.n_support[i] < 1) throw std::domain_error("HyperPrior: resolutions must be >= 1");
        if (i > 0 && prior.n_support[i] <= prior.n_support[i - 1])
            throw std::domain_error("HyperPrior: n_support must be strictly increasing");
    }
    validate(prior.kappa);
}

// normalized log weight of N under the prior; -inf off support
inline double log_prior_n(const HyperPrior& prior, int n_grid) {
    Eigen::VectorXd lw = Eigen::Map<const Eigen::VectorXd>(prior.n_log_weights.data(),
                                                           static_cast<long>(prior.n_log_weights.size()));
    const double z = log_sum_exp(lw);
    for (std::size_t i = 0; i < prior.n_support.size(); ++i)
        if (prior.n_support[i] == n_grid) return prior.n_log_weights[i] - z;
    return -std::numeric_limits<double>::infinity();
}

inline int sample_n(const HyperPrior& prior, Rng& rng) {
    Eigen::VectorXd lw = Eigen::Map<const Eigen::VectorXd>(prior.n_log_weights.data(),
                                                           static_cast<long>(prior.n_log_weights.size()));
    const double z = log_sum_exp(lw);
    double u = rng.uniform();
    for (std::size_t i = 0; i < prior.n_support.size(); ++i) {
        u -= std::exp(prior.n_log_weights[i] - z);
        if (u < 0.0) return prior.n_support[i];
    }
    return prior.n_support.back();
}

// convenience builder: weights proportional to exp(-rate * N)
inline HyperPrior exponential_n_prior(std::vector<int> support, double rate, KappaPrior kappa) {
    HyperPrior prior;
    prior.n_support = std::move(support);
    prior.n_log_weights.reserve(prior.n_support.size());
    for (int n : prior.n_support) prior.n_log_weights.push_back(-rate * n);
    prior.kappa = std::move(kappa);
    validate(prior);
    return prior;
}

// ---------------------------------------------------------------------------
// model backends: which coefficient prior is placed on w at resolution N

struct GpiBackend {
    KernelFamily family = KernelFamily::Matern;
    double nu = 1.5; // ignored for SquaredExponential
    int dim = 1;
};

struct SpdeBackend {
    int beta = 2; // dim fixed to 1
};

using ModelBackend = std::variant<GpiBackend, SpdeBackend>;

inline int backend_dim(const ModelBackend& model) {
    return std::holds_alternative<GpiBackend>(model) ? std::get<GpiBackend>(model).dim : 1;
}

inline GridCovariance build_prior(const GpiBackend& model, int n_grid, double kappa) {
    KernelSpec spec;
    spec.family = model.family;
    spec.kappa = kappa;
    spec.nu = model.nu;
    spec.dim = model.dim;
    return grid_covariance(n_grid, model.dim, spec);
}

inline PrecisionOperator build_prior(const SpdeBackend& model, int n_grid, double kappa) {
    return precision(n_grid, kappa, model.beta);
}

// ---------------------------------------------------------------------------
// conjugate coefficient posterior
//
// With w ~ N(0, G) a priori and y | w ~ N(Phi w, sigma^2 I), the posterior is
// N(mu, Gs) with Gs^{-1} = G^{-1} + Phi^T Phi / sigma^2 and mu = Gs Phi^T y / sigma^2.
// The marginal likelihood splits as
//   log p(y) = -n/2 log(2 pi sigma^2) - |y|^2 / (2 sigma^2)
//              + (log|Gs| - log|G|) / 2 + mu^T Gs^{-1} mu / 2,
// and the last quadratic equals b^T mu / 2 with b = Phi^T y / sigma^2.
// data_log_evidence() returns only the (N, kappa)-dependent part
// (log-determinant ratio plus quadratic); the |y|^2 and 2*pi terms are common
// to every state and cancel from Metropolis-Hastings ratios.

class CoefficientPosterior {
  public:
    // dense-covariance prior
    CoefficientPosterior(const SparseDesign& design, const Eigen::VectorXd& y, double sigma_sq,
                         const GridCovariance& prior)
        : n_grid_(prior.n_grid), dim_(prior.dim) {
        const long m = design.n_cols;
        if (m != prior.size())
            throw std::domain_error("CoefficientPosterior: design/prior size mismatch");
        check_inputs(design, y, sigma_sq);
        JitteredCholesky chol_g = cholesky_with_jitter(prior.to_dense());
        jitter_ = chol_g.jitter;
        Eigen::MatrixXd p = chol_g.llt.solve(Eigen::MatrixXd::Identity(m, m));
        accumulate_normal_matrix(design, sigma_sq, p);
        const Eigen::VectorXd b = design_t_y(design, y) / sigma_sq;
        Eigen::LLT<Eigen::MatrixXd> llt(p);
        if (llt.info() != Eigen::Success)
            throw SingularMatrixError("CoefficientPosterior: posterior precision not positive definite");
        mean_ = llt.solve(b);
        half_log_det_ratio_ = -log_det_from_llt(llt) / 2.0 - chol_g.log_det() / 2.0;
        quad_ = b.dot(mean_) / 2.0;
        dense_factor_ = std::move(llt);
    }

    // banded-precision prior
    CoefficientPosterior(const SparseDesign& design, const Eigen::VectorXd& y, double sigma_sq,
                         const PrecisionOperator& prior)
        : n_grid_(prior.n_grid), dim_(1), jitter_(0.0) {
        const long m = design.n_cols;
        if (m != prior.band.size())
            throw std::domain_error("CoefficientPosterior: design/prior size mismatch");
        check_inputs(design, y, sigma_sq);
        const double log_det_q = BandedCholesky(prior.band).log_det();
        // Phi has at most two adjacent nonzero columns per row, so Phi^T Phi
        // never widens the band past the prior's bandwidth (>= 1).
        BandedMatrix p = prior.band;
        for (long r = 0; r < design.n_rows; ++r) {
            const auto& row = design.rows[static_cast<std::size_t>(r)];
            for (const auto& a : row)
                for (const auto& b : row) {
                    if (a.col < b.col) continue;
                    p.at(a.col, b.col) += a.value * b.value / sigma_sq;
                }
        }
        const Eigen::VectorXd b = design_t_y(design, y) / sigma_sq;
        BandedCholesky chol_p(p); // throws SingularMatrixError on failure
        mean_ = chol_p.solve(b);
        half_log_det_ratio_ = (log_det_q - chol_p.log_det()) / 2.0;
        quad_ = b.dot(mean_) / 2.0;
        banded_factor_ = std::make_unique<BandedCholesky>(std::move(chol_p));
    }

    const Eigen::VectorXd& mean() const { return mean_; }
    double half_log_det_ratio() const { return half_log_det_ratio_; }
    double quad() const { return quad_; }
    double data_log_evidence() const { return half_log_det_ratio_ + quad_; }
    double jitter() const { return jitter_; }
    int n_grid() const { return n_grid_; }
    int dim() const { return dim_; }

    // draw w = mu + R^{-1} z where the posterior precision factors as R^T R
    BasisExpansion sample(Rng& rng) const {
        Eigen::VectorXd z(mean_.size());
        for (long i = 0; i < z.size(); ++i) z[i] = rng.normal();
        Eigen::VectorXd w;
        if (banded_factor_)
            w = mean_ + banded_factor_->solve_upper(z);
        else
            w = mean_ + dense_factor_->matrixU().solve(z);
        return BasisExpansion{n_grid_, dim_, std::move(w)};
    }

    Eigen::MatrixXd covariance() const {
        const long m = mean_.size();
        if (banded_factor_) {
            Eigen::MatrixXd cov(m, m);
            Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
            for (long j = 0; j < m; ++j) {
                e[j] = 1.0;
                cov.col(j) = banded_factor_->solve(e);
                e[j] = 0.0;
            }
            return (cov + cov.transpose()) / 2.0;
        }
        return dense_factor_->solve(Eigen::MatrixXd::Identity(m, m));
    }

  private:
    static void check_inputs(const SparseDesign& design, const Eigen::VectorXd& y, double sigma_sq) {
        if (design.n_rows != y.size())
            throw std::domain_error("CoefficientPosterior: design rows and y length differ");
        if (!(sigma_sq > 0.0)) throw std::domain_error("CoefficientPosterior: sigma_sq must be positive");
    }

    void accumulate_normal_matrix(const SparseDesign& design, double sigma_sq, Eigen::MatrixXd& p) {
        for (long r = 0; r < design.n_rows; ++r) {
            const auto& row = design.rows[static_cast<std::size_t>(r)];
            for (const auto& a : row)
                for (const auto& b : row) p(a.col, b.col) += a.value * b.value / sigma_sq;
        }
    }

    static double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
        return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }

    int n_grid_;
    int dim_;
    double jitter_ = 0.0;
    Eigen::VectorXd mean_;
    double half_log_det_ratio_ = 0.0;
    double quad_ = 0.0;
    std::optional<Eigen::LLT<Eigen::MatrixXd>> dense_factor_;
    std::unique_ptr<BandedCholesky> banded_factor_;
};

inline CoefficientPosterior conjugate_update(const SparseDesign& design, const Eigen::VectorXd& y,
                                             double sigma_sq, const GridCovariance& prior) {
    return CoefficientPosterior(design, y, sigma_sq, prior);
}

inline CoefficientPosterior conjugate_update(const SparseDesign& design, const Eigen::VectorXd& y,
                                             double sigma_sq, const PrecisionOperator& prior) {
    return CoefficientPosterior(design, y, sigma_sq, prior);
}

inline CoefficientPosterior conjugate_update_at(const ModelBackend& model, int n_grid, double kappa,
                                                const Dataset& data) {
    const SparseDesign design = design_matrix(data.x, n_grid, data.dim);
    if (std::holds_alternative<GpiBackend>(model))
        return CoefficientPosterior(design, data.y, data.sigma_sq,
                                    build_prior(std::get<GpiBackend>(model), n_grid, kappa));
    return CoefficientPosterior(design, data.y, data.sigma_sq,
                                build_prior(std::get<SpdeBackend>(model), n_grid, kappa));
}

// state-dependent part of log p(N, kappa | y): log p(N) + log p(kappa) + data evidence
inline double log_marginal(const Dataset& data, const HyperPrior& prior, const ModelBackend& model,
                           int n_grid, double kappa) {
    const double lp_n = log_prior_n(prior, n_grid);
    const double lp_k = log_prior_density(prior.kappa, kappa);
    if (!std::isfinite(lp_n) || !std::isfinite(lp_k))
        return -std::numeric_limits<double>::infinity();
    return lp_n + lp_k + conjugate_update_at(model, n_grid, kappa, data).data_log_evidence();
}

// ---------------------------------------------------------------------------
// Metropolis-Hastings over (N, kappa) with independence proposals from the prior.
// Proposal density equals the prior factor of the target, so the acceptance
// ratio reduces to the difference of data evidences.

struct MhState {
    int n_grid = 0;
    double kappa = 0.0;
    double data_evidence = -std::numeric_limits<double>::infinity();
};

class EvidenceCache {
  public:
    // kappa keyed to 1e-12 resolution; proposals that repeat a state hit the cache
    double data_evidence(const ModelBackend& model, const Dataset& data, int n_grid, double kappa) {
        const Key key{n_grid, static_cast<std::int64_t>(std::llround(kappa * 1e12))};
        auto it = map_.find(key);
        if (it != map_.end()) return it->second;
        const double value = conjugate_update_at(model, n_grid, kappa, data).data_log_evidence();
        map_.emplace(key, value);
        return value;
    }

    std::size_t size() const { return map_.size(); }

  private:
    struct Key {
        int n;
        std::int64_t kq;
        bool operator==(const Key& o) const { return n == o.n && kq == o.kq; }
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::uint64_t h = splitmix64(static_cast<std::uint64_t>(k.n) + 0x9e3779b97f4a7c15ull);
            h ^= splitmix64(static_cast<std::uint64_t>(k.kq));
            return static_cast<std::size_t>(h);
        }
    };
    std::unordered_map<Key, double, KeyHash> map_;
};

struct MhResult {
    MhState state;
    bool accepted = false;
    bool numerical_rejection = false;
};

inline MhResult mh_step(const MhState& current, const Dataset& data, const HyperPrior& prior,
                        const ModelBackend& model, EvidenceCache& cache, Rng& rng) {
    const int n_prop = sample_n(prior, rng);
    const double k_prop = sample_kappa(prior.kappa, rng);
    MhResult out{current, false, false};
    double ev = 0.0;
    try {
        ev = cache.data_evidence(model, data, n_prop, k_prop);
    } catch (const SingularMatrixError&) {
        out.numerical_rejection = true; // treat as zero-density proposal
        return out;
    }
    const double log_alpha = ev - current.data_evidence;
    if (log_alpha >= 0.0 || std::log(rng.uniform_pos()) < log_alpha) {
        out.state = MhState{n_prop, k_prop, ev};
        out.accepted = true;
    }
    return out;
}

// deterministic initial state: evidence maximizer over the N support times a
// small set of prior-typical kappa values (keeps low-prior-mass but
// high-evidence states reachable despite the independence proposal)
inline std::vector<double> kappa_init_candidates(const KappaPrior& prior) {
    if (std::holds_alternative<DiscretePrior>(prior)) return std::get<DiscretePrior>(prior).values;
    const auto& g = std::get<GammaPrior>(prior);
    const double mean = g.shape * g.scale;
    const double sd = std::sqrt(g.shape) * g.scale;
    std::vector<double> cand{mean, mean + sd, mean + 2.0 * sd, std::max(mean - sd, mean / 4.0)};
    return cand;
}

inline MhState map_initial_state(const Dataset& data, const HyperPrior& prior, const ModelBackend& model,
                                 EvidenceCache& cache) {
    MhState best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int n : prior.n_support) {
        for (double k : kappa_init_candidates(prior.kappa)) {
            double ev;
            try {
                ev = cache.data_evidence(model, data, n, k);
            } catch (const SingularMatrixError&) {
                continue;
            }
            const double score = ev + log_prior_n(prior, n) + log_prior_density(prior.kappa, k);
            if (score > best_score) {
                best_score = score;
                best = MhState{n, k, ev};
            }
        }
    }
    if (!std::isfinite(best_score))
        throw std::runtime_error("map_initial_state: no admissible initial state");
    return best;
}

struct ChainSample {
    int n_grid = 0;
    double kappa = 0.0;
    Eigen::VectorXd coeffs;
};

struct ChainRecord {
    std::vector<ChainSample> samples; // post burn-in
    double acceptance_rate = 0.0;
    long iterations = 0;
    long burn_in = 0;
    long numerical_rejections = 0;
    std::uint64_t seed = 0;
};

// Algorithm: at each iteration propose (N', kappa') from the prior, accept by
// the evidence ratio, then draw w from the coefficient posterior at the
// current state. The posterior factor is cached per accepted state; evidence
// evaluations for proposals are O(n + N^{3 dim}).
inline ChainRecord run_sampler(const Dataset& data, const HyperPrior& prior, const ModelBackend& model,
                               long iterations, long burn_in, Rng& rng, std::uint64_t seed_label = 0) {
    validate(data);
    validate(prior);
    if (iterations <= 0 || burn_in < 0 || burn_in >= iterations)
        throw std::domain_error("run_sampler: need 0 <= burn_in < iterations");
    if (backend_dim(model) != data.dim)
        throw std::domain_error("run_sampler: backend and data dimension differ");

    EvidenceCache cache;
    MhState state = map_initial_state(data, prior, model, cache);
    auto post = std::make_unique<CoefficientPosterior>(
        conjugate_update_at(model, state.n_grid, state.kappa, data));

    ChainRecord record;
    record.iterations = iterations;
    record.burn_in = burn_in;
    record.seed = seed_label;
    record.samples.reserve(static_cast<std::size_t>(iterations - burn_in));
    long accepted = 0;
    for (long it = 0; it < iterations; ++it) {
        MhResult step = mh_step(state, data, prior, model, cache, rng);
        if (step.numerical_rejection) ++record.numerical_rejections;
        if (step.accepted) {
            ++accepted;
            state = step.state;
            post = std::make_unique<CoefficientPosterior>(
                conjugate_update_at(model, state.n_grid, state.kappa, data));
        }
        BasisExpansion w = post->sample(rng);
        if (it >= burn_in)
            record.samples.push_back(ChainSample{state.n_grid, state.kappa, std::move(w.coeffs)});
    }
    record.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(iterations);
    return record;
}

// ---------------------------------------------------------------------------
// posterior predictive summaries over a fixed query set

struct PredictiveSummary {
    Eigen::MatrixXd query;      // p x dim
    Eigen::VectorXd mean;       // p
    Eigen::MatrixXd quantiles;  // p x levels
    std::vector<double> levels;
};

inline PredictiveSummary posterior_predictive(const ChainRecord& chain, const Eigen::MatrixXd& query,
                                              int dim, std::vector<double> levels) {
    if (chain.samples.empty()) throw std::domain_error("posterior_predictive: empty chain");
    if (query.cols() != dim) throw std::domain_error("posterior_predictive: query must have dim columns");
    for (double lv : levels)
        if (lv < 0.0 || lv > 1.0) throw std::domain_error("posterior_predictive: level out of [0, 1]");
    const long p = query.rows();
    const std::size_t s = chain.samples.size();
    Eigen::MatrixXd values(p, static_cast<long>(s));
    int cached_n = -1;
    SparseDesign design;
    for (std::size_t j = 0; j < s; ++j) {
        const ChainSample& cs = chain.samples[j];
        if (cs.n_grid != cached_n) {
            design = design_matrix(query, cs.n_grid, dim);
            cached_n = cs.n_grid;
        }
        for (long r = 0; r < p; ++r) {
            double acc = 0.0;
            for (const auto& e : design.rows[static_cast<std::size_t>(r)])
                acc += e.value * cs.coeffs[e.col];
            values(r, static_cast<long>(j)) = acc;
        }
    }
    PredictiveSummary out;
    out.query = query;
    out.levels = levels;
    out.mean = values.rowwise().mean();
    out.quantiles.resize(p, static_cast<long>(levels.size()));
    std::vector<double> row(s);
    for (long r = 0; r < p; ++r) {
        for (std::size_t j = 0; j < s; ++j) row[j] = values(r, static_cast<long>(j));
        for (std::size_t q = 0; q < levels.size(); ++q)
            out.quantiles(r, static_cast<long>(q)) = quantile(row, levels[q]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// exhaustive posterior scan over an explicit (N, kappa) product grid

struct ScanTable {
    std::vector<int> n_values;
    std::vector<double> kappa_values;
    Eigen::MatrixXd log_unnormalized; // rows: N, cols: kappa
    Eigen::MatrixXd posterior;        // normalized to sum 1 over the grid
    Eigen::VectorXd n_marginal;
    Eigen::VectorXd kappa_marginal;
};

// every scanned N must carry prior mass; kappa prior is evaluated as a density
// on the scan grid (the grid plays the role of a quadrature rule)
inline ScanTable marginal_scan(const Dataset& data, const HyperPrior& prior, const ModelBackend& model,
                               const std::vector<int>& n_values, const std::vector<double>& kappa_values) {
    validate(data);
    validate(prior);
    if (n_values.empty() || kappa_values.empty())
        throw std::domain_error("marginal_scan: empty scan grid");
    ScanTable out;
    out.n_values = n_values;
    out.kappa_values = kappa_values;
    const long rows = static_cast<long>(n_values.size());
    const long cols = static_cast<long>(kappa_values.size());
    out.log_unnormalized.resize(rows, cols);
    for (long i = 0; i < rows; ++i) {
        const double lp_n = log_prior_n(prior, n_values[static_cast<std::size_t>(i)]);
        if (!std::isfinite(lp_n))
            throw std::domain_error("marginal_scan: scanned N outside prior support");
        for (long j = 0; j < cols; ++j) {
            const double kappa = kappa_values[static_cast<std::size_t>(j)];
            const double lp_k = log_prior_density(prior.kappa, kappa);
            const double ev = conjugate_update_at(model, n_values[static_cast<std::size_t>(i)], kappa, data)
                                  .data_log_evidence();
            out.log_unnormalized(i, j) = lp_n + lp_k + ev;
        }
    }
    Eigen::Map<const Eigen::VectorXd> flat(out.log_unnormalized.data(), rows * cols);
    const double z = log_sum_exp(flat);
    out.posterior = (out.log_unnormalized.array() - z).exp();
    out.n_marginal = out.posterior.rowwise().sum();
    out.kappa_marginal = out.posterior.colwise().sum();
    return out;
}

} // namespace frgp
