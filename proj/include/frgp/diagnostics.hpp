#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "frgp/basis.hpp"
#include "frgp/gpi.hpp"
#include "frgp/rng.hpp"
#include "frgp/spde.hpp"
#include "frgp/stats.hpp"

namespace frgp {

using ScalarFn = std::function<double(double)>;

// Best uniform linear approximation error of f on [a, b], solved exactly on a
// uniform discretization: the discrete Chebyshev error equals the largest
// three-point equioscillation error, max over i<j<k of half the deviation of
// f(x_j) from the chord through (x_i, f_i) and (x_k, f_k). The default 257-point
// grid contains every midpoint of dyadic subintervals, so quadratics are exact.
inline double minimax_linear_error(const ScalarFn& f, double a, double b, int grid_pts = 257) {
    if (!(b > a)) throw std::domain_error("minimax_linear_error: need b > a");
    if (grid_pts < 3) throw std::domain_error("minimax_linear_error: need at least 3 grid points");
    std::vector<double> x(static_cast<std::size_t>(grid_pts));
    std::vector<double> fx(static_cast<std::size_t>(grid_pts));
    for (int i = 0; i < grid_pts; ++i) {
        x[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / (grid_pts - 1);
        fx[static_cast<std::size_t>(i)] = f(x[static_cast<std::size_t>(i)]);
    }
    double best = 0.0;
    for (int i = 0; i < grid_pts; ++i) {
        for (int k = i + 2; k < grid_pts; ++k) {
            const double slope = (fx[static_cast<std::size_t>(k)] - fx[static_cast<std::size_t>(i)]) /
                                 (x[static_cast<std::size_t>(k)] - x[static_cast<std::size_t>(i)]);
            double dev = 0.0;
            for (int j = i + 1; j < k; ++j) {
                const double chord = fx[static_cast<std::size_t>(i)] +
                                     slope * (x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(i)]);
                dev = std::max(dev, std::fabs(fx[static_cast<std::size_t>(j)] - chord));
            }
            best = std::max(best, dev / 2.0);
        }
    }
    return best;
}

struct UnReport {
    int M = 0;
    std::vector<double> m_values;
    double ratio = 0.0; // M * max m_k^2 / sum m_k^2; 0 when all m_k vanish
    double K_used = 0.0;
    bool holds = false;
};

// uniform-nonlinearity check: M * max_k m_k^2 <= K * sum_k m_k^2 over the
// partition I_k = [k/M, (k+1)/M]
inline UnReport un_condition_check(const ScalarFn& f, int M, double K, int grid_pts = 257) {
    if (M < 2) throw std::domain_error("un_condition_check: need M >= 2");
    UnReport report;
    report.M = M;
    report.K_used = K;
    report.m_values.resize(static_cast<std::size_t>(M));
    double max_sq = 0.0;
    double sum_sq = 0.0;
    for (int k = 0; k < M; ++k) {
        const double mk = minimax_linear_error(f, static_cast<double>(k) / M,
                                               static_cast<double>(k + 1) / M, grid_pts);
        report.m_values[static_cast<std::size_t>(k)] = mk;
        max_sq = std::max(max_sq, mk * mk);
        sum_sq += mk * mk;
    }
    report.ratio = sum_sq > 0.0 ? M * max_sq / sum_sq : 0.0;
    report.holds = M * max_sq <= K * sum_sq || sum_sq == 0.0;
    return report;
}

// sup over a dense probe grid of |f - hat-function interpolant of f at level N|
inline double sup_interp_error(const ScalarFn& f, int N, long probe_pts = 100000) {
    if (N < 1) throw std::domain_error("sup_interp_error: N must be >= 1");
    if (probe_pts < 2) throw std::domain_error("sup_interp_error: need at least 2 probe points");
    const BasisExpansion h = interpolate_function(f, N);
    double sup = 0.0;
    for (long i = 0; i <= probe_pts; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(probe_pts);
        sup = std::max(sup, std::fabs(f(x) - evaluate(h, x)));
    }
    return sup;
}

// exact L2^2 norm of a piecewise-linear path on the 1-d grid:
// integral over each cell of width 1/N of the square of the linear segment
inline double pw_linear_l2_sq(const Eigen::VectorXd& w, int N) {
    if (w.size() != N + 1) throw std::domain_error("pw_linear_l2_sq: length must be N + 1");
    double acc = 0.0;
    for (int i = 0; i < N; ++i)
        acc += (w[i] * w[i] + w[i] * w[i + 1] + w[i + 1] * w[i + 1]) / (3.0 * N);
    return acc;
}

struct L2SupReport {
    double lhs = 0.0; // ||h - f||_2^2
    double rhs = 0.0; // (1/32) min(sup^2 / K, N^2 sup^3 / (c2f K^{3/2}))
    double sup = 0.0;
    bool holds = false;
};

// lower bound of the squared L2 distance in terms of the sup distance, for f
// satisfying the uniform-nonlinearity condition with constants K and c2f
inline L2SupReport l2_vs_sup_check(const BasisExpansion& h, const ScalarFn& f, double K, double c2f) {
    if (h.dim != 1) throw std::domain_error("l2_vs_sup_check: one-dimensional expansions only");
    const int N = h.n_grid;
    L2SupReport report;
    // composite Simpson on 2^12 panels; the integrand is piecewise smooth with
    // kinks only at the N grid nodes, which the dyadic panel count resolves
    const long panels = 1L << 12;
    auto sq_diff = [&](double x) {
        const double d = evaluate(h, x) - f(x);
        return d * d;
    };
    double integral = 0.0;
    for (long p = 0; p < panels; ++p) {
        const double x0 = static_cast<double>(p) / static_cast<double>(panels);
        const double x1 = static_cast<double>(p + 1) / static_cast<double>(panels);
        integral += (x1 - x0) / 6.0 * (sq_diff(x0) + 4.0 * sq_diff((x0 + x1) / 2.0) + sq_diff(x1));
    }
    report.lhs = integral;
    const long probe = 1L << 16;
    double sup = 0.0;
    for (long i = 0; i <= probe; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(probe);
        sup = std::max(sup, std::fabs(evaluate(h, x) - f(x)));
    }
    report.sup = sup;
    const double s2 = sup * sup;
    report.rhs = std::min(s2 / K, static_cast<double>(N) * N * s2 * sup / (c2f * std::pow(K, 1.5))) / 32.0;
    report.holds = report.lhs >= report.rhs || sup == 0.0;
    return report;
}

struct EigenFormulaReport {
    double dev_cos_k_over_n = 0.0;     // vs 2 + kappa^2/N^2 - 2 cos(k/N)
    double dev_cos_k_pi_over_n = 0.0;  // vs 2 + kappa^2/N^2 - 2 cos(k pi/N)
    std::string matching_form;         // whichever candidate agrees to 1e-8, if any
};

// dense eigensolve of the interior tridiagonal T, compared against the two
// candidate closed forms for its spectrum
inline EigenFormulaReport eigen_formula_check(int N, double kappa) {
    if (N < 3) throw std::domain_error("eigen_formula_check: N must be >= 3");
    const Eigen::MatrixXd t = interior_tridiagonal(N, kappa);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(t);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigen_formula_check: eigensolver failed");
    Eigen::VectorXd computed = solver.eigenvalues(); // ascending
    const double shift = 2.0 + kappa * kappa / (static_cast<double>(N) * N);
    std::vector<double> form_a, form_b;
    for (int k = 1; k <= N - 1; ++k) {
        form_a.push_back(shift - 2.0 * std::cos(static_cast<double>(k) / N));
        form_b.push_back(shift - 2.0 * std::cos(M_PI * static_cast<double>(k) / N));
    }
    std::sort(form_a.begin(), form_a.end());
    std::sort(form_b.begin(), form_b.end());
    EigenFormulaReport report;
    for (int i = 0; i < N - 1; ++i) {
        report.dev_cos_k_over_n =
            std::max(report.dev_cos_k_over_n, std::fabs(computed[i] - form_a[static_cast<std::size_t>(i)]));
        report.dev_cos_k_pi_over_n =
            std::max(report.dev_cos_k_pi_over_n,
                     std::fabs(computed[i] - form_b[static_cast<std::size_t>(i)]));
    }
    if (report.dev_cos_k_pi_over_n < 1e-8)
        report.matching_form = "2 + kappa^2/N^2 - 2 cos(k pi / N)";
    else if (report.dev_cos_k_over_n < 1e-8)
        report.matching_form = "2 + kappa^2/N^2 - 2 cos(k / N)";
    else
        report.matching_form = "neither";
    return report;
}

struct SchurReport {
    double dev_covariance = 0.0; // closed form vs dense Schur complement
    double dev_mean = 0.0;       // closed-form conditional mean vs -Q_II^{-1} Q_IE w_E
};

// conditional law of the interior coefficients given the endpoints: the closed
// forms (powers of X_N, rows of Y_N) against a dense partition of Q
inline SchurReport schur_identity_check(int N, double kappa, int beta) {
    if (N < 2) throw std::domain_error("schur_identity_check: N must be >= 2");
    const Eigen::MatrixXd q = precision(N, kappa, beta).band.to_dense();
    Eigen::MatrixXd q_ii(N - 1, N - 1);
    Eigen::MatrixXd q_ie(N - 1, 2);
    for (int i = 1; i < N; ++i) {
        for (int j = 1; j < N; ++j) q_ii(i - 1, j - 1) = q(i, j);
        q_ie(i - 1, 0) = q(i, 0);
        q_ie(i - 1, 1) = q(i, N);
    }
    const Eigen::MatrixXd cov_dense = q_ii.llt().solve(Eigen::MatrixXd::Identity(N - 1, N - 1));
    SchurReport report;
    const Eigen::Vector2d w_e(0.7, -1.3); // arbitrary endpoint values exercise the mean map
    const ConditionalMoments cm = conditional_moments(w_e[0], w_e[1], N, kappa, beta);
    report.dev_covariance = (cm.covariance - cov_dense).cwiseAbs().maxCoeff();
    const Eigen::VectorXd mean_dense = -q_ii.llt().solve(q_ie * w_e);
    report.dev_mean = (cm.mean - mean_dense).cwiseAbs().maxCoeff();
    return report;
}

// ---------------------------------------------------------------------------
// small-ball Monte Carlo probes

enum class BallNorm { SupAtGrid, L2 };

struct SmallBallResult {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    long successes = 0;
    long draws = 0;
};

namespace detail {

inline bool ball_event(const BasisExpansion& w, double epsilon, BallNorm norm) {
    if (norm == BallNorm::SupAtGrid) return w.coeffs.cwiseAbs().maxCoeff() < epsilon;
    if (w.dim != 1) throw std::domain_error("small_ball_mc: L2 norm implemented for d = 1 only");
    return std::sqrt(pw_linear_l2_sq(w.coeffs, w.n_grid)) < epsilon;
}

template <class Prior>
SmallBallResult small_ball_impl(const Prior& prior, double epsilon, BallNorm norm, long draws,
                                Rng& rng) {
    if (draws < 1000) throw std::domain_error("small_ball_mc: need at least 1000 draws");
    if (!(epsilon > 0.0)) throw std::domain_error("small_ball_mc: epsilon must be positive");
    long successes = 0;
    for (long i = 0; i < draws; ++i) {
        const BasisExpansion w = sample_prior(prior, rng);
        if (ball_event(w, epsilon, norm)) ++successes;
    }
    const WilsonInterval ci = wilson_interval(successes, draws);
    return {ci.estimate, ci.lower, ci.upper, successes, draws};
}

} // namespace detail

inline SmallBallResult small_ball_mc(const PrecisionOperator& prior, double epsilon, BallNorm norm,
                                     long draws, Rng& rng) {
    return detail::small_ball_impl(prior, epsilon, norm, draws, rng);
}

inline SmallBallResult small_ball_mc(const GridCovariance& prior, double epsilon, BallNorm norm,
                                     long draws, Rng& rng) {
    return detail::small_ball_impl(prior, epsilon, norm, draws, rng);
}

// P((Z1, Z2) in [lo1, hi1] x [lo2, hi2]) for centered bivariate normal:
// integrate over z1 the normal density times the conditional-slice probability,
// with composite Gauss-Legendre quadrature
inline double bivariate_normal_rect_prob(const Eigen::Matrix2d& cov, double lo1, double hi1,
                                         double lo2, double hi2) {
    const double s1 = std::sqrt(cov(0, 0));
    const double s2_cond_sq = cov(1, 1) - cov(0, 1) * cov(0, 1) / cov(0, 0);
    if (!(s1 > 0.0) || !(s2_cond_sq > 0.0))
        throw std::domain_error("bivariate_normal_rect_prob: covariance not positive definite");
    const double s2c = std::sqrt(s2_cond_sq);
    const double slope = cov(0, 1) / cov(0, 0);
    const double a = std::max(lo1, -9.0 * s1);
    const double b = std::min(hi1, 9.0 * s1);
    if (!(b > a)) return 0.0;
    // 16-point Gauss-Legendre nodes/weights on [-1, 1]
    static const double nodes[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                    0.9445750230732326, 0.9894009349916499};
    static const double weights[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                      0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                      0.0622535239386479, 0.0271524594117541};
    const int panels = 32;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double pa = a + (b - a) * p / panels;
        const double pb = a + (b - a) * (p + 1) / panels;
        const double mid = (pa + pb) / 2.0;
        const double half = (pb - pa) / 2.0;
        for (int q = 0; q < 8; ++q) {
            for (int sign = -1; sign <= 1; sign += 2) {
                const double x = mid + sign * half * nodes[q];
                const double mu2 = slope * x;
                const double slice = normal_cdf((hi2 - mu2) / s2c) - normal_cdf((lo2 - mu2) / s2c);
                total += weights[q] * half * normal_pdf(x / s1) / s1 * slice;
            }
        }
    }
    return total;
}

} // namespace frgp
