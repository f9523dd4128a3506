#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "frgp/banded.hpp"
#include "frgp/basis.hpp"
#include "frgp/rng.hpp"

namespace frgp {

/* Finite-element machinery for the 1d Whittle-Matern SPDE prior
 * w^N ~ N(0, Q_{beta/2}^{-1}) on the hat-function coefficients, with
 *
 *   C = (1/2N) diag(1, 2, ..., 2, 1)           (lumped mass)
 *   G = N * tridiag(-1, 2, -1), first and last rows zero
 *   B = kappa^2 C + G
 *   Q_1 = B^T C^{-1} B,   Q_m = B^T C^{-1} Q_{m-1} C^{-1} B
 *
 * Q_{beta/2} is banded with bandwidth beta. */

struct FemMatrices {
    int n_grid = 0;
    Eigen::VectorXd mass_lumped;    // diagonal of C
    Eigen::MatrixXd mass_consistent; // <psi_i, psi_j>, for reference only
    Eigen::MatrixXd stiffness;      // G
};

namespace detail {

// C diagonal and G for any N >= 1; the public builder adds the N >= 2 gate
inline void fem_raw(int N, Eigen::VectorXd& c_diag, Eigen::MatrixXd& g) {
    const int m = N + 1;
    c_diag = Eigen::VectorXd::Constant(m, 1.0 / N);
    c_diag[0] = c_diag[m - 1] = 0.5 / N;
    g = Eigen::MatrixXd::Zero(m, m);
    for (int i = 1; i < m - 1; ++i) {
        g(i, i - 1) = -static_cast<double>(N);
        g(i, i) = 2.0 * N;
        g(i, i + 1) = -static_cast<double>(N);
    }
}

} // namespace detail

inline FemMatrices fem_matrices(int N) {
    if (N < 2) throw std::domain_error("fem_matrices: N must be >= 2");
    FemMatrices fem;
    fem.n_grid = N;
    detail::fem_raw(N, fem.mass_lumped, fem.stiffness);
    const int m = N + 1;
    const double h = 1.0 / N;
    fem.mass_consistent = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        fem.mass_consistent(i, i) = (i == 0 || i == m - 1) ? h / 3.0 : 2.0 * h / 3.0;
        if (i + 1 < m) {
            fem.mass_consistent(i, i + 1) = h / 6.0;
            fem.mass_consistent(i + 1, i) = h / 6.0;
        }
    }
    return fem;
}

struct PrecisionOperator {
    int n_grid = 0;
    double kappa = 0.0;
    int beta = 2;
    BandedMatrix band;
};

inline PrecisionOperator precision(int N, double kappa, int beta) {
    if (N < 1) throw std::domain_error("precision: N must be >= 1");
    if (kappa <= 0.0)
        throw std::domain_error("precision: kappa must be positive (Q is singular at kappa = 0)");
    if (beta < 2 || beta % 2 != 0)
        throw std::domain_error("precision: beta must be a positive even integer");
    Eigen::VectorXd c_diag;
    Eigen::MatrixXd g;
    detail::fem_raw(N, c_diag, g);
    const int m = N + 1;
    Eigen::MatrixXd b = kappa * kappa * Eigen::MatrixXd(c_diag.asDiagonal()) + g;
    const Eigen::VectorXd c_inv = c_diag.cwiseInverse();
    Eigen::MatrixXd q = b.transpose() * c_inv.asDiagonal() * b;
    for (int step = 1; step < beta / 2; ++step)
        q = b.transpose() * c_inv.asDiagonal() * q * c_inv.asDiagonal() * b;

    PrecisionOperator op;
    op.n_grid = N;
    op.kappa = kappa;
    op.beta = beta;
    const int bw = std::min(beta, m - 1);
    op.band = BandedMatrix(m, bw);
    // the recursion produces exact zeros beyond the band; anything else is an
    // assembly bug
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (std::abs(i - j) <= bw) {
                if (i >= j) op.band.at(i, j) = q(i, j);
            } else if (q(i, j) != 0.0) {
                throw std::logic_error("precision: entry outside bandwidth beta");
            }
        }
    return op;
}

// exact draw w = L^{-T} z with Q = L L^T and z standard normal
inline BasisExpansion sample_prior(const PrecisionOperator& q, Rng& rng) {
    const BandedCholesky chol(q.band);
    Eigen::VectorXd z(q.band.size());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
    BasisExpansion e;
    e.n_grid = q.n_grid;
    e.dim = 1;
    e.coeffs = chol.solve_upper(z);
    return e;
}

inline double rkhs_norm_sq(const Eigen::VectorXd& w, const PrecisionOperator& q) {
    if (w.size() != q.band.size()) throw std::domain_error("rkhs_norm_sq: length mismatch");
    return q.band.quadratic_form(w);
}

/* a_0 = 0, a_1 = 1, a_i = (2 + kappa^2/N^2) a_{i-1} - a_{i-2}.  The terms grow
 * like r^i with r > 1, so they are accumulated in extended precision before
 * any ratios are formed. */
inline std::vector<long double> a_sequence_ext(int N, double kappa, int upto) {
    if (upto < 1) throw std::domain_error("a_sequence: upto must be >= 1");
    if (kappa < 0.0) throw std::domain_error("a_sequence: kappa must be nonnegative");
    const long double c = 2.0L + static_cast<long double>(kappa) * kappa / (static_cast<long double>(N) * N);
    std::vector<long double> a(upto + 1);
    a[0] = 0.0L;
    a[1] = 1.0L;
    for (int i = 2; i <= upto; ++i) a[i] = c * a[i - 1] - a[i - 2];
    return a;
}

inline Eigen::VectorXd a_sequence(int N, double kappa, int upto) {
    const auto ext = a_sequence_ext(N, kappa, upto);
    Eigen::VectorXd a(upto + 1);
    for (int i = 0; i <= upto; ++i) a[i] = static_cast<double>(ext[i]);
    return a;
}

// (X_N)_{ij} = a_{i ^ j} a_{N - (i v j)} / a_N, 1-indexed over the interior
inline Eigen::MatrixXd x_matrix(int N, double kappa) {
    if (N < 2) throw std::domain_error("x_matrix: N must be >= 2");
    const auto a = a_sequence_ext(N, kappa, N);
    Eigen::MatrixXd x(N - 1, N - 1);
    for (int i = 1; i <= N - 1; ++i)
        for (int j = 1; j <= N - 1; ++j) {
            const int lo = std::min(i, j), hi = std::max(i, j);
            x(i - 1, j - 1) = static_cast<double>(a[lo] * a[N - hi] / a[N]);
        }
    return x;
}

// rows (a_{N-k}, a_k) / a_N for k = 1..N-1
inline Eigen::MatrixXd y_matrix(int N, double kappa) {
    if (N < 2) throw std::domain_error("y_matrix: N must be >= 2");
    const auto a = a_sequence_ext(N, kappa, N);
    Eigen::MatrixXd y(N - 1, 2);
    for (int k = 1; k <= N - 1; ++k) {
        y(k - 1, 0) = static_cast<double>(a[N - k] / a[N]);
        y(k - 1, 1) = static_cast<double>(a[k] / a[N]);
    }
    return y;
}

// interior tridiagonal T = (X_N)^{-1}: diagonal 2 + kappa^2/N^2, off-diagonal -1
inline Eigen::MatrixXd interior_tridiagonal(int N, double kappa) {
    if (N < 2) throw std::domain_error("interior_tridiagonal: N must be >= 2");
    const double c = 2.0 + kappa * kappa / (static_cast<double>(N) * N);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(N - 1, N - 1);
    for (int i = 0; i < N - 1; ++i) {
        t(i, i) = c;
        if (i > 0) t(i, i - 1) = -1.0;
        if (i + 1 < N - 1) t(i, i + 1) = -1.0;
    }
    return t;
}

struct ConditionalMoments {
    Eigen::VectorXd mean;      // E(w_{1:N-1} | w_0, w_N)
    Eigen::MatrixXd covariance; // X_N^beta / N^(2 beta - 1)
};

/* Conditional law of the interior coefficients given the endpoints:
 *   Var = X_N^beta / N^(2 beta - 1)
 *   E   = sum_{j=0}^{beta/2 - 1} (kappa^2/N^2 X_N)^j Y_N (w_0, w_N)^T
 * The mean sum terminates at beta/2 - 1: unrolling the recursion
 * E(w | w_0, w_N) = Y_N (w_0, w_N)^T + (kappa^2/N^2) X_N E(u | u_0, u_N)
 * once per halving of beta leaves exactly beta/2 terms. */
inline ConditionalMoments conditional_moments(double w0, double wN, int N, double kappa,
                                              int beta) {
    if (N < 3) throw std::domain_error("conditional_moments: N must be >= 3");
    if (kappa <= 0.0) throw std::domain_error("conditional_moments: kappa must be positive");
    if (beta < 2 || beta % 2 != 0)
        throw std::domain_error("conditional_moments: beta must be a positive even integer");
    const Eigen::MatrixXd x = x_matrix(N, kappa);
    const Eigen::MatrixXd y = y_matrix(N, kappa);
    const Eigen::Vector2d ends(w0, wN);

    Eigen::MatrixXd x_pow = Eigen::MatrixXd::Identity(N - 1, N - 1);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(N - 1);
    const double scale = kappa * kappa / (static_cast<double>(N) * N);
    for (int j = 0; j < beta / 2; ++j) {
        mean += x_pow * (y * ends);
        x_pow = scale * (x_pow * x);
    }

    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(N - 1, N - 1);
    for (int j = 0; j < beta; ++j) cov = cov * x;
    cov /= std::pow(static_cast<double>(N), 2.0 * beta - 1.0);

    return {std::move(mean), std::move(cov)};
}

} // namespace frgp
