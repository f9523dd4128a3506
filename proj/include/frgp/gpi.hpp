#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "frgp/basis.hpp"
#include "frgp/kernels.hpp"
#include "frgp/linalg.hpp"
#include "frgp/rng.hpp"

namespace frgp {

/* Grid covariance G_N of a stationary kernel evaluated on the regular grid:
 * Toeplitz for d = 1, block-Toeplitz with Toeplitz blocks for d = 2 under the
 * row-major (j1 slowest) multi-index ordering.  The generator table is the
 * authoritative representation; the dense matrix is materialized on demand. */
struct GridCovariance {
    int n_grid = 0;
    int dim = 1;
    KernelSpec kernel;
    // generator(p, q) = k(sqrt(p^2 + q^2)/N); d = 1 uses row 0 only
    Eigen::MatrixXd generator;

    double k0() const { return generator(0, 0); }

    int size() const { return dim == 1 ? n_grid + 1 : (n_grid + 1) * (n_grid + 1); }

    double entry(int i, int j) const {
        if (dim == 1) return generator(0, std::abs(i - j));
        const int m = n_grid + 1;
        return generator(std::abs(i / m - j / m), std::abs(i % m - j % m));
    }

    Eigen::MatrixXd to_dense() const {
        const int n = size();
        Eigen::MatrixXd out(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) out(i, j) = out(j, i) = entry(i, j);
        return out;
    }
};

inline GridCovariance grid_covariance(int N, int d, const KernelSpec& kernel) {
    if (N < 1) throw std::domain_error("grid_covariance: N must be >= 1");
    if (d != 1 && d != 2) throw std::domain_error("grid_covariance: dim must be 1 or 2");
    validate(kernel);
    GridCovariance cov;
    cov.n_grid = N;
    cov.dim = d;
    cov.kernel = kernel;
    const int m = N + 1;
    if (d == 1) {
        cov.generator = Eigen::MatrixXd::Zero(1, m);
        for (int q = 0; q < m; ++q)
            cov.generator(0, q) = kernel_value(static_cast<double>(q) / N, kernel);
    } else {
        cov.generator = Eigen::MatrixXd::Zero(m, m);
        for (int p = 0; p < m; ++p)
            for (int q = 0; q < m; ++q)
                cov.generator(p, q) =
                    kernel_value(std::hypot(static_cast<double>(p), static_cast<double>(q)) / N,
                                 kernel);
    }
    return cov;
}

// exact draw w = L z with G = L L^T (jitter policy applies on fine grids)
inline BasisExpansion sample_prior(const GridCovariance& cov, Rng& rng,
                                   double* jitter_applied = nullptr) {
    const auto chol = cholesky_with_jitter(cov.to_dense(), cov.k0());
    if (jitter_applied) *jitter_applied = chol.jitter;
    Eigen::VectorXd z(cov.dim == 1 ? cov.n_grid + 1
                                   : (cov.n_grid + 1) * (cov.n_grid + 1));
    for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
    BasisExpansion e;
    e.n_grid = cov.n_grid;
    e.dim = cov.dim;
    e.coeffs = chol.llt.matrixL() * z;
    return e;
}

} // namespace frgp
