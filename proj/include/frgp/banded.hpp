#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace frgp {

struct SingularMatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/* Symmetric banded matrix in LAPACK-style lower storage: band(r, j) holds
 * A(j + r, j) for 0 <= r <= bw.  Only the lower triangle is stored. */
class BandedMatrix {
  public:
    BandedMatrix() = default;
    BandedMatrix(int n, int bw)
        : n_(n), bw_(bw), band_(Eigen::MatrixXd::Zero(bw + 1, n)) {
        if (n < 1 || bw < 0 || bw >= n)
            throw std::domain_error("BandedMatrix: need 0 <= bw < n");
    }

    int size() const { return n_; }
    int bandwidth() const { return bw_; }

    double operator()(int i, int j) const {
        if (i < j) std::swap(i, j);
        return i - j > bw_ ? 0.0 : band_(i - j, j);
    }
    double& at(int i, int j) {
        if (i < j) std::swap(i, j);
        if (i - j > bw_) throw std::domain_error("BandedMatrix: entry outside band");
        return band_(i - j, j);
    }

    Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, n_);
        for (int j = 0; j < n_; ++j)
            for (int r = 0; r <= bw_ && j + r < n_; ++r) {
                out(j + r, j) = band_(r, j);
                out(j, j + r) = band_(r, j);
            }
        return out;
    }

    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
        if (x.size() != n_) throw std::domain_error("BandedMatrix: length mismatch");
        Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
        for (int j = 0; j < n_; ++j) {
            y[j] += band_(0, j) * x[j];
            for (int r = 1; r <= bw_ && j + r < n_; ++r) {
                y[j + r] += band_(r, j) * x[j];
                y[j] += band_(r, j) * x[j + r];
            }
        }
        return y;
    }

    double quadratic_form(const Eigen::VectorXd& x) const { return x.dot(multiply(x)); }

  private:
    friend class BandedCholesky;
    int n_ = 0;
    int bw_ = 0;
    Eigen::MatrixXd band_;
};

/* Cholesky factorization A = L L^T for symmetric positive definite banded A.
 * No pivoting and no regularization: a nonpositive pivot throws
 * SingularMatrixError so that assembly bugs surface instead of being masked. */
class BandedCholesky {
  public:
    explicit BandedCholesky(const BandedMatrix& a) : n_(a.n_), bw_(a.bw_), l_(a.band_) {
        for (int j = 0; j < n_; ++j) {
            double d = l_(0, j);
            for (int k = std::max(0, j - bw_); k < j; ++k) {
                const double ljk = l_(j - k, k);
                d -= ljk * ljk;
            }
            if (!(d > 0.0))
                throw SingularMatrixError("banded Cholesky: nonpositive pivot at column "
                                          + std::to_string(j));
            const double dj = std::sqrt(d);
            l_(0, j) = dj;
            for (int i = j + 1; i <= std::min(n_ - 1, j + bw_); ++i) {
                double s = l_(i - j, j);
                for (int k = std::max(0, i - bw_); k < j; ++k)
                    s -= l_(i - k, k) * l_(j - k, k);
                l_(i - j, j) = s / dj;
            }
        }
    }

    int size() const { return n_; }

    double log_det() const {
        // log |A| = 2 sum log L_jj
        double s = 0.0;
        for (int j = 0; j < n_; ++j) s += std::log(l_(0, j));
        return 2.0 * s;
    }

    // L z = b
    Eigen::VectorXd solve_lower(Eigen::VectorXd b) const {
        for (int j = 0; j < n_; ++j) {
            b[j] /= l_(0, j);
            for (int r = 1; r <= bw_ && j + r < n_; ++r) b[j + r] -= l_(r, j) * b[j];
        }
        return b;
    }

    // L^T z = b
    Eigen::VectorXd solve_upper(Eigen::VectorXd b) const {
        for (int j = n_ - 1; j >= 0; --j) {
            double s = b[j];
            for (int r = 1; r <= bw_ && j + r < n_; ++r) s -= l_(r, j) * b[j + r];
            b[j] = s / l_(0, j);
        }
        return b;
    }

    // A x = b
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        return solve_upper(solve_lower(b));
    }

  private:
    int n_;
    int bw_;
    Eigen::MatrixXd l_; // factor in the same banded layout
};

} // namespace frgp
