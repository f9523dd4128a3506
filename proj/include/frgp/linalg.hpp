#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "frgp/banded.hpp"

namespace frgp {

/* Dense Cholesky with the escalating jitter policy: if LLT fails, retry with
 * lambda * scale added to the diagonal for lambda in {1e-12, 1e-10, 1e-8}
 * (scale is k(0), the diagonal magnitude).  The applied jitter is recorded;
 * exhausting the ladder raises SingularMatrixError. */
struct JitteredCholesky {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0; // absolute value added to the diagonal, 0 if none

    double log_det() const {
        return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    }
};

inline JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& a, double scale = 0.0) {
    JitteredCholesky out;
    out.llt.compute(a);
    if (out.llt.info() == Eigen::Success) return out;
    if (!(scale > 0.0)) {
        scale = a.rows() > 0 ? a.diagonal().cwiseAbs().maxCoeff() : 1.0;
        if (!(scale > 0.0)) scale = 1.0;
    }
    for (double lambda : {1e-12, 1e-10, 1e-8}) {
        const double eps = lambda * scale;
        Eigen::MatrixXd shifted = a;
        shifted.diagonal().array() += eps;
        out.llt.compute(shifted);
        if (out.llt.info() == Eigen::Success) {
            out.jitter = eps;
            return out;
        }
    }
    throw SingularMatrixError("dense Cholesky failed after maximum jitter");
}

// strict Cholesky: no jitter ladder, failure throws
inline Eigen::LLT<Eigen::MatrixXd> cholesky_strict(const Eigen::MatrixXd& a,
                                                   const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw SingularMatrixError(what);
    return llt;
}

// ordinary least squares slope/intercept plus R^2, for timing diagnostics
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::domain_error("fit_line: need two or more paired points");
    const double mx = x.mean(), my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
    const double syy = (y.array() - my).square().sum();
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

} // namespace frgp
