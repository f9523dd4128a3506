#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace frgp {

/* Linear B-spline (hat) basis on the regular grid {j/N : 0 <= j <= N} and its
 * tensor products for d = 2.
 *
 *   psi_j(x) = (1 - N|x - j/N|) * 1{N|x - j/N| <= 1}
 *
 * Multi-indices (j1, ..., jd) are linearized row-major with j1 slowest; the
 * same ordering is used by every module that touches coefficient vectors. */

inline double psi(int j, int N, double x) {
    if (N < 1) throw std::domain_error("psi: N must be >= 1");
    if (j < 0 || j > N) throw std::domain_error("psi: j out of [0, N]");
    if (x < 0.0 || x > 1.0) throw std::domain_error("psi: x out of [0, 1]");
    const double u = N * std::fabs(x - static_cast<double>(j) / N);
    return u <= 1.0 ? 1.0 - u : 0.0;
}

struct BasisExpansion {
    int n_grid = 1; // N
    int dim = 1;    // d in {1, 2}
    Eigen::VectorXd coeffs; // length (N+1)^d

    int n_coeffs() const {
        int m = n_grid + 1;
        return dim == 1 ? m : m * m;
    }
};

inline void validate(const BasisExpansion& e) {
    if (e.n_grid < 1) throw std::domain_error("BasisExpansion: N must be >= 1");
    if (e.dim != 1 && e.dim != 2) throw std::domain_error("BasisExpansion: dim must be 1 or 2");
    if (e.coeffs.size() != e.n_coeffs())
        throw std::domain_error("BasisExpansion: coefficient length mismatch");
}

struct DesignEntry {
    int col;
    double value;
};

// Each row holds the <= 2^d nonzero tensor-product basis values at one point;
// rows sum to 1 (partition of unity).
struct SparseDesign {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<std::vector<DesignEntry>> rows;
};

namespace detail {

// 1d cell and node weights at x; points on interior cell boundaries go to the
// left cell, exact zero weights are dropped so grid nodes give a single entry
struct CellWeights {
    int node[2];
    double w[2];
    int count;
};

inline CellWeights cell_weights(double x, int N) {
    if (x < 0.0 || x > 1.0) throw std::domain_error("design: coordinate out of [0, 1]");
    int k = static_cast<int>(std::ceil(x * N)) - 1;
    if (k < 0) k = 0;
    if (k > N - 1) k = N - 1;
    const double t = x * N - k;
    CellWeights cw{};
    cw.count = 0;
    if (1.0 - t != 0.0) { cw.node[cw.count] = k; cw.w[cw.count] = 1.0 - t; ++cw.count; }
    if (t != 0.0) { cw.node[cw.count] = k + 1; cw.w[cw.count] = t; ++cw.count; }
    return cw;
}

} // namespace detail

inline SparseDesign design_matrix(const Eigen::MatrixXd& points, int N, int d) {
    if (N < 1) throw std::domain_error("design_matrix: N must be >= 1");
    if (d != 1 && d != 2) throw std::domain_error("design_matrix: dim must be 1 or 2");
    if (points.cols() != d) throw std::domain_error("design_matrix: point dimension mismatch");
    const int m = N + 1;
    SparseDesign design;
    design.n_rows = static_cast<int>(points.rows());
    design.n_cols = d == 1 ? m : m * m;
    design.rows.resize(design.n_rows);
    for (int i = 0; i < design.n_rows; ++i) {
        const auto c1 = detail::cell_weights(points(i, 0), N);
        if (d == 1) {
            for (int a = 0; a < c1.count; ++a)
                design.rows[i].push_back({c1.node[a], c1.w[a]});
        } else {
            const auto c2 = detail::cell_weights(points(i, 1), N);
            for (int a = 0; a < c1.count; ++a)
                for (int b = 0; b < c2.count; ++b)
                    design.rows[i].push_back({c1.node[a] * m + c2.node[b], c1.w[a] * c2.w[b]});
        }
    }
    return design;
}

inline double evaluate(const BasisExpansion& e, const Eigen::VectorXd& x) {
    validate(e);
    if (x.size() != e.dim) throw std::domain_error("evaluate: dimension mismatch");
    const auto c1 = detail::cell_weights(x[0], e.n_grid);
    if (e.dim == 1) {
        double v = 0.0;
        for (int a = 0; a < c1.count; ++a) v += c1.w[a] * e.coeffs[c1.node[a]];
        return v;
    }
    const int m = e.n_grid + 1;
    const auto c2 = detail::cell_weights(x[1], e.n_grid);
    double v = 0.0;
    for (int a = 0; a < c1.count; ++a)
        for (int b = 0; b < c2.count; ++b)
            v += c1.w[a] * c2.w[b] * e.coeffs[c1.node[a] * m + c2.node[b]];
    return v;
}

inline double evaluate(const BasisExpansion& e, double x) {
    Eigen::VectorXd p(1);
    p[0] = x;
    return evaluate(e, p);
}

inline BasisExpansion interpolate_function(const std::function<double(const Eigen::VectorXd&)>& f,
                                           int N, int d) {
    if (N < 1) throw std::domain_error("interpolate_function: N must be >= 1");
    if (d != 1 && d != 2) throw std::domain_error("interpolate_function: dim must be 1 or 2");
    const int m = N + 1;
    BasisExpansion e;
    e.n_grid = N;
    e.dim = d;
    e.coeffs.resize(d == 1 ? m : m * m);
    Eigen::VectorXd x(d);
    if (d == 1) {
        for (int j = 0; j < m; ++j) {
            x[0] = static_cast<double>(j) / N;
            e.coeffs[j] = f(x);
        }
    } else {
        for (int j1 = 0; j1 < m; ++j1)
            for (int j2 = 0; j2 < m; ++j2) {
                x[0] = static_cast<double>(j1) / N;
                x[1] = static_cast<double>(j2) / N;
                e.coeffs[j1 * m + j2] = f(x);
            }
    }
    return e;
}

inline BasisExpansion interpolate_function(const std::function<double(double)>& f, int N) {
    return interpolate_function(
        [&f](const Eigen::VectorXd& x) { return f(x[0]); }, N, 1);
}

// Phi^T y and Phi^T Phi for the conjugate update; Phi^T Phi is dense but only
// (N+1)^d square, and has bandwidth 1 in the 1d node ordering.
inline Eigen::VectorXd design_t_y(const SparseDesign& design, const Eigen::VectorXd& y) {
    if (y.size() != design.n_rows) throw std::domain_error("design_t_y: length mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(design.n_cols);
    for (int i = 0; i < design.n_rows; ++i)
        for (const auto& e : design.rows[i]) out[e.col] += e.value * y[i];
    return out;
}

inline Eigen::MatrixXd design_t_design(const SparseDesign& design) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(design.n_cols, design.n_cols);
    for (const auto& row : design.rows)
        for (const auto& a : row)
            for (const auto& b : row) out(a.col, b.col) += a.value * b.value;
    return out;
}

inline Eigen::MatrixXd to_dense(const SparseDesign& design) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(design.n_rows, design.n_cols);
    for (int i = 0; i < design.n_rows; ++i)
        for (const auto& e : design.rows[i]) out(i, e.col) = e.value;
    return out;
}

} // namespace frgp
