#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "frgp/basis.hpp"
#include "frgp/inference.hpp"
#include "frgp/rng.hpp"

namespace testutil {

// textbook dense conjugate posterior and Gaussian marginal, used as the oracle
// against the structured implementations
struct DenseConjugate {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    double log_marginal = 0.0; // full log N(y; 0, Phi G Phi^T + sigma^2 I)
};

inline DenseConjugate dense_conjugate(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                      double sigma_sq, const Eigen::MatrixXd& g) {
    const long n = phi.rows();
    Eigen::MatrixXd a = phi * g * phi.transpose();
    a.diagonal().array() += sigma_sq;
    const Eigen::LLT<Eigen::MatrixXd> llt(a);
    DenseConjugate out;
    const Eigen::MatrixXd gp = g * phi.transpose(); // m x n
    out.mean = gp * llt.solve(y);
    out.covariance = g - gp * llt.solve(gp.transpose());
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out.log_marginal = -0.5 * y.dot(llt.solve(y)) - 0.5 * log_det -
                       0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
    return out;
}

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// extended-precision variant of the marginal log-density, for comparisons
// whose target tolerance sits near the double roundoff floor
inline double dense_log_marginal_ld(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                                    double sigma_sq, const MatrixXld& g) {
    const MatrixXld phil = phi.cast<long double>();
    const VectorXld yl = y.cast<long double>();
    MatrixXld a = phil * g * phil.transpose();
    a.diagonal().array() += static_cast<long double>(sigma_sq);
    const Eigen::LLT<MatrixXld> llt(a);
    const long double log_det = 2.0L * llt.matrixLLT().diagonal().array().log().sum();
    const long double quad = yl.dot(llt.solve(yl));
    const long double pi_ld = 3.14159265358979323846264338327950288L;
    return static_cast<double>(-0.5L * quad - 0.5L * log_det -
                               0.5L * static_cast<long double>(y.size()) * std::log(2.0L * pi_ld));
}

inline Eigen::MatrixXd random_points(frgp::Rng& rng, long n, int d) {
    Eigen::MatrixXd x(n, d);
    for (long i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = rng.uniform();
    return x;
}

inline Eigen::VectorXd random_normal_vector(frgp::Rng& rng, long n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = scale * rng.normal();
    return v;
}

// minimal XML well-formedness check: single root, balanced tags, quoted
// attributes; enough to validate the generated SVG artifacts
inline bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    // optional XML declaration
    if (text.compare(0, 5, "<?xml") == 0) {
        const std::size_t end = text.find("?>");
        if (end == std::string::npos) return false;
        i = end + 2;
    }
    bool root_seen = false;
    while (i < text.size()) {
        const std::size_t open = text.find('<', i);
        if (open == std::string::npos) break;
        const std::size_t close = text.find('>', open);
        if (close == std::string::npos) return false;
        std::string tag = text.substr(open + 1, close - open - 1);
        if (tag.empty()) return false;
        if (tag[0] == '/') { // closing tag
            if (stack.empty()) return false;
            if (stack.back() != tag.substr(1)) return false;
            stack.pop_back();
        } else {
            const bool self_closing = tag.back() == '/';
            std::string name = tag.substr(0, tag.find_first_of(" \t\n/"));
            if (name.empty()) return false;
            if (stack.empty()) {
                if (root_seen) return false; // second root element
                root_seen = true;
            }
            if (!self_closing) stack.push_back(name);
        }
        i = close + 1;
    }
    return stack.empty() && root_seen;
}

} // namespace testutil
