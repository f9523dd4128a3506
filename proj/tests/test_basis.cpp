#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "frgp/basis.hpp"
#include "frgp/rng.hpp"
#include "test_util.hpp"

TEST_CASE("hat function values") {
    // psi_j peaks at j/N, hits zero at the neighboring nodes, is linear between
    CHECK(frgp::psi(2, 4, 0.5) == 1.0);
    CHECK(frgp::psi(2, 4, 0.25) == 0.0);
    CHECK(frgp::psi(2, 4, 0.75) == 0.0);
    CHECK(frgp::psi(2, 4, 0.375) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(frgp::psi(2, 4, 0.9) == 0.0);   // outside support
    CHECK(frgp::psi(0, 4, 0.0) == 1.0);   // boundary node
    CHECK(frgp::psi(4, 4, 1.0) == 1.0);
    CHECK(frgp::psi(0, 4, 0.125) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(frgp::psi(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-15));

    CHECK_THROWS_AS(frgp::psi(5, 4, 0.5), std::domain_error);
    CHECK_THROWS_AS(frgp::psi(-1, 4, 0.5), std::domain_error);
    CHECK_THROWS_AS(frgp::psi(0, 0, 0.5), std::domain_error);
    CHECK_THROWS_AS(frgp::psi(0, 4, 1.5), std::domain_error);
}

TEST_CASE("design rows form a partition of unity with at most 2^d entries") {
    frgp::Rng rng(42);
    for (int d : {1, 2}) {
        for (int N : {1, 3, 7}) {
            const Eigen::MatrixXd pts = testutil::random_points(rng, 50, d);
            const auto design = frgp::design_matrix(pts, N, d);
            REQUIRE(design.n_rows == 50);
            CHECK(design.n_cols == (d == 1 ? N + 1 : (N + 1) * (N + 1)));
            for (const auto& row : design.rows) {
                CHECK(static_cast<int>(row.size()) <= (d == 1 ? 2 : 4));
                double sum = 0.0;
                for (const auto& e : row) {
                    CHECK(e.value > 0.0); // exact zeros are dropped
                    CHECK(e.col >= 0);
                    CHECK(e.col < design.n_cols);
                    sum += e.value;
                }
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("points on grid nodes produce a single unit entry") {
    const int N = 4; // dyadic nodes are exactly representable
    Eigen::MatrixXd pts(N + 1, 1);
    for (int j = 0; j <= N; ++j) pts(j, 0) = static_cast<double>(j) / N;
    const auto design = frgp::design_matrix(pts, N, 1);
    for (int j = 0; j <= N; ++j) {
        REQUIRE(design.rows[j].size() == 1);
        CHECK(design.rows[j][0].col == j);
        CHECK(design.rows[j][0].value == 1.0);
    }
}

TEST_CASE("interior cell boundaries are assigned to the left cell") {
    // x = 1/4 is the boundary between cells [0,1/4] and [1/4,1/2]; the
    // left-cell rule gives t = 1 in cell k = 0, i.e. weight 1 on node 1
    Eigen::MatrixXd pts(3, 1);
    pts << 0.25, 0.0, 1.0;
    const auto design = frgp::design_matrix(pts, 4, 1);
    REQUIRE(design.rows[0].size() == 1);
    CHECK(design.rows[0][0].col == 1);
    REQUIRE(design.rows[1].size() == 1);
    CHECK(design.rows[1][0].col == 0);
    REQUIRE(design.rows[2].size() == 1);
    CHECK(design.rows[2][0].col == 4);
}

TEST_CASE("design values agree with psi at the active nodes") {
    frgp::Rng rng(7);
    const int N = 6;
    const Eigen::MatrixXd pts = testutil::random_points(rng, 40, 1);
    const auto design = frgp::design_matrix(pts, N, 1);
    for (int i = 0; i < 40; ++i)
        for (const auto& e : design.rows[i])
            CHECK(e.value == doctest::Approx(frgp::psi(e.col, N, pts(i, 0))).epsilon(1e-14));
}

TEST_CASE("two-dimensional design uses row-major linearization with j1 slowest") {
    const int N = 4, m = N + 1;
    Eigen::MatrixXd pts(1, 2);
    pts << 0.3, 0.9; // cells: x1 in [0.25,0.5] nodes {1,2}, x2 in [0.75,1.0] nodes {3,4}
    const auto design = frgp::design_matrix(pts, N, 2);
    REQUIRE(design.rows[0].size() == 4);
    double total = 0.0;
    for (const auto& e : design.rows[0]) {
        const int j1 = e.col / m, j2 = e.col % m;
        CHECK((j1 == 1 || j1 == 2));
        CHECK((j2 == 3 || j2 == 4));
        const double want = frgp::psi(j1, N, 0.3) * frgp::psi(j2, N, 0.9);
        CHECK(e.value == doctest::Approx(want).epsilon(1e-14));
        total += e.value;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("evaluate matches the direct basis sum") {
    frgp::Rng rng(11);
    for (int d : {1, 2}) {
        const int N = 5, m = N + 1;
        frgp::BasisExpansion e;
        e.n_grid = N;
        e.dim = d;
        e.coeffs = testutil::random_normal_vector(rng, d == 1 ? m : m * m);
        for (int rep = 0; rep < 25; ++rep) {
            Eigen::VectorXd x(d);
            for (int j = 0; j < d; ++j) x[j] = rng.uniform();
            double want = 0.0;
            if (d == 1) {
                for (int j = 0; j < m; ++j) want += e.coeffs[j] * frgp::psi(j, N, x[0]);
            } else {
                for (int j1 = 0; j1 < m; ++j1)
                    for (int j2 = 0; j2 < m; ++j2)
                        want += e.coeffs[j1 * m + j2] * frgp::psi(j1, N, x[0]) *
                                frgp::psi(j2, N, x[1]);
            }
            CHECK(frgp::evaluate(e, x) == doctest::Approx(want).epsilon(1e-13));
        }
    }
}

TEST_CASE("interpolation reproduces piecewise-linear data and affine functions") {
    const auto lin = [](double x) { return 2.0 * x - 0.7; };
    const auto e = frgp::interpolate_function(lin, 9);
    for (double x : {0.0, 0.05, 0.33, 0.5, 2.0 / 3.0, 0.999, 1.0})
        CHECK(frgp::evaluate(e, x) == doctest::Approx(lin(x)).epsilon(1e-14));

    const auto plane = [](const Eigen::VectorXd& x) { return x[0] - 3.0 * x[1] + 0.25; };
    const auto e2 = frgp::interpolate_function(plane, 4, 2);
    frgp::Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd x(2);
        x << rng.uniform(), rng.uniform();
        // tensor hats reproduce affine functions exactly
        CHECK(frgp::evaluate(e2, x) == doctest::Approx(plane(x)).epsilon(1e-13));
    }
    // node values are exact function values in the j1-slowest ordering
    CHECK(e2.coeffs[1 * 5 + 3] == plane((Eigen::VectorXd(2) << 0.25, 0.75).finished()));
}

TEST_CASE("sparse products agree with the dense design matrix") {
    frgp::Rng rng(19);
    for (int d : {1, 2}) {
        const int N = 4;
        const Eigen::MatrixXd pts = testutil::random_points(rng, 30, d);
        const auto design = frgp::design_matrix(pts, N, d);
        const Eigen::MatrixXd phi = frgp::to_dense(design);
        const Eigen::VectorXd y = testutil::random_normal_vector(rng, 30);
        CHECK((frgp::design_t_y(design, y) - phi.transpose() * y).norm() < 1e-12);
        CHECK((frgp::design_t_design(design) - phi.transpose() * phi).norm() < 1e-12);
    }
}

TEST_CASE("design and expansion validation") {
    Eigen::MatrixXd bad(1, 1);
    bad << 1.2;
    CHECK_THROWS_AS(frgp::design_matrix(bad, 4, 1), std::domain_error);
    Eigen::MatrixXd p2(1, 2);
    p2 << 0.3, 0.4;
    CHECK_THROWS_AS(frgp::design_matrix(p2, 4, 1), std::domain_error);
    CHECK_THROWS_AS(frgp::design_matrix(p2, 0, 2), std::domain_error);

    frgp::BasisExpansion e;
    e.n_grid = 3;
    e.dim = 2;
    e.coeffs = Eigen::VectorXd::Zero(4); // should be 16
    CHECK_THROWS_AS(frgp::evaluate(e, (Eigen::VectorXd(2) << 0.1, 0.2).finished()),
                    std::domain_error);
    e.coeffs = Eigen::VectorXd::Zero(16);
    CHECK_THROWS_AS(frgp::evaluate(e, (Eigen::VectorXd(1) << 0.1).finished()),
                    std::domain_error);
}
