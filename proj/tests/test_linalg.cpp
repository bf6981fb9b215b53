#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sdslab/linalg.hpp"
#include "sdslab/rng.hpp"

using namespace sdslab;

TEST_CASE("dot and matvec agree with hand-worked values") {
    const std::vector<double> a = {1.0, -2.0, 3.0};
    const std::vector<double> b = {4.0, 5.0, -6.0};
    CHECK(dot(a, b) == Catch::Approx(4.0 - 10.0 - 18.0));

    Mat m(2, 3);
    m(0, 0) = 1.0;
    m(0, 1) = 2.0;
    m(0, 2) = 3.0;
    m(1, 0) = -1.0;
    m(1, 1) = 0.5;
    m(1, 2) = 4.0;
    double y[2] = {0.0, 0.0};
    matvec(m, a.data(), y);
    CHECK(y[0] == Catch::Approx(1.0 - 4.0 + 9.0));
    CHECK(y[1] == Catch::Approx(-1.0 - 1.0 + 12.0));

    double yt[3] = {1.0, 1.0, 1.0};
    const double x[2] = {2.0, -1.0};
    matvec_t_add(m, x, yt);
    CHECK(yt[0] == Catch::Approx(1.0 + 2.0 + 1.0));
    CHECK(yt[1] == Catch::Approx(1.0 + 4.0 - 0.5));
    CHECK(yt[2] == Catch::Approx(1.0 + 6.0 - 4.0));
}

TEST_CASE("outer_add accumulates a scaled outer product") {
    Mat m(2, 2);
    const double x[2] = {1.0, 2.0};
    const double y[2] = {3.0, 4.0};
    outer_add(m, x, y, 0.5);
    CHECK(m(0, 0) == Catch::Approx(1.5));
    CHECK(m(0, 1) == Catch::Approx(2.0));
    CHECK(m(1, 0) == Catch::Approx(3.0));
    CHECK(m(1, 1) == Catch::Approx(4.0));
}

TEST_CASE("cholesky reproduces a hand-worked factor") {
    // A = L L^T with L = [[2,0],[1,3]]
    Mat a(2, 2);
    a(0, 0) = 4.0;
    a(0, 1) = 2.0;
    a(1, 0) = 2.0;
    a(1, 1) = 10.0;
    cholesky(a);
    CHECK(a(0, 0) == Catch::Approx(2.0));
    CHECK(a(1, 0) == Catch::Approx(1.0));
    CHECK(a(1, 1) == Catch::Approx(3.0));
}

TEST_CASE("chol_solve inverts random SPD systems") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(8));
        Mat b(n, n);
        for (int i = 0; i < n * n; ++i) b.d[i] = rng.normal();
        Mat a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += b(k, i) * b(k, j);
                a(i, j) = s + (i == j ? 1.0 : 0.0);
            }
        std::vector<double> x(n), rhs(n);
        for (int i = 0; i < n; ++i) x[i] = rng.normal();
        matvec(a, x.data(), rhs.data());

        Mat l = a;
        cholesky(l);
        chol_solve(l, rhs.data());
        for (int i = 0; i < n; ++i) CHECK(rhs[i] == Catch::Approx(x[i]).margin(1e-9));
    }
}

TEST_CASE("cholesky rejects indefinite matrices") {
    Mat a(2, 2);
    a(0, 0) = 1.0;
    a(0, 1) = 2.0;
    a(1, 0) = 2.0;
    a(1, 1) = 1.0;
    CHECK_THROWS(cholesky(a));
}
