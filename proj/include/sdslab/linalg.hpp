#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sdslab {

// Dense row-major matrix of doubles. Deliberately minimal; everything the
// models need is a handful of BLAS-2 style loops that gcc vectorises fine.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> d;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), d(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return d[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return d[static_cast<std::size_t>(r) * cols + c]; }

    const double* row(int r) const { return d.data() + static_cast<std::size_t>(r) * cols; }
    double* row(int r) { return d.data() + static_cast<std::size_t>(r) * cols; }
};

inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    return dot(a.data(), b.data(), static_cast<int>(a.size()));
}

// y = A x
inline void matvec(const Mat& a, const double* x, double* y) {
    for (int r = 0; r < a.rows; ++r) y[r] = dot(a.row(r), x, a.cols);
}

// y += A x
inline void matvec_add(const Mat& a, const double* x, double* y) {
    for (int r = 0; r < a.rows; ++r) y[r] += dot(a.row(r), x, a.cols);
}

// y += A^T x
inline void matvec_t_add(const Mat& a, const double* x, double* y) {
    for (int r = 0; r < a.rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        const double* arow = a.row(r);
        for (int c = 0; c < a.cols; ++c) y[c] += arow[c] * xr;
    }
}

// A += s * x y^T
inline void outer_add(Mat& a, const double* x, const double* y, double s) {
    for (int r = 0; r < a.rows; ++r) {
        const double xr = s * x[r];
        if (xr == 0.0) continue;
        double* arow = a.row(r);
        for (int c = 0; c < a.cols; ++c) arow[c] += xr * y[c];
    }
}

// In-place Cholesky of an SPD matrix, lower triangle. Throws if not SPD.
inline void cholesky(Mat& a) {
    if (a.rows != a.cols) throw std::invalid_argument("cholesky: square matrix required");
    const int n = a.rows;
    for (int j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (int k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
        if (!(diag > 0.0)) throw std::runtime_error("cholesky: matrix not positive definite");
        diag = std::sqrt(diag);
        a(j, j) = diag;
        for (int i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (int k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
            a(i, j) = v / diag;
        }
    }
}

// Solve L L^T x = b in place, L from cholesky().
inline void chol_solve(const Mat& l, double* b) {
    const int n = l.rows;
    for (int i = 0; i < n; ++i) {
        double v = b[i];
        for (int k = 0; k < i; ++k) v -= l(i, k) * b[k];
        b[i] = v / l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double v = b[i];
        for (int k = i + 1; k < n; ++k) v -= l(k, i) * b[k];
        b[i] = v / l(i, i);
    }
}

}  // namespace sdslab
