#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sdslab/head.hpp"
#include "sdslab/linalg.hpp"
#include "sdslab/rng.hpp"

namespace sdslab {

struct CnnParams {
    std::vector<Mat> filters;        // M filters of F x W
    std::vector<double> filter_b;    // M
    Mat w1;                          // D x M, the FFNN hidden layer
    std::vector<double> b1;          // D

    int num_maps() const { return static_cast<int>(filters.size()); }
    int filter_width() const { return filters.empty() ? 0 : filters[0].cols; }
    int input_width() const { return filters.empty() ? 0 : filters[0].rows; }
    int mlp_width() const { return w1.rows; }
};

inline CnnParams make_cnn(int input_width, int num_maps, int filter_width, int mlp_width,
                          Rng& rng) {
    if (filter_width < 1) throw std::invalid_argument("make_cnn: filter width must be positive");
    CnnParams p;
    p.filters.reserve(num_maps);
    for (int m = 0; m < num_maps; ++m) {
        Mat f(input_width, filter_width);
        glorot_init(f, rng);
        p.filters.push_back(std::move(f));
    }
    p.filter_b.assign(num_maps, 0.0);
    p.w1 = Mat(mlp_width, num_maps);
    glorot_init(p.w1, rng);
    p.b1.assign(mlp_width, 0.0);
    return p;
}

struct CnnCache {
    Mat act;                     // M x (N+W-1), tanh of conv outputs
    std::vector<int> argmax;     // pooling position per map, lowest index on ties
    std::vector<double> pooled;  // M
    std::vector<double> hidden;  // D
};

namespace detail {

// column i of the dialogue matrix padded with W-1 zero vectors each side
inline const double* padded_col(const std::vector<std::vector<double>>& seq, int col, int pad) {
    const int n = static_cast<int>(seq.size());
    if (col < pad || col >= pad + n) return nullptr;
    return seq[col - pad].data();
}

}  // namespace detail

// Narrow convolution over the padded dialogue matrix (output length N+W-1),
// tanh, max-pool per map, then the FFNN hidden layer. Returns the hidden
// activations the head reads.
inline std::vector<double> cnn_forward(const CnnParams& p,
                                       const std::vector<std::vector<double>>& seq,
                                       CnnCache& cache) {
    if (seq.empty()) throw std::invalid_argument("cnn_forward: empty sequence");
    for (const auto& f : seq)
        if (static_cast<int>(f.size()) != p.input_width())
            throw std::invalid_argument("cnn_forward: feature width mismatch");

    const int n = static_cast<int>(seq.size());
    const int w = p.filter_width();
    const int fw = p.input_width();
    const int m = p.num_maps();
    const int len = n + w - 1;
    const int pad = w - 1;

    cache.act = Mat(m, len);
    cache.argmax.assign(m, 0);
    cache.pooled.assign(m, 0.0);
    for (int k = 0; k < m; ++k) {
        const Mat& filt = p.filters[k];
        for (int j = 0; j < len; ++j) {
            double c = p.filter_b[k];
            for (int u = 0; u < w; ++u) {
                const double* col = detail::padded_col(seq, j + u, pad);
                if (!col) continue;
                for (int i = 0; i < fw; ++i) c += filt(i, u) * col[i];
            }
            cache.act(k, j) = std::tanh(c);
        }
        int best = 0;
        for (int j = 1; j < len; ++j)
            if (cache.act(k, j) > cache.act(k, best)) best = j;
        cache.argmax[k] = best;
        cache.pooled[k] = cache.act(k, best);
    }

    cache.hidden.assign(p.mlp_width(), 0.0);
    for (int i = 0; i < p.mlp_width(); ++i) cache.hidden[i] = p.b1[i];
    matvec_add(p.w1, cache.pooled.data(), cache.hidden.data());
    for (double& v : cache.hidden) v = std::tanh(v);
    return cache.hidden;
}

// gradient from dL/dhidden; pooling routes to the argmax position only
inline void cnn_backward(const CnnParams& p, const std::vector<std::vector<double>>& seq,
                         const CnnCache& cache, const std::vector<double>& d_hidden,
                         CnnParams& grad) {
    const int w = p.filter_width();
    const int fw = p.input_width();
    const int m = p.num_maps();
    const int pad = w - 1;

    std::vector<double> dz(p.mlp_width());
    for (int i = 0; i < p.mlp_width(); ++i)
        dz[i] = d_hidden[i] * (1.0 - cache.hidden[i] * cache.hidden[i]);
    outer_add(grad.w1, dz.data(), cache.pooled.data(), 1.0);
    for (int i = 0; i < p.mlp_width(); ++i) grad.b1[i] += dz[i];

    std::vector<double> dp(m, 0.0);
    matvec_t_add(p.w1, dz.data(), dp.data());

    for (int k = 0; k < m; ++k) {
        const int j = cache.argmax[k];
        const double a = cache.act(k, j);
        const double dc = dp[k] * (1.0 - a * a);
        grad.filter_b[k] += dc;
        Mat& gf = grad.filters[k];
        for (int u = 0; u < w; ++u) {
            const double* col = detail::padded_col(seq, j + u, pad);
            if (!col) continue;
            for (int i = 0; i < fw; ++i) gf(i, u) += dc * col[i];
        }
    }
}

}  // namespace sdslab
