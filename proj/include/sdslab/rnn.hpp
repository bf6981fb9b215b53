#pragma once

#include <stdexcept>
#include <vector>

#include "sdslab/head.hpp"
#include "sdslab/linalg.hpp"
#include "sdslab/rng.hpp"

namespace sdslab {

struct RnnParams {
    Mat w_in;               // H x F
    Mat w_rec;              // H x H
    std::vector<double> b;  // H

    int hidden_width() const { return w_in.rows; }
    int input_width() const { return w_in.cols; }
};

inline RnnParams make_rnn(int input_width, int hidden_width, Rng& rng) {
    RnnParams p;
    p.w_in = Mat(hidden_width, input_width);
    p.w_rec = Mat(hidden_width, hidden_width);
    glorot_init(p.w_in, rng);
    glorot_init(p.w_rec, rng);
    p.b.assign(hidden_width, 0.0);
    return p;
}

struct RnnCache {
    std::vector<std::vector<double>> h;  // h[0] = 0, h[1..N]
};

// h_t = sigmoid(W_in f_t + W_rec h_{t-1} + b); returns h_N
inline std::vector<double> rnn_forward(const RnnParams& p, const std::vector<std::vector<double>>& seq,
                                       RnnCache& cache) {
    if (seq.empty()) throw std::invalid_argument("rnn_forward: empty sequence");
    const int hw = p.hidden_width();
    cache.h.assign(seq.size() + 1, std::vector<double>(hw, 0.0));
    for (size_t t = 0; t < seq.size(); ++t) {
        if (static_cast<int>(seq[t].size()) != p.input_width())
            throw std::invalid_argument("rnn_forward: feature width mismatch");
        std::vector<double>& h = cache.h[t + 1];
        for (int i = 0; i < hw; ++i) h[i] = p.b[i];
        matvec_add(p.w_in, seq[t].data(), h.data());
        matvec_add(p.w_rec, cache.h[t].data(), h.data());
        for (int i = 0; i < hw; ++i) h[i] = sigmoid(h[i]);
    }
    return cache.h.back();
}

// backpropagation through time from dL/dh_N
inline void rnn_backward(const RnnParams& p, const std::vector<std::vector<double>>& seq,
                         const RnnCache& cache, const std::vector<double>& d_h_final,
                         RnnParams& grad) {
    const int hw = p.hidden_width();
    std::vector<double> dh = d_h_final;
    std::vector<double> ds(hw);
    for (int t = static_cast<int>(seq.size()); t >= 1; --t) {
        const std::vector<double>& h = cache.h[t];
        for (int i = 0; i < hw; ++i) ds[i] = dh[i] * h[i] * (1.0 - h[i]);
        for (int i = 0; i < hw; ++i) grad.b[i] += ds[i];
        outer_add(grad.w_in, ds.data(), seq[t - 1].data(), 1.0);
        outer_add(grad.w_rec, ds.data(), cache.h[t - 1].data(), 1.0);
        std::fill(dh.begin(), dh.end(), 0.0);
        matvec_t_add(p.w_rec, ds.data(), dh.data());
    }
}

}  // namespace sdslab
