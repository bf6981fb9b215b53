#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sdslab/linalg.hpp"
#include "sdslab/rng.hpp"

namespace sdslab {

enum class HeadKind : int { binary = 0, return_class, return_regress };

struct Prediction {
    bool success = false;
    double ret = 0.0;
};

// Output layer on top of either architecture's final representation.
// For the class head, class k stands for the return value k + min_return.
struct HeadParams {
    HeadKind kind = HeadKind::binary;
    Mat w;  // out x in
    std::vector<double> b;
    int min_return = -30;
    double sigma_s = 1.0;

    int out_dim() const { return w.rows; }
    int in_dim() const { return w.cols; }
};

inline void glorot_init(Mat& m, Rng& rng) {
    const double lim = std::sqrt(6.0 / (m.rows + m.cols));
    for (double& x : m.d) x = rng.uniform(-lim, lim);
}

inline HeadParams make_head(HeadKind kind, int in_dim, Rng& rng, int num_classes = 50,
                            double sigma_s = 1.0, int min_return = -30) {
    HeadParams h;
    h.kind = kind;
    const int out = kind == HeadKind::return_class ? num_classes : 1;
    h.w = Mat(out, in_dim);
    glorot_init(h.w, rng);
    h.b.assign(out, 0.0);
    h.min_return = min_return;
    h.sigma_s = sigma_s;
    return h;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::vector<double> head_forward(const HeadParams& h, const std::vector<double>& in) {
    if (static_cast<int>(in.size()) != h.in_dim())
        throw std::invalid_argument("head_forward: input width mismatch");
    std::vector<double> z(h.out_dim(), 0.0);
    matvec(h.w, in.data(), z.data());
    for (int i = 0; i < h.out_dim(); ++i) z[i] += h.b[i];
    switch (h.kind) {
        case HeadKind::binary:
            z[0] = sigmoid(z[0]);
            return z;
        case HeadKind::return_class: {
            double m = z[0];
            for (double v : z) m = std::max(m, v);
            double sum = 0.0;
            for (double& v : z) {
                v = std::exp(v - m);
                sum += v;
            }
            for (double& v : z) v /= sum;
            return z;
        }
        case HeadKind::return_regress:
            return z;
    }
    throw std::logic_error("head_forward: bad head kind");
}

inline double loss(const HeadParams& h, const std::vector<double>& out,
                   const std::vector<double>& target) {
    if (out.size() != static_cast<size_t>(h.out_dim()) || target.size() != out.size())
        throw std::invalid_argument("loss: shape mismatch");
    const double eps = 1e-12;
    switch (h.kind) {
        case HeadKind::binary: {
            const double p = std::clamp(out[0], eps, 1.0 - eps);
            const double y = target[0];
            return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        }
        case HeadKind::return_class: {
            double l = 0.0;
            for (size_t i = 0; i < out.size(); ++i)
                l -= target[i] * std::log(std::max(out[i], eps));
            return l;
        }
        case HeadKind::return_regress: {
            const double d = out[0] - target[0];
            return d * d;
        }
    }
    throw std::logic_error("loss: bad head kind");
}

// dL/dz at the head pre-activation; identical form p - y for both
// cross-entropy heads, 2(z - y) for the squared error
inline std::vector<double> head_delta(const HeadParams& h, const std::vector<double>& out,
                                      const std::vector<double>& target) {
    if (out.size() != static_cast<size_t>(h.out_dim()) || target.size() != out.size())
        throw std::invalid_argument("head_delta: shape mismatch");
    std::vector<double> d(out.size());
    for (size_t i = 0; i < out.size(); ++i)
        d[i] = h.kind == HeadKind::return_regress ? 2.0 * (out[i] - target[i])
                                                  : out[i] - target[i];
    return d;
}

inline std::vector<double> smooth_return_target(int ret, int num_classes, double sigma_s,
                                                int min_return = -30) {
    const int idx = ret - min_return;
    if (idx < 0 || idx >= num_classes)
        throw std::invalid_argument("smooth_return_target: return out of class range");
    if (sigma_s < 0.0) throw std::invalid_argument("smooth_return_target: negative sigma");
    std::vector<double> t(num_classes, 0.0);
    if (sigma_s == 0.0) {
        t[idx] = 1.0;
        return t;
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_s));
    double sum = 0.0;
    for (int i = std::max(0, idx - radius); i <= std::min(num_classes - 1, idx + radius); ++i) {
        const double d = i - idx;
        t[i] = std::exp(-d * d / (2.0 * sigma_s * sigma_s));
        sum += t[i];
    }
    for (double& v : t) v /= sum;
    return t;
}

inline Prediction predict_success(const HeadParams& h, const std::vector<double>& out, int num_turns) {
    Prediction p;
    switch (h.kind) {
        case HeadKind::binary:
            p.success = out[0] > 0.5;
            p.ret = 20.0 * (p.success ? 1 : 0) - num_turns;
            return p;
        case HeadKind::return_class: {
            int best = 0;
            for (int i = 1; i < static_cast<int>(out.size()); ++i)
                if (out[i] > out[best]) best = i;
            p.ret = best + h.min_return;
            p.success = p.ret + num_turns > 10.0;
            return p;
        }
        case HeadKind::return_regress:
            p.ret = out[0];
            p.success = p.ret + num_turns > 10.0;
            return p;
    }
    throw std::logic_error("predict_success: bad head kind");
}

}  // namespace sdslab
