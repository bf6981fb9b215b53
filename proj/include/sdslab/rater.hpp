#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdslab/cnn.hpp"
#include "sdslab/features.hpp"
#include "sdslab/head.hpp"
#include "sdslab/rnn.hpp"
#include "sdslab/rng.hpp"

namespace sdslab {

enum class RaterArch : int { rnn = 0, cnn };

struct RaterModel {
    RaterArch arch = RaterArch::rnn;
    RnnParams rnn;
    CnnParams cnn;
    HeadParams head;
    int feat_width = 0;
    int max_turns = 30;
};

struct RaterConfig {
    RaterArch arch = RaterArch::rnn;
    HeadKind head = HeadKind::binary;
    int hidden_width = 300;   // RNN H
    int num_maps = 50;        // CNN M
    int filter_width = 30;    // CNN W
    int mlp_width = 0;        // CNN FFNN layer; 0 picks 300 for return-class, 50 otherwise
    double sigma_s = 1.0;
    int max_turns = 30;
    std::uint64_t seed = 1;
};

inline RaterModel make_rater(const RaterConfig& cfg, int feat_width) {
    Rng rng(cfg.seed);
    RaterModel m;
    m.arch = cfg.arch;
    m.feat_width = feat_width;
    m.max_turns = cfg.max_turns;
    const int num_classes = cfg.max_turns + 20;
    int head_in = 0;
    if (cfg.arch == RaterArch::rnn) {
        m.rnn = make_rnn(feat_width, cfg.hidden_width, rng);
        head_in = cfg.hidden_width;
    } else {
        int mlp = cfg.mlp_width;
        if (mlp == 0) mlp = cfg.head == HeadKind::return_class ? 300 : 50;
        m.cnn = make_cnn(feat_width, cfg.num_maps, cfg.filter_width, mlp, rng);
        head_in = mlp;
    }
    m.head = make_head(cfg.head, head_in, rng, num_classes, cfg.sigma_s, -cfg.max_turns);
    return m;
}

// zero-valued copy with identical shapes, used as a gradient accumulator
inline RaterModel zero_like(const RaterModel& m) {
    RaterModel g = m;
    auto clear = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
    clear(g.rnn.w_in.d);
    clear(g.rnn.w_rec.d);
    clear(g.rnn.b);
    for (auto& f : g.cnn.filters) clear(f.d);
    clear(g.cnn.filter_b);
    clear(g.cnn.w1.d);
    clear(g.cnn.b1);
    clear(g.head.w.d);
    clear(g.head.b);
    return g;
}

// every trainable parameter, in checkpoint order
inline std::vector<double*> param_ptrs(RaterModel& m) {
    std::vector<double*> out;
    auto push = [&](std::vector<double>& v) {
        for (double& x : v) out.push_back(&x);
    };
    if (m.arch == RaterArch::rnn) {
        push(m.rnn.w_in.d);
        push(m.rnn.w_rec.d);
        push(m.rnn.b);
    } else {
        for (auto& f : m.cnn.filters) push(f.d);
        push(m.cnn.filter_b);
        push(m.cnn.w1.d);
        push(m.cnn.b1);
    }
    push(m.head.w.d);
    push(m.head.b);
    return out;
}

struct RaterCache {
    RnnCache rnn;
    CnnCache cnn;
    std::vector<double> repr;
    std::vector<double> out;
};

inline std::vector<double> rater_forward(const RaterModel& m, const FeatureSeq& seq,
                                         RaterCache& cache) {
    cache.repr = m.arch == RaterArch::rnn ? rnn_forward(m.rnn, seq, cache.rnn)
                                          : cnn_forward(m.cnn, seq, cache.cnn);
    cache.out = head_forward(m.head, cache.repr);
    return cache.out;
}

inline std::vector<double> rater_forward(const RaterModel& m, const FeatureSeq& seq) {
    RaterCache cache;
    return rater_forward(m, seq, cache);
}

inline void rater_backward(const RaterModel& m, const FeatureSeq& seq, const RaterCache& cache,
                           const std::vector<double>& target, RaterModel& grad) {
    const std::vector<double> delta = head_delta(m.head, cache.out, target);
    outer_add(grad.head.w, delta.data(), cache.repr.data(), 1.0);
    for (size_t i = 0; i < delta.size(); ++i) grad.head.b[i] += delta[i];
    std::vector<double> d_repr(cache.repr.size(), 0.0);
    matvec_t_add(m.head.w, delta.data(), d_repr.data());
    if (m.arch == RaterArch::rnn)
        rnn_backward(m.rnn, seq, cache.rnn, d_repr, grad.rnn);
    else
        cnn_backward(m.cnn, seq, cache.cnn, d_repr, grad.cnn);
}

inline RaterModel rater_gradients(const RaterModel& m, const FeatureSeq& seq,
                                  const std::vector<double>& target) {
    RaterCache cache;
    rater_forward(m, seq, cache);
    RaterModel grad = zero_like(m);
    rater_backward(m, seq, cache, target, grad);
    return grad;
}

inline std::vector<double> rater_target(const RaterModel& m, bool success, int ret) {
    switch (m.head.kind) {
        case HeadKind::binary:
            return {success ? 1.0 : 0.0};
        case HeadKind::return_class:
            return smooth_return_target(ret, m.head.out_dim(), m.head.sigma_s, m.head.min_return);
        case HeadKind::return_regress:
            return {static_cast<double>(ret)};
    }
    throw std::logic_error("rater_target: bad head kind");
}

inline Prediction rater_predict(const RaterModel& m, const FeatureSeq& seq) {
    return predict_success(m.head, rater_forward(m, seq), static_cast<int>(seq.size()));
}

struct LabeledDialogue {
    FeatureSeq feats;
    bool success = false;
    int ret = 0;
};

struct TrainConfig {
    double learning_rate = 0.01;
    int max_epochs = 100;
    int patience = 5;
    std::uint64_t seed = 1;
    double grad_clip = 5.0;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double val_rmse = 0.0;
};

struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
    double rmse = 0.0;
};

inline EvalStats evaluate_on(const RaterModel& m, const std::vector<LabeledDialogue>& corpus) {
    if (corpus.empty()) throw std::invalid_argument("evaluate_on: empty corpus");
    EvalStats s;
    double se = 0.0;
    for (const auto& d : corpus) {
        RaterCache cache;
        rater_forward(m, d.feats, cache);
        s.loss += loss(m.head, cache.out, rater_target(m, d.success, d.ret));
        const Prediction pred =
            predict_success(m.head, cache.out, static_cast<int>(d.feats.size()));
        if (pred.success == d.success) s.accuracy += 1.0;
        se += (pred.ret - d.ret) * (pred.ret - d.ret);
    }
    const double n = static_cast<double>(corpus.size());
    s.loss /= n;
    s.accuracy /= n;
    s.rmse = std::sqrt(se / n);
    return s;
}

struct TrainResult {
    RaterModel model;
    std::vector<EpochStats> history;
};

// per-dialogue SGD with a global L2 gradient clip and best-validation
// early stopping
inline TrainResult sgd_train(const RaterModel& init, const std::vector<LabeledDialogue>& train,
                             const std::vector<LabeledDialogue>& val, const TrainConfig& cfg) {
    if (train.empty() || val.empty()) throw std::invalid_argument("sgd_train: empty corpus");
    if (cfg.learning_rate < 0.0) throw std::invalid_argument("sgd_train: negative learning rate");
    if (cfg.patience < 1) throw std::invalid_argument("sgd_train: patience must be >= 1");

    RaterModel model = init;
    RaterModel best = init;
    double best_val = 0.0;
    bool have_best = false;
    int since_best = 0;
    Rng rng(cfg.seed);
    TrainResult result;

    std::vector<int> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double train_loss = 0.0;
        for (int idx : order) {
            const LabeledDialogue& d = train[idx];
            const std::vector<double> target = rater_target(model, d.success, d.ret);
            RaterCache cache;
            rater_forward(model, d.feats, cache);
            train_loss += loss(model.head, cache.out, target);
            RaterModel grad = zero_like(model);
            rater_backward(model, d.feats, cache, target, grad);

            const std::vector<double*> gp = param_ptrs(grad);
            double norm2 = 0.0;
            for (double* g : gp) norm2 += *g * *g;
            double scale = cfg.learning_rate;
            const double norm = std::sqrt(norm2);
            if (cfg.grad_clip > 0.0 && norm > cfg.grad_clip)
                scale *= cfg.grad_clip / norm;
            const std::vector<double*> mp = param_ptrs(model);
            for (size_t i = 0; i < mp.size(); ++i) *mp[i] -= scale * *gp[i];
        }
        train_loss /= static_cast<double>(train.size());

        const EvalStats vs = evaluate_on(model, val);
        result.history.push_back({epoch, train_loss, vs.loss, vs.accuracy, vs.rmse});

        if (!have_best || vs.loss < best_val) {
            best_val = vs.loss;
            best = model;
            have_best = true;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    result.model = best;
    return result;
}

// central-difference comparison against supplied analytic gradients
inline double grad_check_against(RaterModel& model, const FeatureSeq& seq,
                                 const std::vector<double>& target, double eps,
                                 RaterModel& analytic) {
    const std::vector<double*> mp = param_ptrs(model);
    const std::vector<double*> gp = param_ptrs(analytic);
    double worst = 0.0;
    for (size_t i = 0; i < mp.size(); ++i) {
        const double saved = *mp[i];
        *mp[i] = saved + eps;
        const double lp = loss(model.head, rater_forward(model, seq), target);
        *mp[i] = saved - eps;
        const double lm = loss(model.head, rater_forward(model, seq), target);
        *mp[i] = saved;
        const double numeric = (lp - lm) / (2.0 * eps);
        const double analytic_g = *gp[i];
        const double denom = std::max(std::abs(numeric) + std::abs(analytic_g), 1e-2);
        worst = std::max(worst, std::abs(numeric - analytic_g) / denom);
    }
    return worst;
}

inline double grad_check(RaterModel model, const FeatureSeq& seq,
                         const std::vector<double>& target, double eps = 1e-5) {
    RaterModel grad = rater_gradients(model, seq, target);
    return grad_check_against(model, seq, target, eps, grad);
}

}  // namespace sdslab
