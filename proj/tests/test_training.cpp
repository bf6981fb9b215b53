#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sdslab/rater.hpp"

using namespace sdslab;

namespace {

// two-class toy problem: the first feature carries the label
std::vector<LabeledDialogue> toy_set(Rng& rng, int n, int width) {
    std::vector<LabeledDialogue> out;
    for (int i = 0; i < n; ++i) {
        LabeledDialogue d;
        d.success = rng.bernoulli(0.5);
        const int len = 2 + static_cast<int>(rng.uniform_index(5));
        d.feats.assign(len, std::vector<double>(width));
        for (auto& row : d.feats) {
            for (double& v : row) v = 0.2 * rng.normal();
            row[0] = d.success ? 1.0 : -1.0;
        }
        d.ret = d.success ? 14 : -6;
        out.push_back(std::move(d));
    }
    return out;
}

RaterConfig small_config() {
    RaterConfig rc;
    rc.arch = RaterArch::rnn;
    rc.head = HeadKind::binary;
    rc.hidden_width = 8;
    rc.max_turns = 10;
    rc.seed = 2;
    return rc;
}

}  // namespace

TEST_CASE("sgd learns a separable toy problem") {
    Rng rng(10);
    const int width = 6;
    const auto train = toy_set(rng, 200, width);
    const auto val = toy_set(rng, 80, width);
    TrainConfig tc;
    tc.max_epochs = 30;
    tc.patience = 5;
    tc.learning_rate = 0.05;
    tc.seed = 3;
    const TrainResult tr = sgd_train(make_rater(small_config(), width), train, val, tc);
    const EvalStats es = evaluate_on(tr.model, val);
    CHECK(es.accuracy > 0.95);
    CHECK(tr.history.front().val_loss > es.loss);
}

TEST_CASE("training is deterministic for a fixed seed") {
    Rng rng(11);
    const int width = 6;
    const auto train = toy_set(rng, 60, width);
    const auto val = toy_set(rng, 30, width);
    TrainConfig tc;
    tc.max_epochs = 5;
    tc.patience = 5;
    tc.seed = 9;
    TrainResult a = sgd_train(make_rater(small_config(), width), train, val, tc);
    TrainResult b = sgd_train(make_rater(small_config(), width), train, val, tc);
    REQUIRE(a.history.size() == b.history.size());
    for (size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].val_loss == b.history[i].val_loss);
    }
    std::vector<double*> pa = param_ptrs(a.model);
    std::vector<double*> pb = param_ptrs(b.model);
    for (size_t i = 0; i < pa.size(); ++i) REQUIRE(*pa[i] == *pb[i]);
}

TEST_CASE("early stopping returns the best validation model") {
    Rng rng(12);
    const int width = 6;
    const auto train = toy_set(rng, 100, width);
    const auto val = toy_set(rng, 40, width);
    TrainConfig tc;
    tc.max_epochs = 100;
    tc.patience = 3;
    tc.learning_rate = 0.2;  // deliberately noisy so validation loss wobbles
    tc.seed = 4;
    const TrainResult tr = sgd_train(make_rater(small_config(), width), train, val, tc);
    double best = tr.history.front().val_loss;
    size_t best_epoch = 0;
    for (size_t i = 0; i < tr.history.size(); ++i)
        if (tr.history[i].val_loss < best) {
            best = tr.history[i].val_loss;
            best_epoch = i;
        }
    // stopped within patience epochs of the best one
    CHECK(tr.history.size() <= best_epoch + 1 + 3);
    CHECK(evaluate_on(tr.model, val).loss == Catch::Approx(best));
}

TEST_CASE("the gradient clip bounds every update step") {
    Rng rng(13);
    const int width = 6;
    auto train = toy_set(rng, 1, width);
    const auto val = toy_set(rng, 4, width);
    // blow up the input scale so raw gradients exceed the clip
    for (auto& row : train[0].feats)
        for (double& v : row) v *= 60.0;
    TrainConfig tc;
    tc.max_epochs = 1;
    tc.patience = 1;
    tc.learning_rate = 1.0;
    tc.grad_clip = 5.0;
    const RaterModel before = make_rater(small_config(), width);
    TrainResult tr = sgd_train(before, train, val, tc);
    RaterModel before_copy = before;
    std::vector<double*> p0 = param_ptrs(before_copy);
    std::vector<double*> p1 = param_ptrs(tr.model);
    // the best model is the state after the single clipped step
    double step2 = 0.0;
    for (size_t i = 0; i < p0.size(); ++i) {
        const double d = *p1[i] - *p0[i];
        step2 += d * d;
    }
    CHECK(std::sqrt(step2) <= 5.0 * tc.learning_rate + 1e-9);
    CHECK(std::sqrt(step2) > 1.0);
}

TEST_CASE("training rejects degenerate inputs") {
    Rng rng(14);
    const auto set = toy_set(rng, 4, 6);
    TrainConfig tc;
    CHECK_THROWS(sgd_train(make_rater(small_config(), 6), {}, set, tc));
    CHECK_THROWS(sgd_train(make_rater(small_config(), 6), set, {}, tc));
    tc.patience = 0;
    CHECK_THROWS(sgd_train(make_rater(small_config(), 6), set, set, tc));
    tc.patience = 1;
    tc.learning_rate = -0.1;
    CHECK_THROWS(sgd_train(make_rater(small_config(), 6), set, set, tc));
}

TEST_CASE("evaluate_on reports accuracy and rmse against labels") {
    Rng rng(15);
    const int width = 6;
    const auto train = toy_set(rng, 200, width);
    const auto val = toy_set(rng, 80, width);
    TrainConfig tc;
    tc.max_epochs = 30;
    tc.patience = 5;
    tc.learning_rate = 0.05;
    const TrainResult tr = sgd_train(make_rater(small_config(), width), train, val, tc);

    // recompute both metrics from raw predictions
    long correct = 0;
    double se = 0.0;
    for (const auto& d : val) {
        const Prediction p = rater_predict(tr.model, d.feats);
        correct += p.success == d.success;
        se += (p.ret - d.ret) * (p.ret - d.ret);
    }
    const EvalStats es = evaluate_on(tr.model, val);
    CHECK(es.accuracy == Catch::Approx(static_cast<double>(correct) / val.size()));
    CHECK(es.rmse == Catch::Approx(std::sqrt(se / val.size())));
}
