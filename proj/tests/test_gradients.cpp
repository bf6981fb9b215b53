#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "sdslab/rater.hpp"

using namespace sdslab;

namespace {

FeatureSeq random_seq(Rng& rng, int width, int len) {
    FeatureSeq seq(len, std::vector<double>(width));
    for (auto& row : seq)
        for (double& v : row) v = rng.uniform(-1.0, 1.0);
    return seq;
}

double loss_at(const RaterModel& m, const FeatureSeq& seq, const std::vector<double>& target) {
    return loss(m.head, rater_forward(m, seq), target);
}

// central difference dL/dp for one parameter
double fd_grad(RaterModel& m, double* p, const FeatureSeq& seq,
               const std::vector<double>& target, double h) {
    const double saved = *p;
    *p = saved + h;
    const double up = loss_at(m, seq, target);
    *p = saved - h;
    const double down = loss_at(m, seq, target);
    *p = saved;
    return (up - down) / (2.0 * h);
}

void check_combo(RaterArch arch, HeadKind head, std::uint64_t seed) {
    RaterConfig rc;
    rc.arch = arch;
    rc.head = head;
    rc.hidden_width = 6;
    rc.num_maps = 4;
    rc.filter_width = 5;
    rc.mlp_width = 7;
    rc.max_turns = 12;
    rc.seed = seed;
    const int width = 9;
    RaterModel m = make_rater(rc, width);

    Rng rng(seed * 31 + 7);
    const int len = 1 + static_cast<int>(rng.uniform_index(rc.max_turns));
    const FeatureSeq seq = random_seq(rng, width, len);
    const bool success = rng.bernoulli(0.5);
    const int ret = static_cast<int>(rng.uniform_index(31)) - 12;
    const std::vector<double> target = rater_target(m, success, ret);

    RaterModel analytic = rater_gradients(m, seq, target);
    std::vector<double*> mp = param_ptrs(m);
    std::vector<double*> gp = param_ptrs(analytic);
    REQUIRE(mp.size() == gp.size());

    double worst = 0.0;
    for (size_t i = 0; i < mp.size(); ++i) {
        const double fd = fd_grad(m, mp[i], seq, target, 1e-5);
        const double an = *gp[i];
        const double rel = std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-6});
        worst = std::max(worst, rel);
    }
    INFO("arch=" << static_cast<int>(arch) << " head=" << static_cast<int>(head)
                 << " seed=" << seed << " len=" << len);
    CHECK(worst < 1e-4);
}

}  // namespace

TEST_CASE("analytic gradients match finite differences for every combo") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        check_combo(RaterArch::rnn, HeadKind::binary, seed);
        check_combo(RaterArch::rnn, HeadKind::return_class, seed);
        check_combo(RaterArch::rnn, HeadKind::return_regress, seed);
        check_combo(RaterArch::cnn, HeadKind::binary, seed);
        check_combo(RaterArch::cnn, HeadKind::return_class, seed);
        check_combo(RaterArch::cnn, HeadKind::return_regress, seed);
    }
}

TEST_CASE("gradients flow for single-turn inputs") {
    check_combo(RaterArch::cnn, HeadKind::binary, 99);
    RaterConfig rc;
    rc.arch = RaterArch::cnn;
    rc.head = HeadKind::binary;
    rc.seed = 3;
    RaterModel m = make_rater(rc, 55);
    Rng rng(4);
    const FeatureSeq seq = random_seq(rng, 55, 1);
    const std::vector<double> out = rater_forward(m, seq);
    REQUIRE(out.size() == 1);
    CHECK(out[0] > 0.0);
    CHECK(out[0] < 1.0);
    RaterModel g = rater_gradients(m, seq, {1.0});
    double norm = 0.0;
    for (double* p : param_ptrs(g)) norm += *p * *p;
    CHECK(norm > 0.0);
}

TEST_CASE("zero_like mirrors shapes with empty values") {
    RaterConfig rc;
    rc.arch = RaterArch::rnn;
    rc.hidden_width = 5;
    RaterModel m = make_rater(rc, 9);
    RaterModel z = zero_like(m);
    std::vector<double*> zp = param_ptrs(z);
    std::vector<double*> mp = param_ptrs(m);
    REQUIRE(zp.size() == mp.size());
    for (double* p : zp) CHECK(*p == 0.0);
}
