#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sdslab/harness.hpp"

using namespace sdslab;

namespace {

struct World {
    Ontology ont = default_ontology();
    VenueDB db;
    World() { db = generate_database(ont, 7, 40); }
};

RaterModel tiny_rater(HeadKind head, const Ontology& ont) {
    RaterConfig rc;
    rc.head = head;
    rc.hidden_width = 8;
    rc.seed = 5;
    return make_rater(rc, feature_width(ont));
}

}  // namespace

TEST_CASE("oracle dialogues run to a coherent record") {
    World w;
    SessionConfig session;
    session.err.ser = 0.0;
    Rng goal_rng = Rng::stream(11, 0);
    Rng user_rng = Rng::stream(11, 1);
    Rng err_rng = Rng::stream(11, 2);
    const UserGoal goal = sample_goal(goal_rng, w.ont, w.db, 0.0);

    const DialogueRun run =
        run_dialogue(w.ont, w.db, goal, oracle_actor(w.ont), session, user_rng, err_rng);
    CHECK(run.outcome.success);
    CHECK(run.outcome.num_turns == static_cast<int>(run.turns.size()));
    CHECK(run.outcome.num_turns <= session.max_turns);
    CHECK(run.outcome.ret ==
          compute_return(run.outcome.success, run.outcome.num_turns, session.max_turns));
    REQUIRE(run.feats.size() == run.turns.size());
    REQUIRE(run.decision_feats.size() == run.turns.size());
    REQUIRE(run.decision_actions.size() == run.turns.size());
    for (const auto& f : run.feats)
        CHECK(static_cast<int>(f.size()) == feature_width(w.ont));
    for (const auto& f : run.decision_feats)
        CHECK(static_cast<int>(f.size()) == summary_feature_width(w.ont));
    for (int a : run.decision_actions) {
        CHECK(a >= 0);
        CHECK(a < w.ont.num_summary_actions());
    }
}

TEST_CASE("masked actions are counted") {
    World w;
    SessionConfig session;
    Rng goal_rng = Rng::stream(12, 0);
    Rng user_rng = Rng::stream(12, 1);
    Rng err_rng = Rng::stream(12, 2);
    const UserGoal goal = sample_goal(goal_rng, w.ont, w.db, 0.0);

    // a system that always tries to hang up gets masked every turn
    const SystemActor rude = [](const BeliefState&, const UserAct&, int) {
        return SummaryAction{SummaryKind::bye, -1};
    };
    const DialogueRun run = run_dialogue(w.ont, w.db, goal, rude, session, user_rng, err_rng);
    CHECK(run.masked_actions == run.outcome.num_turns);
    CHECK_FALSE(run.outcome.success);
}

TEST_CASE("objective rewards are the turn penalty plus the success bonus") {
    World w;
    SessionConfig session;
    Rng goal_rng = Rng::stream(13, 0);
    Rng user_rng = Rng::stream(13, 1);
    Rng err_rng = Rng::stream(13, 2);
    const UserGoal goal = sample_goal(goal_rng, w.ont, w.db, 0.0);
    const DialogueRun run =
        run_dialogue(w.ont, w.db, goal, oracle_actor(w.ont), session, user_rng, err_rng);

    RewardSource src;
    const std::vector<double> r = episode_rewards(src, run);
    REQUIRE(r.size() == run.turns.size());
    CHECK(src.goal_accesses == 1);
    double total = 0.0;
    for (size_t t = 0; t + 1 < r.size(); ++t) {
        CHECK(r[t] == -1.0);
        total += r[t];
    }
    total += r.back();
    CHECK(total == Catch::Approx(static_cast<double>(run.outcome.ret)));
    episode_rewards(src, run);
    CHECK(src.goal_accesses == 2);
}

TEST_CASE("rater rewards never touch the goal") {
    World w;
    SessionConfig session;
    Rng goal_rng = Rng::stream(14, 0);
    Rng user_rng = Rng::stream(14, 1);
    Rng err_rng = Rng::stream(14, 2);
    const UserGoal goal = sample_goal(goal_rng, w.ont, w.db, 0.0);
    const DialogueRun run =
        run_dialogue(w.ont, w.db, goal, oracle_actor(w.ont), session, user_rng, err_rng);

    const RaterModel binary = tiny_rater(HeadKind::binary, w.ont);
    RewardSource src{RewardKind::rater, &binary, nullptr, 0};
    const std::vector<double> r = episode_rewards(src, run);
    CHECK(src.goal_accesses == 0);
    const Prediction pred = rater_predict(binary, run.feats);
    double total = 0.0;
    for (double x : r) total += x;
    const double want = -static_cast<double>(r.size()) + (pred.success ? 20.0 : 0.0);
    CHECK(total == Catch::Approx(want));

    const RaterModel regress = tiny_rater(HeadKind::return_regress, w.ont);
    RewardSource rsrc{RewardKind::rater, &regress, nullptr, 0};
    const std::vector<double> rr = episode_rewards(rsrc, run);
    for (size_t t = 0; t + 1 < rr.size(); ++t) CHECK(rr[t] == 0.0);
    CHECK(rr.back() == Catch::Approx(rater_predict(regress, run.feats).ret));

    RewardSource empty{RewardKind::rater, nullptr, nullptr, 0};
    CHECK_THROWS_AS(episode_rewards(empty, run), std::invalid_argument);
}

TEST_CASE("corpus generation is deterministic") {
    World w;
    CorpusSpec spec;
    spec.n = 12;
    spec.seed = 99;
    spec.session.err.ser = 0.15;

    const CorpusGenResult a = generate_corpus(spec, w.ont, w.db);
    const CorpusGenResult b = generate_corpus(spec, w.ont, w.db);
    REQUIRE(a.corpus.dialogues.size() == 12);
    REQUIRE(b.corpus.dialogues.size() == 12);
    CHECK(a.warning.empty());
    for (size_t i = 0; i < 12; ++i) {
        const auto& da = a.corpus.dialogues[i];
        const auto& db2 = b.corpus.dialogues[i];
        CHECK(da.outcome.ret == db2.outcome.ret);
        CHECK(da.outcome.success == db2.outcome.success);
        REQUIRE(da.feats.size() == db2.feats.size());
        for (size_t t = 0; t < da.feats.size(); ++t)
            for (size_t k = 0; k < da.feats[t].size(); ++k)
                CHECK(da.feats[t][k] == db2.feats[t][k]);
    }

    CorpusSpec other = spec;
    other.seed = 100;
    const CorpusGenResult c = generate_corpus(other, w.ont, w.db);
    bool differs = false;
    for (size_t i = 0; i < 12 && !differs; ++i)
        differs = c.corpus.dialogues[i].outcome.ret != a.corpus.dialogues[i].outcome.ret ||
                  c.corpus.dialogues[i].feats.size() != a.corpus.dialogues[i].feats.size();
    CHECK(differs);
}

TEST_CASE("balanced corpora meet per-label quotas") {
    World w;
    CorpusSpec spec;
    spec.n = 30;
    spec.balance = true;
    spec.seed = 21;
    spec.session.err.ser = 0.3;
    const CorpusGenResult r = generate_corpus(spec, w.ont, w.db);
    REQUIRE(r.corpus.dialogues.size() == 30);
    long succ = 0;
    for (const auto& d : r.corpus.dialogues) succ += d.outcome.success ? 1 : 0;
    CHECK(succ == 15);
}

TEST_CASE("each error level gets its own segment") {
    World w;
    CorpusSpec spec;
    spec.n = 10;
    spec.ser_levels = {0.0, 0.5};
    spec.seed = 31;
    const CorpusGenResult r = generate_corpus(spec, w.ont, w.db);
    REQUIRE(r.corpus.dialogues.size() == 10);
    for (size_t i = 0; i < 5; ++i) CHECK(r.corpus.dialogues[i].ser == 0.0);
    for (size_t i = 5; i < 10; ++i) CHECK(r.corpus.dialogues[i].ser == 0.5);
}

TEST_CASE("all goals are satisfiable when the quota is zero") {
    World w;
    CorpusSpec spec;
    spec.n = 20;
    spec.p_unsatisfiable = 0.0;
    spec.seed = 41;
    const CorpusGenResult r = generate_corpus(spec, w.ont, w.db);
    for (const auto& d : r.corpus.dialogues) CHECK(d.goal.satisfiable);
}

TEST_CASE("corpus generation validates its spec") {
    World w;
    CorpusSpec spec;
    spec.n = 0;
    CHECK_THROWS_AS(generate_corpus(spec, w.ont, w.db), std::invalid_argument);
    spec.n = 5;
    spec.ser_levels = {};
    CHECK_THROWS_AS(generate_corpus(spec, w.ont, w.db), std::invalid_argument);
    spec.ser_levels = {1.5};
    CHECK_THROWS_AS(generate_corpus(spec, w.ont, w.db), std::invalid_argument);
    spec.ser_levels = {0.1};
    spec.source = PolicySource::checkpoint;
    spec.policy = nullptr;
    CHECK_THROWS_AS(generate_corpus(spec, w.ont, w.db), std::invalid_argument);
}

TEST_CASE("scratch corpora come from a policy learning as it goes") {
    World w;
    CorpusSpec spec;
    spec.n = 16;
    spec.source = PolicySource::scratch;
    spec.seed = 51;
    const CorpusGenResult r = generate_corpus(spec, w.ont, w.db);
    REQUIRE(r.corpus.dialogues.size() == 16);
    for (const auto& d : r.corpus.dialogues) {
        CHECK(!d.turns.empty());
        CHECK(d.feats.size() == d.turns.size());
    }
}

TEST_CASE("online training keeps the books straight") {
    World w;
    GpConfig gp;
    SessionConfig session;

    SECTION("objective source counts goal accesses") {
        RewardSource src;
        const OnlineResult res =
            train_policy_online(w.ont, w.db, src, 25, 0.15, gp, session, 0.1, 61);
        REQUIRE(res.curve.size() == 25);
        CHECK(res.goal_accesses == 25);
        CHECK(res.discarded == 0);
        CHECK(res.policy.size() > 0);
        for (const auto& pt : res.curve) {
            const double want = -pt.turns + (pt.objective_success ? 20.0 : 0.0);
            CHECK(pt.reward == Catch::Approx(want));
        }
    }

    SECTION("accept filter discards but still logs") {
        RewardSource src;
        src.accept = [](bool success) { return success; };
        const OnlineResult res =
            train_policy_online(w.ont, w.db, src, 25, 0.15, gp, session, 0.1, 61);
        long fails = 0;
        for (const auto& pt : res.curve) fails += pt.objective_success ? 0 : 1;
        CHECK(res.curve.size() == 25);
        CHECK(res.discarded == fails);
        CHECK(res.discarded > 0);
    }

    SECTION("rater source trains without goal access") {
        const RaterModel binary = tiny_rater(HeadKind::binary, w.ont);
        RewardSource src{RewardKind::rater, &binary, nullptr, 0};
        const OnlineResult res =
            train_policy_online(w.ont, w.db, src, 25, 0.15, gp, session, 0.1, 61);
        CHECK(res.goal_accesses == 0);
        CHECK(res.discarded == 0);
        REQUIRE(res.curve.size() == 25);
        for (const auto& pt : res.curve) {
            const double bonus = pt.reward + pt.turns;
            CHECK((bonus == Catch::Approx(0.0) || bonus == Catch::Approx(20.0)));
        }
    }

    SECTION("rater width mismatch is rejected") {
        RaterConfig rc;
        rc.hidden_width = 4;
        const RaterModel bad = make_rater(rc, 7);
        RewardSource src{RewardKind::rater, &bad, nullptr, 0};
        CHECK_THROWS_AS(train_policy_online(w.ont, w.db, src, 5, 0.15, gp, session, 0.1, 61),
                        std::invalid_argument);
    }
}

TEST_CASE("policy evaluation is deterministic in its seed") {
    World w;
    GpConfig gp;
    SessionConfig session;
    RewardSource src;
    const OnlineResult res = train_policy_online(w.ont, w.db, src, 20, 0.15, gp, session, 0.1, 71);

    const PolicyEval a = eval_policy(w.ont, w.db, res.policy, 30, 0.15, session, 0.1, 72);
    const PolicyEval b = eval_policy(w.ont, w.db, res.policy, 30, 0.15, session, 0.1, 72);
    CHECK(a.success_rate == b.success_rate);
    CHECK(a.mean_return == b.mean_return);
    CHECK(a.success_rate >= 0.0);
    CHECK(a.success_rate <= 1.0);
    CHECK(a.mean_return <= 19.0);
    CHECK_THROWS_AS(eval_policy(w.ont, w.db, res.policy, 0, 0.15, session, 0.1, 72),
                    std::invalid_argument);
}

TEST_CASE("evaluation metrics match a hand computation") {
    Corpus c;
    c.feat_width = 3;
    CorpusDialogue d1;
    d1.outcome.success = true;
    d1.outcome.ret = 10;
    CorpusDialogue d2;
    d2.outcome.success = false;
    d2.outcome.ret = -4;
    c.dialogues = {d1, d2};

    int i = 0;
    const RaterMetrics m = evaluate_predictions(c, [&i](const CorpusDialogue&) {
        Prediction p;
        p.success = true;
        p.ret = i++ == 0 ? 12.0 : -1.0;
        return p;
    });
    CHECK(m.accuracy == Catch::Approx(0.5));
    CHECK(m.rmse == Catch::Approx(std::sqrt((4.0 + 9.0) / 2.0)));

    CHECK_THROWS_AS(evaluate_predictions(Corpus{}, nullptr), std::invalid_argument);

    RaterConfig rc;
    rc.hidden_width = 4;
    const RaterModel model = make_rater(rc, 5);
    CHECK_THROWS_AS(evaluate_rater(model, c), std::invalid_argument);
}

TEST_CASE("moving average matches a direct computation") {
    const std::vector<double> s{1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> ma = moving_average(s, 3);
    REQUIRE(ma.size() == 5);
    CHECK(ma[0] == Catch::Approx(1.0));
    CHECK(ma[1] == Catch::Approx(1.5));
    CHECK(ma[2] == Catch::Approx(2.0));
    CHECK(ma[3] == Catch::Approx(3.0));
    CHECK(ma[4] == Catch::Approx(4.0));
    CHECK(moving_average(s, 1) == s);
    CHECK_THROWS_AS(moving_average(s, 0), std::invalid_argument);
}
