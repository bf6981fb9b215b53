#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdslab/belief.hpp"
#include "sdslab/features.hpp"
#include "sdslab/gp_policy.hpp"
#include "sdslab/ontology.hpp"
#include "sdslab/rater.hpp"
#include "sdslab/rng.hpp"
#include "sdslab/simulator.hpp"

namespace sdslab {

struct SessionConfig {
    int max_turns = kDefaultMaxTurns;
    double confidence = 0.85;
    ErrorChannelConfig err;
    SimUserConfig user;
};

using SystemActor =
    std::function<SummaryAction(const BeliefState&, const UserAct& last_observed, int turn)>;

struct DialogueRun {
    std::vector<TurnRecord> turns;
    FeatureSeq feats;
    std::vector<std::vector<double>> decision_feats;  // summary features at decision time
    std::vector<int> decision_actions;                // chosen summary action indices
    DialogueOutcome outcome;
    int masked_actions = 0;
};

inline DialogueRun run_dialogue(const Ontology& ont, const VenueDB& db, const UserGoal& goal,
                                const SystemActor& actor, const SessionConfig& session,
                                Rng& user_rng, Rng& err_rng) {
    DialogueRun run;
    BeliefState belief = init_belief(ont);
    AgendaState agenda = init_dialogue(goal);
    UserAct last_obs = make_user_act(UserActType::null_act);

    for (int t = 1; t <= session.max_turns; ++t) {
        run.decision_feats.push_back(summary_features(belief));
        const SummaryAction chosen = actor(belief, last_obs, t);
        const SystemAct sys = master_action(chosen, belief, ont, db);
        if (!(sys.summary == chosen)) ++run.masked_actions;
        run.decision_actions.push_back(ont.summary_index(chosen));

        const UserAct true_act = user_respond(agenda, sys, user_rng, session.user);
        const UserAct observed = corrupt_act(true_act, session.err, err_rng, ont);
        belief = update_belief(belief, observed, sys, session.confidence, ont);
        run.feats.push_back(
            extract_turn_features(observed, belief, sys.summary, t, session.max_turns, ont)
                .flatten());
        run.turns.push_back({sys, true_act, observed});
        last_obs = observed;
        if (true_act.type == UserActType::bye || sys.summary.kind == SummaryKind::bye) break;
    }

    run.outcome.success = objective_success(run.turns, goal, ont, db);
    run.outcome.num_turns = static_cast<int>(run.turns.size());
    run.outcome.ret =
        compute_return(run.outcome.success, run.outcome.num_turns, session.max_turns);
    return run;
}

inline SystemActor random_actor(const Ontology& ont, Rng& rng) {
    return [&ont, &rng](const BeliefState&, const UserAct&, int) {
        return ont.summary_actions[rng.uniform_index(ont.summary_actions.size())];
    };
}

// Deterministic scripted system: greet, request every constraint slot,
// offer, answer requests, re-offer on corrections, close on bye. At zero
// error rate this succeeds on every satisfiable goal.
struct OracleActor {
    const Ontology* ont = nullptr;
    int next_request = 0;
    bool offer_made = false;
    std::deque<int> pending;

    SummaryAction operator()(const BeliefState&, const UserAct& last_obs, int turn) {
        if (turn == 1) return {SummaryKind::hello, -1};
        if (last_obs.type == UserActType::request) {
            const int ri = ont->requestable_index(last_obs.slot);
            bool queued = false;
            for (int q : pending) queued = queued || q == ri;
            if (ri >= 0 && !queued) pending.push_back(ri);
        }
        if (last_obs.type == UserActType::reqalts && offer_made)
            return {SummaryKind::inform_alternatives, -1};
        if (!pending.empty() && offer_made) {
            const int ri = pending.front();
            pending.pop_front();
            return {SummaryKind::inform_requested, ri};
        }
        if (last_obs.type == UserActType::inform && offer_made)
            return {SummaryKind::inform_offer, -1};
        if (next_request < ont->num_constraint_slots())
            return {SummaryKind::request_slot, next_request++};
        if (!offer_made) {
            offer_made = true;
            return {SummaryKind::inform_offer, -1};
        }
        return {SummaryKind::reqmore, -1};
    }
};

inline SystemActor oracle_actor(const Ontology& ont) {
    auto state = std::make_shared<OracleActor>();
    state->ont = &ont;
    return [state](const BeliefState& b, const UserAct& a, int t) { return (*state)(b, a, t); };
}

inline SystemActor policy_actor(const Ontology& ont, const GpPolicy& policy, SelectMode mode,
                                Rng& rng) {
    return [&ont, &policy, mode, &rng](const BeliefState& b, const UserAct&, int) {
        return ont.summary_actions[select_action(policy, summary_features(b), mode, rng)];
    };
}

enum class RewardKind { objective, rater };

// The rater variant never sees the goal: it reads only the turn features.
// Every objective reward computation bumps the goal-access counter.
struct RewardSource {
    RewardKind kind = RewardKind::objective;
    const RaterModel* rater = nullptr;
    std::function<bool(bool objective_success)> accept;  // objective source only
    mutable long goal_accesses = 0;
};

inline std::vector<double> episode_rewards(const RewardSource& src, const DialogueRun& run) {
    const int n = static_cast<int>(run.turns.size());
    std::vector<double> r(n, 0.0);
    if (src.kind == RewardKind::objective) {
        ++src.goal_accesses;
        for (int t = 0; t < n; ++t) r[t] = -1.0;
        if (run.outcome.success) r[n - 1] += 20.0;
        return r;
    }
    if (!src.rater) throw std::invalid_argument("episode_rewards: rater source without model");
    const Prediction pred = rater_predict(*src.rater, run.feats);
    if (src.rater->head.kind == HeadKind::binary) {
        for (int t = 0; t < n; ++t) r[t] = -1.0;
        if (pred.success) r[n - 1] += 20.0;
    } else {
        r[n - 1] = pred.ret;  // per-turn penalty of 0 for the return heads
    }
    return r;
}

enum class PolicySource { random, oracle, checkpoint, scratch };

struct CorpusDialogue {
    std::vector<TurnRecord> turns;
    FeatureSeq feats;
    DialogueOutcome outcome;
    UserGoal goal;
    double ser = 0.0;
};

struct Corpus {
    int feat_width = 0;
    int max_turns = kDefaultMaxTurns;
    std::uint64_t ontology_hash = 0;
    std::vector<CorpusDialogue> dialogues;
};

struct CorpusSpec {
    long n = 1000;
    std::vector<double> ser_levels = {0.15};  // one equal segment per level
    bool balance = false;
    PolicySource source = PolicySource::oracle;
    std::uint64_t seed = 1;
    double p_unsatisfiable = 0.1;
    SessionConfig session;
    const GpPolicy* policy = nullptr;  // checkpoint source
    GpConfig gp;                       // scratch source
};

struct CorpusGenResult {
    Corpus corpus;
    std::string warning;
};

inline std::vector<LabeledDialogue> corpus_to_labeled(const Corpus& c) {
    std::vector<LabeledDialogue> out;
    out.reserve(c.dialogues.size());
    for (const auto& d : c.dialogues) out.push_back({d.feats, d.outcome.success, d.outcome.ret});
    return out;
}

// Runs dialogues under the requested policy source, one segment per SER
// level. Balancing keeps per-label quotas within a segment and gives up
// after 10x the segment size, leaving a partial corpus and a warning.
// Deterministic: every dialogue draws from streams derived from the seed
// and a global attempt counter.
inline CorpusGenResult generate_corpus(const CorpusSpec& spec, const Ontology& ont,
                                       const VenueDB& db) {
    if (spec.n < 1) throw std::invalid_argument("generate_corpus: n must be positive");
    if (spec.ser_levels.empty())
        throw std::invalid_argument("generate_corpus: no SER levels");
    for (double s : spec.ser_levels)
        if (s < 0.0 || s > 1.0) throw std::invalid_argument("generate_corpus: SER out of range");
    if (spec.source == PolicySource::checkpoint && !spec.policy)
        throw std::invalid_argument("generate_corpus: checkpoint source without policy");

    CorpusGenResult result;
    result.corpus.feat_width = feature_width(ont);
    result.corpus.max_turns = spec.session.max_turns;
    result.corpus.ontology_hash = ontology_hash(ont);

    const long num_segments = static_cast<long>(spec.ser_levels.size());
    std::uint64_t attempt = 0;
    for (long seg = 0; seg < num_segments; ++seg) {
        long seg_n = spec.n / num_segments;
        if (seg == num_segments - 1) seg_n = spec.n - seg_n * (num_segments - 1);
        SessionConfig session = spec.session;
        session.err.ser = spec.ser_levels[seg];

        GpPolicy scratch;
        if (spec.source == PolicySource::scratch)
            scratch = make_policy(spec.gp, summary_feature_width(ont), ont.num_summary_actions());
        RewardSource objective{RewardKind::objective, nullptr, nullptr, 0};

        const long succ_target = (seg_n + 1) / 2;
        const long fail_target = seg_n - succ_target;
        long succ = 0, fail = 0, kept = 0;
        const long max_attempts = 10 * seg_n;
        for (long a = 0; kept < seg_n && a < max_attempts; ++a, ++attempt) {
            Rng goal_rng = Rng::stream(spec.seed, attempt * 4);
            Rng user_rng = Rng::stream(spec.seed, attempt * 4 + 1);
            Rng err_rng = Rng::stream(spec.seed, attempt * 4 + 2);
            Rng actor_rng = Rng::stream(spec.seed, attempt * 4 + 3);
            const UserGoal goal = sample_goal(goal_rng, ont, db, spec.p_unsatisfiable);

            SystemActor actor;
            switch (spec.source) {
                case PolicySource::random:
                    actor = random_actor(ont, actor_rng);
                    break;
                case PolicySource::oracle:
                    actor = oracle_actor(ont);
                    break;
                case PolicySource::checkpoint:
                    actor = policy_actor(ont, *spec.policy, SelectMode::exploit, actor_rng);
                    break;
                case PolicySource::scratch:
                    actor = policy_actor(ont, scratch, SelectMode::explore, actor_rng);
                    break;
            }
            const DialogueRun run = run_dialogue(ont, db, goal, actor, session, user_rng, err_rng);

            if (spec.source == PolicySource::scratch) {
                const std::vector<double> rewards = episode_rewards(objective, run);
                std::vector<GpStep> episode(run.turns.size());
                for (size_t t = 0; t < run.turns.size(); ++t)
                    episode[t] = {run.decision_feats[t], run.decision_actions[t], rewards[t]};
                gp_sarsa_update(scratch, episode);
            }

            if (spec.balance) {
                if (run.outcome.success && succ >= succ_target) continue;
                if (!run.outcome.success && fail >= fail_target) continue;
            }
            (run.outcome.success ? succ : fail) += 1;
            ++kept;
            result.corpus.dialogues.push_back(
                {run.turns, run.feats, run.outcome, goal, session.err.ser});
        }
        if (kept < seg_n)
            result.warning += "segment " + std::to_string(seg) + ": only " +
                              std::to_string(kept) + " of " + std::to_string(seg_n) +
                              " dialogues within the attempt budget; ";
    }
    return result;
}

struct RaterMetrics {
    double accuracy = 0.0;
    double rmse = 0.0;
};

inline RaterMetrics evaluate_predictions(
    const Corpus& corpus, const std::function<Prediction(const CorpusDialogue&)>& predict) {
    if (corpus.dialogues.empty()) throw std::invalid_argument("evaluate_predictions: empty corpus");
    RaterMetrics m;
    double se = 0.0;
    for (const auto& d : corpus.dialogues) {
        const Prediction p = predict(d);
        if (p.success == d.outcome.success) m.accuracy += 1.0;
        se += (p.ret - d.outcome.ret) * (p.ret - d.outcome.ret);
    }
    const double n = static_cast<double>(corpus.dialogues.size());
    m.accuracy /= n;
    m.rmse = std::sqrt(se / n);
    return m;
}

inline RaterMetrics evaluate_rater(const RaterModel& model, const Corpus& corpus) {
    if (corpus.feat_width != model.feat_width)
        throw std::invalid_argument("evaluate_rater: feature width mismatch");
    return evaluate_predictions(
        corpus, [&model](const CorpusDialogue& d) { return rater_predict(model, d.feats); });
}

struct CurvePoint {
    long index = 0;
    double reward = 0.0;  // total episode reward delivered by the source
    int turns = 0;
    bool objective_success = false;  // logged for evaluation, never fed back
};

struct OnlineResult {
    GpPolicy policy;
    std::vector<CurvePoint> curve;
    long goal_accesses = 0;
    long discarded = 0;
};

inline OnlineResult train_policy_online(const Ontology& ont, const VenueDB& db,
                                        const RewardSource& source, long n_dialogues, double ser,
                                        const GpConfig& gp, SessionConfig session,
                                        double p_unsatisfiable, std::uint64_t seed) {
    if (source.kind == RewardKind::rater && source.rater &&
        source.rater->feat_width != feature_width(ont))
        throw std::invalid_argument("train_policy_online: rater feature width mismatch");
    session.err.ser = ser;
    OnlineResult result;
    result.policy = make_policy(gp, summary_feature_width(ont), ont.num_summary_actions());
    for (long i = 0; i < n_dialogues; ++i) {
        Rng goal_rng = Rng::stream(seed, static_cast<std::uint64_t>(i) * 4);
        Rng user_rng = Rng::stream(seed, static_cast<std::uint64_t>(i) * 4 + 1);
        Rng err_rng = Rng::stream(seed, static_cast<std::uint64_t>(i) * 4 + 2);
        Rng actor_rng = Rng::stream(seed, static_cast<std::uint64_t>(i) * 4 + 3);
        const UserGoal goal = sample_goal(goal_rng, ont, db, p_unsatisfiable);
        const SystemActor actor = policy_actor(ont, result.policy, SelectMode::explore, actor_rng);
        const DialogueRun run = run_dialogue(ont, db, goal, actor, session, user_rng, err_rng);

        const std::vector<double> rewards = episode_rewards(source, run);
        double total = 0.0;
        for (double r : rewards) total += r;
        result.curve.push_back({i, total, run.outcome.num_turns, run.outcome.success});

        if (source.kind == RewardKind::objective && source.accept &&
            !source.accept(run.outcome.success)) {
            ++result.discarded;
            continue;
        }
        std::vector<GpStep> episode(run.turns.size());
        for (size_t t = 0; t < run.turns.size(); ++t)
            episode[t] = {run.decision_feats[t], run.decision_actions[t], rewards[t]};
        gp_sarsa_update(result.policy, episode);
    }
    result.goal_accesses = source.goal_accesses;
    return result;
}

struct PolicyEval {
    double success_rate = 0.0;
    double mean_return = 0.0;
};

inline PolicyEval eval_policy(const Ontology& ont, const VenueDB& db, const GpPolicy& policy,
                              long n_dialogues, double ser, SessionConfig session,
                              double p_unsatisfiable, std::uint64_t seed) {
    if (n_dialogues < 1) throw std::invalid_argument("eval_policy: n must be positive");
    session.err.ser = ser;
    PolicyEval ev;
    Rng unused(0);
    for (long i = 0; i < n_dialogues; ++i) {
        Rng goal_rng = Rng::stream(seed, static_cast<std::uint64_t>(i) * 4);
        Rng user_rng = Rng::stream(seed, static_cast<std::uint64_t>(i) * 4 + 1);
        Rng err_rng = Rng::stream(seed, static_cast<std::uint64_t>(i) * 4 + 2);
        const UserGoal goal = sample_goal(goal_rng, ont, db, p_unsatisfiable);
        const SystemActor actor = policy_actor(ont, policy, SelectMode::exploit, unused);
        const DialogueRun run = run_dialogue(ont, db, goal, actor, session, user_rng, err_rng);
        ev.success_rate += run.outcome.success ? 1.0 : 0.0;
        ev.mean_return += run.outcome.ret;
    }
    ev.success_rate /= static_cast<double>(n_dialogues);
    ev.mean_return /= static_cast<double>(n_dialogues);
    return ev;
}

inline std::vector<double> moving_average(const std::vector<double>& series, int window) {
    if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
    std::vector<double> out(series.size());
    double acc = 0.0;
    for (size_t i = 0; i < series.size(); ++i) {
        acc += series[i];
        if (i >= static_cast<size_t>(window)) acc -= series[i - window];
        out[i] = acc / static_cast<double>(std::min<size_t>(window, i + 1));
    }
    return out;
}

}  // namespace sdslab
