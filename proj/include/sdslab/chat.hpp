#pragma once

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdslab/gp_policy.hpp"
#include "sdslab/harness.hpp"
#include "sdslab/io.hpp"
#include "sdslab/rater.hpp"

namespace sdslab {

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// Typed user shorthand: acts separated by ';'. "inform food=v2",
// "request phone", or a bare act name (hello, affirm, negate, bye,
// reqalts, null). Slots and values are checked against the ontology.
inline std::vector<UserAct> parse_user_line(const Ontology& ont, const std::string& line) {
    std::vector<UserAct> acts;
    std::istringstream segs(line);
    std::string seg;
    while (std::getline(segs, seg, ';')) {
        seg = detail::trim(seg);
        if (seg.empty()) continue;
        std::istringstream words(seg);
        std::string head, rest;
        words >> head;
        std::getline(words, rest);
        rest = detail::trim(rest);
        UserActType type;
        try {
            type = user_act_from_name(head);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        if (type == UserActType::inform) {
            const size_t eq = rest.find('=');
            if (eq == std::string::npos) throw UsageError("inform needs slot=value: " + seg);
            const std::string slot = detail::trim(rest.substr(0, eq));
            const std::string value = detail::trim(rest.substr(eq + 1));
            const int si = ont.constraint_index(slot);
            if (si < 0) throw UsageError("unknown constraint slot: " + slot);
            if (ont.value_index(si, value) < 0)
                throw UsageError("unknown value for " + slot + ": " + value);
            acts.push_back(make_inform(slot, value));
        } else if (type == UserActType::request) {
            if (rest.empty()) throw UsageError("request needs a slot: " + seg);
            if (ont.requestable_index(rest) < 0) throw UsageError("unknown requestable: " + rest);
            acts.push_back(make_request(rest));
        } else {
            if (!rest.empty()) throw UsageError(head + " takes no arguments: " + seg);
            acts.push_back(make_user_act(type));
        }
    }
    if (acts.empty()) throw UsageError("no acts in line: " + line);
    return acts;
}

inline std::string render_system_act(const Ontology& ont, const SystemAct& a) {
    std::string s = summary_action_name(ont, a.summary);
    if (!a.venue.empty()) s += " venue=" + a.venue;
    for (const auto& [k, v] : a.args) {
        s += ' ';
        s += k;
        if (!v.empty()) s += "=" + v;
    }
    return s;
}

// Success probability read off the rater output: the binary head reports
// its sigmoid directly; the class head sums mass over winning returns;
// the regression head degenerates to a 0/1 indicator.
inline double success_probability(const RaterModel& m, const std::vector<double>& out,
                                  int num_turns) {
    switch (m.head.kind) {
        case HeadKind::binary:
            return out[0];
        case HeadKind::return_class: {
            double p = 0.0;
            for (size_t i = 0; i < out.size(); ++i) {
                const int ret = static_cast<int>(i) + m.head.min_return;
                if (ret + num_turns > 10) p += out[i];
            }
            return p;
        }
        case HeadKind::return_regress:
            return out[0] + num_turns > 10 ? 1.0 : 0.0;
    }
    throw std::logic_error("unreachable");
}

struct ChatTurn {
    SystemAct sys;
    std::vector<UserAct> user_acts;  // empty if the session ended on a system act
    double success_prob = 0.0;
    bool has_prob = false;
};

struct ChatResult {
    std::vector<ChatTurn> turns;
};

// Interactive loop: the checkpointed policy drives the system side, the
// human types user acts, and the rater's success estimate is printed
// after every exchange. "quit" or end of input stops the session.
inline ChatResult run_chat(const Ontology& ont, const VenueDB& db, const GpPolicy& policy,
                           const RaterModel& rater, const SessionConfig& session, std::istream& in,
                           std::ostream& out) {
    ChatResult result;
    BeliefState belief = init_belief(ont);
    FeatureSeq feats;
    Rng rng(0);
    for (int t = 1; t <= session.max_turns; ++t) {
        const int chosen = select_action(policy, summary_features(belief), SelectMode::exploit, rng);
        const SystemAct sys = master_action(ont.summary_actions[chosen], belief, ont, db);
        out << "sys> " << render_system_act(ont, sys) << "\n";
        if (sys.summary.kind == SummaryKind::bye) {
            result.turns.push_back({sys, {}, 0.0, false});
            break;
        }
        std::vector<UserAct> acts;
        for (;;) {
            out << "you> " << std::flush;
            std::string line;
            if (!std::getline(in, line)) return result;
            line = detail::trim(line);
            if (line == "quit" || line == "exit") return result;
            try {
                acts = parse_user_line(ont, line);
                break;
            } catch (const UsageError& e) {
                out << "unparsed: " << e.what() << "\n";
            }
        }
        for (const UserAct& a : acts)
            belief = update_belief(belief, a, sys, session.confidence, ont);
        feats.push_back(
            extract_turn_features(acts.front(), belief, sys.summary, t, session.max_turns, ont)
                .flatten());
        const std::vector<double> head_out = rater_forward(rater, feats);
        const double prob = success_probability(rater, head_out, t);
        char buf[64];
        std::snprintf(buf, sizeof buf, "p(success)=%.6f", prob);
        out << buf << "\n";
        result.turns.push_back({sys, acts, prob, true});
        if (acts.front().type == UserActType::bye) break;
    }
    return result;
}

inline std::string chat_to_jsonl(const Ontology& ont, const ChatResult& r) {
    std::string out;
    for (const auto& turn : r.turns) {
        nlohmann::json acts = nlohmann::json::array();
        for (const auto& a : turn.user_acts) acts.push_back(detail::act_to_json(a));
        nlohmann::json j = {{"sys_act", detail::sys_to_json(ont, turn.sys)},
                            {"user_acts", acts}};
        if (turn.has_prob) j["success_prob"] = turn.success_prob;
        out += j.dump();
        out += '\n';
    }
    return out;
}

// Re-runs a saved transcript through the tracker, feature extractor, and
// rater. The returned sequence must match the probabilities printed live.
inline std::vector<double> replay_chat(const Ontology& ont, const RaterModel& rater,
                                       const SessionConfig& session, const std::string& jsonl) {
    std::vector<double> probs;
    BeliefState belief = init_belief(ont);
    FeatureSeq feats;
    std::istringstream in(jsonl);
    std::string line;
    int t = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("bad transcript line: ") + e.what());
        }
        const SystemAct sys = detail::sys_from_json(ont, j.at("sys_act"));
        std::vector<UserAct> acts;
        for (const auto& a : j.at("user_acts")) acts.push_back(detail::act_from_json(a));
        if (acts.empty()) continue;
        ++t;
        for (const UserAct& a : acts)
            belief = update_belief(belief, a, sys, session.confidence, ont);
        feats.push_back(
            extract_turn_features(acts.front(), belief, sys.summary, t, session.max_turns, ont)
                .flatten());
        probs.push_back(success_probability(rater, rater_forward(rater, feats), t));
    }
    return probs;
}

}  // namespace sdslab
