#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdslab/acts.hpp"
#include "sdslab/ontology.hpp"
#include "sdslab/rng.hpp"

namespace sdslab {

inline constexpr int kDefaultMaxTurns = 30;

struct ErrorChannelConfig {
    double ser = 0.0;                // probability the observed act is corrupted
    double act_type_fraction = 0.5;  // corruption mix: act-type vs slot/value substitution
};

struct SimUserConfig {
    // turns without progress before the user gives up; the default never
    // fires inside a 30-turn dialogue
    int patience = 1000;
};

// Rule table, in priority order:
//   1. correct-bad-offer   offered venue violates a constraint: re-inform the
//                          violated slot, or reqalts if this venue was already
//                          corrected once
//   2. accept-good-offer   offered venue fits: queue requests for everything
//                          still missing
//   3. respond-to-request  answer request/confirm/select about a slot
//   4. request-pending     pop the next act from the agenda
//   5. bye-when-done       all requests answered for an accepted venue, or a
//                          no-match heard on an unsatisfiable goal
//   6. repeat-on-null      nothing pending and nothing new: repeat last act
//   7. patience-abort      too many turns without progress: bye
struct AgendaState {
    UserGoal goal;
    std::vector<UserAct> agenda;  // back is the top of the stack
    std::set<std::string> informed;
    std::set<std::string> received;  // requests answered for the accepted venue
    std::string offered_venue;       // accepted offer only
    bool no_match_heard = false;
    bool terminated = false;
    std::string last_corrected_venue;
    UserAct last_act;
    bool has_last_act = false;
    int stall_turns = 0;
};

inline AgendaState init_dialogue(const UserGoal& goal) {
    AgendaState st;
    st.goal = goal;
    for (auto it = goal.constraints.rbegin(); it != goal.constraints.rend(); ++it)
        st.agenda.push_back(make_inform(it->first, it->second));
    st.agenda.push_back(make_user_act(UserActType::hello));
    return st;
}

namespace detail {

// first goal constraint the act's slot values violate, or "" when none
inline std::string offer_violation(const UserGoal& goal,
                                   const std::vector<std::pair<std::string, std::string>>& args) {
    for (const auto& [slot, want] : goal.constraints) {
        for (const auto& [k, v] : args)
            if (k == slot && v != want) return slot;
    }
    return "";
}

inline bool all_requests_received(const AgendaState& st) {
    for (const auto& s : st.goal.requests)
        if (!st.received.count(s)) return false;
    return true;
}

inline void queue_missing_requests(AgendaState& st) {
    st.agenda.erase(std::remove_if(st.agenda.begin(), st.agenda.end(),
                                   [](const UserAct& a) { return a.type == UserActType::request; }),
                    st.agenda.end());
    for (auto it = st.goal.requests.rbegin(); it != st.goal.requests.rend(); ++it)
        if (!st.received.count(*it)) st.agenda.push_back(make_request(*it));
}

}  // namespace detail

inline UserAct user_respond(AgendaState& st, const SystemAct& sys, Rng& rng,
                            const SimUserConfig& cfg = {}) {
    (void)rng;
    if (st.terminated) throw std::logic_error("user_respond after dialogue termination");

    auto finish = [&](UserAct act) {
        if (act.type == UserActType::bye) st.terminated = true;
        st.last_act = act;
        st.has_last_act = true;
        return act;
    };
    if (st.stall_turns >= cfg.patience) return finish(make_user_act(UserActType::bye));
    ++st.stall_turns;
    auto progressed = [&] { st.stall_turns = 0; };

    const SummaryKind kind = sys.summary.kind;
    bool answered_request = false;

    if (kind == SummaryKind::inform_offer || kind == SummaryKind::inform_alternatives) {
        if (sys.venue.empty()) {
            // the system asserts nothing matches
            if (!st.no_match_heard) progressed();
            st.no_match_heard = true;
            if (!st.goal.satisfiable) return finish(make_user_act(UserActType::bye));
            return finish(make_user_act(UserActType::reqalts));
        }
        const std::string bad = detail::offer_violation(st.goal, sys.args);
        if (!bad.empty()) {
            st.offered_venue.clear();
            st.received.clear();
            if (sys.venue == st.last_corrected_venue)
                return finish(make_user_act(UserActType::reqalts));
            st.last_corrected_venue = sys.venue;
            st.informed.insert(bad);
            progressed();
            return finish(make_inform(bad, *st.goal.constraint_value(bad)));
        }
        if (sys.venue != st.offered_venue) {
            st.offered_venue = sys.venue;
            st.received.clear();
            detail::queue_missing_requests(st);
            progressed();
        }
    } else if (kind == SummaryKind::inform_requested) {
        if (!sys.venue.empty() && sys.venue == st.offered_venue) {
            for (const auto& [slot, value] : sys.args) {
                (void)value;
                if (std::find(st.goal.requests.begin(), st.goal.requests.end(), slot) !=
                        st.goal.requests.end() &&
                    !st.received.count(slot)) {
                    st.received.insert(slot);
                    answered_request = true;
                }
            }
            if (answered_request) progressed();
        }
    } else if (kind == SummaryKind::inform_no_match) {
        if (!st.no_match_heard) progressed();
        st.no_match_heard = true;
        if (!st.goal.satisfiable) return finish(make_user_act(UserActType::bye));
        return finish(make_user_act(UserActType::reqalts));
    } else if (kind == SummaryKind::request_slot || kind == SummaryKind::select_slot) {
        if (!sys.args.empty()) {
            const std::string& slot = sys.args.front().first;
            if (const std::string* want = st.goal.constraint_value(slot)) {
                st.informed.insert(slot);
                progressed();
                return finish(make_inform(slot, *want));
            }
        }
        return finish(make_user_act(UserActType::null_act));
    } else if (kind == SummaryKind::confirm_slot) {
        if (!sys.args.empty()) {
            const auto& [slot, value] = sys.args.front();
            const std::string* want = st.goal.constraint_value(slot);
            if (want && *want == value) return finish(make_user_act(UserActType::affirm));
        }
        return finish(make_user_act(UserActType::negate));
    }

    while (!st.agenda.empty()) {
        UserAct act = st.agenda.back();
        st.agenda.pop_back();
        if (act.type == UserActType::inform) {
            // already answered via a direct system request, drop the stale entry
            if (st.informed.count(act.slot)) continue;
            st.informed.insert(act.slot);
        }
        progressed();
        return finish(act);
    }
    if (!st.offered_venue.empty() && detail::all_requests_received(st))
        return finish(make_user_act(UserActType::bye));
    if (st.no_match_heard && !st.goal.satisfiable)
        return finish(make_user_act(UserActType::bye));
    if (st.has_last_act && st.last_act.type != UserActType::null_act)
        return finish(st.last_act);
    return finish(make_user_act(UserActType::null_act));
}

inline UserAct corrupt_act(const UserAct& act, const ErrorChannelConfig& cfg, Rng& rng,
                           const Ontology& ont) {
    if (!rng.bernoulli(cfg.ser)) return act;

    const bool value_possible =
        (act.type == UserActType::inform &&
         ont.constraint_index(act.slot) >= 0 &&
         ont.constraint_values[ont.constraint_index(act.slot)].size() >= 2) ||
        (act.type == UserActType::request && ont.num_requestable_slots() >= 2 &&
         ont.requestable_index(act.slot) >= 0);

    if (value_possible && !rng.bernoulli(cfg.act_type_fraction)) {
        UserAct out = act;
        if (act.type == UserActType::inform) {
            const int si = ont.constraint_index(act.slot);
            const auto& vals = ont.constraint_values[si];
            const int cur = ont.value_index(si, act.value);
            int pick = static_cast<int>(rng.uniform_index(vals.size() - 1));
            if (cur >= 0 && pick >= cur) ++pick;
            out.value = vals[pick];
        } else {
            const int cur = ont.requestable_index(act.slot);
            int pick = static_cast<int>(rng.uniform_index(ont.requestable_slots.size() - 1));
            if (pick >= cur) ++pick;
            out.slot = ont.requestable_slots[pick];
        }
        return out;
    }

    const int cur = static_cast<int>(act.type);
    int pick = static_cast<int>(rng.uniform_index(kNumUserActTypes - 1));
    if (pick >= cur) ++pick;
    const auto t = static_cast<UserActType>(pick);
    if (t == UserActType::inform) {
        const int si = static_cast<int>(rng.uniform_index(ont.constraint_slots.size()));
        const auto& vals = ont.constraint_values[si];
        return make_inform(ont.constraint_slots[si],
                           vals[rng.uniform_index(vals.size())]);
    }
    if (t == UserActType::request) {
        const int ri = static_cast<int>(rng.uniform_index(ont.requestable_slots.size()));
        return make_request(ont.requestable_slots[ri]);
    }
    return make_user_act(t);
}

struct DialogueOutcome {
    bool success = false;
    int num_turns = 0;
    int ret = 0;
};

struct TurnRecord {
    SystemAct sys;
    UserAct true_act;
    UserAct observed_act;
};

inline int compute_return(bool success, int num_turns, int max_turns = kDefaultMaxTurns) {
    if (num_turns < 1 || num_turns > max_turns)
        throw std::invalid_argument("compute_return: turn count out of range");
    return 20 * (success ? 1 : 0) - num_turns;
}

inline bool objective_success(const std::vector<TurnRecord>& turns, const UserGoal& goal,
                              const Ontology& ont, const VenueDB& db) {
    std::string last_offer;
    bool no_match_asserted = false;
    std::set<std::string> informed_for_offer;

    for (const auto& rec : turns) {
        const SummaryKind k = rec.sys.summary.kind;
        if (k == SummaryKind::inform_offer || k == SummaryKind::inform_alternatives) {
            if (rec.sys.venue.empty()) {
                no_match_asserted = true;
            } else if (rec.sys.venue != last_offer) {
                last_offer = rec.sys.venue;
                informed_for_offer.clear();
            }
        } else if (k == SummaryKind::inform_no_match) {
            no_match_asserted = true;
        } else if (k == SummaryKind::inform_requested) {
            if (!rec.sys.venue.empty() && rec.sys.venue == last_offer) {
                const Venue* v = db.find(rec.sys.venue);
                for (const auto& [slot, value] : rec.sys.args) {
                    const int ri = ont.requestable_index(slot);
                    if (ri < 0 || !v) continue;
                    if (v->requestable_values[ri] == value) informed_for_offer.insert(slot);
                }
            }
        }
    }

    if (!goal.satisfiable) return no_match_asserted;
    if (last_offer.empty()) return false;
    const Venue* v = db.find(last_offer);
    if (!v) return false;
    for (const auto& [slot, want] : goal.constraints) {
        const int si = ont.constraint_index(slot);
        if (si < 0 || v->constraint_values[si] != want) return false;
    }
    for (const auto& slot : goal.requests)
        if (!informed_for_offer.count(slot)) return false;
    return true;
}

}  // namespace sdslab
