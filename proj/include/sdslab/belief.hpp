#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sdslab/acts.hpp"
#include "sdslab/ontology.hpp"

namespace sdslab {

// Method hypotheses tracked alongside the goal slots.
enum class Method : int { byconstraints = 0, byalternatives, finished, none };
inline constexpr int kNumMethods = 4;

// Factored belief state: an independent discrete filter per constraint
// slot (values + an explicit "none" entry), a 4-way method distribution,
// and deterministic history flags. A value type; updates return a copy.
struct BeliefState {
    std::vector<std::vector<double>> slot_dist;  // per slot: |values| entries then none
    std::vector<double> method;                  // byconstraints, byalternatives, finished, none
    std::vector<double> requested;               // per requestable slot, decaying flag
    double offer_made = 0.0;

    // bookkeeping outside the feature vector
    std::string offered_venue;
    long unknown_act_warnings = 0;
};

inline BeliefState init_belief(const Ontology& ont) {
    BeliefState b;
    for (const auto& vals : ont.constraint_values)
        b.slot_dist.emplace_back(vals.size() + 1, 1.0 / static_cast<double>(vals.size() + 1));
    b.method.assign(kNumMethods, 0.0);
    b.method[static_cast<int>(Method::none)] = 1.0;
    b.requested.assign(ont.num_requestable_slots(), 0.0);
    return b;
}

inline int belief_vector_width(const Ontology& ont) {
    int w = 0;
    for (const auto& vals : ont.constraint_values) w += static_cast<int>(vals.size()) + 1;
    return w + kNumMethods + ont.num_requestable_slots() + 1;
}

// Concatenation: slot distributions in ontology order, method, requested
// flags, offer flag. Layout is fixed for a given ontology.
inline std::vector<double> belief_vector(const BeliefState& b) {
    std::vector<double> v;
    for (const auto& dist : b.slot_dist) v.insert(v.end(), dist.begin(), dist.end());
    v.insert(v.end(), b.method.begin(), b.method.end());
    v.insert(v.end(), b.requested.begin(), b.requested.end());
    v.push_back(b.offer_made);
    return v;
}

namespace detail {

// Discrete Bayes step: likelihood `conf` on entry `idx`, remainder spread
// uniformly over the other entries.
inline void bayes_update(std::vector<double>& dist, int idx, double conf) {
    const int k = static_cast<int>(dist.size());
    const double other = (1.0 - conf) / static_cast<double>(k - 1);
    double z = 0.0;
    for (int i = 0; i < k; ++i) {
        dist[i] *= (i == idx) ? conf : other;
        z += dist[i];
    }
    for (double& p : dist) p /= z;
}

// Interpolation toward an observed method. A Bayes step would lock the
// distribution at its deterministic init (zero prior mass elsewhere).
inline void method_update(std::vector<double>& m, Method observed, double conf) {
    for (int i = 0; i < kNumMethods; ++i) {
        m[i] *= (1.0 - conf);
        if (i == static_cast<int>(observed)) m[i] += conf;
    }
}

}  // namespace detail

// One tracker step. Applies per-turn flag decay, the system act's offer
// bookkeeping, then the observed user act's evidence. Acts referencing
// unknown slots or values are ignored and counted.
inline BeliefState update_belief(const BeliefState& prev, const UserAct& observed,
                                 const SystemAct& last_system_act, double confidence,
                                 const Ontology& ont) {
    BeliefState b = prev;

    for (double& f : b.requested) f *= 0.9;

    const SummaryKind sk = last_system_act.summary.kind;
    if ((sk == SummaryKind::inform_offer || sk == SummaryKind::inform_alternatives) &&
        !last_system_act.venue.empty()) {
        b.offer_made = 1.0;
        b.offered_venue = last_system_act.venue;
    }

    switch (observed.type) {
        case UserActType::inform: {
            const int si = ont.constraint_index(observed.slot);
            const int vi = si >= 0 ? ont.value_index(si, observed.value) : -1;
            if (si < 0 || vi < 0) {
                ++b.unknown_act_warnings;
                break;
            }
            detail::bayes_update(b.slot_dist[si], vi, confidence);
            detail::method_update(b.method, Method::byconstraints, confidence);
            break;
        }
        case UserActType::request: {
            const int ri = ont.requestable_index(observed.slot);
            if (ri < 0) {
                ++b.unknown_act_warnings;
                break;
            }
            b.requested[ri] = 1.0;
            break;
        }
        case UserActType::reqalts:
            detail::method_update(b.method, Method::byalternatives, confidence);
            break;
        case UserActType::bye:
            detail::method_update(b.method, Method::finished, confidence);
            break;
        case UserActType::affirm:
        case UserActType::negate: {
            // evidence about the value the system just confirmed
            if (sk != SummaryKind::confirm_slot || last_system_act.args.empty()) break;
            const auto& [slot, value] = last_system_act.args.front();
            const int si = ont.constraint_index(slot);
            const int vi = si >= 0 ? ont.value_index(si, value) : -1;
            if (si < 0 || vi < 0) {
                ++b.unknown_act_warnings;
                break;
            }
            const double conf = observed.type == UserActType::affirm ? confidence : 1.0 - confidence;
            detail::bayes_update(b.slot_dist[si], vi, conf);
            break;
        }
        case UserActType::hello:
        case UserActType::null_act:
            break;
    }
    return b;
}

// Index of the most probable real value of a slot, or -1 when "none"
// (no constraint) carries at least as much mass as any value, so an
// untouched uniform slot imposes no constraint. Value ties go low.
inline int top_value(const BeliefState& b, int slot) {
    const auto& dist = b.slot_dist[slot];
    const int n_values = static_cast<int>(dist.size()) - 1;
    int best = 0;
    for (int i = 1; i < n_values; ++i)
        if (dist[i] > dist[best]) best = i;
    if (dist[n_values] >= dist[best]) return -1;
    return best;
}

}  // namespace sdslab
