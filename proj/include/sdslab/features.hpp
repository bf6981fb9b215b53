#pragma once

#include <stdexcept>
#include <vector>

#include "sdslab/acts.hpp"
#include "sdslab/belief.hpp"
#include "sdslab/ontology.hpp"

namespace sdslab {

struct TurnFeatures {
    std::vector<double> user_act_onehot;
    std::vector<double> belief;
    std::vector<double> sys_act_onehot;
    double turn_frac = 0.0;

    std::vector<double> flatten() const {
        std::vector<double> v;
        v.reserve(user_act_onehot.size() + belief.size() + sys_act_onehot.size() + 1);
        v.insert(v.end(), user_act_onehot.begin(), user_act_onehot.end());
        v.insert(v.end(), belief.begin(), belief.end());
        v.insert(v.end(), sys_act_onehot.begin(), sys_act_onehot.end());
        v.push_back(turn_frac);
        return v;
    }
};

using FeatureSeq = std::vector<std::vector<double>>;

inline int feature_width(const Ontology& ont) {
    return ont.num_user_act_types() + belief_vector_width(ont) + ont.num_summary_actions() + 1;
}

inline TurnFeatures extract_turn_features(const UserAct& observed_act, const BeliefState& belief,
                                          const SummaryAction& summary, int t, int max_turns,
                                          const Ontology& ont) {
    if (t < 1 || t > max_turns)
        throw std::invalid_argument("extract_turn_features: turn index out of range");
    TurnFeatures f;
    f.user_act_onehot.assign(ont.num_user_act_types(), 0.0);
    f.user_act_onehot[static_cast<int>(observed_act.type)] = 1.0;
    f.belief = belief_vector(belief);
    f.sys_act_onehot.assign(ont.num_summary_actions(), 0.0);
    const int ai = ont.summary_index(summary);
    if (ai < 0) throw std::invalid_argument("extract_turn_features: unknown summary action");
    f.sys_act_onehot[ai] = 1.0;
    f.turn_frac = static_cast<double>(t) / static_cast<double>(max_turns);
    return f;
}

}  // namespace sdslab
