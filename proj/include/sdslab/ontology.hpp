#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdslab/acts.hpp"
#include "sdslab/rng.hpp"

namespace sdslab {

using Constraints = std::vector<std::pair<std::string, std::string>>;

// Build the ordered summary action inventory for a domain with the given
// slot counts. Order: request(s)*, confirm(s)*, select(s)*, inform_offer,
// inform_requested(r)*, inform_no_match, repeat, reqmore, hello, bye,
// restart, inform_alternatives. With 3+3 slots this is exactly 20 actions
// and its order defines the system-act one-hot.
inline std::vector<SummaryAction> build_summary_actions(int n_constraint, int n_requestable) {
    std::vector<SummaryAction> acts;
    for (int s = 0; s < n_constraint; ++s) acts.push_back({SummaryKind::request_slot, s});
    for (int s = 0; s < n_constraint; ++s) acts.push_back({SummaryKind::confirm_slot, s});
    for (int s = 0; s < n_constraint; ++s) acts.push_back({SummaryKind::select_slot, s});
    acts.push_back({SummaryKind::inform_offer, -1});
    for (int r = 0; r < n_requestable; ++r) acts.push_back({SummaryKind::inform_requested, r});
    acts.push_back({SummaryKind::inform_no_match, -1});
    acts.push_back({SummaryKind::repeat_last, -1});
    acts.push_back({SummaryKind::reqmore, -1});
    acts.push_back({SummaryKind::hello, -1});
    acts.push_back({SummaryKind::bye, -1});
    acts.push_back({SummaryKind::restart, -1});
    acts.push_back({SummaryKind::inform_alternatives, -1});
    return acts;
}

struct Ontology {
    std::vector<std::string> constraint_slots;
    std::vector<std::vector<std::string>> constraint_values;  // per constraint slot
    std::vector<std::string> requestable_slots;
    std::vector<std::string> user_act_types;
    std::vector<SummaryAction> summary_actions;

    int num_constraint_slots() const { return static_cast<int>(constraint_slots.size()); }
    int num_requestable_slots() const { return static_cast<int>(requestable_slots.size()); }
    int num_summary_actions() const { return static_cast<int>(summary_actions.size()); }
    int num_user_act_types() const { return static_cast<int>(user_act_types.size()); }

    int constraint_index(const std::string& slot) const {
        for (int i = 0; i < num_constraint_slots(); ++i)
            if (constraint_slots[i] == slot) return i;
        return -1;
    }

    int requestable_index(const std::string& slot) const {
        for (int i = 0; i < num_requestable_slots(); ++i)
            if (requestable_slots[i] == slot) return i;
        return -1;
    }

    int value_index(int slot, const std::string& value) const {
        const auto& vals = constraint_values[slot];
        for (int i = 0; i < static_cast<int>(vals.size()); ++i)
            if (vals[i] == value) return i;
        return -1;
    }

    int summary_index(const SummaryAction& a) const {
        for (int i = 0; i < num_summary_actions(); ++i)
            if (summary_actions[i] == a) return i;
        return -1;
    }

    void validate() const {
        std::set<std::string> names;
        for (const auto& s : constraint_slots) names.insert(s);
        for (const auto& s : requestable_slots) names.insert(s);
        if (names.size() != constraint_slots.size() + requestable_slots.size())
            throw std::invalid_argument("ontology: slot names must be unique");
        if (constraint_values.size() != constraint_slots.size())
            throw std::invalid_argument("ontology: one value set per constraint slot required");
        for (const auto& vals : constraint_values)
            if (vals.empty()) throw std::invalid_argument("ontology: empty value set");
        if (user_act_types.empty() || summary_actions.empty())
            throw std::invalid_argument("ontology: act inventories must be non-empty");
    }
};

inline std::string summary_action_name(const Ontology& ont, const SummaryAction& a) {
    switch (a.kind) {
        case SummaryKind::request_slot: return "request_" + ont.constraint_slots[a.slot];
        case SummaryKind::confirm_slot: return "confirm_" + ont.constraint_slots[a.slot];
        case SummaryKind::select_slot: return "select_" + ont.constraint_slots[a.slot];
        case SummaryKind::inform_offer: return "inform_offer";
        case SummaryKind::inform_requested: return "inform_" + ont.requestable_slots[a.slot];
        case SummaryKind::inform_no_match: return "inform_no_match";
        case SummaryKind::repeat_last: return "repeat";
        case SummaryKind::reqmore: return "reqmore";
        case SummaryKind::hello: return "hello";
        case SummaryKind::bye: return "bye";
        case SummaryKind::restart: return "restart";
        case SummaryKind::inform_alternatives: return "inform_alternatives";
    }
    return "unknown";
}

inline SummaryAction summary_action_from_name(const Ontology& ont, const std::string& name) {
    for (const auto& a : ont.summary_actions)
        if (summary_action_name(ont, a) == name) return a;
    throw std::invalid_argument("unknown summary action: " + name);
}

// Toy restaurant-style domain: 3 constraint slots with 7/5/3 values and
// 3 requestable slots. Yields a 20-action summary space and a 26-dim
// belief vector.
inline Ontology default_ontology() {
    Ontology ont;
    ont.constraint_slots = {"food", "area", "pricerange"};
    ont.constraint_values = {
        {"v1", "v2", "v3", "v4", "v5", "v6", "v7"},
        {"v1", "v2", "v3", "v4", "v5"},
        {"v1", "v2", "v3"},
    };
    ont.requestable_slots = {"phone", "address", "postcode"};
    for (int i = 0; i < kNumUserActTypes; ++i) ont.user_act_types.push_back(user_act_names()[i]);
    ont.summary_actions = build_summary_actions(3, 3);
    ont.validate();
    return ont;
}

// FNV-1a over a canonical rendering; identifies the ontology in
// checkpoint headers and corpus headers.
inline std::uint64_t ontology_hash(const Ontology& ont) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;
        h *= 0x100000001b3ULL;
    };
    for (int i = 0; i < ont.num_constraint_slots(); ++i) {
        mix(ont.constraint_slots[i]);
        for (const auto& v : ont.constraint_values[i]) mix(v);
    }
    for (const auto& s : ont.requestable_slots) mix(s);
    for (const auto& s : ont.user_act_types) mix(s);
    for (const auto& a : ont.summary_actions) mix(summary_action_name(ont, a));
    return h;
}

struct Venue {
    std::string name;
    std::vector<std::string> constraint_values;   // one per constraint slot
    std::vector<std::string> requestable_values;  // one per requestable slot
};

struct VenueDB {
    std::vector<Venue> venues;

    const Venue* find(const std::string& name) const {
        for (const auto& v : venues)
            if (v.name == name) return &v;
        return nullptr;
    }
};

struct UserGoal {
    Constraints constraints;        // subset of constraint slots
    std::vector<std::string> requests;  // non-empty subset of requestable slots
    bool satisfiable = true;

    const std::string* constraint_value(const std::string& slot) const {
        for (const auto& [s, v] : constraints)
            if (s == slot) return &v;
        return nullptr;
    }
};

// Deterministic synthetic database: slot values uniform over the value
// sets, names venue000.., requestable fields synthesised from the stream.
inline VenueDB generate_database(const Ontology& ont, std::uint64_t seed, int size) {
    if (size < 1) throw std::invalid_argument("generate_database: size must be >= 1");
    static const char* streets[] = {"mill", "bridge", "king", "regent", "station",
                                    "castle", "market", "chapel"};
    Rng rng = Rng::stream(seed, 0x6db5);
    VenueDB db;
    db.venues.reserve(size);
    for (int i = 0; i < size; ++i) {
        Venue v;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "venue%03d", i);
        v.name = buf;
        for (int s = 0; s < ont.num_constraint_slots(); ++s) {
            const auto& vals = ont.constraint_values[s];
            v.constraint_values.push_back(vals[rng.uniform_index(vals.size())]);
        }
        for (int r = 0; r < ont.num_requestable_slots(); ++r) {
            const std::string& slot = ont.requestable_slots[r];
            std::string val;
            if (slot == "phone") {
                val = "555-" + std::to_string(1000 + rng.uniform_index(9000));
            } else if (slot == "address") {
                val = std::to_string(1 + rng.uniform_index(99)) + " " +
                      streets[rng.uniform_index(8)] + " street";
            } else {
                val = "pc" + std::to_string(10 + rng.uniform_index(90)) + "x" +
                      std::to_string(rng.uniform_index(10));
            }
            v.requestable_values.push_back(val);
        }
        db.venues.push_back(std::move(v));
    }
    return db;
}

// Venues whose every constrained slot equals the constraint value.
inline std::vector<const Venue*> matching_venues(const Ontology& ont, const VenueDB& db,
                                                 const Constraints& constraints) {
    for (const auto& [slot, value] : constraints) {
        if (ont.constraint_index(slot) < 0)
            throw std::invalid_argument("matching_venues: unknown slot " + slot);
        (void)value;
    }
    std::vector<const Venue*> out;
    for (const auto& v : db.venues) {
        bool ok = true;
        for (const auto& [slot, value] : constraints) {
            const int si = ont.constraint_index(slot);
            if (v.constraint_values[si] != value) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(&v);
    }
    return out;
}

// Goal sampler. With probability 1 - p_unsatisfiable the constraints are
// copied from a random venue (so at least that venue matches); otherwise
// full constraint sets are drawn until one matches nothing. Requests are
// a non-empty uniform subset of the requestable slots.
inline UserGoal sample_goal(Rng& rng, const Ontology& ont, const VenueDB& db,
                            double p_unsatisfiable) {
    if (p_unsatisfiable < 0.0 || p_unsatisfiable >= 1.0)
        throw std::invalid_argument("sample_goal: p_unsatisfiable must be in [0, 1)");
    const int ns = ont.num_constraint_slots();
    UserGoal goal;

    const bool want_unsat = rng.bernoulli(p_unsatisfiable);
    bool made_unsat = false;
    if (want_unsat) {
        // full constraint sets have the best chance of missing every venue
        for (int attempt = 0; attempt < 1000 && !made_unsat; ++attempt) {
            Constraints c;
            for (int s = 0; s < ns; ++s) {
                const auto& vals = ont.constraint_values[s];
                c.emplace_back(ont.constraint_slots[s], vals[rng.uniform_index(vals.size())]);
            }
            if (matching_venues(ont, db, c).empty()) {
                goal.constraints = std::move(c);
                goal.satisfiable = false;
                made_unsat = true;
            }
        }
    }
    if (!made_unsat) {
        const Venue& v = db.venues[rng.uniform_index(db.venues.size())];
        const int n_constrained = 1 + static_cast<int>(rng.uniform_index(ns));
        std::vector<int> slots(ns);
        for (int i = 0; i < ns; ++i) slots[i] = i;
        rng.shuffle(slots);
        slots.resize(n_constrained);
        std::sort(slots.begin(), slots.end());
        for (int s : slots)
            goal.constraints.emplace_back(ont.constraint_slots[s], v.constraint_values[s]);
        goal.satisfiable = true;
    }

    const int nr = ont.num_requestable_slots();
    const int n_requests = 1 + static_cast<int>(rng.uniform_index(nr));
    std::vector<int> reqs(nr);
    for (int i = 0; i < nr; ++i) reqs[i] = i;
    rng.shuffle(reqs);
    reqs.resize(n_requests);
    std::sort(reqs.begin(), reqs.end());
    for (int r : reqs) goal.requests.push_back(ont.requestable_slots[r]);
    return goal;
}

}  // namespace sdslab
