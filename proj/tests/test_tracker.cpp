#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sdslab/belief.hpp"

using namespace sdslab;

namespace {

SystemAct no_act() {
    SystemAct a;
    a.summary = SummaryAction{SummaryKind::hello, -1};
    return a;
}

UserAct inform(const std::string& slot, const std::string& value) {
    UserAct a;
    a.type = UserActType::inform;
    a.slot = slot;
    a.value = value;
    return a;
}

UserAct plain(UserActType t) {
    UserAct a;
    a.type = t;
    return a;
}

UserAct request(const std::string& slot) {
    UserAct a;
    a.type = UserActType::request;
    a.slot = slot;
    return a;
}

}  // namespace

TEST_CASE("initial belief is uniform with method none") {
    const Ontology ont = default_ontology();
    const BeliefState b = init_belief(ont);
    REQUIRE(b.slot_dist.size() == 3);
    CHECK(b.slot_dist[0].size() == 8);
    CHECK(b.slot_dist[1].size() == 6);
    CHECK(b.slot_dist[2].size() == 4);
    for (double p : b.slot_dist[0]) CHECK(p == Catch::Approx(0.125));
    CHECK(b.method[static_cast<int>(Method::none)] == 1.0);
    CHECK(b.offer_made == 0.0);
    CHECK(belief_vector_width(ont) == 26);
    CHECK(belief_vector(b).size() == 26);
}

TEST_CASE("inform applies a discrete Bayes step") {
    // posterior of likelihood 0.85 on the named value, uniform elsewhere:
    // one step from a uniform prior gives 0.85 exactly, two give 0.99557
    const Ontology ont = default_ontology();
    BeliefState b = init_belief(ont);
    b = update_belief(b, inform("food", "v2"), no_act(), 0.85, ont);
    CHECK(b.slot_dist[0][1] == Catch::Approx(0.85).epsilon(1e-12));
    CHECK(b.slot_dist[0][0] == Catch::Approx(0.15 / 7.0).epsilon(1e-12));
    CHECK(b.method[static_cast<int>(Method::byconstraints)] == Catch::Approx(0.85));
    CHECK(b.method[static_cast<int>(Method::none)] == Catch::Approx(0.15));

    b = update_belief(b, inform("food", "v2"), no_act(), 0.85, ont);
    CHECK(b.slot_dist[0][1] == Catch::Approx(0.995570866141732).epsilon(1e-12));

    double z = 0.0;
    for (double p : b.slot_dist[0]) z += p;
    CHECK(z == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conflicting informs split the belief mass evenly") {
    const Ontology ont = default_ontology();
    BeliefState b = init_belief(ont);
    b = update_belief(b, inform("food", "v2"), no_act(), 0.85, ont);
    b = update_belief(b, inform("food", "v5"), no_act(), 0.85, ont);
    CHECK(b.slot_dist[0][1] == Catch::Approx(0.46484375).epsilon(1e-9));
    CHECK(b.slot_dist[0][4] == Catch::Approx(0.46484375).epsilon(1e-9));
}

TEST_CASE("affirm and negate read the confirmed slot value") {
    const Ontology ont = default_ontology();
    SystemAct confirm;
    confirm.summary = SummaryAction{SummaryKind::confirm_slot, 0};
    confirm.args = {{"food", "v2"}};

    BeliefState b = init_belief(ont);
    b = update_belief(b, plain(UserActType::affirm), confirm, 0.85, ont);
    CHECK(b.slot_dist[0][1] == Catch::Approx(0.85).epsilon(1e-12));

    BeliefState n = init_belief(ont);
    n = update_belief(n, inform("food", "v2"), no_act(), 0.85, ont);
    n = update_belief(n, plain(UserActType::negate), confirm, 0.85, ont);
    CHECK(n.slot_dist[0][1] == Catch::Approx(0.875).epsilon(1e-9));

    // affirm without a preceding confirm carries no slot evidence
    BeliefState u = init_belief(ont);
    u = update_belief(u, plain(UserActType::affirm), no_act(), 0.85, ont);
    CHECK(u.slot_dist[0][1] == Catch::Approx(0.125));
}

TEST_CASE("method interpolation tracks reqalts and bye") {
    const Ontology ont = default_ontology();
    BeliefState b = init_belief(ont);
    b = update_belief(b, inform("food", "v2"), no_act(), 0.85, ont);
    b = update_belief(b, plain(UserActType::reqalts), no_act(), 0.85, ont);
    CHECK(b.method[static_cast<int>(Method::byalternatives)] == Catch::Approx(0.85));
    CHECK(b.method[static_cast<int>(Method::byconstraints)] == Catch::Approx(0.85 * 0.15));
    double z = 0.0;
    for (double p : b.method) z += p;
    CHECK(z == Catch::Approx(1.0).epsilon(1e-12));

    b = update_belief(b, plain(UserActType::bye), no_act(), 0.85, ont);
    CHECK(b.method[static_cast<int>(Method::finished)] == Catch::Approx(0.85));
}

TEST_CASE("requested flags set on request and decay each turn") {
    const Ontology ont = default_ontology();
    BeliefState b = init_belief(ont);
    b = update_belief(b, request("phone"), no_act(), 0.85, ont);
    CHECK(b.requested[0] == 1.0);
    b = update_belief(b, plain(UserActType::null_act), no_act(), 0.85, ont);
    CHECK(b.requested[0] == Catch::Approx(0.9));
    b = update_belief(b, request("phone"), no_act(), 0.85, ont);
    CHECK(b.requested[0] == 1.0);
}

TEST_CASE("offers set the flag and remember the venue") {
    const Ontology ont = default_ontology();
    SystemAct offer;
    offer.summary = SummaryAction{SummaryKind::inform_offer, -1};
    offer.venue = "venue042";
    BeliefState b = init_belief(ont);
    b = update_belief(b, plain(UserActType::null_act), offer, 0.85, ont);
    CHECK(b.offer_made == 1.0);
    CHECK(b.offered_venue == "venue042");

    SystemAct alt;
    alt.summary = SummaryAction{SummaryKind::inform_alternatives, -1};
    alt.venue = "venue007";
    b = update_belief(b, plain(UserActType::null_act), alt, 0.85, ont);
    CHECK(b.offered_venue == "venue007");
}

TEST_CASE("unknown slots and values are ignored but counted") {
    const Ontology ont = default_ontology();
    BeliefState b = init_belief(ont);
    b = update_belief(b, inform("colour", "red"), no_act(), 0.85, ont);
    b = update_belief(b, inform("food", "v99"), no_act(), 0.85, ont);
    b = update_belief(b, request("colour"), no_act(), 0.85, ont);
    CHECK(b.unknown_act_warnings == 3);
    for (double p : b.slot_dist[0]) CHECK(p == Catch::Approx(0.125));
}

TEST_CASE("top_value prefers none on an untouched slot and breaks ties low") {
    const Ontology ont = default_ontology();
    BeliefState b = init_belief(ont);
    CHECK(top_value(b, 0) == -1);
    b = update_belief(b, inform("food", "v2"), no_act(), 0.85, ont);
    CHECK(top_value(b, 0) == 1);
    b = update_belief(b, inform("food", "v5"), no_act(), 0.85, ont);
    const int t = top_value(b, 0);
    CHECK((t == 1 || t == 4));
    CHECK(std::abs(b.slot_dist[0][1] - b.slot_dist[0][4]) < 1e-9);
}

TEST_CASE("slot distributions stay normalised through random updates") {
    const Ontology ont = default_ontology();
    Rng rng(31);
    BeliefState b = init_belief(ont);
    for (int i = 0; i < 500; ++i) {
        UserAct a;
        const int pick = static_cast<int>(rng.uniform_index(4));
        if (pick == 0)
            a = inform(ont.constraint_slots[rng.uniform_index(3)],
                       "v" + std::to_string(1 + rng.uniform_index(9)));
        else if (pick == 1)
            a = request(ont.requestable_slots[rng.uniform_index(3)]);
        else if (pick == 2)
            a = plain(UserActType::reqalts);
        else
            a = plain(UserActType::null_act);
        b = update_belief(b, a, no_act(), 0.85, ont);
        for (const auto& dist : b.slot_dist) {
            double z = 0.0;
            for (double p : dist) {
                CHECK(p >= 0.0);
                z += p;
            }
            CHECK(z == Catch::Approx(1.0).epsilon(1e-9));
        }
        double mz = 0.0;
        for (double p : b.method) mz += p;
        CHECK(mz == Catch::Approx(1.0).epsilon(1e-9));
    }
}
