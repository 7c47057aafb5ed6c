#include "navsim/abstraction.hpp"
#include "test_scenarios.hpp"

#include <doctest.h>

using namespace navsim;
using namespace navsim::testing;

TEST_CASE("execute_path: stay-put rounds complete with empty motion") {
    const Scenario s = wide_scenario();
    const PathExecution exec = execute_path(s, 5e-3, 30.0);
    REQUIRE(exec.status == PathStatus::completed);
    REQUIRE(exec.rounds.size() == 1);
    REQUIRE(exec.systems.size() == 3);
    for (const auto &tr : exec.rounds[0].transitions) {
        CHECK(tr.valid);
        CHECK(tr.from_region == tr.to_region);
        CHECK(tr.t_end <= 1.0);
    }
    for (const auto &ts : exec.systems) {
        CHECK(ts.transitions.size() == 1);
        CHECK(ts.transitions[0].from == ts.transitions[0].to);
    }
}

TEST_CASE("execute_path: corridor handover builds the expected systems") {
    const Scenario s = corridor_scenario();
    SimLog log;
    const PathExecution exec = execute_path(s, 5e-3, s.sim.t_max, &log);
    REQUIRE(exec.status == PathStatus::completed);
    REQUIRE(exec.systems.size() == 2);

    const TransitionSystem &ts1 = exec.systems[0];
    CHECK(ts1.agent == 1);
    CHECK(ts1.states == std::vector<int>{1, 2});
    CHECK(ts1.initial == std::vector<int>{1});
    REQUIRE(ts1.transitions.size() == 1);
    CHECK(ts1.transitions[0].from == 1);
    CHECK(ts1.transitions[0].to == 2);
    CHECK(ts1.aps == std::vector<std::string>{"left", "right"});
    CHECK(ts1.labels.at(2) == std::vector<std::string>{"right"});

    // Neighbor bookkeeping: at the endpoint both agents sit in region 2.
    REQUIRE(ts1.neighbor_map.count(2) == 1);
    CHECK(ts1.neighbor_map.at(2) == std::vector<int>{2});

    // Recorded intervals contain no safety violations.
    for (const auto &round : exec.rounds) CHECK(round.violations.empty());

    // Consistency of the neighbor record with the final logged state.
    const auto &round = exec.rounds[0];
    for (const auto &tr : round.transitions)
        for (std::size_t k = 0; k < tr.neighbor_regions_at_end.size(); ++k) {
            const int jn = s.required_neighbors[tr.agent][k];
            CHECK(tr.neighbor_regions_at_end[k] == round.final_state.region[jn]);
        }
}

TEST_CASE("build_transition_system skips nothing valid and rejects bad rounds") {
    const Scenario s = corridor_scenario();

    // Zero rounds: initial region only, no transitions.
    const TransitionSystem empty = build_transition_system(s, {}, 0);
    CHECK(empty.transitions.empty());
    CHECK(empty.initial == std::vector<int>{1});
    CHECK(empty.states.size() == 2);

    // A timed-out round cannot back a transition system.
    RoundResult bad;
    bad.status = RoundStatus::timeout;
    CHECK_THROWS_AS((void)build_transition_system(s, {bad}, 0), std::runtime_error);
}

TEST_CASE("transition system JSON round-trips exactly") {
    TransitionSystem ts;
    ts.agent = 3;
    ts.states = {1, 2, 3};
    ts.initial = {1};
    ts.transitions = {{1, 3, 0.0, 244.739}, {3, 2, 339.682, 385.004}};
    ts.aps = {"pi1", "pi2", "pi3"};
    ts.labels = {{1, {"pi1"}}, {2, {"pi2"}}, {3, {"pi3"}}};
    ts.neighbor_map = {{3, {1}}, {2, {2}}};

    const std::string text = ts_to_json(ts);
    const TransitionSystem back = ts_from_json(text);
    CHECK(back == ts);
    CHECK(ts_to_json(back) == text);

    // A neighbor outside every region is preserved through null.
    ts.neighbor_map[2] = {-1};
    const TransitionSystem back2 = ts_from_json(ts_to_json(ts));
    CHECK(back2 == ts);
}

TEST_CASE("execute_path rejects infeasible scripts before integrating") {
    // Two agents sent into one region that cannot hold both.
    Scenario s = corridor_scenario();
    s.regions[1].radius = 2.0;
    s.regions[0].radius = 2.0;
    s.q0[0] = config(-5.0, 0, 0);
    s.q0[1] = config(4.4, 0, M_PI / 2);
    const PathExecution exec = execute_path(s, 5e-3, 10.0);
    CHECK(exec.status == PathStatus::rejected);
    CHECK(!exec.rejection.empty());
    CHECK(exec.rounds.empty());
}

TEST_CASE("execute_path surfaces validator failures as rejection") {
    Scenario s = corridor_scenario();
    s.regions[1].center = s.regions[0].center;  // coincident regions
    const PathExecution exec = execute_path(s, 5e-3, 10.0);
    CHECK(exec.status == PathStatus::rejected);
    CHECK(exec.rejection.find("regions") != std::string::npos);
}

TEST_CASE("batch enumeration visits every reachable region pair") {
    const Scenario s = corridor_scenario();
    const TransitionSystem ts = enumerate_transition_system(s, 0, 5e-3, 900.0);
    CHECK(ts.agent == 1);
    // Two regions: both ordered pairs are feasible for agent 1.
    REQUIRE(ts.transitions.size() == 2);
    bool fwd = false, back = false;
    for (const auto &t : ts.transitions) {
        if (t.from == 1 && t.to == 2) fwd = true;
        if (t.from == 2 && t.to == 1) back = true;
    }
    CHECK(fwd);
    CHECK(back);
}
