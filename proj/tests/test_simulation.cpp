#include "navsim/simulation.hpp"
#include "navsim/rng.hpp"
#include "test_scenarios.hpp"

#include <doctest.h>

#include <cmath>

#ifndef NAVSIM_SCENARIO_DIR
#define NAVSIM_SCENARIO_DIR "scenarios"
#endif

using namespace navsim;
using namespace navsim::testing;

namespace {

const char *kPaperScenario = NAVSIM_SCENARIO_DIR "/paper_sec5.json";

struct ContextBundle {
    Scenario scenario;
    PotentialSetup setup;
    GoalSpec goals;
    PotentialContext ctx() const { return PotentialContext{&scenario, &setup, goals}; }
};

ContextBundle parked_wide() {
    ContextBundle b;
    b.scenario = wide_scenario();
    b.setup = prepare_potential(b.scenario);
    b.goals = select_goal_configs(b.scenario, b.setup, {0, 1, 2}, b.scenario.q0, {0, 1, 2});
    return b;
}

}  // namespace

TEST_CASE("step: a rested agent at its goal is a fixed point") {
    const ContextBundle b = parked_wide();
    const PotentialContext ctx = b.ctx();

    WorldState w;
    w.t = 0.0;
    w.q = b.goals.q_goal;
    w.qd.assign(3, Eigen::VectorXd::Zero(3));
    w.c_hat.assign(3, 0.0);

    const WorldState next = step(ctx, w, 1e-3);
    for (int i = 0; i < 3; ++i) {
        CHECK((next.q[i] - w.q[i]).norm() <= 1e-12);
        CHECK(next.qd[i].norm() <= 1e-12);
        CHECK(next.c_hat[i] == doctest::Approx(0.0));
    }
    CHECK_THROWS_AS((void)step(ctx, w, 0.0), std::invalid_argument);
}

TEST_CASE("step: adaptive estimate strictly increases while moving") {
    const ContextBundle b = parked_wide();
    const PotentialContext ctx = b.ctx();

    WorldState w;
    w.t = 0.0;
    w.q = b.scenario.q0;
    w.qd.assign(3, Eigen::VectorXd::Zero(3));
    for (auto &qd : w.qd) qd(0) = 0.5;
    w.c_hat.assign(3, 0.1);

    const WorldState next = step(ctx, w, 1e-3);
    for (int i = 0; i < 3; ++i) CHECK(next.c_hat[i] > w.c_hat[i]);
}

TEST_CASE("step: leaving the safety set raises a diagnosed error") {
    const ContextBundle b = parked_wide();
    const PotentialContext ctx = b.ctx();

    WorldState w;
    w.t = 0.0;
    w.q = b.scenario.q0;
    w.q[1] = config(-11.1, 0, M_PI);  // overlapping with agent 1
    w.qd.assign(3, Eigen::VectorXd::Zero(3));
    w.c_hat.assign(3, 0.0);

    CHECK_THROWS_AS((void)step(ctx, w, 1e-3), SafetySetExit);
    try {
        (void)step(ctx, w, 1e-3);
    } catch (const SafetySetExit &e) {
        CHECK(std::string(e.vanished_factor).find("pair") != std::string::npos);
    }
}

TEST_CASE("integrator shows fourth-order endpoint convergence on a smooth run") {
    // Single moving agent, far from everything: the potential is smooth
    // along the whole trajectory.
    ContextBundle b = parked_wide();
    b.goals.q_goal[0] = config(-10.0, 1.0, 0.4);  // 2 m trip inside region 1
    const PotentialContext ctx = b.ctx();

    auto endpoint = [&](double dt) {
        WorldState w;
        w.t = 0.0;
        w.q = b.scenario.q0;
        // Energetic start so the endpoint differences stay well above
        // floating-point noise.
        w.qd.assign(3, Eigen::VectorXd::Zero(3));
        w.qd[0] = config(1.5, 1.0, 0.8);
        w.qd[1] = config(-1.0, 0.5, -0.6);
        w.qd[2] = config(0.8, -1.2, 0.5);
        w.c_hat.assign(3, 0.0);
        const long steps = std::llround(1.0 / dt);
        for (long k = 0; k < steps; ++k) w = step(ctx, w, dt);
        return w;
    };

    const WorldState w1 = endpoint(4e-3);
    const WorldState w2 = endpoint(2e-3);
    const WorldState w3 = endpoint(1e-3);
    double e1 = 0.0, e2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        e1 += (w1.q[i] - w2.q[i]).squaredNorm() + (w1.qd[i] - w2.qd[i]).squaredNorm();
        e2 += (w2.q[i] - w3.q[i]).squaredNorm() + (w2.qd[i] - w3.qd[i]).squaredNorm();
    }
    const double order = std::log2(std::sqrt(e1) / std::sqrt(e2));
    CHECK(order >= 3.5);
}

TEST_CASE("neighborhood respects the sensing radius") {
    Scenario s = wide_scenario();
    const PotentialSetup setup = prepare_potential(s);

    WorldState w;
    w.q = s.q0;
    w.qd.assign(3, Eigen::VectorXd::Zero(3));
    w.c_hat.assign(3, 0.0);

    // Nobody is in range in the parked wide scenario.
    CHECK(neighborhood(s, w, 0).empty());

    // 6 m apart: neighbors; a hair beyond 8 m: not.
    w.q[1] = config(-6.0, 0, 0);
    CHECK(neighborhood(s, w, 0) == std::vector<int>{1});
    w.q[1] = config(-12.0 + 8.0 + 1e-6, 0, 0);
    CHECK(neighborhood(s, w, 0).empty());
    w.q[1] = config(-12.0 + 8.0 - 1e-6, 0, 0);
    CHECK(neighborhood(s, w, 0) == std::vector<int>{1});
}

TEST_CASE("monitors report positive factors on the paper scenario start") {
    const Scenario s = load_scenario(kPaperScenario);
    const PotentialSetup setup = prepare_potential(s);
    const WorldState w = initial_state(s);
    const GoalSpec goals = select_goal_configs(s, setup, {1, 0, 2}, w.q, w.region);
    const PotentialContext ctx{&s, &setup, goals};

    const MonitorReport rep = monitors(ctx, w);
    CHECK(rep.lyapunov > 0.0);
    for (const auto &a : rep.agents) {
        CHECK(a.beta_total > 0.0);
        CHECK(a.min_factor_value > 0.0);
        CHECK(a.singularity == doctest::Approx(1.0));
        CHECK(a.workspace_margin > 0.0);
        CHECK(a.forbidden_regions_clear);
        for (double d : a.conn_distances) CHECK(d <= 8.0);
    }
}

TEST_CASE("monitors identify the vanished factor and workspace exits") {
    ContextBundle b = parked_wide();
    const PotentialContext ctx = b.ctx();

    WorldState w;
    w.t = 0.0;
    w.q = b.scenario.q0;
    w.q[1] = config(-11.15, 0, M_PI);
    w.qd.assign(3, Eigen::VectorXd::Zero(3));
    w.c_hat.assign(3, 0.0);

    const MonitorReport rep = monitors(ctx, w);
    CHECK(rep.agents[0].beta_total <= 1e-30);
    CHECK(rep.agents[0].min_factor_value <= 1e-30);
    CHECK(rep.agents[0].min_factor.find("pair") != std::string::npos);
    CHECK(std::isinf(rep.agents[0].phi));

    // Base close to the workspace boundary.
    w.q[1] = config(-6, 0, 0);
    w.q[2] = config(0, 29.5, 0);
    const MonitorReport rep2 = monitors(ctx, w);
    CHECK(rep2.agents[2].workspace_margin < 0.0);
}

TEST_CASE("run_transition_round completes a corridor handover") {
    const Scenario s = corridor_scenario();
    REQUIRE(validate_scenario(s).empty());
    const PotentialSetup setup = prepare_potential(s);
    const WorldState w0 = initial_state(s);

    SimLog log;
    const RoundResult round =
        run_transition_round(s, setup, w0, {1, 1}, 5e-3, s.sim.t_max, &log);
    REQUIRE(round.status == RoundStatus::completed);
    REQUIRE(round.transitions.size() == 2);
    for (const auto &tr : round.transitions) {
        CHECK(tr.valid);
        CHECK(tr.violations.empty());
        CHECK(tr.to_region == 1);
        CHECK(tr.t_end >= tr.t_start);
        CHECK(std::isfinite(tr.t_end));
    }
    CHECK(round.transitions[0].from_region == 0);
    CHECK(round.transitions[1].from_region == 1);
    CHECK(round.max_dv_positive <= 1e-6);
    CHECK(round.min_beta > 0.0);
    CHECK(!log.rows.empty());
    CHECK(!log.events.empty());

    // The stay-home agent's transition is an empty motion: t_end near start.
    CHECK(round.transitions[1].t_end <= round.transitions[1].t_start + 1.0);

    // Final state rests inside the goal region.
    for (int i = 0; i < 2; ++i) {
        CHECK(round.final_state.region[i] == 1);
        CHECK(round.final_state.qd[i].norm() <= 1e-3);
    }
}

TEST_CASE("run_transition_round flags a timeout") {
    const Scenario s = corridor_scenario();
    const PotentialSetup setup = prepare_potential(s);
    const WorldState w0 = initial_state(s);
    const RoundResult round = run_transition_round(s, setup, w0, {1, 1}, 5e-3, 0.5, nullptr);
    CHECK(round.status == RoundStatus::timeout);
    for (const auto &tr : round.transitions) {
        CHECK_FALSE(tr.valid);
        REQUIRE(!tr.violations.empty());
        CHECK(tr.violations.front() == "timeout");
    }
}

TEST_CASE("identical rounds produce identical logs") {
    const Scenario s = corridor_scenario();
    const PotentialSetup setup = prepare_potential(s);
    const WorldState w0 = initial_state(s);

    SimLog log_a, log_b;
    (void)run_transition_round(s, setup, w0, {1, 1}, 5e-3, 2.0, &log_a);
    (void)run_transition_round(s, setup, w0, {1, 1}, 5e-3, 2.0, &log_b);
    REQUIRE(log_a.rows.size() == log_b.rows.size());
    for (std::size_t r = 0; r < log_a.rows.size(); ++r)
        for (std::size_t c = 0; c < log_a.rows[r].size(); ++c)
            CHECK(log_a.rows[r][c] == log_b.rows[r][c]);
    CHECK(log_a.events == log_b.events);
}

TEST_CASE("lyapunov value never increases along a short closed-loop run") {
    const Scenario s = corridor_scenario();
    const PotentialSetup setup = prepare_potential(s);
    WorldState w = initial_state(s);
    const GoalSpec goals = select_goal_configs(s, setup, {1, 1}, w.q, w.region);
    const PotentialContext ctx{&s, &setup, goals};

    double v_prev = lyapunov_value(ctx, w.q, w.qd, w.c_hat);
    for (int k = 0; k < 2000; ++k) {
        w = step(ctx, w, 1e-3);
        const double v = lyapunov_value(ctx, w.q, w.qd, w.c_hat);
        CHECK(v <= v_prev + 1e-6 * std::abs(v_prev) + 1e-9);
        v_prev = v;
    }
}
