#include "navsim/potential.hpp"
#include "navsim/rng.hpp"
#include "test_scenarios.hpp"

#include <doctest.h>

#include <cmath>

using namespace navsim;
using namespace navsim::testing;

namespace {

struct WideFixture {
    Scenario scenario = wide_scenario();
    PotentialSetup setup;
    GoalSpec goals;

    WideFixture() {
        setup = prepare_potential(scenario);
        std::vector<int> goal_regions = {0, 1, 2};
        std::vector<int> start_regions = {0, 1, 2};
        goals = select_goal_configs(scenario, setup, goal_regions, scenario.q0, start_regions);
    }
    PotentialContext ctx() const { return PotentialContext{&scenario, &setup, goals}; }
};

const WideFixture &wide() {
    static WideFixture fixture;
    return fixture;
}

}  // namespace

TEST_CASE("gamma is the squared goal distance") {
    Eigen::VectorXd g(3);
    g << 1, 2, 3;
    CHECK(gamma(g, g) == 0.0);
    Eigen::VectorXd q = g;
    q(0) += 1.0;
    CHECK(gamma(q, g) == doctest::Approx(1.0));
    for (double h : {1e-4, 1e-5}) {
        Eigen::VectorXd qp = q, qm = q;
        qp(1) += h;
        qm(1) -= h;
        const double fd = (gamma(qp, g) - gamma(qm, g)) / (2 * h);
        CHECK(fd == doctest::Approx(2.0 * (q(1) - g(1))).epsilon(1e-8));
    }
    CHECK_THROWS_AS((void)gamma(q, Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("smooth_clamp midpoint, junctions, saturation") {
    CHECK(smooth_clamp(0.5, 1.0) == doctest::Approx(0.5));  // smoothstep midpoint symmetry
    CHECK(smooth_clamp(2.0, 4.0) == doctest::Approx(2.0));
    CHECK(smooth_clamp(0.0, 1.0) == 0.0);
    CHECK(smooth_clamp(-3.0, 1.0) == 0.0);
    CHECK(smooth_clamp(2.0, 1.0) == 1.0);
    CHECK(smooth_clamp(7.0, 5.0) == 5.0);

    // Vanishing first and second derivatives at both junctions.
    for (double x0 : {0.0, 1.0}) {
        for (double h : {1e-3, 1e-4}) {
            const double d1 = (smooth_clamp(x0 + h, 1.0) - smooth_clamp(x0 - h, 1.0)) / (2 * h);
            const double d2 = (smooth_clamp(x0 + h, 1.0) - 2 * smooth_clamp(x0, 1.0) +
                               smooth_clamp(x0 - h, 1.0)) /
                              (h * h);
            CHECK(std::abs(d1) <= 40 * h * h);
            CHECK(std::abs(d2) <= 40 * h);
        }
    }
    // Strictly increasing inside.
    double prev = -1.0;
    for (int k = 1; k < 100; ++k) {
        const double v = smooth_clamp(k / 100.0, 1.0);
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS((void)smooth_clamp(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("beta_conn boundary, saturation, midpoint") {
    const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    const double d = 8.0;
    CHECK(beta_conn(origin, Eigen::Vector3d(d, 0, 0), d) == 0.0);
    CHECK(beta_conn(origin, origin, d) == doctest::Approx(d * d));
    CHECK(beta_conn(origin, Eigen::Vector3d(d / std::sqrt(2.0), 0, 0), d) ==
          doctest::Approx(d * d / 2.0));
    CHECK(beta_conn(origin, Eigen::Vector3d(d + 1.0, 0, 0), d) == 0.0);
}

TEST_CASE("beta_world closed form") {
    const AgentModel m = standard_agent(1);  // body radius 1.25
    CHECK(beta_world(m, config(0, 0, 0), 12.0) == doctest::Approx(115.5625));
    // Boundary contact: |p| = r0 - body radius.
    CHECK(beta_world(m, config(10.75, 0, 0), 12.0) == doctest::Approx(0.0));
    CHECK(beta_world(m, config(11.5, 0, 0), 12.0) < 0.0);
}

TEST_CASE("beta_pair saturates at the ceiling and vanishes at contact") {
    const AgentModel m = standard_agent(1);
    const auto far_links = link_ellipsoids(m, config(0, 0, 0));
    const auto other = link_ellipsoids(m, config(6.0, 0, 0));
    const double margin = pair_margin(far_links[0], other[0]);
    CHECK(beta_pair(far_links[0], other[0], margin / 2.0) == doctest::Approx(margin / 2.0));

    // Overlapping bases: margin at the noise floor of an exact zero (the
    // axis-aligned xz/yz shadow pairs are structurally degenerate).
    const auto close = link_ellipsoids(m, config(0.9, 0, M_PI));
    CHECK(pair_margin(far_links[0], close[0]) <= 1e-15);
    CHECK(beta_pair(far_links[0], close[0], 1.0) <= 1e-30);
}

TEST_CASE("phi_lift pinned values and limits") {
    CHECK(phi_lift(0.0, 5.0, 2.0) == doctest::Approx(1.0));
    CHECK(phi_lift(1.0, 1.0, 2.0) == doctest::Approx(1.0 / (1.0 - 1.0 / std::sqrt(2.0))));
    // Monotone divergence as beta -> 0+ at fixed gamma.
    double prev = phi_lift(1.0, 1e-2, 2.0);
    for (double beta : {1e-4, 1e-5, 1e-6}) {
        const double v = phi_lift(1.0, beta, 2.0);
        CHECK(v > prev);
        prev = v;
    }
    CHECK(prev > 1e3);
    CHECK_THROWS_AS((void)phi_lift(1.0, 0.0, 2.0), std::domain_error);
    CHECK_THROWS_AS((void)phi_lift(1.0, -1.0, 2.0), std::domain_error);
}

TEST_CASE("beta_total: zero exactly on the unsafe set") {
    const auto &fx = wide();
    const PotentialContext ctx = fx.ctx();

    // Benign parked state: strictly positive for every agent.
    for (int i = 0; i < 3; ++i) CHECK(beta_total(ctx, fx.scenario.q0, i) > 0.0);

    // Two link bodies overlapping: the pair factor vanishes (up to the
    // noise floor) and the potential is undefined.
    auto q = fx.scenario.q0;
    q[1] = config(-11.1, 0, M_PI);  // base circles of agents 1 and 2 overlap
    CHECK(beta_total(ctx, q, 0) <= 1e-30);
    CHECK_THROWS_AS((void)phi(ctx, q, 0), std::domain_error);
}

TEST_CASE("beta_total: required neighbor at sensing range zeroes beta") {
    Scenario s = wide_scenario();
    s.required_neighbors = {{1}, {0}, {}};
    const PotentialSetup setup = prepare_potential(s);
    // Both connected agents head for region 1, so the goals are feasible.
    const GoalSpec goals = select_goal_configs(s, setup, {0, 0, 2}, s.q0, {0, 1, 2});
    const PotentialContext ctx{&s, &setup, goals};

    auto q = s.q0;
    q[1] = config(-4.0, 0, 0.5);  // exactly 8 m from agent 1
    CHECK(beta_total(ctx, q, 0) == 0.0);

    // A hair inside the range: positive again.
    q[1](0) -= 1e-3;
    CHECK(beta_total(ctx, q, 0) > 0.0);
}

TEST_CASE("beta breakdown names factors and matches the total") {
    const auto &fx = wide();
    const PotentialContext ctx = fx.ctx();
    const BetaBreakdown bd = beta_breakdown(ctx, fx.scenario.q0, 0);
    CHECK(bd.total == doctest::Approx(beta_total(ctx, fx.scenario.q0, 0)));
    REQUIRE(bd.min_factor() != nullptr);
    double product = fx.scenario.potential.beta_scale;
    for (const auto &f : bd.factors) product *= f.value;
    CHECK(product == doctest::Approx(bd.total).epsilon(1e-9));
}

TEST_CASE("margin factors are monotone in the margin") {
    // The composition never increases when a single margin decreases.
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const double ceiling = rng.uniform(0.1, 1e20);
        const double m1 = rng.uniform(0.0, 1.5) * ceiling;
        const double m2 = m1 * rng.uniform(0.0, 1.0);  // m2 <= m1
        CHECK(smooth_clamp(m2, ceiling) <= smooth_clamp(m1, ceiling) + 1e-15);
    }
}

TEST_CASE("grad_phi vanishes at the goal with distant obstacles") {
    const auto &fx = wide();
    const PotentialContext ctx = fx.ctx();
    auto q = fx.goals.q_goal;
    for (int i = 0; i < 3; ++i) {
        const Eigen::VectorXd g = grad_phi(ctx, q, i, i);
        CHECK(g.norm() <= 1e-6);
    }
}

TEST_CASE("gradients are mirror-symmetric for a symmetric head-on pair") {
    Scenario s;
    s.r0 = 30.0;
    s.regions = {{1, Eigen::Vector3d(-8, 0, 0), 4.0, {}},
                 {2, Eigen::Vector3d(8, 0, 0), 4.0, {}}};
    s.agents = {standard_agent(1), standard_agent(2)};
    s.q0 = {config(-2.0, 0, 0), config(2.0, 0, M_PI)};  // mirror pair, links inward
    s.qd0.assign(2, Eigen::VectorXd::Zero(3));
    s.c_hat0.assign(2, 0.0);
    s.required_neighbors = {{1}, {0}};
    s.paths = {{1}, {0}};
    s.potential.ceiling_samples = 200;
    const PotentialSetup setup = prepare_potential(s);

    GoalSpec goals;
    goals.q_goal = {config(6.0, 0, 0), config(-6.0, 0, M_PI)};
    goals.goal_region = {1, 0};
    goals.start_region = {0, 1};
    const PotentialContext ctx{&s, &setup, goals};

    const Eigen::VectorXd g00 = grad_phi(ctx, s.q0, 0, 0);
    const Eigen::VectorXd g11 = grad_phi(ctx, s.q0, 1, 1);
    // Mirror symmetry x -> -x: the x components are opposite, y components equal.
    CHECK(g00(0) == doctest::Approx(-g11(0)).epsilon(1e-6));
    CHECK(g00(1) == doctest::Approx(g11(1)).epsilon(1e-6));
}

TEST_CASE("finite-difference gradient shows second-order convergence") {
    const auto &fx = wide();
    Scenario s = fx.scenario;  // local copy to vary the step
    Rng rng(43);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto q = fx.scenario.q0;
        for (auto &qi : q) {
            qi(0) += rng.uniform(-1.0, 1.0);
            qi(1) += rng.uniform(-1.0, 1.0);
            qi(2) += rng.uniform(-0.5, 0.5);
        }
        Eigen::VectorXd g[3];
        int k = 0;
        for (double h : {2e-2, 1e-2, 5e-3}) {
            s.potential.fd_step = h;
            const PotentialContext ctx{&s, &fx.setup, fx.goals};
            g[k++] = grad_phi(ctx, q, 0, 0);
        }
        const double e1 = (g[0] - g[1]).norm();
        const double e2 = (g[1] - g[2]).norm();
        if (e2 < 1e-14) continue;  // flat spot, nothing to measure
        const double order = std::log2(e1 / e2);
        CHECK(order >= 1.8);
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("phi is C2 on the safe set: second differences converge") {
    const auto &fx = wide();
    const PotentialContext ctx = fx.ctx();
    Rng rng(53);
    for (int trial = 0; trial < 25; ++trial) {
        auto q = fx.scenario.q0;
        for (auto &qi : q) {
            qi(0) += rng.uniform(-1.0, 1.0);
            qi(1) += rng.uniform(-1.0, 1.0);
        }
        const int agent = trial % 3;
        const int coord = trial % 2;
        auto second_diff = [&](double h) {
            auto qp = q, qm = q;
            qp[agent](coord) += h;
            qm[agent](coord) -= h;
            return (phi(ctx, qp, agent) - 2.0 * phi(ctx, q, agent) + phi(ctx, qm, agent)) /
                   (h * h);
        };
        const double d1 = second_diff(2e-3);
        const double d2 = second_diff(1e-3);
        CHECK(d2 == doctest::Approx(d1).epsilon(1e-2).scale(std::max(1.0, std::abs(d1))));
    }
}

TEST_CASE("locality: moving an out-of-range agent changes nothing") {
    const auto &fx = wide();
    const PotentialContext ctx = fx.ctx();

    const double phi_before = phi(ctx, fx.scenario.q0, 0);
    const Eigen::VectorXd grad_before = grad_phi(ctx, fx.scenario.q0, 0, 0);

    auto q = fx.scenario.q0;
    q[2](0) += 0.9;  // agent 3 stays far outside agent 1's sensing radius
    q[2](2) += 0.4;
    CHECK(phi(ctx, q, 0) == phi_before);
    const Eigen::VectorXd grad_after = grad_phi(ctx, q, 0, 0);
    CHECK((grad_after - grad_before).norm() == 0.0);
}

TEST_CASE("goal selection respects the GoalSpec invariants") {
    const auto &fx = wide();
    for (int i = 0; i < 3; ++i) {
        CHECK(in_region(fx.scenario.agents[i], fx.goals.q_goal[i],
                        fx.scenario.regions[fx.goals.goal_region[i]]));
    }

    // Region too small for the body: selection must fail loudly.
    Scenario tiny = wide_scenario();
    tiny.regions[0].radius = 1.3;
    const PotentialSetup setup = prepare_potential(tiny);
    CHECK_THROWS_WITH_AS(
        (void)select_goal_configs(tiny, setup, {0, 1, 2}, tiny.q0, {0, 1, 2}),
        doctest::Contains("too small"), std::runtime_error);
}

TEST_CASE("goal selection keeps region co-occupants apart and connected") {
    Scenario s = wide_scenario();
    s.required_neighbors = {{1}, {0}, {}};
    s.q0[1] = config(-8.5, 0, 0.5);  // start agent 2 next to agent 1's region
    const PotentialSetup setup = prepare_potential(s);
    // Both agents target region 1; agent 3 stays home.
    const GoalSpec goals = select_goal_configs(s, setup, {0, 0, 2}, s.q0, {0, 0, 2});
    const Eigen::Vector2d b0 = goals.q_goal[0].head<2>();
    const Eigen::Vector2d b1 = goals.q_goal[1].head<2>();
    CHECK((b0 - b1).norm() >= 2 * 1.25 + 0.3 - 1e-9);
    CHECK((b0 - b1).norm() <= 8.0);
    for (int i : {0, 1})
        CHECK(in_region(s.agents[i], goals.q_goal[i], s.regions[0]));
    // Bodies at the goals are contact-free.
    const auto bodies0 = link_ellipsoids(s.agents[0], goals.q_goal[0]);
    const auto bodies1 = link_ellipsoids(s.agents[1], goals.q_goal[1]);
    for (const auto &ea : bodies0)
        for (const auto &eb : bodies1) CHECK(pair_margin(ea, eb) > 0.0);
}
