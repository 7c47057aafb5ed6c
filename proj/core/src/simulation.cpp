#include "navsim/simulation.hpp"

#include "navsim/oracle.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace navsim {

namespace {

constexpr double kRestSpeed = 1e-3;
constexpr int kRestWindow = 50;

struct Stacked {
    Eigen::VectorXd x;
    std::vector<int> q_off, n;
    int c_off = 0;

    explicit Stacked(const Scenario &s) {
        int total = 0;
        for (const auto &a : s.agents) {
            q_off.push_back(total);
            n.push_back(a.dof());
            total += 2 * a.dof();
        }
        c_off = total;
        x.resize(total + static_cast<int>(s.agents.size()));
    }

    void pack(const WorldState &w) {
        for (std::size_t i = 0; i < w.q.size(); ++i) {
            x.segment(q_off[i], n[i]) = w.q[i];
            x.segment(q_off[i] + n[i], n[i]) = w.qd[i];
            x(c_off + static_cast<int>(i)) = w.c_hat[i];
        }
    }

    void unpack(const Eigen::VectorXd &v, std::vector<Eigen::VectorXd> &q,
                std::vector<Eigen::VectorXd> &qd, std::vector<double> &c_hat) const {
        for (std::size_t i = 0; i < q.size(); ++i) {
            q[i] = v.segment(q_off[i], n[i]);
            qd[i] = v.segment(q_off[i] + n[i], n[i]);
            c_hat[i] = v(c_off + static_cast<int>(i));
        }
    }
};

// Time derivative of the stacked state under the closed loop.
Eigen::VectorXd derivative(const PotentialContext &ctx, const Stacked &layout,
                           const Eigen::VectorXd &x, double t,
                           std::vector<Eigen::VectorXd> *torques_out) {
    const Scenario &s = *ctx.scenario;
    const int n_agents = ctx.n_agents();
    std::vector<Eigen::VectorXd> q(n_agents), qd(n_agents);
    std::vector<double> c_hat(n_agents);
    layout.unpack(x, q, qd, c_hat);

    std::vector<Eigen::VectorXd> tau;
    try {
        tau = control_torques(ctx, q, qd, c_hat);
    } catch (const std::domain_error &) {
        // Identify the vanished factor for the diagnostic.
        const PhiEvaluator ev(ctx, q);
        for (int i = 0; i < n_agents; ++i)
            if (!(ev.beta(i) > kBetaFloor))
                throw SafetySetExit(s.agents[i].id, ev.min_factor(i).describe(s), t);
        throw SafetySetExit(-1, "unknown", t);
    }
    if (torques_out != nullptr) *torques_out = tau;

    Eigen::VectorXd dx(x.size());
    for (int i = 0; i < n_agents; ++i) {
        dx.segment(layout.q_off[i], layout.n[i]) = qd[i];
        dx.segment(layout.q_off[i] + layout.n[i], layout.n[i]) =
            closed_loop_accel(s.agents[i], q[i], qd[i], tau[i]);
        dx(layout.c_off + i) = adaptation_rate(q[i], qd[i], s.agents[i].gains.sigma);
    }
    return dx;
}

void refresh_regions(const Scenario &s, WorldState &w) {
    w.region.resize(s.agents.size());
    for (std::size_t i = 0; i < s.agents.size(); ++i)
        w.region[i] = s.containing_region(static_cast<int>(i), w.q[i]);
}

std::string json_escape(const std::string &in) {
    return nlohmann::json(in).dump();
}

}  // namespace

WorldState initial_state(const Scenario &scenario) {
    WorldState w;
    w.t = 0.0;
    w.q = scenario.q0;
    w.qd = scenario.qd0;
    w.c_hat = scenario.c_hat0;
    refresh_regions(scenario, w);
    return w;
}

std::vector<int> neighborhood(const Scenario &scenario, const WorldState &state, int i) {
    std::vector<int> out;
    const Eigen::Vector3d pi = base_position(scenario.agents[i], state.q[i]);
    for (std::size_t j = 0; j < scenario.agents.size(); ++j) {
        if (static_cast<int>(j) == i) continue;
        const Eigen::Vector3d pj = base_position(scenario.agents[j], state.q[j]);
        if ((pi - pj).norm() <= scenario.agents[i].d_con) out.push_back(static_cast<int>(j));
    }
    return out;
}

WorldState step(const PotentialContext &ctx, const WorldState &state, double dt,
                std::vector<Eigen::VectorXd> &torques_at_entry) {
    if (dt <= 0.0) throw std::invalid_argument("step: dt must be positive");
    const Scenario &s = *ctx.scenario;

    Stacked layout(s);
    layout.pack(state);
    const Eigen::VectorXd &x0 = layout.x;

    const Eigen::VectorXd k1 = derivative(ctx, layout, x0, state.t, &torques_at_entry);
    const Eigen::VectorXd k2 =
        derivative(ctx, layout, x0 + 0.5 * dt * k1, state.t + 0.5 * dt, nullptr);
    const Eigen::VectorXd k3 =
        derivative(ctx, layout, x0 + 0.5 * dt * k2, state.t + 0.5 * dt, nullptr);
    const Eigen::VectorXd k4 = derivative(ctx, layout, x0 + dt * k3, state.t + dt, nullptr);

    const Eigen::VectorXd x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    WorldState next;
    next.t = state.t + dt;
    next.q.resize(s.agents.size());
    next.qd.resize(s.agents.size());
    next.c_hat.resize(s.agents.size());
    layout.unpack(x1, next.q, next.qd, next.c_hat);
    refresh_regions(s, next);
    return next;
}

WorldState step(const PotentialContext &ctx, const WorldState &state, double dt) {
    std::vector<Eigen::VectorXd> tau;
    return step(ctx, state, dt, tau);
}

MonitorReport monitors(const PotentialContext &ctx, const WorldState &state) {
    const Scenario &s = *ctx.scenario;
    MonitorReport rep;
    rep.t = state.t;
    try {
        rep.lyapunov = lyapunov_value(ctx, state.q, state.qd, state.c_hat);
    } catch (const std::domain_error &) {
        rep.lyapunov = std::numeric_limits<double>::infinity();
    }

    const PhiEvaluator ev(ctx, state.q);
    for (int i = 0; i < ctx.n_agents(); ++i) {
        const AgentModel &model = s.agents[i];
        MonitorAgentReport a;
        a.beta_total = ev.beta(i);
        a.min_factor = ev.min_factor(i).describe(s);
        a.min_factor_value = ev.min_factor(i).value;
        try {
            a.phi = ev.phi(i);
        } catch (const std::domain_error &) {
            a.phi = std::numeric_limits<double>::infinity();
        }
        const DynamicsTerms terms = dynamics_terms(model, state.q[i], state.qd[i]);
        a.v_contribution = a.phi + 0.5 * state.qd[i].dot(terms.M * state.qd[i]);
        if (model.gains.sigma > 0.0) {
            const double err = state.c_hat[i] - model.c_true;
            a.v_contribution += 0.5 * err * err / model.gains.sigma;
        }
        a.singularity = singularity_measure(model, state.q[i]);
        a.workspace_margin =
            s.r0 - (base_position(model, state.q[i]).norm() + body_radius(model));
        const Eigen::Vector3d pi = base_position(model, state.q[i]);
        for (int jn : s.required_neighbors[i])
            a.conn_distances.push_back(
                (pi - base_position(s.agents[jn], state.q[jn])).norm());
        const auto links = link_ellipsoids(model, state.q[i]);
        for (std::size_t k = 0; k < s.regions.size(); ++k) {
            if (static_cast<int>(k) == ctx.goals.start_region[i] ||
                static_cast<int>(k) == ctx.goals.goal_region[i])
                continue;
            for (const auto &link : links)
                if (!ellipsoid_region_disjoint(link, s.regions[k]))
                    a.forbidden_regions_clear = false;
        }
        rep.agents.push_back(std::move(a));
    }
    return rep;
}

void SimLog::event(double t, const std::string &type, int agent_id, const std::string &detail) {
    std::ostringstream os;
    os << "{\"type\":" << json_escape(type) << ",\"t\":" << t << ",\"agent\":" << agent_id
       << ",\"detail\":" << json_escape(detail) << "}";
    events.push_back(os.str());
}

RoundResult run_transition_round(const Scenario &scenario, const PotentialSetup &setup,
                                 const WorldState &start, const std::vector<int> &goal_regions,
                                 double dt, double t_max, SimLog *log) {
    const int n = static_cast<int>(scenario.agents.size());

    // Problem premises: every agent starts inside a region, safely.
    std::vector<int> start_regions(n);
    for (int i = 0; i < n; ++i) {
        start_regions[i] = start.region.empty()
                               ? scenario.containing_region(i, start.q[i])
                               : start.region[i];
        if (start_regions[i] < 0)
            throw std::runtime_error("agent " + std::to_string(scenario.agents[i].id) +
                                     " does not start inside a region");
        if (!start.qd[i].allFinite() || !start.q[i].allFinite())
            throw std::runtime_error("non-finite start state");
    }

    GoalSpec goals = select_goal_configs(scenario, setup, goal_regions, start.q, start_regions);
    PotentialContext ctx{&scenario, &setup, goals};

    RoundResult result;
    result.goals = goals;
    result.min_factor_value.assign(n, std::numeric_limits<double>::infinity());
    result.min_factor_name.assign(n, "none");
    result.sup_speed.assign(n, 0.0);
    result.sup_torque.assign(n, 0.0);
    result.min_beta = std::numeric_limits<double>::infinity();

    {
        const PhiEvaluator ev0(ctx, start.q);
        for (int i = 0; i < n; ++i)
            if (ev0.beta(i) <= 0.0)
                throw std::runtime_error("beta of agent " +
                                         std::to_string(scenario.agents[i].id) +
                                         " is not positive at the round start (factor " +
                                         ev0.min_factor(i).describe(scenario) + ")");
    }

    if (log != nullptr && log->csv_columns.empty()) {
        log->csv_columns.push_back("t");
        for (const auto &a : scenario.agents) {
            const std::string tag = std::to_string(a.id);
            for (int c = 0; c < a.dof(); ++c)
                log->csv_columns.push_back("q" + std::to_string(c) + "_" + tag);
            for (int c = 0; c < a.dof(); ++c)
                log->csv_columns.push_back("qd" + std::to_string(c) + "_" + tag);
            log->csv_columns.push_back("c_hat_" + tag);
            log->csv_columns.push_back("beta_" + tag);
            log->csv_columns.push_back("V_" + tag);
        }
    }

    WorldState state = start;
    refresh_regions(scenario, state);

    auto log_sample = [&](const WorldState &w, const PhiEvaluator &ev) {
        if (log == nullptr) return;
        std::vector<double> row;
        row.push_back(w.t);
        for (int i = 0; i < n; ++i) {
            const AgentModel &model = scenario.agents[i];
            for (int c = 0; c < model.dof(); ++c) row.push_back(w.q[i](c));
            for (int c = 0; c < model.dof(); ++c) row.push_back(w.qd[i](c));
            row.push_back(w.c_hat[i]);
            row.push_back(ev.beta(i));
            double vi = ev.phi(i) +
                        0.5 * w.qd[i].dot(dynamics_terms(model, w.q[i], w.qd[i]).M * w.qd[i]);
            if (model.gains.sigma > 0.0) {
                const double err = w.c_hat[i] - model.c_true;
                vi += 0.5 * err * err / model.gains.sigma;
            }
            row.push_back(vi);
        }
        log->rows.push_back(std::move(row));
    };

    auto record_violation = [&](double t, int agent, const std::string &clause,
                                const std::string &detail) {
        result.violations.push_back({t, agent, clause, detail});
        if (log != nullptr)
            log->event(t, "violation", scenario.agents[agent].id, clause + ": " + detail);
    };

    // Safety clauses checked on every committed state.
    auto check_safety = [&](const WorldState &w, const PhiEvaluator &ev) {
        for (int i = 0; i < n; ++i) {
            const AgentModel &model = scenario.agents[i];
            const auto &mf = ev.min_factor(i);
            result.min_beta = std::min(result.min_beta, ev.beta(i));
            if (mf.value < result.min_factor_value[i]) {
                result.min_factor_value[i] = mf.value;
                result.min_factor_name[i] = mf.describe(scenario);
            }
            if (mf.value <= 0.0)
                record_violation(w.t, i, "beta-factor", mf.describe(scenario));

            const auto links = link_ellipsoids(model, w.q[i]);
            for (std::size_t k = 0; k < scenario.regions.size(); ++k) {
                if (static_cast<int>(k) == start_regions[i] ||
                    static_cast<int>(k) == goal_regions[i])
                    continue;
                for (std::size_t m = 0; m < links.size(); ++m)
                    if (!ellipsoid_region_disjoint(links[m], scenario.regions[k]))
                        record_violation(w.t, i, "region-intrusion",
                                         "link " + std::to_string(m) + " intersects region " +
                                             std::to_string(scenario.regions[k].id));
            }
            const double ws =
                scenario.r0 - (base_position(model, w.q[i]).norm() + setup.body_radii[i]);
            if (ws <= 0.0)
                record_violation(w.t, i, "workspace", "containment margin " + std::to_string(ws));
            const Eigen::Vector3d pi = base_position(model, w.q[i]);
            for (int jn : scenario.required_neighbors[i]) {
                const double dist = (pi - base_position(scenario.agents[jn], w.q[jn])).norm();
                if (dist > model.d_con)
                    record_violation(w.t, i, "connectivity",
                                     "distance " + std::to_string(dist) + " to agent " +
                                         std::to_string(scenario.agents[jn].id));
            }
            if (singularity_measure(model, w.q[i]) <= 0.0)
                record_violation(w.t, i, "singularity", "det(JJ^T) vanished");
        }
    };

    const int log_every = std::max(1, scenario.sim.log_every);
    const long max_steps = static_cast<long>(std::ceil(t_max / dt));

    std::vector<double> streak_start(n, -1.0);
    std::vector<int> prev_region = state.region;
    int rest_count = 0;
    bool completed = false;
    double v_prev = 0.0;

    {
        const PhiEvaluator ev(ctx, state.q);
        check_safety(state, ev);
        log_sample(state, ev);
        v_prev = lyapunov_value(ctx, state.q, state.qd, state.c_hat);
        for (int i = 0; i < n; ++i)
            if (state.region[i] == goal_regions[i]) streak_start[i] = state.t;
    }
    if (log != nullptr) log->event(state.t, "round_start", -1, "");

    std::vector<Eigen::VectorXd> tau;
    long k = 0;
    const double t0 = state.t;
    for (; k < max_steps && !completed; ++k) {
        WorldState next;
        try {
            next = step(ctx, state, dt, tau);
        } catch (const SafetySetExit &e) {
            result.status = RoundStatus::safety_exit;
            if (log != nullptr) log->event(e.t, "safety_exit", e.agent, e.vanished_factor);
            for (int i = 0; i < n; ++i) {
                TransitionResult tr;
                tr.agent = i;
                tr.from_region = start_regions[i];
                tr.to_region = goal_regions[i];
                tr.t_start = t0;
                tr.t_end = state.t;
                tr.valid = false;
                tr.violations.push_back("safety-set exit");
                result.transitions.push_back(tr);
            }
            result.final_state = state;
            result.c_hat_end = state.c_hat;
            return result;
        }
        next.t = t0 + (k + 1) * dt;

        const PhiEvaluator ev(ctx, next.q);
        check_safety(next, ev);

        for (int i = 0; i < n; ++i) {
            result.sup_speed[i] = std::max(result.sup_speed[i], next.qd[i].norm());
            result.sup_torque[i] = std::max(result.sup_torque[i], tau[i].norm());
            if (next.c_hat[i] < state.c_hat[i] - 1e-12)
                record_violation(next.t, i, "adaptation", "c_hat decreased");
        }

        double v_now = 0.0;
        for (int i = 0; i < n; ++i) {
            const AgentModel &model = scenario.agents[i];
            v_now += ev.phi(i) +
                     0.5 * next.qd[i].dot(dynamics_terms(model, next.q[i], next.qd[i]).M *
                                          next.qd[i]);
            if (model.gains.sigma > 0.0) {
                const double err = next.c_hat[i] - model.c_true;
                v_now += 0.5 * err * err / model.gains.sigma;
            }
        }
        result.max_dv_positive = std::max(result.max_dv_positive, v_now - v_prev);
        result.max_dv_excess = std::max(
            result.max_dv_excess, (v_now - v_prev) - (1e-6 * std::abs(v_prev) + 1e-9));
        v_prev = v_now;

        // Region entry/exit bookkeeping.
        for (int i = 0; i < n; ++i) {
            if (next.region[i] != prev_region[i]) {
                if (log != nullptr) {
                    if (prev_region[i] >= 0)
                        log->event(next.t, "region_exit", scenario.agents[i].id,
                                   "region " + std::to_string(scenario.regions[prev_region[i]].id));
                    if (next.region[i] >= 0)
                        log->event(next.t, "region_enter", scenario.agents[i].id,
                                   "region " + std::to_string(scenario.regions[next.region[i]].id));
                }
                prev_region[i] = next.region[i];
            }
            if (next.region[i] == goal_regions[i]) {
                if (streak_start[i] < 0.0) streak_start[i] = next.t;
            } else {
                streak_start[i] = -1.0;
            }
        }

        bool all_rest = true;
        for (int i = 0; i < n; ++i)
            if (next.region[i] != goal_regions[i] || next.qd[i].norm() > kRestSpeed)
                all_rest = false;
        rest_count = all_rest ? rest_count + 1 : 0;
        if (rest_count >= kRestWindow) completed = true;

        if ((k + 1) % log_every == 0 || completed) log_sample(next, ev);
        state = std::move(next);
    }

    result.status = completed ? RoundStatus::completed : RoundStatus::timeout;
    result.final_state = state;
    result.c_hat_end = state.c_hat;
    if (log != nullptr)
        log->event(state.t, completed ? "round_complete" : "timeout", -1, "");

    for (int i = 0; i < n; ++i) {
        TransitionResult tr;
        tr.agent = i;
        tr.from_region = start_regions[i];
        tr.to_region = goal_regions[i];
        tr.t_start = t0;
        if (completed) {
            tr.t_end = streak_start[i];
            tr.valid = true;
            for (const auto &viol : result.violations)
                if (viol.agent == i && viol.t <= tr.t_end) {
                    tr.valid = false;
                    tr.violations.push_back(viol.clause + ": " + viol.detail);
                }
            for (int jn : scenario.required_neighbors[i])
                tr.neighbor_regions_at_end.push_back(state.region[jn]);
        } else {
            tr.t_end = state.t;
            tr.valid = false;
            tr.violations.push_back("timeout");
        }
        result.transitions.push_back(tr);
    }
    return result;
}

}  // namespace navsim
