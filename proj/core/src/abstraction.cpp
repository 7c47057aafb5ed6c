#include "navsim/abstraction.hpp"

#include <json.hpp>

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>

namespace navsim {

namespace {

using ordered_json = nlohmann::ordered_json;

}  // namespace

TransitionSystem build_transition_system(const Scenario &scenario,
                                         const std::vector<RoundResult> &rounds,
                                         int agent_index) {
    for (const auto &round : rounds)
        if (round.status != RoundStatus::completed)
            throw std::runtime_error("cannot build a transition system from an invalid round");

    const AgentModel &model = scenario.agents[agent_index];
    TransitionSystem ts;
    ts.agent = model.id;

    for (const auto &region : scenario.regions) {
        ts.states.push_back(region.id);
        ts.labels[region.id] = region.props;
        for (const auto &p : region.props)
            if (std::find(ts.aps.begin(), ts.aps.end(), p) == ts.aps.end()) ts.aps.push_back(p);
    }

    const int start = scenario.containing_region(agent_index, scenario.q0[agent_index]);
    if (start >= 0) ts.initial.push_back(scenario.regions[start].id);

    for (const auto &round : rounds) {
        for (const auto &tr : round.transitions) {
            if (tr.agent != agent_index || !tr.valid) continue;
            TSTransition t;
            t.from = scenario.regions[tr.from_region].id;
            t.to = scenario.regions[tr.to_region].id;
            t.t_start = tr.t_start;
            t.t_end = tr.t_end;
            ts.transitions.push_back(t);

            std::vector<int> neigh;
            for (int r : tr.neighbor_regions_at_end)
                neigh.push_back(r >= 0 ? scenario.regions[r].id : -1);
            ts.neighbor_map[t.to] = neigh;
        }
    }
    return ts;
}

std::string ts_to_json(const TransitionSystem &ts) {
    ordered_json j;
    j["agent"] = ts.agent;
    j["states"] = ts.states;
    j["initial"] = ts.initial;
    j["transitions"] = ordered_json::array();
    for (const auto &t : ts.transitions) {
        ordered_json tj;
        tj["from"] = t.from;
        tj["to"] = t.to;
        tj["t_start"] = t.t_start;
        tj["t_end"] = t.t_end;
        j["transitions"].push_back(tj);
    }
    j["aps"] = ts.aps;
    j["labels"] = ordered_json::object();
    for (const auto &[region, props] : ts.labels) j["labels"][std::to_string(region)] = props;
    j["neighbor_map"] = ordered_json::object();
    for (const auto &[region, neigh] : ts.neighbor_map) {
        ordered_json arr = ordered_json::array();
        for (int r : neigh) {
            if (r >= 0)
                arr.push_back(r);
            else
                arr.push_back(nullptr);
        }
        j["neighbor_map"][std::to_string(region)] = arr;
    }
    return j.dump(2) + "\n";
}

TransitionSystem ts_from_json(const std::string &text) {
    const ordered_json j = ordered_json::parse(text);
    TransitionSystem ts;
    ts.agent = j.at("agent").get<int>();
    for (const auto &s : j.at("states")) ts.states.push_back(s.get<int>());
    for (const auto &s : j.at("initial")) ts.initial.push_back(s.get<int>());
    for (const auto &t : j.at("transitions")) {
        TSTransition tr;
        tr.from = t.at("from").get<int>();
        tr.to = t.at("to").get<int>();
        tr.t_start = t.at("t_start").get<double>();
        tr.t_end = t.at("t_end").get<double>();
        ts.transitions.push_back(tr);
    }
    for (const auto &a : j.at("aps")) ts.aps.push_back(a.get<std::string>());
    for (const auto &[key, props] : j.at("labels").items()) {
        std::vector<std::string> p;
        for (const auto &x : props) p.push_back(x.get<std::string>());
        ts.labels[std::stoi(key)] = p;
    }
    for (const auto &[key, neigh] : j.at("neighbor_map").items()) {
        std::vector<int> v;
        for (const auto &x : neigh) v.push_back(x.is_null() ? -1 : x.get<int>());
        ts.neighbor_map[std::stoi(key)] = v;
    }
    return ts;
}

PathExecution execute_path(const Scenario &scenario, double dt, double t_max_per_round,
                           SimLog *log) {
    PathExecution exec;

    const auto violations = validate_scenario(scenario);
    if (!violations.empty()) {
        exec.status = PathStatus::rejected;
        for (const auto &v : violations) exec.rejection += v + "; ";
        return exec;
    }

    const PotentialSetup setup = prepare_potential(scenario);
    WorldState state = initial_state(scenario);
    const std::size_t rounds = scenario.round_count();

    // Pre-validate every round's goal selection before integrating anything;
    // each probe round starts from the previous round's goal configurations.
    {
        std::vector<Eigen::VectorXd> probe_q = state.q;
        std::vector<int> probe_regions = state.region;
        for (std::size_t r = 0; r < rounds; ++r) {
            std::vector<int> goal_regions(scenario.agents.size());
            for (std::size_t i = 0; i < scenario.agents.size(); ++i)
                goal_regions[i] = scenario.paths[i][r];
            try {
                GoalSpec probe =
                    select_goal_configs(scenario, setup, goal_regions, probe_q, probe_regions);
                probe_q = probe.q_goal;
                probe_regions = goal_regions;
            } catch (const std::exception &e) {
                exec.status = PathStatus::rejected;
                exec.rejection = "round " + std::to_string(r + 1) + ": " + e.what();
                return exec;
            }
        }
    }

    for (std::size_t r = 0; r < rounds; ++r) {
        std::vector<int> goal_regions(scenario.agents.size());
        for (std::size_t i = 0; i < scenario.agents.size(); ++i)
            goal_regions[i] = scenario.paths[i][r];

        RoundResult round =
            run_transition_round(scenario, setup, state, goal_regions, dt, t_max_per_round, log);
        state = round.final_state;
        const RoundStatus status = round.status;
        exec.rounds.push_back(std::move(round));

        if (status != RoundStatus::completed) {
            exec.status = status == RoundStatus::timeout ? PathStatus::aborted_timeout
                                                         : PathStatus::aborted_safety;
            break;
        }
    }

    // Transition systems over the completed prefix.
    std::vector<RoundResult> completed;
    for (const auto &round : exec.rounds)
        if (round.status == RoundStatus::completed) completed.push_back(round);
    for (std::size_t i = 0; i < scenario.agents.size(); ++i)
        exec.systems.push_back(
            build_transition_system(scenario, completed, static_cast<int>(i)));
    return exec;
}

PathExecution execute_path(const Scenario &scenario, SimLog *log) {
    return execute_path(scenario, scenario.sim.dt, scenario.sim.t_max, log);
}

TransitionSystem enumerate_transition_system(const Scenario &scenario, int agent_index,
                                             double dt, double t_max_per_round) {
    const PotentialSetup setup = prepare_potential(scenario);
    const WorldState w0 = initial_state(scenario);
    const int nk = static_cast<int>(scenario.regions.size());
    const int n = static_cast<int>(scenario.agents.size());
    const AgentModel &model = scenario.agents[agent_index];
    const double body = body_radius(model);

    // Seat the agent in a candidate start region while everyone else stays
    // put: place the base on the side of the region facing away from the
    // region's occupants (clear exit path), link pointing the same way.
    auto seat_in_region = [&](int from) -> std::optional<WorldState> {
        if (w0.region[agent_index] == from) return w0;
        const Region &region = scenario.regions[from];
        const double rho = region.radius - body - scenario.potential.goal_clearance;
        if (rho <= 0.0) return std::nullopt;

        Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
        int occupants = 0;
        for (int j = 0; j < n; ++j) {
            if (j == agent_index || w0.region[j] != from) continue;
            centroid += w0.q[j].head<2>();
            ++occupants;
        }
        Eigen::Vector2d away;
        if (occupants > 0 && (region.center.head<2>() - centroid / occupants).norm() > 0.3)
            away = (region.center.head<2>() - centroid / occupants).normalized();
        else if (region.center.head<2>().norm() > 0.3)
            away = -region.center.head<2>().normalized();
        else
            away = Eigen::Vector2d(1.0, 0.0);

        WorldState seeded = w0;
        Eigen::VectorXd q = Eigen::VectorXd::Zero(model.dof());
        q.head<2>() = region.center.head<2>() + std::min(rho, 1.4) * away;
        q(2) = std::atan2(away.y(), away.x());
        if (model.dof() == 4) q(3) = M_PI / 2.0;
        seeded.q[agent_index] = q;
        seeded.region[agent_index] = scenario.containing_region(agent_index, q);
        if (seeded.region[agent_index] != from) return std::nullopt;

        // Premises against the fixed fleet: contact-free, connected, safe.
        const auto own = link_ellipsoids(model, q);
        for (int j = 0; j < n; ++j) {
            if (j == agent_index) continue;
            for (const auto &eb : link_ellipsoids(scenario.agents[j], w0.q[j]))
                for (const auto &ea : own)
                    if (pair_margin(ea, eb) <= 0.0) return std::nullopt;
        }
        const Eigen::Vector3d p = base_position(model, q);
        for (int jn : scenario.required_neighbors[agent_index])
            if ((p - base_position(scenario.agents[jn], w0.q[jn])).norm() > model.d_con)
                return std::nullopt;
        for (int j = 0; j < n; ++j)
            for (int jn : scenario.required_neighbors[j])
                if (jn == agent_index &&
                    (base_position(scenario.agents[j], w0.q[j]) - p).norm() >
                        scenario.agents[j].d_con)
                    return std::nullopt;
        return seeded;
    };

    std::vector<RoundResult> completed;
    for (int from = 0; from < nk; ++from) {
        const auto seeded = seat_in_region(from);
        if (!seeded) continue;
        for (int to = 0; to < nk; ++to) {
            if (to == from) continue;
            std::vector<int> goals(n);
            for (int i = 0; i < n; ++i) goals[i] = i == agent_index ? to : seeded->region[i];
            try {
                RoundResult round = run_transition_round(scenario, setup, *seeded, goals, dt,
                                                         t_max_per_round, nullptr);
                if (round.status == RoundStatus::completed)
                    completed.push_back(std::move(round));
            } catch (const std::exception &) {
                // Infeasible setup for this pair; skip it.
            }
        }
    }
    return build_transition_system(scenario, completed, agent_index);
}

}  // namespace navsim
