#pragma once

#include "navsim/dynamics.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace navsim {

// Stacked configurations, velocities and adaptive estimates of the fleet at
// one time instant.
struct WorldState {
    double t = 0.0;
    std::vector<Eigen::VectorXd> q;
    std::vector<Eigen::VectorXd> qd;
    std::vector<double> c_hat;
    std::vector<int> region;  // containing region index per agent, or -1
};

WorldState initial_state(const Scenario &scenario);

// Agents within agent i's sensing radius.
std::vector<int> neighborhood(const Scenario &scenario, const WorldState &state, int i);

// Raised when an integration stage leaves the safety set (some beta_i <= 0).
struct SafetySetExit : std::runtime_error {
    SafetySetExit(int agent_id, std::string factor, double time)
        : std::runtime_error("safety-set exit: beta of agent " + std::to_string(agent_id) +
                             " vanished at t=" + std::to_string(time) + " (factor " + factor +
                             ")"),
          agent(agent_id), vanished_factor(std::move(factor)), t(time) {}
    int agent;
    std::string vanished_factor;
    double t;
};

// One classical RK4 step of the stacked (q, qd, c_hat) dynamics; torques are
// recomputed at every internal stage. Deterministic given inputs.
WorldState step(const PotentialContext &ctx, const WorldState &state, double dt);

// Same, additionally reporting the stage-1 torques (the control input applied
// at the entry state).
WorldState step(const PotentialContext &ctx, const WorldState &state, double dt,
                std::vector<Eigen::VectorXd> &torques_at_entry);

struct MonitorAgentReport {
    double beta_total = 0.0;
    std::string min_factor;
    double min_factor_value = 0.0;
    double phi = 0.0;
    double v_contribution = 0.0;
    double singularity = 0.0;
    double workspace_margin = 0.0;  // r0 - (|p_B| + body_radius)
    std::vector<double> conn_distances;
    bool forbidden_regions_clear = true;  // exact link-to-region distance check
};

struct MonitorReport {
    double t = 0.0;
    double lyapunov = 0.0;
    std::vector<MonitorAgentReport> agents;
};

MonitorReport monitors(const PotentialContext &ctx, const WorldState &state);

struct TransitionResult {
    int agent = 0;  // agent index
    int from_region = -1;
    int to_region = -1;
    double t_start = 0.0;
    double t_end = 0.0;
    bool valid = false;
    std::vector<std::string> violations;
    // Regions of the required neighbors sampled at t_end (parallel to
    // required_neighbors[agent]).
    std::vector<int> neighbor_regions_at_end;
};

enum class RoundStatus { completed, timeout, safety_exit };

struct Violation {
    double t;
    int agent;  // agent index
    std::string clause;
    std::string detail;
};

// Append-only per-run logging sinks.
struct SimLog {
    std::vector<std::string> csv_columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> events;  // JSON lines

    void event(double t, const std::string &type, int agent_id, const std::string &detail);
};

struct RoundResult {
    RoundStatus status = RoundStatus::completed;
    std::vector<TransitionResult> transitions;
    WorldState final_state;
    GoalSpec goals;

    // Run statistics for the summary and the acceptance checks.
    double max_dv_positive = 0.0;  // largest per-step increase of V
    // Largest per-step excess of V over the descent tolerance
    // 1e-6 |V| + 1e-9; nonpositive on a descent-conformant run.
    double max_dv_excess = -1e300;
    double min_beta = 0.0;
    std::vector<double> min_factor_value;  // per agent, over the round
    std::vector<std::string> min_factor_name;
    std::vector<double> sup_speed;   // max |qd_i| over the round
    std::vector<double> sup_torque;  // max |tau_i| over the round
    std::vector<double> c_hat_end;
    std::vector<Violation> violations;
};

// Drives one barrier-synchronized transition round: integrates until every
// agent rests inside its goal region (50 consecutive steps with |qd| <= 1e-3)
// or t_max elapses. Safety clauses are monitored on every committed step;
// violations invalidate the affected transitions but do not stop the run.
RoundResult run_transition_round(const Scenario &scenario, const PotentialSetup &setup,
                                 const WorldState &start, const std::vector<int> &goal_regions,
                                 double dt, double t_max, SimLog *log = nullptr);

}  // namespace navsim
