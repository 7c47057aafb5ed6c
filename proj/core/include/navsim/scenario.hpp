#pragma once

#include "navsim/geometry.hpp"
#include "navsim/kinematics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace navsim {

struct SimParams {
    double dt = 1e-3;
    double t_max = 600.0;  // per transition round
    std::uint64_t seed = 1;
    int log_every = 20;
};

// Knobs of the concrete potential composition (see potential.hpp).
struct PotentialTuning {
    double beta_scale = 20000.0;  // weight of the obstacle product inside phi
    double fd_step = 1e-6;        // per-coordinate central-difference step
    double goal_clearance = 0.25;   // interior margin of goal configurations (m)
    double pair_standoff = 0.3;     // surface gap (m) where pair factors saturate
    double region_standoff = 1.0;   // surface gap (m) where region factors saturate
    int ceiling_samples = 1000;   // Monte-Carlo samples per margin ceiling
};

struct Scenario {
    double r0 = 12.0;
    std::vector<Region> regions;
    std::vector<AgentModel> agents;

    // Parallel to agents.
    std::vector<Eigen::VectorXd> q0;
    std::vector<Eigen::VectorXd> qd0;
    std::vector<double> c_hat0;
    std::vector<std::vector<int>> required_neighbors;  // agent indices
    std::vector<std::vector<int>> paths;               // region indices, one per round

    SimParams sim;
    PotentialTuning potential;

    int agent_index(int agent_id) const;
    int region_index(int region_id) const;
    std::size_t round_count() const { return paths.empty() ? 0 : paths.front().size(); }
    double max_body_radius() const;

    // Region index containing the base per Def.-style membership, or -1.
    int containing_region(int agent_idx, const Eigen::VectorXd &q) const;
};

// Parse/serialize the scenario file format. Parse errors are reported as
// std::runtime_error with line/column context.
Scenario load_scenario(const std::string &path);
Scenario parse_scenario(const std::string &text);
std::string serialize_scenario(const Scenario &scenario);

// Feasibility checks: region spacing, workspace fit, sensing premises,
// initial collision-freedom, and per-round goal reachability under the
// connectivity constraints. Empty result means valid.
std::vector<std::string> validate_scenario(const Scenario &scenario);

}  // namespace navsim
