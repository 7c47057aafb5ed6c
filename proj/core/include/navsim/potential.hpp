#pragma once

#include "navsim/scenario.hpp"

#include <string>
#include <vector>

namespace navsim {

// Goal configurations for one transition round. Invariants (enforced by
// select_goal_configs): each q_goal is strictly inside its goal region,
// goal bodies are pairwise contact-free, and required neighbor pairs are
// within sensing range at their goals.
struct GoalSpec {
    std::vector<Eigen::VectorXd> q_goal;
    std::vector<int> goal_region;   // region indices
    std::vector<int> start_region;  // region indices (excluded from the beta product)
};

// Saturation ceilings for the clamped margin factors. A factor saturates at
// its ceiling, so bodies beyond the sensing range contribute exactly the
// ceiling and the composition stays local.
struct MarginCeilings {
    // cross[i][j](m, l): ordered ceiling for agent i's link m against agent
    // j's link l (i != j). Diagonal entries unused.
    std::vector<std::vector<Eigen::MatrixXd>> cross;
    // own[i][p]: ceilings for agent i's own link pairs, p indexing (m, l),
    // m < l, in lexicographic order.
    std::vector<std::vector<double>> own;
    // region[i](m, k): ceiling for agent i's link m against region k.
    std::vector<Eigen::MatrixXd> region;
};

// Per-scenario precomputation: Monte-Carlo margin floors at the sensing
// boundary (halved), own-pair reference margins, singularity normalizers.
struct PotentialSetup {
    MarginCeilings ceilings;
    std::vector<double> body_radii;
    std::vector<double> sing_ref;  // (det J)^2 at the reference posture, squared
};

PotentialSetup prepare_potential(const Scenario &scenario);

Eigen::VectorXd reference_posture(const AgentModel &model);

// One transition round's immutable evaluation context.
struct PotentialContext {
    const Scenario *scenario = nullptr;
    const PotentialSetup *setup = nullptr;
    GoalSpec goals;

    int n_agents() const { return static_cast<int>(scenario->agents.size()); }
};

// Collision noise floor: beta values at or below this only arise from
// contact-grade configurations (margins are then floating-point noise around
// an exact zero).
inline constexpr double kBetaFloor = 1e-15;

// ---- module operations ------------------------------------------------

double gamma(const Eigen::VectorXd &q, const Eigen::VectorXd &q_goal);

// C^2 saturation: 0 for x <= 0, ceiling * s(x / ceiling) with the quintic
// smoothstep in between, ceiling for x >= ceiling.
double smooth_clamp(double x, double ceiling);

// Clamped pair/connectivity/workspace obstacle terms.
double beta_pair(const Ellipsoid3 &ei, const Ellipsoid3 &ej, double ceiling);
double beta_conn(const Eigen::Vector3d &p_bi, const Eigen::Vector3d &p_bj, double d_con);
double beta_world(const AgentModel &model, const Eigen::VectorXd &q, double r0);

// Scaled product of the normalized obstacle factors: singularity, workspace,
// required-neighbor connectivity, clamped ellipsoid pairs (own links and
// links of agents within sensing range), and non-endpoint region margins.
// Zero (or negative, for workspace exits) exactly on the unsafe set.
double beta_total(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q, int i);

// Navigation potential: phi_hat = gamma / (gamma^kappa + beta)^(1/kappa),
// lifted to phi = 1 / (1 - phi_hat). Throws std::domain_error on the unsafe
// set (beta at or below the collision noise floor of 1e-15).
double phi_lift(double gamma, double beta, double kappa);
double phi(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q, int i);

// d(phi_i)/d(q_j) by per-coordinate central differences.
Eigen::VectorXd grad_phi(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q,
                         int i, int j);

// G_i = grad_{q_i} [ phi_i + sum_{j in N_i} phi_j ], for every agent at once.
// This is the potential part of the decentralized control law.
std::vector<Eigen::VectorXd> torque_gradients(const PotentialContext &ctx,
                                              const std::vector<Eigen::VectorXd> &q);

// Named factor values for monitoring and diagnostics.
struct BetaFactor {
    std::string name;
    double value = 0.0;  // normalized to its ceiling
};
struct BetaBreakdown {
    double total = 0.0;
    std::vector<BetaFactor> factors;
    const BetaFactor *min_factor() const;
};
BetaBreakdown beta_breakdown(const PotentialContext &ctx,
                             const std::vector<Eigen::VectorXd> &q, int i);

// Deterministic goal-configuration selection for a round: bases biased
// toward required neighbors, co-occupants of a region spread apart, links
// oriented away from co-occupants. Throws std::runtime_error naming the
// violated inequality when no placement satisfies the GoalSpec invariants.
GoalSpec select_goal_configs(const Scenario &scenario, const PotentialSetup &setup,
                             const std::vector<int> &goal_regions,
                             const std::vector<Eigen::VectorXd> &q_start,
                             const std::vector<int> &start_regions);

// Compact identifier of the smallest normalized obstacle factor; used by the
// per-step safety monitors.
struct MinFactor {
    enum class Kind { none, singularity, workspace, connectivity, cross_pair, own_pair, region };
    Kind kind = Kind::none;
    int a = -1;  // other agent / own link / region index, depending on kind
    int b = -1;  // link indices where applicable
    int c = -1;
    double value = 0.0;
    std::string describe(const Scenario &scenario) const;
};

// Cached evaluation of all potentials at one stacked configuration, with
// cheap re-evaluation under single-agent perturbations (used by the FD
// gradients; recomputes only margins that involve the perturbed agent).
class PhiEvaluator {
public:
    PhiEvaluator(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q);

    double beta(int i) const { return beta_[i]; }
    double phi(int i) const;
    double gamma(int i) const { return gamma_[i]; }
    const MinFactor &min_factor(int i) const { return min_factor_[i]; }

    // Potentials of every agent with agent b's configuration replaced by qb.
    void phi_all_with(int b, const Eigen::VectorXd &qb, Eigen::VectorXd &out) const;

    // Agents within agent i's sensing radius at the cached state.
    const std::vector<int> &neighbors(int i) const { return neighbors_[i]; }

private:
    struct AgentGeometry {
        Eigen::Vector3d base;
        std::vector<Ellipsoid3> links;
        // conic[m][plane]
        std::vector<std::array<Eigen::Matrix3d, 3>> conics;
        double sing_norm = 1.0;   // (det JJ^T)^2 / reference
        double world_norm = 1.0;  // beta_world / (r0 - d_bar)^2
        std::vector<double> own_margins;
        std::vector<double> region_margins;  // (m, k) flattened, kept for all k
    };

    void build_agent(int i, const Eigen::VectorXd &qi, AgentGeometry &geo) const;
    void cross_margins(const AgentGeometry &gi, const AgentGeometry &gj,
                       Eigen::MatrixXd &out) const;
    double assemble_beta(int i, const std::vector<const AgentGeometry *> &geos,
                         const std::vector<const Eigen::MatrixXd *> &cross,
                         MinFactor *track = nullptr) const;
    double phi_from(double g, double beta, double kappa) const;

    const PotentialContext *ctx_;
    std::vector<AgentGeometry> geo_;
    // cross_[i][j]: margins agent i link m vs agent j link l (i != j)
    std::vector<std::vector<Eigen::MatrixXd>> cross_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<double> gamma_, beta_;
    std::vector<MinFactor> min_factor_;
};

}  // namespace navsim
