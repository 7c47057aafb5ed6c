#pragma once

#include "navsim/potential.hpp"

namespace navsim {

// Lagrangian terms of one agent: M qdd + N qd + g + f = tau.
struct DynamicsTerms {
    Eigen::MatrixXd M;  // inertia, symmetric positive definite
    Eigen::MatrixXd N;  // Coriolis/centripetal, with Mdot - 2N skew-symmetric
    Eigen::VectorXd g;  // gravity (zero: horizontal-plane motion)
    Eigen::VectorXd f;  // friction, instantiated at the bound c |q||qd|
};

DynamicsTerms dynamics_terms(const AgentModel &model, const Eigen::VectorXd &q,
                             const Eigen::VectorXd &qd);

// Analytic dM/dt along (q, qd); used by the skew-symmetry checks.
Eigen::MatrixXd mass_matrix_dot(const AgentModel &model, const Eigen::VectorXd &q,
                                const Eigen::VectorXd &qd);

Eigen::VectorXd gravity(const AgentModel &model, const Eigen::VectorXd &q);

// sigma * |qd|^2 * |q|, always nonnegative.
double adaptation_rate(const Eigen::VectorXd &q, const Eigen::VectorXd &qd, double sigma);

// qdd = M^{-1}(tau - N qd - g - f) via Cholesky; throws on non-SPD M.
Eigen::VectorXd closed_loop_accel(const AgentModel &model, const Eigen::VectorXd &q,
                                  const Eigen::VectorXd &qd, const Eigen::VectorXd &tau);

// Decentralized adaptive law:
//   tau_i = g_i - grad_{q_i} phi_i - sum_{j in N_i} grad_{q_i} phi_j
//           - c_hat_i |q_i| qd_i - lambda_i qd_i.
// Only agents within the sensing radius enter the gradient sum.
std::vector<Eigen::VectorXd> control_torques(const PotentialContext &ctx,
                                             const std::vector<Eigen::VectorXd> &q,
                                             const std::vector<Eigen::VectorXd> &qd,
                                             const std::vector<double> &c_hat);

Eigen::VectorXd control_torque(const PotentialContext &ctx,
                               const std::vector<Eigen::VectorXd> &q,
                               const std::vector<Eigen::VectorXd> &qd,
                               const std::vector<double> &c_hat, int i);

// Monitor-only Lyapunov function: sum of potentials, kinetic energies and
// estimation-error quadratics. Reads the true friction constants; the
// controller never does.
double lyapunov_value(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q,
                      const std::vector<Eigen::VectorXd> &qd, const std::vector<double> &c_hat);

}  // namespace navsim
