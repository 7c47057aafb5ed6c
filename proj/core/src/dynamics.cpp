#include "navsim/dynamics.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace navsim {

namespace {

// dM/dq_i for the base+2R arm; only the joint coordinates contribute.
std::array<Eigen::Matrix4d, 4> mass_matrix_partials(const AgentModel &model,
                                                    const Eigen::VectorXd &q) {
    const double m2 = model.link_masses[1];
    const double l1 = model.link_lengths[0];
    const double lc1 = model.link_com_offsets[0];
    const double lc2 = model.link_com_offsets[1];
    const double alpha = model.link_masses[0] * lc1 + m2 * l1;
    const double b2 = m2 * lc2;

    const double s1 = std::sin(q(2)), c1 = std::cos(q(2));
    const double s12 = std::sin(q(2) + q(3)), c12 = std::cos(q(2) + q(3));
    const double s2 = std::sin(q(3));

    std::array<Eigen::Matrix4d, 4> d;
    d.fill(Eigen::Matrix4d::Zero());

    auto sym = [](Eigen::Matrix4d &m, int r, int c, double v) {
        m(r, c) = v;
        m(c, r) = v;
    };

    // d/dtheta1
    sym(d[2], 0, 2, -alpha * c1 - b2 * c12);
    sym(d[2], 0, 3, -b2 * c12);
    sym(d[2], 1, 2, -alpha * s1 - b2 * s12);
    sym(d[2], 1, 3, -b2 * s12);

    // d/dtheta2
    sym(d[3], 0, 2, -b2 * c12);
    sym(d[3], 0, 3, -b2 * c12);
    sym(d[3], 1, 2, -b2 * s12);
    sym(d[3], 1, 3, -b2 * s12);
    sym(d[3], 2, 2, -2.0 * m2 * l1 * lc2 * s2);
    sym(d[3], 2, 3, -m2 * l1 * lc2 * s2);
    return d;
}

Eigen::Matrix4d mass_matrix_two_link(const AgentModel &model, const Eigen::VectorXd &q) {
    const double m1 = model.link_masses[0], m2 = model.link_masses[1];
    const double l1 = model.link_lengths[0];
    const double lc1 = model.link_com_offsets[0], lc2 = model.link_com_offsets[1];
    const double i1 = model.link_inertias[0], i2 = model.link_inertias[1];
    const double alpha = m1 * lc1 + m2 * l1;
    const double b2 = m2 * lc2;

    const double s1 = std::sin(q(2)), c1 = std::cos(q(2));
    const double s12 = std::sin(q(2) + q(3)), c12 = std::cos(q(2) + q(3));
    const double c2 = std::cos(q(3));

    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    const double mtot = model.base_mass + m1 + m2;
    m(0, 0) = mtot;
    m(1, 1) = mtot;
    m(0, 2) = m(2, 0) = -alpha * s1 - b2 * s12;
    m(0, 3) = m(3, 0) = -b2 * s12;
    m(1, 2) = m(2, 1) = alpha * c1 + b2 * c12;
    m(1, 3) = m(3, 1) = b2 * c12;
    m(2, 2) = i1 + i2 + m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2);
    m(2, 3) = m(3, 2) = i2 + m2 * (lc2 * lc2 + l1 * lc2 * c2);
    m(3, 3) = i2 + m2 * lc2 * lc2;
    return m;
}

}  // namespace

DynamicsTerms dynamics_terms(const AgentModel &model, const Eigen::VectorXd &q,
                             const Eigen::VectorXd &qd) {
    if (q.size() != model.dof() || qd.size() != model.dof())
        throw std::invalid_argument("dynamics_terms: dimension mismatch");

    DynamicsTerms out;
    const int n = model.dof();

    if (model.variant == AgentVariant::base_link1) {
        const double ml = model.link_masses[0];
        const double lc = model.link_com_offsets[0];
        const double il = model.link_inertias[0];
        const double s = std::sin(q(2)), c = std::cos(q(2));
        const double thd = qd(2);

        out.M = Eigen::Matrix3d::Zero();
        out.M(0, 0) = out.M(1, 1) = model.base_mass + ml;
        out.M(0, 2) = out.M(2, 0) = -ml * lc * s;
        out.M(1, 2) = out.M(2, 1) = ml * lc * c;
        out.M(2, 2) = il + ml * lc * lc;

        out.N = Eigen::Matrix3d::Zero();
        out.N(0, 2) = -ml * lc * c * thd;
        out.N(1, 2) = -ml * lc * s * thd;
    } else {
        out.M = mass_matrix_two_link(model, q);
        // Christoffel symbols from the analytic mass-matrix partials; this
        // construction makes Mdot - 2N skew-symmetric by design.
        const auto d = mass_matrix_partials(model, q);
        out.N = Eigen::Matrix4d::Zero();
        for (int k = 0; k < 4; ++k)
            for (int j = 0; j < 4; ++j) {
                double sum = 0.0;
                for (int i = 0; i < 4; ++i)
                    sum += 0.5 * (d[i](k, j) + d[j](k, i) - d[k](i, j)) * qd(i);
                out.N(k, j) = sum;
            }
    }

    out.g = Eigen::VectorXd::Zero(n);
    out.f = model.c_true * q.norm() * qd;
    return out;
}

Eigen::MatrixXd mass_matrix_dot(const AgentModel &model, const Eigen::VectorXd &q,
                                const Eigen::VectorXd &qd) {
    if (model.variant == AgentVariant::base_link1) {
        const double ml = model.link_masses[0];
        const double lc = model.link_com_offsets[0];
        const double s = std::sin(q(2)), c = std::cos(q(2));
        const double thd = qd(2);
        Eigen::Matrix3d md = Eigen::Matrix3d::Zero();
        md(0, 2) = md(2, 0) = -ml * lc * c * thd;
        md(1, 2) = md(2, 1) = -ml * lc * s * thd;
        return md;
    }
    const auto d = mass_matrix_partials(model, q);
    Eigen::Matrix4d md = Eigen::Matrix4d::Zero();
    for (int i = 0; i < 4; ++i) md += d[i] * qd(i);
    return md;
}

Eigen::VectorXd gravity(const AgentModel &model, const Eigen::VectorXd &q) {
    (void)q;
    return Eigen::VectorXd::Zero(model.dof());
}

double adaptation_rate(const Eigen::VectorXd &q, const Eigen::VectorXd &qd, double sigma) {
    return sigma * qd.squaredNorm() * q.norm();
}

Eigen::VectorXd closed_loop_accel(const AgentModel &model, const Eigen::VectorXd &q,
                                  const Eigen::VectorXd &qd, const Eigen::VectorXd &tau) {
    const DynamicsTerms terms = dynamics_terms(model, q, qd);
    const Eigen::VectorXd rhs = tau - terms.N * qd - terms.g - terms.f;
    Eigen::LLT<Eigen::MatrixXd> llt(terms.M);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("inertia matrix is not positive definite");
    return llt.solve(rhs);
}

std::vector<Eigen::VectorXd> control_torques(const PotentialContext &ctx,
                                             const std::vector<Eigen::VectorXd> &q,
                                             const std::vector<Eigen::VectorXd> &qd,
                                             const std::vector<double> &c_hat) {
    const auto grads = torque_gradients(ctx, q);
    std::vector<Eigen::VectorXd> tau(grads.size());
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const AgentModel &model = ctx.scenario->agents[i];
        tau[i] = gravity(model, q[i]) - grads[i] - c_hat[i] * q[i].norm() * qd[i] -
                 model.gains.lambda * qd[i];
    }
    return tau;
}

Eigen::VectorXd control_torque(const PotentialContext &ctx,
                               const std::vector<Eigen::VectorXd> &q,
                               const std::vector<Eigen::VectorXd> &qd,
                               const std::vector<double> &c_hat, int i) {
    return control_torques(ctx, q, qd, c_hat)[i];
}

double lyapunov_value(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q,
                      const std::vector<Eigen::VectorXd> &qd,
                      const std::vector<double> &c_hat) {
    const PhiEvaluator ev(ctx, q);
    double v = 0.0;
    for (int i = 0; i < ctx.n_agents(); ++i) {
        const AgentModel &model = ctx.scenario->agents[i];
        const DynamicsTerms terms = dynamics_terms(model, q[i], qd[i]);
        v += ev.phi(i) + 0.5 * qd[i].dot(terms.M * qd[i]);
        if (model.gains.sigma > 0.0) {
            const double err = c_hat[i] - model.c_true;
            v += 0.5 * err * err / model.gains.sigma;
        }
    }
    return v;
}

}  // namespace navsim
