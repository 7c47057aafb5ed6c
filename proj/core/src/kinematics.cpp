#include "navsim/kinematics.hpp"

#include <cmath>
#include <stdexcept>

namespace navsim {

namespace {

Eigen::Matrix4d planar_frame(double x, double y, double yaw) {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    const double c = std::cos(yaw), s = std::sin(yaw);
    t(0, 0) = c; t(0, 1) = -s;
    t(1, 0) = s; t(1, 1) = c;
    t(0, 3) = x;
    t(1, 3) = y;
    return t;
}

void check_dim(const AgentModel &model, const Eigen::VectorXd &q) {
    if (q.size() != model.dof())
        throw std::invalid_argument("configuration dimension mismatch");
}

}  // namespace

int config_dim(AgentVariant variant) {
    return variant == AgentVariant::base_link1 ? 3 : 4;
}

int link_count(AgentVariant variant) {
    return variant == AgentVariant::base_link1 ? 2 : 3;
}

void AgentModel::validate() const {
    const std::size_t arms = static_cast<std::size_t>(links() - 1);
    if (link_masses.size() != arms || link_lengths.size() != arms ||
        link_com_offsets.size() != arms || link_inertias.size() != arms ||
        link_semi_axes.size() != arms)
        throw std::invalid_argument("agent model link parameter count mismatch");
    if (base_mass <= 0.0) throw std::invalid_argument("base mass must be positive");
    for (double m : link_masses)
        if (m <= 0.0) throw std::invalid_argument("link mass must be positive");
    for (double l : link_lengths)
        if (l <= 0.0) throw std::invalid_argument("link length must be positive");
    for (double l : link_com_offsets)
        if (l <= 0.0) throw std::invalid_argument("link COM offset must be positive");
    for (double i : link_inertias)
        if (i <= 0.0) throw std::invalid_argument("link inertia must be positive");
    if ((base_semi_axes.array() <= 0.0).any())
        throw std::invalid_argument("base semi-axes must be positive");
    for (const auto &s : link_semi_axes)
        if ((s.array() <= 0.0).any())
            throw std::invalid_argument("link semi-axes must be positive");
    if (d_con <= 0.0) throw std::invalid_argument("sensing radius must be positive");
    if (c_true < 0.0) throw std::invalid_argument("friction constant must be nonnegative");
    if (gains.lambda <= 0.0 || gains.sigma < 0.0 || gains.kappa < 2.0)
        throw std::invalid_argument("invalid gains (need lambda > 0, sigma >= 0, kappa >= 2)");
}

Eigen::Vector3d base_position(const AgentModel &model, const Eigen::VectorXd &q) {
    check_dim(model, q);
    return Eigen::Vector3d(q(0), q(1), 0.0);
}

std::vector<Eigen::Matrix4d> link_poses(const AgentModel &model, const Eigen::VectorXd &q) {
    check_dim(model, q);
    std::vector<Eigen::Matrix4d> frames;
    frames.reserve(model.links());
    frames.push_back(planar_frame(q(0), q(1), 0.0));

    if (model.variant == AgentVariant::base_link1) {
        const double th = q(2);
        const double lc = model.link_com_offsets[0];
        frames.push_back(planar_frame(q(0) + lc * std::cos(th), q(1) + lc * std::sin(th), th));
    } else {
        const double th1 = q(2), th12 = q(2) + q(3);
        const double lc1 = model.link_com_offsets[0];
        const double l1 = model.link_lengths[0];
        const double lc2 = model.link_com_offsets[1];
        frames.push_back(planar_frame(q(0) + lc1 * std::cos(th1), q(1) + lc1 * std::sin(th1), th1));
        frames.push_back(planar_frame(q(0) + l1 * std::cos(th1) + lc2 * std::cos(th12),
                                      q(1) + l1 * std::sin(th1) + lc2 * std::sin(th12), th12));
    }
    return frames;
}

std::vector<Ellipsoid3> link_ellipsoids(const AgentModel &model, const Eigen::VectorXd &q) {
    const auto frames = link_poses(model, q);
    std::vector<Ellipsoid3> out;
    out.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        Ellipsoid3 e;
        e.center = frames[i].topRightCorner<3, 1>();
        e.orientation = frames[i].topLeftCorner<3, 3>();
        e.semi_axes = i == 0 ? model.base_semi_axes : model.link_semi_axes[i - 1];
        out.push_back(e);
    }
    return out;
}

Eigen::VectorXd task_map(const AgentModel &model, const Eigen::VectorXd &q) {
    check_dim(model, q);
    if (model.variant == AgentVariant::base_link1) {
        const double l = model.link_lengths[0];
        Eigen::VectorXd t(3);
        t << q(0) + l * std::cos(q(2)), q(1) + l * std::sin(q(2)), q(2);
        return t;
    }
    const double l1 = model.link_lengths[0], l2 = model.link_lengths[1];
    const double th1 = q(2), th12 = q(2) + q(3);
    Eigen::VectorXd t(4);
    t << q(0), q(1),
         q(0) + l1 * std::cos(th1) + l2 * std::cos(th12),
         q(1) + l1 * std::sin(th1) + l2 * std::sin(th12);
    return t;
}

Eigen::MatrixXd jacobian(const AgentModel &model, const Eigen::VectorXd &q) {
    check_dim(model, q);
    if (model.variant == AgentVariant::base_link1) {
        const double l = model.link_lengths[0];
        Eigen::Matrix3d j = Eigen::Matrix3d::Identity();
        j(0, 2) = -l * std::sin(q(2));
        j(1, 2) = l * std::cos(q(2));
        return j;
    }
    const double l1 = model.link_lengths[0], l2 = model.link_lengths[1];
    const double s1 = std::sin(q(2)), c1 = std::cos(q(2));
    const double s12 = std::sin(q(2) + q(3)), c12 = std::cos(q(2) + q(3));
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(4, 4);
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    j(2, 0) = 1.0;
    j(3, 1) = 1.0;
    j(2, 2) = -l1 * s1 - l2 * s12;
    j(2, 3) = -l2 * s12;
    j(3, 2) = l1 * c1 + l2 * c12;
    j(3, 3) = l2 * c12;
    return j;
}

double singularity_measure(const AgentModel &model, const Eigen::VectorXd &q) {
    const Eigen::MatrixXd j = jacobian(model, q);
    const double det = j.determinant();  // square task maps: det(JJ^T) = det(J)^2
    return det * det;
}

double body_radius(const AgentModel &model) {
    model.validate();
    double r = model.base_semi_axes.maxCoeff();
    double chain = 0.0;
    for (std::size_t m = 0; m < model.link_semi_axes.size(); ++m) {
        const double reach = chain + model.link_com_offsets[m] + model.link_semi_axes[m].maxCoeff();
        r = std::max(r, reach);
        chain += model.link_lengths[m];
    }
    return r;
}

bool in_region(const AgentModel &model, const Eigen::VectorXd &q, const Region &region) {
    const Eigen::Vector3d p = base_position(model, q);
    return (p - region.center).norm() <= region.radius - body_radius(model);
}

}  // namespace navsim
