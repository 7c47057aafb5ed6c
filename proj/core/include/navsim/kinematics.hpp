#pragma once

#include "navsim/geometry.hpp"

#include <Eigen/Dense>

#include <vector>

namespace navsim {

// Planar mobile-manipulator variants: an omnidirectional base with one
// revolute link (n = 3) or with a two-link arm (n = 4).
enum class AgentVariant { base_link1, base_link2 };

int config_dim(AgentVariant variant);
int link_count(AgentVariant variant);  // including the base body

struct Gains {
    double lambda = 10.0;  // velocity damping
    double sigma = 0.01;   // adaptation gain
    double kappa = 5.0;    // navigation exponent (>= 2)
};

struct AgentModel {
    int id = 0;
    AgentVariant variant = AgentVariant::base_link1;

    double base_mass = 3.0;
    std::vector<double> link_masses;       // per link
    std::vector<double> link_lengths;      // joint-to-joint (last: joint-to-tip)
    std::vector<double> link_com_offsets;  // joint-to-center-of-mass
    std::vector<double> link_inertias;     // about the link COM

    Eigen::Vector3d base_semi_axes = Eigen::Vector3d(0.5, 0.5, 0.3);
    std::vector<Eigen::Vector3d> link_semi_axes;

    double d_con = 8.0;    // sensing radius
    double c_true = 0.05;  // friction bound constant (plant-side only)
    Gains gains;

    int dof() const { return config_dim(variant); }
    int links() const { return link_count(variant); }
    void validate() const;
};

struct AgentConfig {
    Eigen::VectorXd q;
    Eigen::VectorXd qd;
};

// Base position embedded in the z = 0 plane.
Eigen::Vector3d base_position(const AgentModel &model, const Eigen::VectorXd &q);

// Homogeneous frames of the base and each link COM, all in the z = 0 plane.
std::vector<Eigen::Matrix4d> link_poses(const AgentModel &model, const Eigen::VectorXd &q);

// Link bounding ellipsoids placed at the link frames.
std::vector<Ellipsoid3> link_ellipsoids(const AgentModel &model, const Eigen::VectorXd &q);

// Task map whose Jacobian defines the singularity measure:
//   base_link1: (x_e, y_e, yaw) with the tool point at the link-length radius;
//   base_link2: (x_b, y_b, x_e, y_e), base position plus arm tip.
Eigen::VectorXd task_map(const AgentModel &model, const Eigen::VectorXd &q);
Eigen::MatrixXd jacobian(const AgentModel &model, const Eigen::VectorXd &q);

// det(J J^T); zero exactly on the singular set.
double singularity_measure(const AgentModel &model, const Eigen::VectorXd &q);

// Supremum over configurations of the distance from the base center to any
// point of the body (closed form).
double body_radius(const AgentModel &model);

// Def.-style membership: |p_B(q) - p_k| <= r_k - body_radius.
bool in_region(const AgentModel &model, const Eigen::VectorXd &q, const Region &region);

}  // namespace navsim
