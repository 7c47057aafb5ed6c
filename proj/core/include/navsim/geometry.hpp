#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace navsim {

// Coordinate plane selectors for ellipsoid shadows.
enum class PlaneId { xy, xz, yz };

constexpr std::array<PlaneId, 3> kAllPlanes = {PlaneId::xy, PlaneId::xz, PlaneId::yz};

// Indices of the two coordinates kept by a plane projection.
std::array<int, 2> plane_axes(PlaneId plane);
const char *plane_name(PlaneId plane);

// Rigid-link bounding ellipsoid: {p : (p-center)^T Q (p-center) <= 1} with
// Q = R diag(a^-2, b^-2, c^-2) R^T.
struct Ellipsoid3 {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d semi_axes = Eigen::Vector3d::Ones();

    // Body matrix Q and its analytic inverse R diag(a^2,b^2,c^2) R^T.
    Eigen::Matrix3d body_matrix() const;
    Eigen::Matrix3d body_matrix_inverse() const;

    // Homogeneous 4x4 matrix E with [p^T 1] E [p;1] <= 0 on the ellipsoid.
    Eigen::Matrix4d homogeneous_matrix() const;

    bool contains(const Eigen::Vector3d &p) const;

    // Throws std::invalid_argument on non-orthonormal orientation or
    // non-positive semi-axes.
    void validate() const;
};

// Plane shadow of an ellipsoid as a homogeneous conic: {z : z^T M z <= 0},
// z = [u^T 1]^T. The leading 2x2 block is positive definite and the full
// matrix has signature (+,+,-).
struct Ellipse2 {
    Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
    PlaneId plane = PlaneId::xy;

    Eigen::Vector2d center() const;
    Eigen::Matrix2d shape() const;  // leading block Q_s
    // Semi-axis lengths (descending) and the angle of the major axis.
    void principal_axes(double &major, double &minor, double &angle) const;
    bool contains(const Eigen::Vector2d &u) const;
    void validate() const;
};

// Characteristic cubic f(lambda) = c3 l^3 + c2 l^2 + c1 l + c0.
struct Cubic {
    double c3 = 0, c2 = 0, c1 = 0, c0 = 0;

    double eval(double lambda) const {
        return ((c3 * lambda + c2) * lambda + c1) * lambda + c0;
    }
    double coeff_norm() const;
};

enum class RootTag { three_distinct_real, repeated_real, one_real_two_complex };

struct RootClass {
    RootTag tag = RootTag::three_distinct_real;
    double discriminant = 0.0;
    // Real roots in ascending order (1 or 3 entries; repeated roots listed
    // with multiplicity).
    std::vector<double> real_roots;
};

// Spherical region of interest with atomic proposition labels.
struct Region {
    int id = 0;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 1.0;
    std::vector<std::string> props;

    void validate() const;
};

enum class SeparationVerdict { disjoint, touching, overlapping };

struct SeparationReport {
    SeparationVerdict verdict = SeparationVerdict::overlapping;
    Cubic poly;
    RootClass roots;
    int positive_real_roots = 0;
};

// Homogeneous region matrix in the symmetric form that realizes
// z^T T z = |p - p_k|^2 - r_k^2.
Eigen::Matrix4d region_matrix(const Region &region);

// Orthogonal shadow of an ellipsoid onto a coordinate plane.
Ellipse2 project_ellipsoid(const Ellipsoid3 &e, PlaneId plane);

// Shadow of a spherical region: a circle of the same radius.
Ellipse2 project_region(const Region &region, PlaneId plane);

// Coefficients of f(lambda) = det(lambda A - B), exact for cubics via
// 4-point interpolation at lambda in {0, 1, -1, 2}.
// Throws std::invalid_argument on mismatched planes or degenerate A.
Cubic char_poly(const Ellipse2 &a, const Ellipse2 &b);

double cubic_discriminant(const Cubic &c);

// Root pattern per discriminant sign, with real roots extracted from the
// companion-matrix eigenvalues. Throws on c3 == 0.
RootClass classify_roots(const Cubic &c);

// Relative position of two coplanar ellipses: disjoint iff the characteristic
// cubic has two distinct negative real roots, touching iff it has a negative
// double root, overlapping otherwise.
SeparationReport ellipse_separation(const Ellipse2 &a, const Ellipse2 &b);
SeparationVerdict ellipses_disjoint(const Ellipse2 &a, const Ellipse2 &b);

// C^2 one-sided cubic ramp: x^3 for x > 0, else 0.
double delta_clamp(double x);

// Sum over the three plane shadows of delta_clamp applied to the
// characteristic-cubic discriminant. Strictly positive is sufficient for the
// two ellipsoids not to touch externally.
double pair_margin(const Ellipsoid3 &ei, const Ellipsoid3 &ej);

// Same margin with the second body replaced by a spherical region.
double region_margin(const Ellipsoid3 &ei, const Region &region);

}  // namespace navsim
