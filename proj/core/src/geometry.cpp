#include "navsim/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace navsim {

namespace {

double det3(const Eigen::Matrix3d &m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

Eigen::Matrix3d homogeneous_conic(const Eigen::Matrix2d &q, const Eigen::Vector2d &m) {
    Eigen::Matrix3d conic;
    const Eigen::Vector2d qm = q * m;
    conic.topLeftCorner<2, 2>() = q;
    conic.topRightCorner<2, 1>() = -qm;
    conic.bottomLeftCorner<1, 2>() = -qm.transpose();
    conic(2, 2) = m.dot(qm) - 1.0;
    return conic;
}

}  // namespace

std::array<int, 2> plane_axes(PlaneId plane) {
    switch (plane) {
    case PlaneId::xy: return {0, 1};
    case PlaneId::xz: return {0, 2};
    default: return {1, 2};
    }
}

const char *plane_name(PlaneId plane) {
    switch (plane) {
    case PlaneId::xy: return "xy";
    case PlaneId::xz: return "xz";
    default: return "yz";
    }
}

Eigen::Matrix3d Ellipsoid3::body_matrix() const {
    const Eigen::Vector3d inv_sq = semi_axes.array().square().inverse();
    return orientation * inv_sq.asDiagonal() * orientation.transpose();
}

Eigen::Matrix3d Ellipsoid3::body_matrix_inverse() const {
    const Eigen::Vector3d sq = semi_axes.array().square();
    return orientation * sq.asDiagonal() * orientation.transpose();
}

Eigen::Matrix4d Ellipsoid3::homogeneous_matrix() const {
    const Eigen::Matrix3d q = body_matrix();
    const Eigen::Vector3d qc = q * center;
    Eigen::Matrix4d e;
    e.topLeftCorner<3, 3>() = q;
    e.topRightCorner<3, 1>() = -qc;
    e.bottomLeftCorner<1, 3>() = -qc.transpose();
    e(3, 3) = center.dot(qc) - 1.0;
    return e;
}

bool Ellipsoid3::contains(const Eigen::Vector3d &p) const {
    const Eigen::Vector3d d = p - center;
    return d.dot(body_matrix() * d) <= 1.0;
}

void Ellipsoid3::validate() const {
    if ((semi_axes.array() <= 0.0).any())
        throw std::invalid_argument("ellipsoid semi-axes must be positive");
    const Eigen::Matrix3d rtr = orientation.transpose() * orientation;
    if ((rtr - Eigen::Matrix3d::Identity()).norm() > 1e-10)
        throw std::invalid_argument("ellipsoid orientation is not orthonormal");
    if (orientation.determinant() < 0.0)
        throw std::invalid_argument("ellipsoid orientation is not proper");
}

Eigen::Vector2d Ellipse2::center() const {
    return shape().inverse() * (-matrix.topRightCorner<2, 1>());
}

Eigen::Matrix2d Ellipse2::shape() const {
    return matrix.topLeftCorner<2, 2>();
}

void Ellipse2::principal_axes(double &major, double &minor, double &angle) const {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(shape());
    const Eigen::Vector2d ev = es.eigenvalues();  // ascending
    major = 1.0 / std::sqrt(ev(0));
    minor = 1.0 / std::sqrt(ev(1));
    const Eigen::Vector2d axis = es.eigenvectors().col(0);
    angle = std::atan2(axis.y(), axis.x());
}

bool Ellipse2::contains(const Eigen::Vector2d &u) const {
    const Eigen::Vector3d z(u.x(), u.y(), 1.0);
    return z.dot(matrix * z) <= 0.0;
}

void Ellipse2::validate() const {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(shape());
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("ellipse leading block is not positive definite");
    if (det3(matrix) >= 0.0)
        throw std::invalid_argument("ellipse matrix does not have signature (+,+,-)");
}

double Cubic::coeff_norm() const {
    return std::sqrt(c3 * c3 + c2 * c2 + c1 * c1 + c0 * c0);
}

void Region::validate() const {
    if (radius <= 0.0)
        throw std::invalid_argument("region radius must be positive");
}

Eigen::Matrix4d region_matrix(const Region &region) {
    region.validate();
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topRightCorner<3, 1>() = -region.center;
    t.bottomLeftCorner<1, 3>() = -region.center.transpose();
    t(3, 3) = region.center.squaredNorm() - region.radius * region.radius;
    return t;
}

Ellipse2 project_ellipsoid(const Ellipsoid3 &e, PlaneId plane) {
    if ((e.semi_axes.array() <= 0.0).any())
        throw std::invalid_argument("ellipsoid semi-axes must be positive");
    const auto axes = plane_axes(plane);
    const Eigen::Matrix3d qinv = e.body_matrix_inverse();
    Eigen::Matrix2d s;
    s << qinv(axes[0], axes[0]), qinv(axes[0], axes[1]),
         qinv(axes[1], axes[0]), qinv(axes[1], axes[1]);
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    Eigen::Matrix2d qs;
    qs << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
    qs /= det;
    const Eigen::Vector2d m(e.center(axes[0]), e.center(axes[1]));
    return Ellipse2{homogeneous_conic(qs, m), plane};
}

Ellipse2 project_region(const Region &region, PlaneId plane) {
    region.validate();
    const auto axes = plane_axes(plane);
    const Eigen::Vector2d m(region.center(axes[0]), region.center(axes[1]));
    // Unit leading block, matching the projected region matrix form
    // [[I, -u], [-u^T, |u|^2 - r^2]].
    Eigen::Matrix3d conic;
    conic.topLeftCorner<2, 2>() = Eigen::Matrix2d::Identity();
    conic.topRightCorner<2, 1>() = -m;
    conic.bottomLeftCorner<1, 2>() = -m.transpose();
    conic(2, 2) = m.squaredNorm() - region.radius * region.radius;
    return Ellipse2{conic, plane};
}

Cubic char_poly(const Ellipse2 &a, const Ellipse2 &b) {
    if (a.plane != b.plane)
        throw std::invalid_argument("char_poly requires ellipses in the same plane");
    const Eigen::Matrix3d &ma = a.matrix;
    const Eigen::Matrix3d &mb = b.matrix;
    const double det_a = det3(ma);
    if (std::abs(det_a) <= 1e-12 * std::pow(ma.norm(), 3))
        throw std::invalid_argument("degenerate ellipse");

    const double d0 = -det3(mb);
    const double d1 = det3(ma - mb);
    const double dm1 = -det3(ma + mb);
    const double d2 = det3(2.0 * ma - mb);

    Cubic c;
    c.c0 = d0;
    c.c2 = 0.5 * (d1 + dm1) - c.c0;
    const double u = d1 - c.c0 - c.c2;       // c3 + c1
    const double v = 0.5 * (d2 - c.c0 - 4.0 * c.c2);  // 4 c3 + c1
    c.c3 = (v - u) / 3.0;
    c.c1 = u - c.c3;
    return c;
}

double cubic_discriminant(const Cubic &c) {
    return 18.0 * c.c3 * c.c2 * c.c1 * c.c0 - 4.0 * c.c2 * c.c2 * c.c2 * c.c0 +
           c.c2 * c.c2 * c.c1 * c.c1 - 4.0 * c.c3 * c.c1 * c.c1 * c.c1 -
           27.0 * c.c3 * c.c3 * c.c0 * c.c0;
}

RootClass classify_roots(const Cubic &c) {
    const double norm = c.coeff_norm();
    if (norm == 0.0 || std::abs(c.c3) <= 1e-14 * norm)
        throw std::invalid_argument("not a cubic");

    RootClass out;
    out.discriminant = cubic_discriminant(c);

    // Companion matrix of the monic cubic.
    const double m2 = c.c2 / c.c3, m1 = c.c1 / c.c3, m0 = c.c0 / c.c3;
    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    companion(0, 2) = -m0;
    companion(1, 2) = -m1;
    companion(2, 2) = -m2;
    Eigen::EigenSolver<Eigen::Matrix3d> es(companion);
    const auto roots = es.eigenvalues();
    const double root_scale = std::max(1.0, roots.cwiseAbs().maxCoeff());

    for (int i = 0; i < 3; ++i)
        if (std::abs(roots(i).imag()) <= 1e-8 * root_scale)
            out.real_roots.push_back(roots(i).real());
    std::sort(out.real_roots.begin(), out.real_roots.end());

    // Tolerance band relative to the discriminant's natural magnitude
    // c3^4 (root scale)^6; the band is diagnostic only (the potential layer
    // consumes delta(Delta)).
    const double eps_root = 1e-9 * std::pow(c.c3, 4) * std::pow(root_scale, 6);
    if (std::abs(out.discriminant) <= eps_root)
        out.tag = RootTag::repeated_real;
    else if (out.discriminant > 0.0)
        out.tag = RootTag::three_distinct_real;
    else
        out.tag = RootTag::one_real_two_complex;
    return out;
}

SeparationReport ellipse_separation(const Ellipse2 &a, const Ellipse2 &b) {
    // Positive rescaling of either matrix leaves the root sign pattern
    // intact; normalize for conditioning.
    Ellipse2 an{a.matrix / a.matrix.norm(), a.plane};
    Ellipse2 bn{b.matrix / b.matrix.norm(), b.plane};

    SeparationReport rep;
    rep.poly = char_poly(an, bn);
    rep.roots = classify_roots(rep.poly);

    for (double r : rep.roots.real_roots)
        if (r > 0.0) ++rep.positive_real_roots;

    std::vector<double> neg;
    for (double r : rep.roots.real_roots)
        if (r < 0.0) neg.push_back(r);

    if (neg.size() == 2) {
        const double scale = std::max({1.0, std::abs(neg[0]), std::abs(neg[1])});
        rep.verdict = std::abs(neg[0] - neg[1]) <= 1e-6 * scale ? SeparationVerdict::touching
                                                                : SeparationVerdict::disjoint;
        return rep;
    }

    // A negative double root perturbs into a conjugate pair with a small
    // imaginary part under the eigenvalue extraction; fold that case back
    // into "touching".
    if (rep.roots.real_roots.size() == 1) {
        const double m2 = rep.poly.c2 / rep.poly.c3;
        const double m1 = rep.poly.c1 / rep.poly.c3;
        // Complex pair a +- bi: 2a = -m2 - r_real, a^2 + b^2 = m0 / ... use
        // Vieta with the extracted real root.
        const double r_real = rep.roots.real_roots[0];
        const double pair_sum = -m2 - r_real;
        const double pair_prod = m1 - r_real * pair_sum;
        const double half = 0.5 * pair_sum;
        const double disc2 = half * half - pair_prod;  // negative: true pair
        const double imag = disc2 < 0.0 ? std::sqrt(-disc2) : 0.0;
        if (half < 0.0 && imag <= 1e-5 * std::max(1.0, std::abs(half))) {
            rep.verdict = SeparationVerdict::touching;
            return rep;
        }
    }

    rep.verdict = SeparationVerdict::overlapping;
    return rep;
}

SeparationVerdict ellipses_disjoint(const Ellipse2 &a, const Ellipse2 &b) {
    return ellipse_separation(a, b).verdict;
}

double delta_clamp(double x) {
    return x > 0.0 ? x * x * x : 0.0;
}

double pair_margin(const Ellipsoid3 &ei, const Ellipsoid3 &ej) {
    double sum = 0.0;
    for (PlaneId plane : kAllPlanes) {
        const Cubic c = char_poly(project_ellipsoid(ei, plane), project_ellipsoid(ej, plane));
        sum += delta_clamp(cubic_discriminant(c));
    }
    return sum;
}

double region_margin(const Ellipsoid3 &ei, const Region &region) {
    double sum = 0.0;
    for (PlaneId plane : kAllPlanes) {
        const Cubic c = char_poly(project_ellipsoid(ei, plane), project_region(region, plane));
        sum += delta_clamp(cubic_discriminant(c));
    }
    return sum;
}

}  // namespace navsim
