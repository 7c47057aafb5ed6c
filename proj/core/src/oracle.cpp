#include "navsim/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace navsim {

namespace {

struct CanonicalEllipse {
    Eigen::Vector2d center;
    Eigen::Matrix2d axes;  // columns: principal directions
    double a = 1.0;        // semi-axis along column 0
    double b = 1.0;        // semi-axis along column 1
};

CanonicalEllipse canonical(const Ellipse2 &e) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(e.shape());
    CanonicalEllipse c;
    c.center = e.center();
    c.axes = es.eigenvectors();
    c.a = 1.0 / std::sqrt(es.eigenvalues()(0));
    c.b = 1.0 / std::sqrt(es.eigenvalues()(1));
    return c;
}

// Distance from a first-quadrant point to a canonical ellipse boundary,
// robust bisection on the Lagrange parameter (Eberly's method).
double canonical_distance(double a, double b, double y0, double y1) {
    const double a2 = a * a, b2 = b * b;
    const double f = (y0 * y0) / a2 + (y1 * y1) / b2 - 1.0;
    // t parameterizes the closest point: x_i = a_i^2 y_i / (t + a_i^2).
    double t_lo, t_hi;
    if (f > 0.0) {
        t_lo = 0.0;
        t_hi = std::max(a, b) * std::hypot(y0, y1);
    } else {
        t_lo = -std::min(a2, b2) * (1.0 - 1e-15);
        t_hi = 0.0;
    }
    auto g = [&](double t) {
        const double u0 = a * y0 / (t + a2);
        const double u1 = b * y1 / (t + b2);
        return u0 * u0 + u1 * u1 - 1.0;
    };
    for (int it = 0; it < 200; ++it) {
        const double t = 0.5 * (t_lo + t_hi);
        if (t == t_lo || t == t_hi) break;
        (g(t) > 0.0 ? t_lo : t_hi) = t;
    }
    const double t = 0.5 * (t_lo + t_hi);
    const double x0 = a2 * y0 / (t + a2);
    const double x1 = b2 * y1 / (t + b2);
    const double d = std::hypot(y0 - x0, y1 - x1);
    return f >= 0.0 ? d : -d;
}

}  // namespace

Eigen::Vector2d ellipse_boundary_point(const Ellipse2 &e, double theta) {
    const CanonicalEllipse c = canonical(e);
    return c.center + c.axes * Eigen::Vector2d(c.a * std::cos(theta), c.b * std::sin(theta));
}

double signed_distance_to_ellipse(const Ellipse2 &e, const Eigen::Vector2d &p) {
    const CanonicalEllipse c = canonical(e);
    const Eigen::Vector2d y = c.axes.transpose() * (p - c.center);
    return canonical_distance(c.a, c.b, std::abs(y(0)), std::abs(y(1)));
}

double signed_distance_to_ellipsoid(const Ellipsoid3 &e, const Eigen::Vector3d &p) {
    const Eigen::Vector3d y = (e.orientation.transpose() * (p - e.center)).cwiseAbs();
    const Eigen::Vector3d s = e.semi_axes;
    const double f = (y.array() / s.array()).square().sum() - 1.0;
    const double s_min2 = s.minCoeff() * s.minCoeff();
    double t_lo, t_hi;
    if (f > 0.0) {
        t_lo = 0.0;
        t_hi = s.maxCoeff() * y.norm() + s.maxCoeff() * s.maxCoeff();
    } else {
        t_lo = -s_min2 * (1.0 - 1e-15);
        t_hi = 0.0;
    }
    auto g = [&](double t) {
        double sum = -1.0;
        for (int i = 0; i < 3; ++i) {
            const double u = s(i) * y(i) / (t + s(i) * s(i));
            sum += u * u;
        }
        return sum;
    };
    for (int it = 0; it < 200; ++it) {
        const double t = 0.5 * (t_lo + t_hi);
        if (t == t_lo || t == t_hi) break;
        (g(t) > 0.0 ? t_lo : t_hi) = t;
    }
    const double t = 0.5 * (t_lo + t_hi);
    Eigen::Vector3d x;
    for (int i = 0; i < 3; ++i)
        x(i) = s(i) * s(i) * y(i) / (t + s(i) * s(i));
    const double d = (y - x).norm();
    return f >= 0.0 ? d : -d;
}

bool ellipsoid_region_disjoint(const Ellipsoid3 &e, const Region &region) {
    return signed_distance_to_ellipsoid(e, region.center) > region.radius;
}

OracleVerdict oracle_classify(const Ellipse2 &a, const Ellipse2 &b, int samples) {
    OracleVerdict out;

    // Containment is overlap regardless of boundary clearance.
    if (b.contains(a.center()) || a.contains(b.center())) {
        const double ca = signed_distance_to_ellipse(b, a.center());
        const double cb = signed_distance_to_ellipse(a, b.center());
        out.verdict = SeparationVerdict::overlapping;
        out.clearance = std::min(ca, cb);
        return out;
    }

    auto directional_min = [&](const Ellipse2 &from, const Ellipse2 &to) {
        double best = std::numeric_limits<double>::infinity();
        double best_theta = 0.0;
        const double step = 2.0 * M_PI / samples;
        for (int i = 0; i < samples; ++i) {
            const double theta = i * step;
            const double d = signed_distance_to_ellipse(to, ellipse_boundary_point(from, theta));
            if (d < best) {
                best = d;
                best_theta = theta;
            }
        }
        // Golden-section refinement around the best sample.
        double lo = best_theta - step, hi = best_theta + step;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = signed_distance_to_ellipse(to, ellipse_boundary_point(from, x1));
        double f2 = signed_distance_to_ellipse(to, ellipse_boundary_point(from, x2));
        for (int it = 0; it < 80; ++it) {
            if (f1 < f2) {
                hi = x2; x2 = x1; f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = signed_distance_to_ellipse(to, ellipse_boundary_point(from, x1));
            } else {
                lo = x1; x1 = x2; f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = signed_distance_to_ellipse(to, ellipse_boundary_point(from, x2));
            }
        }
        return std::min(best, std::min(f1, f2));
    };

    const double dab = directional_min(a, b);
    const double dba = directional_min(b, a);
    out.clearance = std::min(dab, dba);
    out.verdict = out.clearance < 0.0 ? SeparationVerdict::overlapping
                                      : SeparationVerdict::disjoint;
    return out;
}

Ellipse2 random_survey_ellipse(Rng &rng, PlaneId plane) {
    const double a = rng.uniform(0.2, 3.0);
    const double b = rng.uniform(0.2, 3.0);
    const double phi = rng.uniform(0.0, M_PI);
    const Eigen::Vector2d m(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));

    Eigen::Matrix2d rot;
    rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    const Eigen::Matrix2d q =
        rot * Eigen::Vector2d(1.0 / (a * a), 1.0 / (b * b)).asDiagonal() * rot.transpose();

    Ellipse2 e;
    e.plane = plane;
    const Eigen::Vector2d qm = q * m;
    e.matrix.topLeftCorner<2, 2>() = q;
    e.matrix.topRightCorner<2, 1>() = -qm;
    e.matrix.bottomLeftCorner<1, 2>() = -qm.transpose();
    e.matrix(2, 2) = m.dot(qm) - 1.0;
    return e;
}

PairSurveyResult survey_random_pairs(int pairs, std::uint64_t seed, double band) {
    Rng rng(seed);
    PairSurveyResult res;
    res.pairs = pairs;
    res.worst_clearance = std::numeric_limits<double>::infinity();

    for (int i = 0; i < pairs; ++i) {
        const Ellipse2 a = random_survey_ellipse(rng);
        const Ellipse2 b = random_survey_ellipse(rng);

        const SeparationReport rep = ellipse_separation(a, b);
        if (rep.positive_real_roots == 0) ++res.missing_positive_root;
        if (rep.positive_real_roots > 1) ++res.extra_positive_roots;

        const OracleVerdict oracle = oracle_classify(a, b);
        if (std::abs(oracle.clearance) <= band) {
            ++res.within_band;
            ++res.agreements;
            continue;
        }
        const bool agree = rep.verdict == oracle.verdict;
        if (agree) {
            ++res.agreements;
        } else {
            ++res.disagreements;
            res.worst_clearance = std::min(res.worst_clearance, std::abs(oracle.clearance));
        }
    }
    if (res.disagreements == 0) res.worst_clearance = 0.0;
    return res;
}

}  // namespace navsim
