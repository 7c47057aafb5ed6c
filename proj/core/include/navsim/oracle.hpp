#pragma once

#include "navsim/geometry.hpp"
#include "navsim/rng.hpp"

namespace navsim {

// Sampling- and distance-based geometry checks, kept independent of the
// characteristic-polynomial path so the two can cross-validate each other.

// Point on the boundary, parameterized by angle in the principal frame.
Eigen::Vector2d ellipse_boundary_point(const Ellipse2 &e, double theta);

// Signed Euclidean distance from a point to the ellipse boundary
// (negative inside). Exact up to the bisection tolerance.
double signed_distance_to_ellipse(const Ellipse2 &e, const Eigen::Vector2d &p);

// Euclidean distance from a point to the boundary of a 3D ellipsoid
// (negative inside).
double signed_distance_to_ellipsoid(const Ellipsoid3 &e, const Eigen::Vector3d &p);

// True whenever the link ellipsoid is disjoint from the spherical region,
// decided by exact point-to-ellipsoid distance from the region center.
bool ellipsoid_region_disjoint(const Ellipsoid3 &e, const Region &region);

struct OracleVerdict {
    SeparationVerdict verdict = SeparationVerdict::overlapping;
    // Boundary-to-boundary clearance estimate; negative when penetrating,
    // set to -infinity-ish large negative for containment.
    double clearance = 0.0;
};

// Dense boundary sampling + point-in-ellipse tests + golden-section
// refinement of the boundary-to-boundary distance.
OracleVerdict oracle_classify(const Ellipse2 &a, const Ellipse2 &b, int samples = 512);

// Random ellipse from the standard survey distribution: semi-axes in
// [0.2, 3], center in [-10, 10]^2, uniform rotation.
Ellipse2 random_survey_ellipse(Rng &rng, PlaneId plane = PlaneId::xy);

struct PairSurveyResult {
    int pairs = 0;
    int agreements = 0;
    int disagreements = 0;
    int within_band = 0;            // |clearance| <= band: exempt from agreement
    int missing_positive_root = 0;  // pairs with no positive real root
    int extra_positive_roots = 0;   // pairs with more than one positive real root
    double worst_clearance = 0.0;   // smallest |clearance| among disagreements
};

// Compare ellipse_separation against the sampling oracle on random pairs.
PairSurveyResult survey_random_pairs(int pairs, std::uint64_t seed, double band = 1e-3);

}  // namespace navsim
