#include "navsim/potential.hpp"

#include "navsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace navsim {

namespace {

double det3(const Eigen::Matrix3d &m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// Quintic smoothstep: C^2, strictly increasing on (0, 1).
double sstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (6.0 * t - 15.0));
}

// Saturating margin factor. The cube root cancels the cubic ramp of the
// delta clamp, so the factor varies roughly linearly with clearance inside
// the standoff shell instead of with its ninth power.
double margin_factor(double margin, double ceiling) {
    if (margin <= 0.0) return 0.0;
    if (margin >= ceiling) return 1.0;
    return sstep(std::cbrt(margin / ceiling));
}

// Sum over planes of delta_clamp(discriminant of det(lambda A - B)).
double conic_delta_margin(const std::array<Eigen::Matrix3d, 3> &a,
                          const std::array<Eigen::Matrix3d, 3> &b) {
    double sum = 0.0;
    for (int p = 0; p < 3; ++p) {
        const Eigen::Matrix3d &ma = a[p];
        const Eigen::Matrix3d &mb = b[p];
        const double d0 = -det3(mb);
        const double d1 = det3(ma - mb);
        const double dm1 = -det3(ma + mb);
        const double d2 = det3(2.0 * ma - mb);
        const double c0 = d0;
        const double c2 = 0.5 * (d1 + dm1) - c0;
        const double u = d1 - c0 - c2;
        const double v = 0.5 * (d2 - c0 - 4.0 * c2);
        const double c3 = (v - u) / 3.0;
        const double c1 = u - c3;
        const double disc = 18.0 * c3 * c2 * c1 * c0 - 4.0 * c2 * c2 * c2 * c0 +
                            c2 * c2 * c1 * c1 - 4.0 * c3 * c1 * c1 * c1 -
                            27.0 * c3 * c3 * c0 * c0;
        sum += delta_clamp(disc);
    }
    return sum;
}

void project_conics(const Ellipsoid3 &e, std::array<Eigen::Matrix3d, 3> &out) {
    const Eigen::Matrix3d qinv = e.body_matrix_inverse();
    for (int p = 0; p < 3; ++p) {
        const auto axes = plane_axes(static_cast<PlaneId>(p));
        const double s00 = qinv(axes[0], axes[0]);
        const double s01 = qinv(axes[0], axes[1]);
        const double s11 = qinv(axes[1], axes[1]);
        const double det = s00 * s11 - s01 * s01;
        Eigen::Matrix2d qs;
        qs << s11 / det, -s01 / det, -s01 / det, s00 / det;
        const Eigen::Vector2d m(e.center(axes[0]), e.center(axes[1]));
        const Eigen::Vector2d qm = qs * m;
        Eigen::Matrix3d conic;
        conic.topLeftCorner<2, 2>() = qs;
        conic.topRightCorner<2, 1>() = -qm;
        conic.bottomLeftCorner<1, 2>() = -qm.transpose();
        conic(2, 2) = m.dot(qm) - 1.0;
        out[p] = conic;
    }
}

std::array<Eigen::Matrix3d, 3> region_conics(const Region &region) {
    std::array<Eigen::Matrix3d, 3> out;
    for (int p = 0; p < 3; ++p)
        out[p] = project_region(region, static_cast<PlaneId>(p)).matrix;
    return out;
}

std::uint64_t mix_hash(std::uint64_t h, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

std::uint64_t model_hash(const AgentModel &m) {
    std::uint64_t h = m.variant == AgentVariant::base_link1 ? 1 : 2;
    for (double v : m.link_lengths) h = mix_hash(h, v);
    for (double v : m.link_com_offsets) h = mix_hash(h, v);
    h = mix_hash(h, m.base_semi_axes.x());
    h = mix_hash(h, m.base_semi_axes.y());
    h = mix_hash(h, m.base_semi_axes.z());
    for (const auto &s : m.link_semi_axes) {
        h = mix_hash(h, s.x());
        h = mix_hash(h, s.y());
        h = mix_hash(h, s.z());
    }
    h = mix_hash(h, m.d_con);
    return h;
}

Eigen::VectorXd random_config(const AgentModel &model, Rng &rng, double bx, double by) {
    Eigen::VectorXd q(model.dof());
    q(0) = bx;
    q(1) = by;
    q(2) = rng.uniform(-M_PI, M_PI);
    if (model.dof() == 4) q(3) = rng.uniform(-M_PI, M_PI);
    return q;
}

}  // namespace

Eigen::VectorXd reference_posture(const AgentModel &model) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(model.dof());
    if (model.variant == AgentVariant::base_link2) q(3) = M_PI / 2.0;
    return q;
}

PotentialSetup prepare_potential(const Scenario &scenario) {
    const int n = static_cast<int>(scenario.agents.size());
    const int samples = std::max(1, scenario.potential.ceiling_samples);

    PotentialSetup setup;
    setup.body_radii.resize(n);
    setup.sing_ref.resize(n);
    for (int i = 0; i < n; ++i) {
        setup.body_radii[i] = body_radius(scenario.agents[i]);
        setup.sing_ref[i] =
            singularity_measure(scenario.agents[i], reference_posture(scenario.agents[i]));
    }

    // Cross-pair ceilings. A factor must be saturated before the other agent
    // leaves the sensing range (continuity of the range cutoff), so the
    // ceiling has to sit below the margin floor at the sensing boundary. The
    // discriminant margins grow by tens of decades between contact and that
    // boundary, which would leave the clamp with no resolution near contact;
    // the ceiling is therefore pinned on a near-contact standoff ring and
    // capped by the sensing-boundary floor.
    setup.ceilings.cross.assign(n, std::vector<Eigen::MatrixXd>(n));
    for (int i = 0; i < n; ++i) {
        const AgentModel &mi = scenario.agents[i];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const AgentModel &mj = scenario.agents[j];
            // Identical model pairs draw identical samples, which keeps the
            // composition symmetric for symmetric fleets.
            Rng rng(scenario.sim.seed ^ (model_hash(mi) * 0x9E3779B97F4A7C15ULL + model_hash(mj)));
            Eigen::MatrixXd floor_ij = Eigen::MatrixXd::Constant(
                mi.links(), mj.links(), std::numeric_limits<double>::infinity());
            for (int s = 0; s < samples; ++s) {
                const Eigen::VectorXd qi = random_config(mi, rng, 0.0, 0.0);
                const double psi = rng.uniform(0.0, 2.0 * M_PI);
                const Eigen::Vector2d dir(std::cos(psi), std::sin(psi));
                const Eigen::VectorXd qj_shape = random_config(mj, rng, 0.0, 0.0);
                const auto li = link_ellipsoids(mi, qi);
                const auto lj_shape = link_ellipsoids(mj, qj_shape);
                for (int m = 0; m < mi.links(); ++m)
                    for (int l = 0; l < mj.links(); ++l) {
                        // Place link l's center on the standoff ring around
                        // link m's center.
                        const double ring = li[m].semi_axes.maxCoeff() +
                                            lj_shape[l].semi_axes.maxCoeff() +
                                            scenario.potential.pair_standoff;
                        Eigen::VectorXd qj = qj_shape;
                        const Eigen::Vector2d target =
                            li[m].center.head<2>() + ring * dir;
                        const Eigen::Vector2d offset =
                            lj_shape[l].center.head<2>() - qj_shape.head<2>();
                        qj.head<2>() = target - offset;
                        const auto lj = link_ellipsoids(mj, qj);
                        floor_ij(m, l) = std::min(floor_ij(m, l), pair_margin(li[m], lj[l]));
                    }
            }
            // Sensing-boundary floor (halved), the admissible upper bound.
            Eigen::MatrixXd sensing_floor = Eigen::MatrixXd::Constant(
                mi.links(), mj.links(), std::numeric_limits<double>::infinity());
            for (int s = 0; s < samples; ++s) {
                const Eigen::VectorXd qi = random_config(mi, rng, 0.0, 0.0);
                const double psi = rng.uniform(0.0, 2.0 * M_PI);
                const Eigen::VectorXd qj = random_config(
                    mj, rng, mi.d_con * std::cos(psi), mi.d_con * std::sin(psi));
                const auto li = link_ellipsoids(mi, qi);
                const auto lj = link_ellipsoids(mj, qj);
                for (int m = 0; m < mi.links(); ++m)
                    for (int l = 0; l < mj.links(); ++l)
                        sensing_floor(m, l) =
                            std::min(sensing_floor(m, l), pair_margin(li[m], lj[l]));
            }
            const Eigen::MatrixXd ceiling =
                0.5 * floor_ij.cwiseMin(sensing_floor).eval();
            if (ceiling.minCoeff() <= 0.0)
                throw std::runtime_error(
                    "margin floor is not positive between agents " + std::to_string(mi.id) +
                    " and " + std::to_string(mj.id));
            setup.ceilings.cross[i][j] = ceiling;
        }
    }

    // Own-pair ceilings: half the margin at the reference posture.
    setup.ceilings.own.resize(n);
    for (int i = 0; i < n; ++i) {
        const AgentModel &mi = scenario.agents[i];
        const auto links = link_ellipsoids(mi, reference_posture(mi));
        for (int m = 0; m < mi.links(); ++m)
            for (int l = m + 1; l < mi.links(); ++l) {
                const double margin = pair_margin(links[m], links[l]);
                if (margin <= 0.0)
                    throw std::runtime_error("agent " + std::to_string(mi.id) +
                                             ": own links touch at the reference posture");
                setup.ceilings.own[i].push_back(0.5 * margin);
            }
    }

    // Region ceilings on a standoff ring beyond the region surface.
    setup.ceilings.region.resize(n);
    for (int i = 0; i < n; ++i) {
        const AgentModel &mi = scenario.agents[i];
        Rng rng(scenario.sim.seed ^ model_hash(mi) ^ 0xC2B2AE3D27D4EB4FULL);
        const int nk = static_cast<int>(scenario.regions.size());
        Eigen::MatrixXd floor_ik = Eigen::MatrixXd::Constant(
            mi.links(), nk, std::numeric_limits<double>::infinity());
        for (int k = 0; k < nk; ++k) {
            const Region &region = scenario.regions[k];
            for (int s = 0; s < samples; ++s) {
                const Eigen::VectorXd q_shape = random_config(mi, rng, 0.0, 0.0);
                const double psi = rng.uniform(0.0, 2.0 * M_PI);
                const Eigen::Vector2d dir(std::cos(psi), std::sin(psi));
                const auto links_shape = link_ellipsoids(mi, q_shape);
                for (int m = 0; m < mi.links(); ++m) {
                    const double ring = region.radius + links_shape[m].semi_axes.maxCoeff() +
                                        scenario.potential.region_standoff;
                    Eigen::VectorXd qi = q_shape;
                    const Eigen::Vector2d target = region.center.head<2>() + ring * dir;
                    const Eigen::Vector2d offset =
                        links_shape[m].center.head<2>() - q_shape.head<2>();
                    qi.head<2>() = target - offset;
                    const auto links = link_ellipsoids(mi, qi);
                    floor_ik(m, k) =
                        std::min(floor_ik(m, k), region_margin(links[m], region));
                }
            }
            if (floor_ik.col(k).minCoeff() <= 0.0)
                throw std::runtime_error("region margin floor is not positive for agent " +
                                         std::to_string(mi.id) + " near region " +
                                         std::to_string(region.id));
        }
        setup.ceilings.region[i] = 0.5 * floor_ik;
    }

    return setup;
}

double gamma(const Eigen::VectorXd &q, const Eigen::VectorXd &q_goal) {
    if (q.size() != q_goal.size())
        throw std::invalid_argument("gamma: dimension mismatch");
    return (q - q_goal).squaredNorm();
}

double smooth_clamp(double x, double ceiling) {
    if (ceiling <= 0.0) throw std::invalid_argument("smooth_clamp ceiling must be positive");
    return ceiling * sstep(x / ceiling);
}

double beta_pair(const Ellipsoid3 &ei, const Ellipsoid3 &ej, double ceiling) {
    return smooth_clamp(pair_margin(ei, ej), ceiling);
}

double beta_conn(const Eigen::Vector3d &p_bi, const Eigen::Vector3d &p_bj, double d_con) {
    const double eta = d_con * d_con - (p_bi - p_bj).squaredNorm();
    if (eta < 0.0) return 0.0;
    return smooth_clamp(eta, d_con * d_con);
}

double beta_world(const AgentModel &model, const Eigen::VectorXd &q, double r0) {
    const double reach = r0 - body_radius(model);
    return reach * reach - base_position(model, q).squaredNorm();
}

// ---- PhiEvaluator -------------------------------------------------------

PhiEvaluator::PhiEvaluator(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q)
    : ctx_(&ctx) {
    const int n = ctx.n_agents();
    geo_.resize(n);
    for (int i = 0; i < n; ++i) build_agent(i, q[i], geo_[i]);

    cross_.assign(n, std::vector<Eigen::MatrixXd>(n));
    neighbors_.assign(n, {});
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double dist = (geo_[i].base - geo_[j].base).norm();
            const double reach =
                std::max(ctx.scenario->agents[i].d_con, ctx.scenario->agents[j].d_con);
            if (dist <= reach) {
                cross_margins(geo_[i], geo_[j], cross_[i][j]);
                cross_margins(geo_[j], geo_[i], cross_[j][i]);
            }
            if (dist <= ctx.scenario->agents[i].d_con) neighbors_[i].push_back(j);
            if (dist <= ctx.scenario->agents[j].d_con) neighbors_[j].push_back(i);
        }
    }

    gamma_.resize(n);
    beta_.resize(n);
    min_factor_.resize(n);
    std::vector<const AgentGeometry *> geos(n);
    for (int i = 0; i < n; ++i) geos[i] = &geo_[i];
    std::vector<const Eigen::MatrixXd *> cross(n);
    for (int i = 0; i < n; ++i) {
        gamma_[i] = (q[i] - ctx.goals.q_goal[i]).squaredNorm();
        for (int j = 0; j < n; ++j)
            cross[j] = cross_[i][j].size() > 0 ? &cross_[i][j] : nullptr;
        beta_[i] = assemble_beta(i, geos, cross, &min_factor_[i]);
    }
}

void PhiEvaluator::build_agent(int i, const Eigen::VectorXd &qi, AgentGeometry &geo) const {
    const Scenario &s = *ctx_->scenario;
    const AgentModel &model = s.agents[i];

    geo.base = base_position(model, qi);
    geo.links = link_ellipsoids(model, qi);
    geo.conics.resize(geo.links.size());
    for (std::size_t m = 0; m < geo.links.size(); ++m)
        project_conics(geo.links[m], geo.conics[m]);

    const double sing = singularity_measure(model, qi);
    const double rel = sing / ctx_->setup->sing_ref[i];
    geo.sing_norm = rel * rel;

    const double reach = s.r0 - ctx_->setup->body_radii[i];
    geo.world_norm = 1.0 - geo.base.squaredNorm() / (reach * reach);

    geo.own_margins.clear();
    for (int m = 0; m < model.links(); ++m)
        for (int l = m + 1; l < model.links(); ++l)
            geo.own_margins.push_back(conic_delta_margin(geo.conics[m], geo.conics[l]));

    const int nk = static_cast<int>(s.regions.size());
    geo.region_margins.assign(model.links() * nk, std::numeric_limits<double>::quiet_NaN());
    for (int k = 0; k < nk; ++k) {
        if (k == ctx_->goals.start_region[i] || k == ctx_->goals.goal_region[i]) continue;
        const auto rc = region_conics(s.regions[k]);
        for (int m = 0; m < model.links(); ++m)
            geo.region_margins[m * nk + k] = conic_delta_margin(geo.conics[m], rc);
    }
}

void PhiEvaluator::cross_margins(const AgentGeometry &gi, const AgentGeometry &gj,
                                 Eigen::MatrixXd &out) const {
    out.resize(gi.links.size(), gj.links.size());
    for (std::size_t m = 0; m < gi.links.size(); ++m)
        for (std::size_t l = 0; l < gj.links.size(); ++l)
            out(m, l) = conic_delta_margin(gi.conics[m], gj.conics[l]);
}

double PhiEvaluator::assemble_beta(int i, const std::vector<const AgentGeometry *> &geos,
                                   const std::vector<const Eigen::MatrixXd *> &cross,
                                   MinFactor *track) const {
    const Scenario &s = *ctx_->scenario;
    const AgentModel &mi = s.agents[i];
    const int n = ctx_->n_agents();

    auto note = [track](double value, MinFactor::Kind kind, int a, int b, int c) {
        if (track != nullptr && (track->kind == MinFactor::Kind::none || value < track->value))
            *track = MinFactor{kind, a, b, c, value};
    };

    double prod = geos[i]->sing_norm * geos[i]->world_norm;
    note(geos[i]->sing_norm, MinFactor::Kind::singularity, -1, -1, -1);
    note(geos[i]->world_norm, MinFactor::Kind::workspace, -1, -1, -1);

    const double dcon2 = mi.d_con * mi.d_con;
    for (int jn : s.required_neighbors[i]) {
        const double eta = dcon2 - (geos[i]->base - geos[jn]->base).squaredNorm();
        const double factor = margin_factor(eta, dcon2);
        note(factor, MinFactor::Kind::connectivity, jn, -1, -1);
        prod *= factor;
    }

    for (int j = 0; j < n; ++j) {
        if (j == i || cross[j] == nullptr) continue;
        if ((geos[i]->base - geos[j]->base).norm() > mi.d_con) continue;
        const Eigen::MatrixXd &margins = *cross[j];
        const Eigen::MatrixXd &ceilings = ctx_->setup->ceilings.cross[i][j];
        for (int m = 0; m < margins.rows(); ++m)
            for (int l = 0; l < margins.cols(); ++l) {
                const double factor = margin_factor(margins(m, l), ceilings(m, l));
                note(factor, MinFactor::Kind::cross_pair, j, m, l);
                prod *= factor;
            }
    }

    for (std::size_t p = 0; p < geos[i]->own_margins.size(); ++p) {
        const double factor =
            margin_factor(geos[i]->own_margins[p], ctx_->setup->ceilings.own[i][p]);
        note(factor, MinFactor::Kind::own_pair, static_cast<int>(p), -1, -1);
        prod *= factor;
    }

    const int nk = static_cast<int>(s.regions.size());
    for (int k = 0; k < nk; ++k) {
        if (k == ctx_->goals.start_region[i] || k == ctx_->goals.goal_region[i]) continue;
        for (int m = 0; m < mi.links(); ++m) {
            const double factor = margin_factor(geos[i]->region_margins[m * nk + k],
                                                ctx_->setup->ceilings.region[i](m, k));
            note(factor, MinFactor::Kind::region, k, m, -1);
            prod *= factor;
        }
    }

    return s.potential.beta_scale * prod;
}

std::string MinFactor::describe(const Scenario &scenario) const {
    switch (kind) {
    case Kind::singularity: return "singularity";
    case Kind::workspace: return "workspace";
    case Kind::connectivity:
        return "connectivity(" + std::to_string(scenario.agents[a].id) + ")";
    case Kind::cross_pair:
        return "pair(agent " + std::to_string(scenario.agents[a].id) + ", links " +
               std::to_string(b) + "," + std::to_string(c) + ")";
    case Kind::own_pair: return "own_pair(" + std::to_string(a) + ")";
    case Kind::region:
        return "region(" + std::to_string(scenario.regions[a].id) + ", link " +
               std::to_string(b) + ")";
    default: return "none";
    }
}

double phi_lift(double gamma, double beta, double kappa) {
    if (!std::isfinite(beta) || beta <= kBetaFloor)
        throw std::domain_error("potential undefined (collision/connectivity/singularity set)");
    const double w = std::pow(gamma, kappa) + beta;
    const double phi_hat = gamma / std::pow(w, 1.0 / kappa);
    return 1.0 / (1.0 - phi_hat);
}

double PhiEvaluator::phi_from(double g, double beta, double kappa) const {
    return phi_lift(g, beta, kappa);
}

double PhiEvaluator::phi(int i) const {
    return phi_from(gamma_[i], beta_[i], ctx_->scenario->agents[i].gains.kappa);
}

void PhiEvaluator::phi_all_with(int b, const Eigen::VectorXd &qb, Eigen::VectorXd &out) const {
    const Scenario &s = *ctx_->scenario;
    const int n = ctx_->n_agents();

    AgentGeometry gb;
    build_agent(b, qb, gb);

    // Fresh cross margins for pairs that involve the perturbed agent.
    std::vector<Eigen::MatrixXd> fresh_bj(n), fresh_jb(n);
    std::vector<bool> have(n, false);
    for (int j = 0; j < n; ++j) {
        if (j == b) continue;
        const double dist = (gb.base - geo_[j].base).norm();
        const double reach = std::max(s.agents[b].d_con, s.agents[j].d_con);
        if (dist <= reach) {
            cross_margins(gb, geo_[j], fresh_bj[j]);
            cross_margins(geo_[j], gb, fresh_jb[j]);
            have[j] = true;
        }
    }

    std::vector<const AgentGeometry *> geos(n);
    for (int i = 0; i < n; ++i) geos[i] = i == b ? &gb : &geo_[i];

    out.resize(n);
    std::vector<const Eigen::MatrixXd *> cross(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) {
                cross[j] = nullptr;
            } else if (i == b) {
                cross[j] = have[j] ? &fresh_bj[j] : nullptr;
            } else if (j == b) {
                cross[j] = have[i] ? &fresh_jb[i] : nullptr;
            } else {
                cross[j] = cross_[i][j].size() > 0 ? &cross_[i][j] : nullptr;
            }
        }
        const double g = i == b ? (qb - ctx_->goals.q_goal[i]).squaredNorm() : gamma_[i];
        out(i) = phi_from(g, assemble_beta(i, geos, cross), s.agents[i].gains.kappa);
    }
}

// ---- module entry points ------------------------------------------------

double beta_total(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q, int i) {
    return PhiEvaluator(ctx, q).beta(i);
}

double phi(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q, int i) {
    return PhiEvaluator(ctx, q).phi(i);
}

Eigen::VectorXd grad_phi(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q,
                         int i, int j) {
    const PhiEvaluator ev(ctx, q);
    const double h = ctx.scenario->potential.fd_step;
    const int nj = static_cast<int>(q[j].size());
    Eigen::VectorXd grad(nj), phip, phim;
    Eigen::VectorXd qj = q[j];
    for (int c = 0; c < nj; ++c) {
        const double saved = qj(c);
        qj(c) = saved + h;
        ev.phi_all_with(j, qj, phip);
        qj(c) = saved - h;
        ev.phi_all_with(j, qj, phim);
        qj(c) = saved;
        grad(c) = (phip(i) - phim(i)) / (2.0 * h);
    }
    return grad;
}

std::vector<Eigen::VectorXd> torque_gradients(const PotentialContext &ctx,
                                              const std::vector<Eigen::VectorXd> &q) {
    const PhiEvaluator ev(ctx, q);
    const double h = ctx.scenario->potential.fd_step;
    const int n = ctx.n_agents();

    std::vector<Eigen::VectorXd> grads(n);
    Eigen::VectorXd phip, phim;
    for (int b = 0; b < n; ++b) {
        const int nb = static_cast<int>(q[b].size());
        grads[b].resize(nb);
        Eigen::VectorXd qb = q[b];
        for (int c = 0; c < nb; ++c) {
            const double saved = qb(c);
            qb(c) = saved + h;
            ev.phi_all_with(b, qb, phip);
            qb(c) = saved - h;
            ev.phi_all_with(b, qb, phim);
            qb(c) = saved;
            double sum = phip(b) - phim(b);
            for (int j : ev.neighbors(b)) sum += phip(j) - phim(j);
            grads[b](c) = sum / (2.0 * h);
        }
    }
    return grads;
}

BetaBreakdown beta_breakdown(const PotentialContext &ctx, const std::vector<Eigen::VectorXd> &q,
                             int i) {
    const Scenario &s = *ctx.scenario;
    const AgentModel &mi = s.agents[i];
    const PhiEvaluator ev(ctx, q);

    BetaBreakdown out;
    out.total = ev.beta(i);

    auto add = [&out](const std::string &name, double value) {
        out.factors.push_back({name, value});
    };

    add("singularity", [&] {
        const double sing = singularity_measure(mi, q[i]);
        const double rel = sing / ctx.setup->sing_ref[i];
        return rel * rel;
    }());
    {
        const double reach = s.r0 - ctx.setup->body_radii[i];
        add("workspace", 1.0 - base_position(mi, q[i]).squaredNorm() / (reach * reach));
    }
    const Eigen::Vector3d pi = base_position(mi, q[i]);
    for (int jn : s.required_neighbors[i]) {
        const double eta =
            mi.d_con * mi.d_con - (pi - base_position(s.agents[jn], q[jn])).squaredNorm();
        add("connectivity(" + std::to_string(s.agents[jn].id) + ")",
            margin_factor(eta, mi.d_con * mi.d_con));
    }

    const auto links_i = link_ellipsoids(mi, q[i]);
    for (int j = 0; j < ctx.n_agents(); ++j) {
        if (j == i) continue;
        if ((pi - base_position(s.agents[j], q[j])).norm() > mi.d_con) continue;
        const auto links_j = link_ellipsoids(s.agents[j], q[j]);
        for (std::size_t m = 0; m < links_i.size(); ++m)
            for (std::size_t l = 0; l < links_j.size(); ++l)
                add("pair(" + std::to_string(s.agents[j].id) + "," + std::to_string(m) + "," +
                        std::to_string(l) + ")",
                    margin_factor(pair_margin(links_i[m], links_j[l]),
                                  ctx.setup->ceilings.cross[i][j](m, l)));
    }
    {
        int p = 0;
        for (int m = 0; m < mi.links(); ++m)
            for (int l = m + 1; l < mi.links(); ++l, ++p)
                add("own(" + std::to_string(m) + "," + std::to_string(l) + ")",
                    margin_factor(pair_margin(links_i[m], links_i[l]),
                                  ctx.setup->ceilings.own[i][p]));
    }
    for (std::size_t k = 0; k < s.regions.size(); ++k) {
        if (static_cast<int>(k) == ctx.goals.start_region[i] ||
            static_cast<int>(k) == ctx.goals.goal_region[i])
            continue;
        for (int m = 0; m < mi.links(); ++m)
            add("region(" + std::to_string(s.regions[k].id) + "," + std::to_string(m) + ")",
                margin_factor(region_margin(links_i[m], s.regions[k]),
                              ctx.setup->ceilings.region[i](m, static_cast<int>(k))));
    }
    return out;
}

const BetaFactor *BetaBreakdown::min_factor() const {
    const BetaFactor *best = nullptr;
    for (const auto &f : factors)
        if (best == nullptr || f.value < best->value) best = &f;
    return best;
}

// ---- goal selection -------------------------------------------------------

GoalSpec select_goal_configs(const Scenario &scenario, const PotentialSetup &setup,
                             const std::vector<int> &goal_regions,
                             const std::vector<Eigen::VectorXd> &q_start,
                             const std::vector<int> &start_regions) {
    const int n = static_cast<int>(scenario.agents.size());
    const double clearance = scenario.potential.goal_clearance;
    const double conn_slack = 1.0;
    const double sep_slack = 0.3;

    std::vector<Eigen::Vector2d> base(n), center(n);
    std::vector<double> rho(n);
    for (int i = 0; i < n; ++i) {
        const Region &region = scenario.regions[goal_regions[i]];
        center[i] = region.center.head<2>();
        rho[i] = region.radius - setup.body_radii[i] - clearance;
        if (rho[i] <= 0.0)
            throw std::runtime_error("goal region " + std::to_string(region.id) +
                                     " is too small for agent " +
                                     std::to_string(scenario.agents[i].id));
        base[i] = center[i];
    }

    // Ideal placements: region centers, co-occupants spread on a small
    // circle, and lane offsets for head-on swaps (agents whose start-to-goal
    // segments run anti-parallel and nearly collinear get goals on opposite
    // sides, so neither drives straight through the other).
    std::vector<Eigen::Vector2d> ideal = base;
    for (int i = 0; i < n; ++i) {
        std::vector<int> sharers;
        for (int j = 0; j < n; ++j)
            if (goal_regions[j] == goal_regions[i]) sharers.push_back(j);
        if (sharers.size() < 2) continue;
        const int rank =
            static_cast<int>(std::find(sharers.begin(), sharers.end(), i) - sharers.begin());
        const double angle = 2.0 * M_PI * rank / static_cast<double>(sharers.size());
        ideal[i] = center[i] + 0.5 * rho[i] * Eigen::Vector2d(std::cos(angle), std::sin(angle));
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const Eigen::Vector2d di = ideal[i] - q_start[i].head<2>();
            const Eigen::Vector2d dj = ideal[j] - q_start[j].head<2>();
            if (di.norm() < 1.0 || dj.norm() < 1.0) continue;
            const Eigen::Vector2d ui = di.normalized(), uj = dj.normalized();
            if (ui.dot(uj) > -0.7) continue;
            const Eigen::Vector2d mid = q_start[j].head<2>() - q_start[i].head<2>();
            const double lateral = std::abs(ui.x() * mid.y() - ui.y() * mid.x());
            if (lateral > 2.0) continue;
            const Eigen::Vector2d perp(-ui.y(), ui.x());

            // Pick the side assignment that respects the connectivity
            // budgets of everyone involved.
            auto score = [&](double sign) {
                std::vector<Eigen::Vector2d> probe = ideal;
                probe[i] += sign * 1.2 * perp;
                probe[j] -= sign * 1.2 * perp;
                for (int a = 0; a < n; ++a) {
                    const Eigen::Vector2d d = probe[a] - center[a];
                    if (d.norm() > rho[a]) probe[a] = center[a] + d * (rho[a] / d.norm());
                }
                double excess = 0.0;
                for (int a = 0; a < n; ++a)
                    for (int bn : scenario.required_neighbors[a]) {
                        const double over = (probe[a] - probe[bn]).norm() -
                                            (scenario.agents[a].d_con - conn_slack);
                        if (over > 0.0) excess += over * over;
                    }
                return excess;
            };
            const double sign = score(1.0) <= score(-1.0) ? 1.0 : -1.0;
            ideal[i] += sign * 1.2 * perp;
            ideal[j] -= sign * 1.2 * perp;
        }
    base = ideal;

    auto min_sep = [&](int i, int j) {
        return setup.body_radii[i] + setup.body_radii[j] + sep_slack;
    };

    for (int it = 0; it < 300; ++it) {
        // Relax toward the ideal placements so constraint projections do not
        // wash out the lane and spread structure.
        for (int i = 0; i < n; ++i) base[i] += 0.2 * (ideal[i] - base[i]);
        // Keep co-located goals apart.
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double need = min_sep(i, j);
                Eigen::Vector2d d = base[j] - base[i];
                double dist = d.norm();
                if (dist < 1e-9) {
                    d = Eigen::Vector2d(1.0, 0.0);
                    dist = 1e-9;
                }
                if (dist < need) {
                    const Eigen::Vector2d push = 0.5 * (need - dist) * d / dist;
                    base[i] -= push;
                    base[j] += push;
                }
            }
        // Pull required neighbors inside sensing range.
        for (int i = 0; i < n; ++i)
            for (int jn : scenario.required_neighbors[i]) {
                const double dmax = scenario.agents[i].d_con - conn_slack;
                const Eigen::Vector2d d = base[jn] - base[i];
                const double dist = d.norm();
                if (dist > dmax) {
                    const Eigen::Vector2d pull = 0.6 * (dist - dmax) * d / dist;
                    base[i] += pull;
                    base[jn] -= pull;
                }
            }
        // Project into the goal-region interiors.
        for (int i = 0; i < n; ++i) {
            const Eigen::Vector2d d = base[i] - center[i];
            const double dist = d.norm();
            if (dist > rho[i]) base[i] = center[i] + d * (rho[i] / dist);
        }
    }

    GoalSpec spec;
    spec.goal_region = goal_regions;
    spec.start_region = start_regions;
    spec.q_goal.resize(n);

    for (int i = 0; i < n; ++i) {
        const AgentModel &model = scenario.agents[i];
        // Link heading: away from the nearest goal co-occupant, else as at
        // the round start.
        double heading = q_start[i].size() > 2 ? q_start[i](2) : 0.0;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (j == i || goal_regions[j] != goal_regions[i]) continue;
            const double dist = (base[j] - base[i]).norm();
            if (dist < best) {
                best = dist;
                const Eigen::Vector2d away = base[i] - base[j];
                heading = std::atan2(away.y(), away.x());
            }
        }
        Eigen::VectorXd qg(model.dof());
        qg(0) = base[i].x();
        qg(1) = base[i].y();
        qg(2) = heading;
        if (model.dof() == 4) qg(3) = M_PI / 2.0;
        spec.q_goal[i] = qg;
    }

    // GoalSpec invariants.
    std::ostringstream err;
    for (int i = 0; i < n; ++i) {
        if (!in_region(scenario.agents[i], spec.q_goal[i], scenario.regions[goal_regions[i]]))
            err << "goal of agent " << scenario.agents[i].id << " is not inside region "
                << scenario.regions[goal_regions[i]].id << "; ";
        for (int jn : scenario.required_neighbors[i]) {
            const double dist = (base[i] - base[jn]).norm();
            if (dist > scenario.agents[i].d_con - 0.25 * conn_slack)
                err << "goal separation " << dist << " of agents " << scenario.agents[i].id
                    << "," << scenario.agents[jn].id << " exceeds d_con - margin; ";
        }
    }
    std::vector<std::vector<Ellipsoid3>> bodies(n);
    for (int i = 0; i < n; ++i) bodies[i] = link_ellipsoids(scenario.agents[i], spec.q_goal[i]);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (const auto &em : bodies[i])
                for (const auto &el : bodies[j])
                    if (pair_margin(em, el) <= 0.0)
                        err << "goal bodies of agents " << scenario.agents[i].id << ","
                            << scenario.agents[j].id << " are in contact; ";
    const std::string msg = err.str();
    if (!msg.empty()) throw std::runtime_error("goal selection failed: " + msg);
    return spec;
}

}  // namespace navsim
