#include "navsim/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace navsim {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string offset_context(const std::string &text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    std::ostringstream os;
    os << "line " << line << ", column " << col;
    return os.str();
}

Eigen::VectorXd to_vector(const ordered_json &j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

Eigen::Vector3d to_vector3(const ordered_json &j) {
    if (j.size() != 3) throw std::runtime_error("expected a 3-vector");
    return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

ordered_json from_vector(const Eigen::VectorXd &v) {
    ordered_json j = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

AgentVariant parse_variant(const std::string &name) {
    if (name == "base_link1") return AgentVariant::base_link1;
    if (name == "base_link2") return AgentVariant::base_link2;
    throw std::runtime_error("unknown agent variant '" + name + "'");
}

const char *variant_name(AgentVariant v) {
    return v == AgentVariant::base_link1 ? "base_link1" : "base_link2";
}

}  // namespace

int Scenario::agent_index(int agent_id) const {
    for (std::size_t i = 0; i < agents.size(); ++i)
        if (agents[i].id == agent_id) return static_cast<int>(i);
    throw std::out_of_range("unknown agent id " + std::to_string(agent_id));
}

int Scenario::region_index(int region_id) const {
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (regions[i].id == region_id) return static_cast<int>(i);
    throw std::out_of_range("unknown region id " + std::to_string(region_id));
}

double Scenario::max_body_radius() const {
    double r = 0.0;
    for (const auto &a : agents) r = std::max(r, body_radius(a));
    return r;
}

int Scenario::containing_region(int agent_idx, const Eigen::VectorXd &q) const {
    for (std::size_t k = 0; k < regions.size(); ++k)
        if (in_region(agents[agent_idx], q, regions[k])) return static_cast<int>(k);
    return -1;
}

Scenario parse_scenario(const std::string &text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw std::runtime_error("scenario parse error at " + offset_context(text, e.byte) +
                                 ": " + e.what());
    }

    Scenario s;
    try {
        s.r0 = j.at("workspace").at("r0").get<double>();

        for (const auto &rj : j.at("regions")) {
            Region r;
            r.id = rj.at("id").get<int>();
            r.center = to_vector3(rj.at("center"));
            r.radius = rj.at("radius").get<double>();
            if (rj.contains("props"))
                for (const auto &p : rj.at("props")) r.props.push_back(p.get<std::string>());
            s.regions.push_back(r);
        }

        for (const auto &aj : j.at("agents")) {
            AgentModel m;
            m.id = aj.at("id").get<int>();
            m.variant = parse_variant(aj.at("variant").get<std::string>());
            m.base_mass = aj.at("base_mass").get<double>();
            for (const auto &x : aj.at("link_masses")) m.link_masses.push_back(x.get<double>());
            for (const auto &x : aj.at("link_lengths")) m.link_lengths.push_back(x.get<double>());
            for (const auto &x : aj.at("link_com_offsets"))
                m.link_com_offsets.push_back(x.get<double>());
            for (const auto &x : aj.at("link_inertias")) m.link_inertias.push_back(x.get<double>());
            m.base_semi_axes = to_vector3(aj.at("base_semi_axes"));
            for (const auto &x : aj.at("link_semi_axes")) m.link_semi_axes.push_back(to_vector3(x));
            m.d_con = aj.at("d_con").get<double>();
            m.c_true = aj.at("c_true").get<double>();
            m.gains.lambda = aj.at("gains").at("lambda").get<double>();
            m.gains.sigma = aj.at("gains").at("sigma").get<double>();
            m.gains.kappa = aj.at("gains").at("kappa").get<double>();
            s.agents.push_back(m);

            s.q0.push_back(to_vector(aj.at("q0")));
            s.qd0.push_back(aj.contains("qd0") ? to_vector(aj.at("qd0"))
                                               : Eigen::VectorXd::Zero(m.dof()).eval());
            s.c_hat0.push_back(aj.contains("c_hat0") ? aj.at("c_hat0").get<double>() : 0.0);
        }

        s.required_neighbors.assign(s.agents.size(), {});
        for (const auto &[key, ids] : j.at("required_neighbors").items()) {
            const int i = s.agent_index(std::stoi(key));
            for (const auto &id : ids)
                s.required_neighbors[i].push_back(s.agent_index(id.get<int>()));
        }

        s.paths.assign(s.agents.size(), {});
        for (const auto &[key, seq] : j.at("path").items()) {
            const int i = s.agent_index(std::stoi(key));
            for (const auto &id : seq) s.paths[i].push_back(s.region_index(id.get<int>()));
        }

        if (j.contains("sim")) {
            const auto &sj = j.at("sim");
            if (sj.contains("dt")) s.sim.dt = sj.at("dt").get<double>();
            if (sj.contains("t_max")) s.sim.t_max = sj.at("t_max").get<double>();
            if (sj.contains("seed")) s.sim.seed = sj.at("seed").get<std::uint64_t>();
            if (sj.contains("log_every")) s.sim.log_every = sj.at("log_every").get<int>();
        }
        if (j.contains("potential")) {
            const auto &pj = j.at("potential");
            if (pj.contains("beta_scale"))
                s.potential.beta_scale = pj.at("beta_scale").get<double>();
            if (pj.contains("fd_step")) s.potential.fd_step = pj.at("fd_step").get<double>();
            if (pj.contains("goal_clearance"))
                s.potential.goal_clearance = pj.at("goal_clearance").get<double>();
            if (pj.contains("pair_standoff"))
                s.potential.pair_standoff = pj.at("pair_standoff").get<double>();
            if (pj.contains("region_standoff"))
                s.potential.region_standoff = pj.at("region_standoff").get<double>();
            if (pj.contains("ceiling_samples"))
                s.potential.ceiling_samples = pj.at("ceiling_samples").get<int>();
        }
    } catch (const nlohmann::json::exception &e) {
        throw std::runtime_error(std::string("scenario schema error: ") + e.what());
    }

    for (std::size_t i = 0; i < s.agents.size(); ++i)
        if (s.q0[i].size() != s.agents[i].dof() || s.qd0[i].size() != s.agents[i].dof())
            throw std::runtime_error("q0/qd0 dimension mismatch for agent " +
                                     std::to_string(s.agents[i].id));
    return s;
}

Scenario load_scenario(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario &s) {
    ordered_json j;
    j["workspace"]["r0"] = s.r0;

    j["regions"] = ordered_json::array();
    for (const auto &r : s.regions) {
        ordered_json rj;
        rj["id"] = r.id;
        rj["center"] = {r.center.x(), r.center.y(), r.center.z()};
        rj["radius"] = r.radius;
        rj["props"] = r.props;
        j["regions"].push_back(rj);
    }

    j["agents"] = ordered_json::array();
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        const auto &m = s.agents[i];
        ordered_json aj;
        aj["id"] = m.id;
        aj["variant"] = variant_name(m.variant);
        aj["base_mass"] = m.base_mass;
        aj["link_masses"] = m.link_masses;
        aj["link_lengths"] = m.link_lengths;
        aj["link_com_offsets"] = m.link_com_offsets;
        aj["link_inertias"] = m.link_inertias;
        aj["base_semi_axes"] = {m.base_semi_axes.x(), m.base_semi_axes.y(), m.base_semi_axes.z()};
        aj["link_semi_axes"] = ordered_json::array();
        for (const auto &sa : m.link_semi_axes)
            aj["link_semi_axes"].push_back({sa.x(), sa.y(), sa.z()});
        aj["d_con"] = m.d_con;
        aj["c_true"] = m.c_true;
        aj["gains"] = {{"lambda", m.gains.lambda},
                       {"sigma", m.gains.sigma},
                       {"kappa", m.gains.kappa}};
        aj["q0"] = from_vector(s.q0[i]);
        aj["qd0"] = from_vector(s.qd0[i]);
        aj["c_hat0"] = s.c_hat0[i];
        j["agents"].push_back(aj);
    }

    j["required_neighbors"] = ordered_json::object();
    for (std::size_t i = 0; i < s.required_neighbors.size(); ++i) {
        ordered_json ids = ordered_json::array();
        for (int n : s.required_neighbors[i]) ids.push_back(s.agents[n].id);
        j["required_neighbors"][std::to_string(s.agents[i].id)] = ids;
    }

    j["path"] = ordered_json::object();
    for (std::size_t i = 0; i < s.paths.size(); ++i) {
        ordered_json ids = ordered_json::array();
        for (int k : s.paths[i]) ids.push_back(s.regions[k].id);
        j["path"][std::to_string(s.agents[i].id)] = ids;
    }

    j["sim"] = {{"dt", s.sim.dt},
                {"t_max", s.sim.t_max},
                {"seed", s.sim.seed},
                {"log_every", s.sim.log_every}};
    j["potential"] = {{"beta_scale", s.potential.beta_scale},
                      {"fd_step", s.potential.fd_step},
                      {"goal_clearance", s.potential.goal_clearance},
                      {"pair_standoff", s.potential.pair_standoff},
                      {"region_standoff", s.potential.region_standoff},
                      {"ceiling_samples", s.potential.ceiling_samples}};
    return j.dump(2) + "\n";
}

std::vector<std::string> validate_scenario(const Scenario &s) {
    std::vector<std::string> v;
    auto fail = [&v](const std::string &msg) { v.push_back(msg); };

    if (s.r0 <= 0.0) fail("workspace radius must be positive");
    if (s.agents.empty()) fail("scenario has no agents");
    if (s.regions.empty()) fail("scenario has no regions");

    for (const auto &m : s.agents) {
        try {
            m.validate();
        } catch (const std::exception &e) {
            fail("agent " + std::to_string(m.id) + ": " + e.what());
        }
    }
    for (const auto &r : s.regions) {
        try {
            r.validate();
        } catch (const std::exception &e) {
            fail("region " + std::to_string(r.id) + ": " + e.what());
        }
    }
    if (!v.empty()) return v;  // geometry below needs valid models

    const double dmax = s.max_body_radius();

    for (const auto &m : s.agents)
        if (m.d_con < 2.0 * dmax)
            fail("agent " + std::to_string(m.id) + ": sensing radius " +
                 std::to_string(m.d_con) + " < 2 * max body radius " +
                 std::to_string(2.0 * dmax));

    // Region spacing and workspace fit.
    for (std::size_t k = 0; k < s.regions.size(); ++k) {
        for (std::size_t l = k + 1; l < s.regions.size(); ++l) {
            const double dist = (s.regions[k].center - s.regions[l].center).norm();
            const double need = 2.0 * dmax + s.regions[k].radius + s.regions[l].radius;
            if (dist < need)
                fail("regions " + std::to_string(s.regions[k].id) + " and " +
                     std::to_string(s.regions[l].id) + ": center distance " +
                     std::to_string(dist) + " < " + std::to_string(need));
        }
        if (s.r0 - s.regions[k].center.norm() < 2.0 * dmax)
            fail("region " + std::to_string(s.regions[k].id) +
                 " is too close to the workspace boundary");
    }

    // Path table shape.
    const std::size_t rounds = s.round_count();
    for (std::size_t i = 0; i < s.paths.size(); ++i)
        if (s.paths[i].size() != rounds)
            fail("agent " + std::to_string(s.agents[i].id) +
                 ": path length differs from other agents");
    if (!v.empty()) return v;

    // Initial premises.
    std::vector<int> start(s.agents.size(), -1);
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        if (!s.q0[i].allFinite() || !s.qd0[i].allFinite()) {
            fail("agent " + std::to_string(s.agents[i].id) + ": non-finite initial state");
            continue;
        }
        start[i] = s.containing_region(static_cast<int>(i), s.q0[i]);
        if (start[i] < 0)
            fail("agent " + std::to_string(s.agents[i].id) +
                 " does not start inside any region");
        if (singularity_measure(s.agents[i], s.q0[i]) <= 0.0)
            fail("agent " + std::to_string(s.agents[i].id) + " starts at a singularity");
        const double room = s.r0 - (base_position(s.agents[i], s.q0[i]).norm() +
                                    body_radius(s.agents[i]));
        if (room <= 0.0)
            fail("agent " + std::to_string(s.agents[i].id) +
                 " starts outside the workspace interior");
    }

    // Initial collision freedom, own links included.
    std::vector<std::vector<Ellipsoid3>> bodies;
    for (std::size_t i = 0; i < s.agents.size(); ++i)
        bodies.push_back(link_ellipsoids(s.agents[i], s.q0[i]));
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        for (std::size_t m = 0; m < bodies[i].size(); ++m)
            for (std::size_t l = m + 1; l < bodies[i].size(); ++l)
                if (pair_margin(bodies[i][m], bodies[i][l]) <= 0.0)
                    fail("agent " + std::to_string(s.agents[i].id) +
                         ": own links start in contact");
        for (std::size_t jj = i + 1; jj < s.agents.size(); ++jj)
            for (const auto &em : bodies[i])
                for (const auto &el : bodies[jj])
                    if (pair_margin(em, el) <= 0.0)
                        fail("agents " + std::to_string(s.agents[i].id) + " and " +
                             std::to_string(s.agents[jj].id) + " start in contact");
    }

    // Required neighbors must be neighbors initially.
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        const Eigen::Vector3d pi = base_position(s.agents[i], s.q0[i]);
        for (int jn : s.required_neighbors[i]) {
            const Eigen::Vector3d pj = base_position(s.agents[jn], s.q0[jn]);
            if ((pi - pj).norm() > s.agents[i].d_con)
                fail("agent " + std::to_string(s.agents[i].id) +
                     ": required neighbor " + std::to_string(s.agents[jn].id) +
                     " starts outside the sensing radius");
        }
    }

    // Per-round goal feasibility: the regions must admit connected goal
    // placements, i.e. the smallest achievable base separation fits d_con.
    for (std::size_t round = 0; round < rounds; ++round) {
        for (std::size_t i = 0; i < s.agents.size(); ++i) {
            const Region &gi = s.regions[s.paths[i][round]];
            const double di = body_radius(s.agents[i]);
            for (int jn : s.required_neighbors[i]) {
                const Region &gj = s.regions[s.paths[jn][round]];
                const double dj = body_radius(s.agents[jn]);
                const double min_sep = (gi.center - gj.center).norm() -
                                       (gi.radius - di) - (gj.radius - dj);
                if (min_sep > s.agents[i].d_con)
                    fail("round " + std::to_string(round + 1) + ": goal regions of agents " +
                         std::to_string(s.agents[i].id) + " and " +
                         std::to_string(s.agents[jn].id) +
                         " cannot satisfy connectivity (min separation " +
                         std::to_string(min_sep) + " > d_con " +
                         std::to_string(s.agents[i].d_con) + ")");
            }
        }
    }

    return v;
}

}  // namespace navsim
