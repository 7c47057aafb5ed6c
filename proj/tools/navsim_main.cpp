// Command-line front end: scenario validation, closed-loop simulation with
// artifact emission, plot-series extraction, and the geometry oracle check.

#include "navsim/abstraction.hpp"
#include "navsim/oracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using navsim::PathExecution;
using navsim::PathStatus;
using navsim::RoundStatus;
using navsim::Scenario;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSafety = 2;
constexpr int kExitTimeout = 3;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const fs::path &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

int cmd_validate(const std::string &scenario_path) {
    Scenario scenario;
    try {
        scenario = navsim::load_scenario(scenario_path);
    } catch (const std::exception &e) {
        std::cout << "parse error: " << e.what() << "\n";
        return kExitValidation;
    }
    const auto violations = navsim::validate_scenario(scenario);
    if (violations.empty()) {
        std::cout << "OK\n";
        return kExitOk;
    }
    for (const auto &v : violations) std::cout << "violation: " << v << "\n";
    return kExitValidation;
}

ordered_json round_to_json(const Scenario &scenario, const navsim::RoundResult &round,
                           std::size_t index) {
    ordered_json rj;
    rj["round"] = index + 1;
    switch (round.status) {
    case RoundStatus::completed: rj["status"] = "completed"; break;
    case RoundStatus::timeout: rj["status"] = "timeout"; break;
    case RoundStatus::safety_exit: rj["status"] = "safety_exit"; break;
    }
    rj["transitions"] = ordered_json::array();
    for (const auto &tr : round.transitions) {
        ordered_json tj;
        tj["agent"] = scenario.agents[tr.agent].id;
        tj["from"] = tr.from_region >= 0 ? ordered_json(scenario.regions[tr.from_region].id)
                                         : ordered_json(nullptr);
        tj["to"] = scenario.regions[tr.to_region].id;
        tj["t_start"] = tr.t_start;
        tj["t_end"] = tr.t_end;
        tj["valid"] = tr.valid;
        tj["violations"] = tr.violations;
        rj["transitions"].push_back(tj);
    }
    rj["interval"] = {round.transitions.empty() ? 0.0 : round.transitions.front().t_start,
                      round.final_state.t};
    rj["goals"] = ordered_json::object();
    for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
        ordered_json qg = ordered_json::array();
        for (Eigen::Index c = 0; c < round.goals.q_goal[i].size(); ++c)
            qg.push_back(round.goals.q_goal[i](c));
        rj["goals"][std::to_string(scenario.agents[i].id)] = qg;
    }
    rj["min_beta"] = round.min_beta;
    rj["max_dv_positive"] = round.max_dv_positive;
    rj["max_dv_excess"] = round.max_dv_excess;
    rj["min_factors"] = ordered_json::object();
    rj["boundedness"] = ordered_json::object();
    for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
        const std::string id = std::to_string(scenario.agents[i].id);
        rj["min_factors"][id] = {{"name", round.min_factor_name[i]},
                                 {"value", round.min_factor_value[i]}};
        rj["boundedness"][id] = {{"sup_speed", round.sup_speed[i]},
                                 {"sup_torque", round.sup_torque[i]},
                                 {"c_hat_end", round.c_hat_end[i]}};
    }
    return rj;
}

int cmd_simulate(const std::string &scenario_path, const std::string &out_dir, double dt_flag,
                 double t_max_flag, int log_every_flag) {
    Scenario scenario;
    try {
        scenario = navsim::load_scenario(scenario_path);
    } catch (const std::exception &e) {
        std::cout << "parse error: " << e.what() << "\n";
        return kExitValidation;
    }
    if (dt_flag > 0.0) scenario.sim.dt = dt_flag;
    if (t_max_flag > 0.0) scenario.sim.t_max = t_max_flag;
    if (log_every_flag > 0) scenario.sim.log_every = log_every_flag;

    fs::create_directories(out_dir);

    const auto wall_start = std::chrono::steady_clock::now();
    navsim::SimLog log;
    PathExecution exec;
    try {
        exec = navsim::execute_path(scenario, &log);
    } catch (const std::exception &e) {
        std::cout << "error: " << e.what() << "\n";
        return kExitSafety;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

    if (exec.status == PathStatus::rejected) {
        std::cout << "scenario rejected: " << exec.rejection << "\n";
        return kExitValidation;
    }

    // trajectory.csv
    {
        std::ostringstream csv;
        for (std::size_t c = 0; c < log.csv_columns.size(); ++c)
            csv << (c ? "," : "") << log.csv_columns[c];
        csv << "\n";
        for (const auto &row : log.rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                csv << (c ? "," : "") << fmt_double(row[c]);
            csv << "\n";
        }
        write_file(fs::path(out_dir) / "trajectory.csv", csv.str());
    }

    // events.jsonl
    {
        std::ostringstream ev;
        for (const auto &line : log.events) ev << line << "\n";
        write_file(fs::path(out_dir) / "events.jsonl", ev.str());
    }

    // ts_<agent>.json
    for (const auto &ts : exec.systems)
        write_file(fs::path(out_dir) / ("ts_" + std::to_string(ts.agent) + ".json"),
                   navsim::ts_to_json(ts));

    // Resolved scenario copy (plotdata reconstructs controllers from it).
    write_file(fs::path(out_dir) / "scenario.json", navsim::serialize_scenario(scenario));

    // summary.json
    ordered_json summary;
    switch (exec.status) {
    case PathStatus::completed: summary["status"] = "completed"; break;
    case PathStatus::aborted_timeout: summary["status"] = "timeout"; break;
    case PathStatus::aborted_safety: summary["status"] = "safety_exit"; break;
    case PathStatus::rejected: summary["status"] = "rejected"; break;
    }
    summary["wall_time_s"] = wall;
    summary["dt"] = scenario.sim.dt;
    int valid_transitions = 0;
    summary["rounds"] = ordered_json::array();
    for (std::size_t r = 0; r < exec.rounds.size(); ++r) {
        summary["rounds"].push_back(round_to_json(scenario, exec.rounds[r], r));
        for (const auto &tr : exec.rounds[r].transitions) valid_transitions += tr.valid ? 1 : 0;
    }
    summary["valid_transitions"] = valid_transitions;
    summary["boundedness"] = ordered_json::object();
    for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
        double sup_speed = 0.0, sup_torque = 0.0;
        for (const auto &round : exec.rounds) {
            sup_speed = std::max(sup_speed, round.sup_speed[i]);
            sup_torque = std::max(sup_torque, round.sup_torque[i]);
        }
        const double c_end =
            exec.rounds.empty() ? scenario.c_hat0[i] : exec.rounds.back().c_hat_end[i];
        bool monotone = true;
        for (const auto &round : exec.rounds)
            for (const auto &viol : round.violations)
                if (viol.agent == static_cast<int>(i) && viol.clause == "adaptation")
                    monotone = false;
        summary["boundedness"][std::to_string(scenario.agents[i].id)] = {
            {"sup_speed", sup_speed},
            {"sup_torque", sup_torque},
            {"c_hat_final", c_end},
            {"c_hat_monotone", monotone}};
    }
    write_file(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");

    std::cout << "status: " << summary["status"].get<std::string>()
              << ", valid transitions: " << valid_transitions << ", wall: " << wall << " s\n";

    if (exec.status == PathStatus::aborted_safety) return kExitSafety;
    if (exec.status == PathStatus::aborted_timeout) return kExitTimeout;
    return kExitOk;
}

std::vector<std::vector<double>> read_csv(const fs::path &path,
                                          std::vector<std::string> &columns) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path.string());
    std::stringstream hdr(line);
    std::string cell;
    while (std::getline(hdr, cell, ',')) columns.push_back(cell);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

int cmd_plotdata(const std::string &out_dir) {
    const fs::path dir(out_dir);
    if (!fs::exists(dir / "trajectory.csv") || !fs::exists(dir / "scenario.json") ||
        !fs::exists(dir / "summary.json")) {
        std::cout << "error: " << out_dir << " does not contain simulate outputs\n";
        return kExitValidation;
    }

    const Scenario scenario = navsim::load_scenario((dir / "scenario.json").string());
    std::ifstream sin(dir / "summary.json");
    ordered_json summary;
    sin >> summary;

    std::vector<std::string> columns;
    const auto rows = read_csv(dir / "trajectory.csv", columns);

    const int n = static_cast<int>(scenario.agents.size());
    std::vector<int> q_col(n), qd_col(n), chat_col(n), beta_col(n);
    {
        int col = 1;
        for (int i = 0; i < n; ++i) {
            const int dof = scenario.agents[i].dof();
            q_col[i] = col;
            qd_col[i] = col + dof;
            chat_col[i] = col + 2 * dof;
            beta_col[i] = chat_col[i] + 1;
            col += 2 * dof + 3;
        }
    }

    // beta_i(t)
    {
        std::ostringstream os;
        os << "t";
        for (int i = 0; i < n; ++i) os << ",beta_" << scenario.agents[i].id;
        os << "\n";
        for (const auto &row : rows) {
            os << fmt_double(row[0]);
            for (int i = 0; i < n; ++i) os << "," << fmt_double(row[beta_col[i]]);
            os << "\n";
        }
        write_file(dir / "beta_series.csv", os.str());
    }

    // c_tilde_i(t) = c_hat_i(t) - c_i
    {
        std::ostringstream os;
        os << "t";
        for (int i = 0; i < n; ++i) os << ",c_tilde_" << scenario.agents[i].id;
        os << "\n";
        for (const auto &row : rows) {
            os << fmt_double(row[0]);
            for (int i = 0; i < n; ++i)
                os << "," << fmt_double(row[chat_col[i]] - scenario.agents[i].c_true);
            os << "\n";
        }
        write_file(dir / "c_tilde_series.csv", os.str());
    }

    // base trajectories
    {
        std::ostringstream os;
        os << "t";
        for (int i = 0; i < n; ++i)
            os << ",x_" << scenario.agents[i].id << ",y_" << scenario.agents[i].id;
        os << "\n";
        for (const auto &row : rows) {
            os << fmt_double(row[0]);
            for (int i = 0; i < n; ++i)
                os << "," << fmt_double(row[q_col[i]]) << "," << fmt_double(row[q_col[i] + 1]);
            os << "\n";
        }
        write_file(dir / "base_paths.csv", os.str());
    }

    // tau_i(t): recomputed from the logged states with the per-round goals.
    {
        const navsim::PotentialSetup setup = navsim::prepare_potential(scenario);
        std::vector<navsim::PotentialContext> contexts;
        std::vector<std::pair<double, double>> intervals;
        std::vector<navsim::GoalSpec> goal_specs;
        for (const auto &rj : summary.at("rounds")) {
            navsim::GoalSpec goals;
            for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
                const auto qg =
                    rj.at("goals").at(std::to_string(scenario.agents[i].id));
                Eigen::VectorXd v(qg.size());
                for (std::size_t c = 0; c < qg.size(); ++c) v(c) = qg[c].get<double>();
                goals.q_goal.push_back(v);
            }
            // Region indices for the exclusion sets.
            for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
                const auto &transitions = rj.at("transitions");
                int from = -1, to = -1;
                for (const auto &tj : transitions) {
                    if (tj.at("agent").get<int>() != scenario.agents[i].id) continue;
                    from = tj.at("from").is_null() ? -1
                                                   : scenario.region_index(tj.at("from").get<int>());
                    to = scenario.region_index(tj.at("to").get<int>());
                }
                goals.start_region.push_back(from);
                goals.goal_region.push_back(to);
            }
            goal_specs.push_back(goals);
            intervals.emplace_back(rj.at("interval")[0].get<double>(),
                                   rj.at("interval")[1].get<double>());
        }
        for (std::size_t r = 0; r < goal_specs.size(); ++r)
            contexts.push_back(navsim::PotentialContext{&scenario, &setup, goal_specs[r]});

        std::ostringstream os;
        os << "t";
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < scenario.agents[i].dof(); ++c)
                os << ",tau" << c << "_" << scenario.agents[i].id;
        os << "\n";
        for (const auto &row : rows) {
            const double t = row[0];
            int round = -1;
            for (std::size_t r = 0; r < intervals.size(); ++r)
                if (t >= intervals[r].first && t <= intervals[r].second)
                    round = static_cast<int>(r);
            if (round < 0) continue;
            std::vector<Eigen::VectorXd> q(n), qd(n);
            std::vector<double> c_hat(n);
            for (int i = 0; i < n; ++i) {
                const int dof = scenario.agents[i].dof();
                q[i] = Eigen::Map<const Eigen::VectorXd>(row.data() + q_col[i], dof);
                qd[i] = Eigen::Map<const Eigen::VectorXd>(row.data() + qd_col[i], dof);
                c_hat[i] = row[chat_col[i]];
            }
            const auto tau = navsim::control_torques(contexts[round], q, qd, c_hat);
            os << fmt_double(t);
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < scenario.agents[i].dof(); ++c)
                    os << "," << fmt_double(tau[i](c));
            os << "\n";
        }
        write_file(dir / "tau_series.csv", os.str());
    }

    std::cout << "wrote beta_series.csv, c_tilde_series.csv, base_paths.csv, tau_series.csv\n";
    return kExitOk;
}

int cmd_geomcheck(int pairs, std::uint64_t seed) {
    const auto res = navsim::survey_random_pairs(pairs, seed);
    std::printf("pairs: %d\n", res.pairs);
    std::printf("agreements: %d (%d in the near-touching band)\n", res.agreements,
                res.within_band);
    std::printf("disagreements outside band: %d\n", res.disagreements);
    std::printf("worst disagreement clearance: %s\n",
                res.disagreements ? fmt_double(res.worst_clearance).c_str() : "n/a");
    std::printf("pairs missing a positive real root: %d\n", res.missing_positive_root);
    std::printf("pairs with extra positive real roots (containment): %d\n",
                res.extra_positive_roots);
    return res.disagreements == 0 && res.missing_positive_root == 0 ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"decentralized ellipsoid-navigation simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir;
    double dt = 0.0, t_max = 0.0;
    int log_every = 0;
    int pairs = 1000;
    std::uint64_t seed = 1;

    auto *validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("scenario", scenario_path, "scenario JSON path")->required();

    auto *simulate = app.add_subcommand("simulate", "run the transition rounds");
    simulate->add_option("scenario", scenario_path, "scenario JSON path")->required();
    simulate->add_option("out", out_dir, "output directory")->required();
    simulate->add_option("--dt", dt, "integration step override");
    simulate->add_option("--t-max", t_max, "per-round time budget override");
    simulate->add_option("--log-every", log_every, "sample every k steps");

    auto *plotdata = app.add_subcommand("plotdata", "emit per-figure series from a run");
    plotdata->add_option("out", out_dir, "simulate output directory")->required();

    auto *geomcheck = app.add_subcommand("geomcheck", "random-pair separation oracle check");
    geomcheck->add_option("--pairs", pairs, "number of random pairs");
    geomcheck->add_option("--seed", seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(scenario_path);
        if (simulate->parsed()) return cmd_simulate(scenario_path, out_dir, dt, t_max, log_every);
        if (plotdata->parsed()) return cmd_plotdata(out_dir);
        if (geomcheck->parsed()) return cmd_geomcheck(pairs, seed);
    } catch (const std::exception &e) {
        std::cout << "error: " << e.what() << "\n";
        return kExitSafety;
    }
    return kExitOk;
}
