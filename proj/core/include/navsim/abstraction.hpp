#pragma once

#include "navsim/simulation.hpp"

#include <map>

namespace navsim {

struct TSTransition {
    int from = 0;  // region ids
    int to = 0;
    double t_start = 0.0;
    double t_end = 0.0;

    bool operator==(const TSTransition &) const = default;
};

// Per-agent finite transition system recorded from executed rounds.
struct TransitionSystem {
    int agent = 0;                 // agent id
    std::vector<int> states;       // region ids
    std::vector<int> initial;      // region ids
    std::vector<TSTransition> transitions;
    std::vector<std::string> aps;
    std::map<int, std::vector<std::string>> labels;  // region id -> props
    // Region occupied by the agent -> regions of its required neighbors,
    // sampled at each recorded transition endpoint (-1: outside all regions).
    std::map<int, std::vector<int>> neighbor_map;

    bool operator==(const TransitionSystem &) const = default;
};

// Assemble the recorded transition system of one agent from completed
// rounds. Throws if a referenced round did not complete.
TransitionSystem build_transition_system(const Scenario &scenario,
                                         const std::vector<RoundResult> &rounds,
                                         int agent_index);

// Stable-key-order JSON export and its inverse.
std::string ts_to_json(const TransitionSystem &ts);
TransitionSystem ts_from_json(const std::string &text);

enum class PathStatus { completed, aborted_timeout, aborted_safety, rejected };

struct PathExecution {
    PathStatus status = PathStatus::completed;
    std::vector<RoundResult> rounds;           // executed rounds (possibly partial)
    std::vector<TransitionSystem> systems;     // per agent, over completed rounds
    std::string rejection;                     // set when status == rejected
};

// Iterative application of the controller over the scenario's per-agent
// region sequences; each round's final state seeds the next. Rounds are
// pre-validated (connectivity-feasible goals) before any integration; an
// invalid round aborts execution with partial artifacts preserved.
PathExecution execute_path(const Scenario &scenario, double dt, double t_max_per_round,
                           SimLog *log = nullptr);
PathExecution execute_path(const Scenario &scenario, SimLog *log = nullptr);

// Batch mode: attempt one round per ordered region pair for one agent (the
// others hold their start regions), recording every transition that
// completes validly. Rounds that cannot even be set up are skipped.
TransitionSystem enumerate_transition_system(const Scenario &scenario, int agent_index,
                                             double dt, double t_max_per_round);

}  // namespace navsim
