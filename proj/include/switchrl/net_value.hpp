#pragma once

#include "switchrl/cost.hpp"
#include "switchrl/mdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace switchrl {

/// A policy-switching instance: the environment, the incumbent policy,
/// the switching-cost model, and the initial state the decision is made at.
struct SwitchProblem {
    FiniteMdp mdp;
    TabularPolicy old_policy;
    CostSpec cost;
    int initial_state = 0;

    SwitchProblem() = default;
    SwitchProblem(FiniteMdp mdp, TabularPolicy old_policy, CostSpec cost);
    SwitchProblem(FiniteMdp mdp, TabularPolicy old_policy, CostSpec cost,
                  int initial_state);
};

struct NetValuation {
    double v_net = 0.0;  // net value at the problem's initial state
    Vector v_net_all;    // per-state net values
    Matrix q_net;        // per state-action net Q
    double switch_cost = 0.0;
};

/// Finite-horizon values of the candidate minus the one-time switching cost.
NetValuation net_value_exact(const SwitchProblem& problem, const TabularPolicy& candidate);

/// One application of the net backup: R - (1-gamma) C + gamma * expected
/// next net value under `policy`. Requires discount < 1.
Matrix net_bellman_apply(const SwitchProblem& problem, const TabularPolicy& policy,
                         const Matrix& q_net);

/// Iterates the net backup from zero until the sup-norm change is <= tol.
Matrix net_q_fixed_point(const SwitchProblem& problem, const TabularPolicy& policy,
                         double tol, int max_iters);

/// Finite candidate enumeration: all deterministic policies, or the simplex
/// grid with `grid_points` steps per action dimension.
struct CandidateSet {
    enum class Kind { Deterministic, Grid };
    Kind kind = Kind::Deterministic;
    int grid_points = 0;
};

std::vector<TabularPolicy> enumerate_policies(int n_states, int n_actions,
                                              const CandidateSet& set);

struct SearchResult {
    TabularPolicy best;
    double v_net = 0.0;
    bool kept_old = false;

    struct Row {
        std::string policy_id;
        double value;
        double cost;
        double net;
    };
    std::vector<Row> ranking;  // descending by net value
};

/// Argmax of the net value at the initial state over the candidate set plus
/// the incumbent. Ties keep the incumbent, then the lowest candidate index.
SearchResult switch_optimal_search(const SwitchProblem& problem, const CandidateSet& set);

/// Text table `rank, policy_id, value, cost, net_value`.
std::string format_ranking(const SearchResult& result);

/// If some candidate has strictly lower value than the value-optimal one,
/// builds a table cost making the value-optimal policy lose in net value.
/// Returns nothing when every candidate (and the incumbent) ties in value.
std::optional<CustomCostTable> nontriviality_witness(const FiniteMdp& mdp,
                                                     const TabularPolicy& pi_o,
                                                     const CandidateSet& set);

}  // namespace switchrl
