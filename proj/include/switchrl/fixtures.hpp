#pragma once

#include "switchrl/net_value.hpp"

namespace switchrl {

// Two-state alternation environment: action 0 keeps the current state,
// action 1 moves to the other state, and the reward is 1 exactly when the
// arrival state is state 0. Horizon 100, undiscounted.
FiniteMdp two_state_mdp();

TabularPolicy two_state_old_policy();        // uniform in both states
TabularPolicy two_state_policy_stay();       // always action 0
TabularPolicy two_state_policy_move();       // always action 1
TabularPolicy two_state_policy_stay_move();  // keep state 0, leave state 1
TabularPolicy two_state_policy_move_stay();  // leave state 0, keep state 1

/// Table costs 25 / 50 / 500 keyed by the candidate's fingerprint class.
CustomCostTable two_state_cost_table();

SwitchProblem two_state_problem(int initial_state);

/// Gated chain: state 0 earns nothing for advancing and -1 for holding,
/// every later state earns 1 under either action; advancing walks right,
/// holding stays. The value of the plateau is policy independent, so the
/// whole decision rides on the gate state. gamma 0.9, horizon 30.
FiniteMdp chain_mdp(int n_states);

enum class ChainIncumbent {
    Uniform,      // dawdles at the gate; switching pays
    NearOptimal,  // advances at the gate, 0.9-soft elsewhere; switching never pays
};

SwitchProblem chain_problem(int n_states, double c_t, ChainIncumbent incumbent);

}  // namespace switchrl
