#include "switchrl/fixtures.hpp"

namespace switchrl {

FiniteMdp two_state_mdp() {
    Matrix stay(2, 2), move(2, 2);
    stay << 1, 0, 0, 1;
    move << 0, 1, 1, 0;
    Matrix reward(2, 2);
    // Reward 1 exactly when the arrival state is state 0.
    reward << 1, 0,  // from state 0: stay -> 0, move -> 1
        0, 1;        // from state 1: stay -> 1, move -> 0
    return FiniteMdp({stay, move}, reward, Matrix::Zero(2, 2), 100, 1.0, 0);
}

TabularPolicy two_state_old_policy() { return TabularPolicy::uniform(2, 2); }
TabularPolicy two_state_policy_stay() { return TabularPolicy::deterministic({0, 0}, 2); }
TabularPolicy two_state_policy_move() { return TabularPolicy::deterministic({1, 1}, 2); }
TabularPolicy two_state_policy_stay_move() {
    return TabularPolicy::deterministic({0, 1}, 2);
}
TabularPolicy two_state_policy_move_stay() {
    return TabularPolicy::deterministic({1, 0}, 2);
}

CustomCostTable two_state_cost_table() {
    return CustomCostTable::by_new_class({
        {"deterministic-same-action", 25.0},
        {"deterministic-mixed", 50.0},
        {"stochastic-anywhere", 500.0},
    });
}

SwitchProblem two_state_problem(int initial_state) {
    return SwitchProblem(two_state_mdp(), two_state_old_policy(),
                         CostSpec::custom(two_state_cost_table()), initial_state);
}

FiniteMdp chain_mdp(int n_states) {
    const int n = n_states;
    Matrix advance = Matrix::Zero(n, n);
    Matrix hold = Matrix::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        advance(s, std::min(s + 1, n - 1)) = 1.0;
        hold(s, s) = 1.0;
    }
    Matrix reward(n, 2);
    reward.row(0) << 0.0, -1.0;
    for (int s = 1; s < n; ++s) reward.row(s) << 1.0, 1.0;
    return FiniteMdp({advance, hold}, reward, Matrix::Zero(n, 2), 30, 0.9, 0);
}

SwitchProblem chain_problem(int n_states, double c_t, ChainIncumbent incumbent) {
    const FiniteMdp mdp = chain_mdp(n_states);
    Matrix probs(n_states, 2);
    if (incumbent == ChainIncumbent::Uniform) {
        probs.setConstant(0.5);
    } else {
        probs.row(0) << 1.0, 0.0;
        for (int s = 1; s < n_states; ++s) probs.row(s) << 0.9, 0.1;
    }
    CostSpec cost = CostSpec::transport_two({0, 1}, 5.0, c_t);
    return SwitchProblem(mdp, TabularPolicy(std::move(probs)), std::move(cost));
}

}  // namespace switchrl
