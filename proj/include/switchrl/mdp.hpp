#pragma once

#include "switchrl/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace switchrl {

/// Row-stochastic action-distribution table pi(a|s).
struct TabularPolicy {
    Matrix probs;  // n_states x n_actions

    TabularPolicy() = default;
    explicit TabularPolicy(Matrix p);

    int n_states() const { return static_cast<int>(probs.rows()); }
    int n_actions() const { return static_cast<int>(probs.cols()); }

    static TabularPolicy uniform(int n_states, int n_actions);
    static TabularPolicy deterministic(const std::vector<int>& action_per_state,
                                       int n_actions);
};

/// Elementwise comparison at the indicator-cost tolerance.
bool rows_match(const RowVector& a, const RowVector& b);
bool policies_match(const TabularPolicy& a, const TabularPolicy& b);

/// Finite episodic MDP. Transitions are stored per action as an
/// n_states x n_states matrix whose row s is P(.|s, a). Rewards have
/// mean reward_mean(s, a) and uniform noise on a symmetric interval of
/// half-width reward_noise_halfwidth(s, a) (zero half-width means
/// deterministic rewards).
struct FiniteMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Matrix> transition;
    Matrix reward_mean;
    Matrix reward_noise_halfwidth;
    int horizon = 1;
    double discount = 1.0;
    int initial_state = 0;

    FiniteMdp() = default;
    FiniteMdp(std::vector<Matrix> transition_by_action, Matrix reward,
              Matrix noise_halfwidth, int horizon, double discount,
              int initial_state);

    double max_abs_reward() const;
    void require_compatible(const TabularPolicy& policy) const;
};

struct Trajectory {
    struct Step {
        int state;
        int action;
        double reward;
        int next_state;
    };
    std::vector<Step> steps;
    double episode_return = 0.0;
};

struct Valuation {
    Vector v;  // V[s]
    Matrix q;  // Q[s][a]
};

/// Finite-horizon values by backward induction over exactly `horizon`
/// reward steps t = 0..H-1. Valid for any discount in [0, 1].
Valuation evaluate_exact(const FiniteMdp& mdp, const TabularPolicy& policy);

/// Infinite-horizon Q satisfying Q = R + gamma * P * Pi * Q to residual
/// sup-norm <= tol, via a direct linear solve. Requires discount < 1.
Matrix evaluate_infinite(const FiniteMdp& mdp, const TabularPolicy& policy,
                         double tol);

/// Roll out `n_episodes` episodes of exactly `horizon` steps from the
/// initial state. Deterministic given the seed.
std::vector<Trajectory> simulate(const FiniteMdp& mdp, const TabularPolicy& policy,
                                 int n_episodes, std::uint64_t seed);

// Text serialization. Header `mdp n_states n_actions H gamma s0`, then one
// line per (s, a): `s a R halfwidth p_0 ... p_{n_states-1}`.
void write_mdp(std::ostream& out, const FiniteMdp& mdp);
FiniteMdp read_mdp(std::istream& in);
FiniteMdp load_mdp(const std::string& path);
void save_mdp(const std::string& path, const FiniteMdp& mdp);

// Policy files: header `policy n_states n_actions`, then `s p_0 ... p_{A-1}`.
void write_policy(std::ostream& out, const TabularPolicy& policy);
TabularPolicy read_policy(std::istream& in);
TabularPolicy load_policy(const std::string& path);
void save_policy(const std::string& path, const TabularPolicy& policy);

}  // namespace switchrl
