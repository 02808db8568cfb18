#pragma once

#include "switchrl/offline.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace switchrl {

/// Softmax actor over per-state logits.
struct ActorParams {
    Matrix logits;

    TabularPolicy policy() const;
    static ActorParams from_policy(const TabularPolicy& policy, double floor = 1e-6);
};

/// Expected pessimistic net Q at the initial state under the actor.
double actor_objective(const TwinNetQ& twin, const ActorParams& actor, int s0);
double actor_objective_mc(const TwinNetQ& twin, const ActorParams& actor, int s0,
                          int n_samples, Rng& rng);

/// Analytic objective gradient with respect to the logits of row s0; every
/// other row has zero gradient (the objective only sees pi(.|s0)).
RowVector actor_gradient(const TwinNetQ& twin, const ActorParams& actor, int s0);

/// One clipped gradient-ascent step on the logits, critic held constant.
ActorParams actor_step(const ActorParams& actor, const TwinNetQ& twin, int s0,
                       double lr, double grad_clip);

struct StoppingConfig {
    int epochs_stop = 20;  // minimum epochs before stopping is considered
    double alpha = 1.0;    // net value increase rate bound
    double b_u = 50.0;     // increase bound
    double b_d = 10.0;     // decrease bound
    int window = 2;
};

/// Stopping rule over the incumbent's net value v0 and the last two epoch
/// averages v1, v2: stop on a sustained relative rise (or sign flip when
/// v0 <= 0), a sustained rise by b_u, or a sustained drop by b_d.
bool stopping_check(double v0, double v1, double v2, const StoppingConfig& cfg, int epoch);

struct NacConfig {
    OpeConfig evaluation;  // fitted evaluation of the incumbent and the result
    double lr_q = 3e-4;
    double lr_actor = 3e-4;
    double soft = 0.995;
    double grad_clip_q = 1.0;
    double grad_clip_actor = 1.0;
    int batch_size = 256;
    int steps_per_epoch = 1000;
    int max_epochs = 100;
    int n_estimators = 2;
    int mc_cost_states_train = 10;  // cost Monte-Carlo draws per step; 0 = exact
    int mc_cost_states_eval = 0;    // cost draws for the final evaluation; 0 = exact
    StoppingConfig stopping;
    bool final_evaluation = true;
    std::uint64_t seed = 0;
};

struct NacReport {
    std::string chosen;  // "old" or "new"
    bool switch_flag = false;
    double v_old = 0.0;
    double v_new_net = 0.0;
    int epochs_run = 0;
    std::vector<double> value_trace;  // per-epoch mean net value estimates
    TabularPolicy new_policy;
    double coverage_fraction = 0.0;
};

/// Full search run: evaluate the incumbent, alternate critic and actor
/// updates until the stopping rule fires, optionally re-evaluate the found
/// policy, and decide by strict net-value improvement.
NacReport run_nac(const SwitchProblem& problem, const TransitionDataset& data,
                  const NacConfig& cfg);

/// Recomputes the switch decision against ground truth and reports
/// agreement with the run's decision. With n_eval_episodes == 0 the ground
/// truth is exact dynamic programming (fixed-point values when discount < 1,
/// finite-horizon values otherwise); with n_eval_episodes > 0 it is a
/// simulated online evaluation.
bool responsibility_check(const SwitchProblem& problem, const NacReport& report,
                          int n_eval_episodes, std::uint64_t seed);

// Report files: key=value lines, a per-epoch trace block, and the policy.
void write_report(std::ostream& out, const NacReport& report);
NacReport read_report(std::istream& in);
void save_report(const std::string& path, const NacReport& report);
NacReport load_report(const std::string& path);

}  // namespace switchrl
