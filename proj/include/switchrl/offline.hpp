#pragma once

#include "switchrl/net_value.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace switchrl {

/// Logged transitions generated by a behavior policy.
struct TransitionDataset {
    struct Record {
        int episode;
        int t;
        int state;
        int action;
        double reward;
        int next_state;
        bool done;
    };
    std::vector<Record> records;
    std::string behavior_policy_id;
    int n_states = 0;
    int n_actions = 0;
    int horizon = 0;

    std::size_t size() const { return records.size(); }
    void validate() const;
};

TransitionDataset generate_dataset(const FiniteMdp& mdp, const TabularPolicy& behavior,
                                   int n_episodes, std::uint64_t seed,
                                   std::string behavior_id = "behavior");

/// Paired net-Q estimators with soft-updated target copies. Reads use the
/// pointwise minimum over the estimators.
struct TwinNetQ {
    std::vector<Matrix> q;
    std::vector<Matrix> target;
    long step_count = 0;

    static TwinNetQ zeros(int n_states, int n_actions, int n_estimators = 2);

    int n_states() const { return static_cast<int>(q.front().rows()); }
    int n_actions() const { return static_cast<int>(q.front().cols()); }
    double min_q(int s, int a) const;
    double min_target(int s, int a) const;
    RowVector min_q_row(int s) const;
};

struct OpeConfig {
    double lr_q = 3e-4;    // critic step size
    double soft = 0.995;   // target retention per step
    int batch_size = 256;
    int epochs = 50;
    int steps_per_epoch = 1000;
    int mc_action_samples = 0;  // 0 = exact expectation at readout
    double grad_clip_q = 1.0;   // max gradient 2-norm
    std::uint64_t seed = 0;
    int n_estimators = 2;
    double loss_change_tol = 1e-6;  // stop when epoch-mean TD loss plateaus
};

/// Bootstrapped regression target for one transition:
/// y = r - (1-gamma) * cost + gamma * min_j targetQ_j(s', a'), a' ~ policy(.|s').
double ope_target(double r, int s_next, const TabularPolicy& policy, const TwinNetQ& twin,
                  double cost_value, double gamma, Rng& rng);

/// One mini-batch critic update (targets, clipped gradient step on every
/// estimator, soft target update). Returns the batch mean TD loss.
struct CriticStep {
    int batch_size;
    double lr;
    double grad_clip;
    double soft;
};
double critic_batch_step(TwinNetQ& twin, const TransitionDataset& data,
                         const TabularPolicy& policy, double cost_value, double gamma,
                         const CriticStep& params, Rng& rng);

struct EpochStats {
    int epoch;
    double mean_td_loss;
    double v_net_estimate;
};

struct OfflineEvaluation {
    double v_net_hat = 0.0;
    TwinNetQ twin;
    std::vector<EpochStats> trace;
    int covered_pairs = 0;
    double coverage_fraction = 0.0;
};

/// Fitted evaluation of `policy` on logged data with twin pessimistic
/// estimators. The switching cost enters every target; `cost_override`
/// replaces the internally computed cost when set (pass 0 to estimate the
/// plain value of the incumbent). Missing state-action pairs are tolerated;
/// coverage is reported alongside the estimate.
OfflineEvaluation evaluate_offline(const SwitchProblem& problem,
                                   const TabularPolicy& policy,
                                   const TransitionDataset& data, const OpeConfig& cfg,
                                   std::optional<double> cost_override = {});

// Dataset files: header `dataset n_records n_states n_actions H behavior_id`,
// then one record per line `episode t s a r s_next done`.
void write_dataset(std::ostream& out, const TransitionDataset& data);
TransitionDataset read_dataset(std::istream& in);
TransitionDataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const TransitionDataset& data);

/// One line per epoch: `epoch mean_td_loss v_net_estimate`.
std::string format_loss_trace(const std::vector<EpochStats>& trace);

}  // namespace switchrl
