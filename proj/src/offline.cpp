#include "switchrl/offline.hpp"

#include "switchrl/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace switchrl {

void TransitionDataset::validate() const {
    if (n_states < 1 || n_actions < 1 || horizon < 1)
        throw std::invalid_argument("dataset: bad dimensions");
    for (const Record& r : records) {
        if (r.t < 0 || r.t >= horizon) throw std::invalid_argument("dataset: step out of range");
        if ((r.t == horizon - 1) != r.done)
            throw std::invalid_argument("dataset: done flag inconsistent with step index");
        if (r.state < 0 || r.state >= n_states || r.next_state < 0 ||
            r.next_state >= n_states)
            throw std::invalid_argument("dataset: state out of range");
        if (r.action < 0 || r.action >= n_actions)
            throw std::invalid_argument("dataset: action out of range");
    }
}

TransitionDataset generate_dataset(const FiniteMdp& mdp, const TabularPolicy& behavior,
                                   int n_episodes, std::uint64_t seed,
                                   std::string behavior_id) {
    if (n_episodes < 1)
        throw std::invalid_argument("generate_dataset: n_episodes must be >= 1");
    const std::vector<Trajectory> episodes = simulate(mdp, behavior, n_episodes, seed);
    TransitionDataset data;
    data.behavior_policy_id = std::move(behavior_id);
    data.n_states = mdp.n_states;
    data.n_actions = mdp.n_actions;
    data.horizon = mdp.horizon;
    data.records.reserve(static_cast<std::size_t>(n_episodes) * mdp.horizon);
    for (int ep = 0; ep < n_episodes; ++ep) {
        const Trajectory& traj = episodes[static_cast<std::size_t>(ep)];
        for (int t = 0; t < static_cast<int>(traj.steps.size()); ++t) {
            const Trajectory::Step& st = traj.steps[static_cast<std::size_t>(t)];
            data.records.push_back(
                {ep, t, st.state, st.action, st.reward, st.next_state,
                 t == mdp.horizon - 1});
        }
    }
    data.validate();
    return data;
}

TwinNetQ TwinNetQ::zeros(int n_states, int n_actions, int n_estimators) {
    if (n_estimators < 1) throw std::invalid_argument("twin: need at least one estimator");
    TwinNetQ twin;
    twin.q.assign(static_cast<std::size_t>(n_estimators), Matrix::Zero(n_states, n_actions));
    twin.target = twin.q;
    return twin;
}

double TwinNetQ::min_q(int s, int a) const {
    double m = q.front()(s, a);
    for (std::size_t i = 1; i < q.size(); ++i) m = std::min(m, q[i](s, a));
    return m;
}

double TwinNetQ::min_target(int s, int a) const {
    double m = target.front()(s, a);
    for (std::size_t i = 1; i < target.size(); ++i) m = std::min(m, target[i](s, a));
    return m;
}

RowVector TwinNetQ::min_q_row(int s) const {
    RowVector row = q.front().row(s);
    for (std::size_t i = 1; i < q.size(); ++i)
        row = row.cwiseMin(RowVector(q[i].row(s)));
    return row;
}

double ope_target(double r, int s_next, const TabularPolicy& policy, const TwinNetQ& twin,
                  double cost_value, double gamma, Rng& rng) {
    const int a_next = rng.sample(policy.probs.row(s_next));
    return r - (1.0 - gamma) * cost_value + gamma * twin.min_target(s_next, a_next);
}

double critic_batch_step(TwinNetQ& twin, const TransitionDataset& data,
                         const TabularPolicy& policy, double cost_value, double gamma,
                         const CriticStep& params, Rng& rng) {
    const std::size_t n = data.records.size();
    const std::size_t m = twin.q.size();
    std::vector<Matrix> grad(m, Matrix::Zero(twin.n_states(), twin.n_actions()));
    double loss = 0.0;
    for (int b = 0; b < params.batch_size; ++b) {
        const std::size_t idx =
            std::min(n - 1, static_cast<std::size_t>(rng.uniform01() * n));
        const TransitionDataset::Record& rec = data.records[idx];
        const double y =
            ope_target(rec.reward, rec.next_state, policy, twin, cost_value, gamma, rng);
        for (std::size_t i = 0; i < m; ++i) {
            const double diff = twin.q[i](rec.state, rec.action) - y;
            grad[i](rec.state, rec.action) += 2.0 * diff / params.batch_size;
            loss += diff * diff / (params.batch_size * static_cast<double>(m));
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        const double norm = grad[i].norm();
        if (norm > params.grad_clip) grad[i] *= params.grad_clip / norm;
        twin.q[i] -= params.lr * grad[i];
        twin.target[i] = params.soft * twin.target[i] + (1.0 - params.soft) * twin.q[i];
    }
    ++twin.step_count;
    return loss;
}

namespace {

double readout(const TwinNetQ& twin, const TabularPolicy& policy, int s0,
               int mc_action_samples, Rng& rng) {
    if (mc_action_samples <= 0)
        return policy.probs.row(s0).dot(twin.min_q_row(s0));
    double sum = 0.0;
    for (int i = 0; i < mc_action_samples; ++i) {
        const int a = rng.sample(policy.probs.row(s0));
        sum += twin.min_q(s0, a);
    }
    return sum / mc_action_samples;
}

}  // namespace

OfflineEvaluation evaluate_offline(const SwitchProblem& problem,
                                   const TabularPolicy& policy,
                                   const TransitionDataset& data, const OpeConfig& cfg,
                                   std::optional<double> cost_override) {
    problem.mdp.require_compatible(policy);
    if (data.records.empty()) throw std::invalid_argument("offline evaluation: empty dataset");
    if (problem.mdp.discount >= 1.0)
        throw std::invalid_argument("offline evaluation: discount must be < 1");
    if (cfg.batch_size < 1 || cfg.steps_per_epoch < 1 || cfg.epochs < 0 || cfg.lr_q <= 0.0)
        throw std::invalid_argument("offline evaluation: bad configuration");
    if (cfg.soft < 0.0 || cfg.soft > 1.0)
        throw std::invalid_argument("offline evaluation: soft must lie in [0, 1]");
    data.validate();

    const double cost_value =
        cost_override ? *cost_override
                      : switching_cost(problem.cost, problem.old_policy, policy);
    const double gamma = problem.mdp.discount;

    OfflineEvaluation out;
    out.twin = TwinNetQ::zeros(problem.mdp.n_states, problem.mdp.n_actions,
                               cfg.n_estimators);
    Rng rng(cfg.seed);
    const CriticStep step{cfg.batch_size, cfg.lr_q, cfg.grad_clip_q, cfg.soft};

    double prev_loss = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        for (int s = 0; s < cfg.steps_per_epoch; ++s)
            loss_sum += critic_batch_step(out.twin, data, policy, cost_value, gamma,
                                          step, rng);
        const double mean_loss = loss_sum / cfg.steps_per_epoch;
        const double v_est =
            readout(out.twin, policy, problem.initial_state, cfg.mc_action_samples, rng);
        out.trace.push_back({epoch, mean_loss, v_est});
        if (std::abs(mean_loss - prev_loss) < cfg.loss_change_tol) break;
        prev_loss = mean_loss;
    }

    out.v_net_hat = out.trace.empty() ? readout(out.twin, policy, problem.initial_state,
                                                cfg.mc_action_samples, rng)
                                      : out.trace.back().v_net_estimate;
    if (!std::isfinite(out.v_net_hat))
        throw std::runtime_error("offline evaluation: estimate diverged");

    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
            problem.mdp.n_states, problem.mdp.n_actions, false);
    for (const auto& rec : data.records) seen(rec.state, rec.action) = true;
    out.covered_pairs = static_cast<int>(seen.cast<int>().sum());
    out.coverage_fraction = static_cast<double>(out.covered_pairs) /
                            (problem.mdp.n_states * problem.mdp.n_actions);
    return out;
}

void write_dataset(std::ostream& out, const TransitionDataset& data) {
    out << "dataset " << data.records.size() << ' ' << data.n_states << ' '
        << data.n_actions << ' ' << data.horizon << ' ' << data.behavior_policy_id
        << '\n';
    for (const auto& r : data.records)
        out << r.episode << ' ' << r.t << ' ' << r.state << ' ' << r.action << ' '
            << fmt_exact(r.reward) << ' ' << r.next_state << ' ' << (r.done ? 1 : 0)
            << '\n';
}

TransitionDataset read_dataset(std::istream& in) {
    std::string tag;
    std::size_t n_records = 0;
    TransitionDataset data;
    if (!(in >> tag >> n_records >> data.n_states >> data.n_actions >> data.horizon >>
          data.behavior_policy_id) ||
        tag != "dataset")
        throw std::runtime_error("dataset file: bad header");
    data.records.reserve(n_records);
    for (std::size_t i = 0; i < n_records; ++i) {
        TransitionDataset::Record r{};
        int done = 0;
        if (!(in >> r.episode >> r.t >> r.state >> r.action >> r.reward >>
              r.next_state >> done))
            throw std::runtime_error("dataset file: truncated");
        r.done = done != 0;
        data.records.push_back(r);
    }
    try {
        data.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("dataset file: ") + e.what());
    }
    return data;
}

TransitionDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_dataset(in);
}

void save_dataset(const std::string& path, const TransitionDataset& data) {
    atomic_write_file(path, [&](std::ostream& out) { write_dataset(out, data); });
}

std::string format_loss_trace(const std::vector<EpochStats>& trace) {
    std::ostringstream out;
    for (const auto& e : trace)
        out << e.epoch << ' ' << fmt_g12(e.mean_td_loss) << ' '
            << fmt_g12(e.v_net_estimate) << '\n';
    return out.str();
}

}  // namespace switchrl
