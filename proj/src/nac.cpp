#include "switchrl/nac.hpp"

#include "switchrl/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace switchrl {

TabularPolicy ActorParams::policy() const {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index s = 0; s < logits.rows(); ++s) {
        const RowVector row = logits.row(s);
        const RowVector shifted = (row.array() - row.maxCoeff()).exp();
        p.row(s) = shifted / shifted.sum();
    }
    return TabularPolicy(std::move(p));
}

ActorParams ActorParams::from_policy(const TabularPolicy& policy, double floor) {
    ActorParams actor;
    actor.logits = policy.probs.array().max(floor).min(1.0).log();
    return actor;
}

double actor_objective(const TwinNetQ& twin, const ActorParams& actor, int s0) {
    const TabularPolicy pi = actor.policy();
    return pi.probs.row(s0).dot(twin.min_q_row(s0));
}

double actor_objective_mc(const TwinNetQ& twin, const ActorParams& actor, int s0,
                          int n_samples, Rng& rng) {
    if (n_samples < 1) throw std::invalid_argument("actor objective: need samples");
    const TabularPolicy pi = actor.policy();
    double sum = 0.0;
    for (int i = 0; i < n_samples; ++i) sum += twin.min_q(s0, rng.sample(pi.probs.row(s0)));
    return sum / n_samples;
}

RowVector actor_gradient(const TwinNetQ& twin, const ActorParams& actor, int s0) {
    const TabularPolicy pi = actor.policy();
    const RowVector p = pi.probs.row(s0);
    const RowVector q = twin.min_q_row(s0);
    const double mean = p.dot(q);
    // d/dtheta_a of sum_b softmax(theta)_b q_b = p_a (q_a - sum_b p_b q_b)
    return p.array() * (q.array() - mean);
}

ActorParams actor_step(const ActorParams& actor, const TwinNetQ& twin, int s0, double lr,
                       double grad_clip) {
    if (lr <= 0.0) throw std::invalid_argument("actor step: lr must be positive");
    RowVector g = actor_gradient(twin, actor, s0);
    const double norm = g.norm();
    if (norm > grad_clip) g *= grad_clip / norm;
    ActorParams next = actor;
    next.logits.row(s0) += lr * g;
    return next;
}

bool stopping_check(double v0, double v1, double v2, const StoppingConfig& cfg,
                    int epoch) {
    if (cfg.window != 2) throw std::invalid_argument("stopping: window is fixed at 2");
    if (cfg.alpha <= 0.0 || cfg.b_u <= 0.0 || cfg.b_d <= 0.0)
        throw std::invalid_argument("stopping: bounds must be positive");
    if (epoch < cfg.epochs_stop) return false;
    if (v0 > 0.0) {
        if (v1 > (1.0 + cfg.alpha) * v0 && v2 > (1.0 + cfg.alpha) * v0) return true;
    } else {
        if (v1 > 0.0 && v2 > 0.0) return true;
    }
    if (v1 >= v0 + cfg.b_u && v2 >= v0 + cfg.b_u) return true;
    if (v1 <= v0 - cfg.b_d && v2 <= v0 - cfg.b_d) return true;
    return false;
}

NacReport run_nac(const SwitchProblem& problem, const TransitionDataset& data,
                  const NacConfig& cfg) {
    if (data.records.empty()) throw std::invalid_argument("nac: empty dataset");
    if (problem.mdp.discount >= 1.0)
        throw std::invalid_argument("nac: discount must be < 1");
    data.validate();

    // Step 1: fitted evaluation of the incumbent. The decision rule compares
    // against the incumbent's plain value, so the cost term is pinned to 0.
    OpeConfig eval_cfg = cfg.evaluation;
    eval_cfg.seed = Rng::derive(cfg.seed, 1);
    const OfflineEvaluation old_eval =
        evaluate_offline(problem, problem.old_policy, data, eval_cfg, 0.0);
    const double v_old = old_eval.v_net_hat;

    // Steps 2-3: alternate critic regression and actor ascent.
    ActorParams actor = ActorParams::from_policy(problem.old_policy);
    TwinNetQ twin = TwinNetQ::zeros(problem.mdp.n_states, problem.mdp.n_actions,
                                    cfg.n_estimators);
    Rng rng(Rng::derive(cfg.seed, 2));
    const CriticStep critic{cfg.batch_size, cfg.lr_q, cfg.grad_clip_q, cfg.soft};
    const double gamma = problem.mdp.discount;
    const int s0 = problem.initial_state;

    std::vector<double> value_trace;
    int epochs_run = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        double value_sum = 0.0;
        for (int step = 0; step < cfg.steps_per_epoch; ++step) {
            const TabularPolicy pi_theta = actor.policy();
            const double cost_value =
                cfg.mc_cost_states_train > 0
                    ? switching_cost(problem.cost, problem.old_policy, pi_theta,
                                     cfg.mc_cost_states_train, rng.raw())
                    : switching_cost(problem.cost, problem.old_policy, pi_theta);
            critic_batch_step(twin, data, pi_theta, cost_value, gamma, critic, rng);
            actor = actor_step(actor, twin, s0, cfg.lr_actor, cfg.grad_clip_actor);
            value_sum += actor_objective(twin, actor, s0);
        }
        const double epoch_value = value_sum / cfg.steps_per_epoch;
        if (!std::isfinite(epoch_value))
            throw std::runtime_error("nac: net value estimate diverged at epoch " +
                                     std::to_string(epoch));
        value_trace.push_back(epoch_value);
        epochs_run = epoch;
        if (value_trace.size() >= 2 &&
            stopping_check(v_old, value_trace[value_trace.size() - 2],
                           value_trace.back(), cfg.stopping, epoch))
            break;
    }

    // Step 4: optional re-evaluation of the found policy, then the decision.
    NacReport report;
    report.new_policy = actor.policy();
    report.v_old = v_old;
    report.epochs_run = epochs_run;
    report.value_trace = std::move(value_trace);
    report.coverage_fraction = old_eval.coverage_fraction;

    if (cfg.final_evaluation) {
        // Common random stream with the incumbent's evaluation: identical
        // policies tie exactly and the comparison noise largely cancels.
        OpeConfig final_cfg = cfg.evaluation;
        final_cfg.seed = Rng::derive(cfg.seed, 1);
        std::optional<double> cost_value;
        if (cfg.mc_cost_states_eval > 0)
            cost_value = switching_cost(problem.cost, problem.old_policy,
                                        report.new_policy, cfg.mc_cost_states_eval,
                                        Rng::derive(cfg.seed, 4));
        report.v_new_net =
            evaluate_offline(problem, report.new_policy, data, final_cfg, cost_value)
                .v_net_hat;
    } else if (!report.value_trace.empty()) {
        report.v_new_net = report.value_trace.back();
    } else {
        report.v_new_net = actor_objective(twin, actor, s0);
    }
    if (!std::isfinite(report.v_new_net) || !std::isfinite(report.v_old))
        throw std::runtime_error("nac: non-finite value estimates");

    report.switch_flag = report.v_new_net > report.v_old;
    report.chosen = report.switch_flag ? "new" : "old";
    return report;
}

bool responsibility_check(const SwitchProblem& problem, const NacReport& report,
                          int n_eval_episodes, std::uint64_t seed) {
    const double cost_value =
        switching_cost(problem.cost, problem.old_policy, report.new_policy);
    double v_old_true = 0.0, v_new_true = 0.0;
    if (n_eval_episodes <= 0) {
        if (problem.mdp.discount < 1.0) {
            const Matrix q_old = evaluate_infinite(problem.mdp, problem.old_policy, 1e-9);
            const Matrix q_new = evaluate_infinite(problem.mdp, report.new_policy, 1e-9);
            v_old_true = problem.old_policy.probs.row(problem.initial_state)
                             .dot(q_old.row(problem.initial_state));
            v_new_true = report.new_policy.probs.row(problem.initial_state)
                             .dot(q_new.row(problem.initial_state));
        } else {
            v_old_true = evaluate_exact(problem.mdp, problem.old_policy)
                             .v(problem.initial_state);
            v_new_true = evaluate_exact(problem.mdp, report.new_policy)
                             .v(problem.initial_state);
        }
    } else {
        FiniteMdp env = problem.mdp;
        env.initial_state = problem.initial_state;
        double sum_old = 0.0, sum_new = 0.0;
        for (const Trajectory& t : simulate(env, problem.old_policy, n_eval_episodes,
                                            Rng::derive(seed, 1)))
            sum_old += t.episode_return;
        for (const Trajectory& t : simulate(env, report.new_policy, n_eval_episodes,
                                            Rng::derive(seed, 2)))
            sum_new += t.episode_return;
        v_old_true = sum_old / n_eval_episodes;
        v_new_true = sum_new / n_eval_episodes;
    }
    const bool should_switch = v_new_true - cost_value > v_old_true;
    return should_switch == report.switch_flag;
}

void write_report(std::ostream& out, const NacReport& report) {
    out << "chosen=" << report.chosen << '\n';
    out << "switch=" << (report.switch_flag ? 1 : 0) << '\n';
    out << "v_old=" << fmt_exact(report.v_old) << '\n';
    out << "v_new_net=" << fmt_exact(report.v_new_net) << '\n';
    out << "epochs_run=" << report.epochs_run << '\n';
    out << "coverage=" << fmt_exact(report.coverage_fraction) << '\n';
    out << "trace " << report.value_trace.size() << '\n';
    for (std::size_t i = 0; i < report.value_trace.size(); ++i)
        out << (i + 1) << ' ' << fmt_exact(report.value_trace[i]) << '\n';
    write_policy(out, report.new_policy);
}

NacReport read_report(std::istream& in) {
    NacReport report;
    auto read_kv = [&](const char* key) {
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("report file: truncated");
        const std::string prefix = std::string(key) + "=";
        if (line.rfind(prefix, 0) != 0)
            throw std::runtime_error("report file: expected " + prefix);
        return line.substr(prefix.size());
    };
    report.chosen = read_kv("chosen");
    report.switch_flag = read_kv("switch") == "1";
    report.v_old = std::stod(read_kv("v_old"));
    report.v_new_net = std::stod(read_kv("v_new_net"));
    report.epochs_run = std::stoi(read_kv("epochs_run"));
    report.coverage_fraction = std::stod(read_kv("coverage"));
    std::string tag;
    std::size_t n_trace = 0;
    if (!(in >> tag >> n_trace) || tag != "trace")
        throw std::runtime_error("report file: bad trace header");
    report.value_trace.resize(n_trace);
    for (std::size_t i = 0; i < n_trace; ++i) {
        std::size_t idx = 0;
        if (!(in >> idx >> report.value_trace[i]))
            throw std::runtime_error("report file: truncated trace");
    }
    report.new_policy = read_policy(in);
    return report;
}

void save_report(const std::string& path, const NacReport& report) {
    atomic_write_file(path, [&](std::ostream& out) { write_report(out, report); });
}

NacReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_report(in);
}

}  // namespace switchrl
