#include "switchrl/net_value.hpp"

#include "switchrl/io.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace switchrl {

namespace {

Matrix net_backup(const FiniteMdp& mdp, const TabularPolicy& policy, const Matrix& q_net,
                  double penalty) {
    const Vector v_net = (policy.probs.array() * q_net.array()).rowwise().sum();
    Matrix out(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
        out.col(a) = mdp.reward_mean.col(a).array() - penalty +
                     mdp.discount * (mdp.transition[a] * v_net).array();
    return out;
}

long long checked_pow(int base, int exp, long long limit) {
    long long result = 1;
    for (int i = 0; i < exp; ++i) {
        result *= base;
        if (result > limit) return limit + 1;
    }
    return result;
}

// All length-`n_actions` rows of nonnegative counts summing to grid_points,
// in lexicographic order.
void grid_rows(int n_actions, int grid_points, std::vector<RowVector>* out) {
    std::vector<int> counts(static_cast<std::size_t>(n_actions), 0);
    const std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == n_actions - 1) {
            counts[static_cast<std::size_t>(pos)] = left;
            RowVector row(n_actions);
            for (int a = 0; a < n_actions; ++a)
                row(a) = static_cast<double>(counts[static_cast<std::size_t>(a)]) /
                         grid_points;
            out->push_back(std::move(row));
            return;
        }
        for (int c = 0; c <= left; ++c) {
            counts[static_cast<std::size_t>(pos)] = c;
            rec(pos + 1, left - c);
        }
    };
    rec(0, grid_points);
}

}  // namespace

SwitchProblem::SwitchProblem(FiniteMdp mdp_, TabularPolicy old_policy_, CostSpec cost_)
    : SwitchProblem(std::move(mdp_), std::move(old_policy_), std::move(cost_), -1) {}

SwitchProblem::SwitchProblem(FiniteMdp mdp_, TabularPolicy old_policy_, CostSpec cost_,
                             int initial_state_)
    : mdp(std::move(mdp_)),
      old_policy(std::move(old_policy_)),
      cost(std::move(cost_)),
      initial_state(initial_state_ < 0 ? mdp.initial_state : initial_state_) {
    mdp.require_compatible(old_policy);
    cost.validate(mdp.n_states, mdp.n_actions);
    if (initial_state >= mdp.n_states)
        throw std::invalid_argument("switch problem: initial state out of range");
}

NetValuation net_value_exact(const SwitchProblem& problem, const TabularPolicy& candidate) {
    problem.mdp.require_compatible(candidate);
    const Valuation val = evaluate_exact(problem.mdp, candidate);
    const double c = switching_cost(problem.cost, problem.old_policy, candidate);
    NetValuation out;
    out.switch_cost = c;
    out.v_net_all = val.v.array() - c;
    out.q_net = val.q.array() - c;
    out.v_net = out.v_net_all(problem.initial_state);
    return out;
}

Matrix net_bellman_apply(const SwitchProblem& problem, const TabularPolicy& policy,
                         const Matrix& q_net) {
    problem.mdp.require_compatible(policy);
    if (q_net.rows() != problem.mdp.n_states || q_net.cols() != problem.mdp.n_actions)
        throw std::invalid_argument("net backup: q table shape mismatch");
    if (problem.mdp.discount >= 1.0)
        throw std::invalid_argument("net backup: discount must be < 1");
    const double c = switching_cost(problem.cost, problem.old_policy, policy);
    return net_backup(problem.mdp, policy, q_net, (1.0 - problem.mdp.discount) * c);
}

Matrix net_q_fixed_point(const SwitchProblem& problem, const TabularPolicy& policy,
                         double tol, int max_iters) {
    problem.mdp.require_compatible(policy);
    if (problem.mdp.discount >= 1.0)
        throw std::invalid_argument("net fixed point: discount must be < 1");
    const double c = switching_cost(problem.cost, problem.old_policy, policy);
    const double penalty = (1.0 - problem.mdp.discount) * c;

    Matrix q = Matrix::Zero(problem.mdp.n_states, problem.mdp.n_actions);
    for (int k = 0; k < max_iters; ++k) {
        Matrix next = net_backup(problem.mdp, policy, q, penalty);
        const double change = (next - q).array().abs().maxCoeff();
        q = std::move(next);
        if (change <= tol) return q;
    }
    throw std::runtime_error("net fixed point: did not converge within max_iters");
}

std::vector<TabularPolicy> enumerate_policies(int n_states, int n_actions,
                                              const CandidateSet& set) {
    constexpr long long kLimit = 1000000;
    std::vector<TabularPolicy> out;
    if (set.kind == CandidateSet::Kind::Deterministic) {
        const long long count = checked_pow(n_actions, n_states, kLimit);
        if (count > kLimit)
            throw std::invalid_argument("candidate set: more than 1e6 deterministic policies");
        std::vector<int> actions(static_cast<std::size_t>(n_states), 0);
        for (long long id = 0; id < count; ++id) {
            long long rest = id;
            for (int s = 0; s < n_states; ++s) {
                actions[static_cast<std::size_t>(s)] = static_cast<int>(rest % n_actions);
                rest /= n_actions;
            }
            out.push_back(TabularPolicy::deterministic(actions, n_actions));
        }
        return out;
    }

    if (set.grid_points < 1)
        throw std::invalid_argument("candidate set: grid needs at least one step");
    std::vector<RowVector> rows;
    grid_rows(n_actions, set.grid_points, &rows);
    const long long per_state = static_cast<long long>(rows.size());
    long long count = 1;
    for (int s = 0; s < n_states; ++s) {
        count *= per_state;
        if (count > kLimit)
            throw std::invalid_argument("candidate set: more than 1e6 grid policies");
    }
    for (long long id = 0; id < count; ++id) {
        Matrix p(n_states, n_actions);
        long long rest = id;
        for (int s = 0; s < n_states; ++s) {
            p.row(s) = rows[static_cast<std::size_t>(rest % per_state)];
            rest /= per_state;
        }
        out.push_back(TabularPolicy(std::move(p)));
    }
    return out;
}

SearchResult switch_optimal_search(const SwitchProblem& problem, const CandidateSet& set) {
    const std::vector<TabularPolicy> candidates =
        enumerate_policies(problem.mdp.n_states, problem.mdp.n_actions, set);
    if (candidates.empty()) throw std::invalid_argument("search: empty candidate set");

    SearchResult result;
    const NetValuation old_val = net_value_exact(problem, problem.old_policy);
    result.best = problem.old_policy;
    result.v_net = old_val.v_net;
    result.kept_old = true;
    result.ranking.push_back({"old", old_val.v_net + old_val.switch_cost,
                              old_val.switch_cost, old_val.v_net});

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const NetValuation val = net_value_exact(problem, candidates[i]);
        result.ranking.push_back({std::to_string(i), val.v_net + val.switch_cost,
                                  val.switch_cost, val.v_net});
        if (val.v_net > result.v_net) {
            result.v_net = val.v_net;
            result.best = candidates[i];
            result.kept_old = false;
        }
    }
    std::stable_sort(result.ranking.begin(), result.ranking.end(),
                     [](const SearchResult::Row& a, const SearchResult::Row& b) {
                         return a.net > b.net;
                     });
    return result;
}

std::string format_ranking(const SearchResult& result) {
    std::ostringstream out;
    out << "rank, policy_id, value, cost, net_value\n";
    for (std::size_t i = 0; i < result.ranking.size(); ++i) {
        const auto& row = result.ranking[i];
        out << (i + 1) << ", " << row.policy_id << ", " << fmt_g12(row.value) << ", "
            << fmt_g12(row.cost) << ", " << fmt_g12(row.net) << '\n';
    }
    return out.str();
}

std::optional<CustomCostTable> nontriviality_witness(const FiniteMdp& mdp,
                                                     const TabularPolicy& pi_o,
                                                     const CandidateSet& set) {
    std::vector<TabularPolicy> pool = enumerate_policies(mdp.n_states, mdp.n_actions, set);
    if (pool.empty()) throw std::invalid_argument("witness: empty candidate set");
    pool.push_back(pi_o);
    const std::size_t old_index = pool.size() - 1;

    std::vector<double> values(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        values[i] = evaluate_exact(mdp, pool[i]).v(mdp.initial_state);

    const std::size_t star =
        static_cast<std::size_t>(std::max_element(values.begin(), values.end()) -
                                 values.begin());
    const double v_star = values[star];
    const double v_min = *std::min_element(values.begin(), values.end());
    const double scale = std::max(1.0, std::abs(v_star));
    if (v_star - v_min <= 1e-12 * scale) return std::nullopt;  // all candidates tie

    const PolicyClass star_class = classify_policy(pool[star]);

    // Prefer the best-valued policy in a different fingerprint class; the
    // incumbent also works through the identical-policy exemption.
    double v_ref = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (values[i] >= v_star - 1e-12 * scale) continue;
        const bool distinguishable =
            classify_policy(pool[i]) != star_class || i == old_index;
        if (distinguishable && values[i] > v_ref) {
            v_ref = values[i];
            found = true;
        }
    }
    if (!found) return std::nullopt;

    const double gap = v_star - v_ref;
    CustomCostTable table;
    for (PolicyClass c : {PolicyClass::DeterministicSameAction,
                          PolicyClass::DeterministicMixed,
                          PolicyClass::StochasticAnywhere})
        table.entries[{"*", policy_class_name(c)}] = c == star_class ? gap + 1.0 : 0.0;
    return table;
}

}  // namespace switchrl
