#include "switchrl/mdp.hpp"

#include "switchrl/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace switchrl {

namespace {

void require_stochastic_rows(const Matrix& m, const char* what) {
    for (Eigen::Index s = 0; s < m.rows(); ++s) {
        if ((m.row(s).array() < 0.0).any())
            throw std::invalid_argument(std::string(what) + ": negative entry in row " +
                                        std::to_string(s));
        const double sum = m.row(s).sum();
        if (std::abs(sum - 1.0) > kRowSumTol)
            throw std::invalid_argument(std::string(what) + ": row " + std::to_string(s) +
                                        " sums to " + std::to_string(sum));
    }
}

}  // namespace

TabularPolicy::TabularPolicy(Matrix p) : probs(std::move(p)) {
    if (probs.rows() < 1 || probs.cols() < 1)
        throw std::invalid_argument("policy: empty table");
    require_stochastic_rows(probs, "policy");
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
    return TabularPolicy(Matrix::Constant(n_states, n_actions, 1.0 / n_actions));
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& action_per_state,
                                           int n_actions) {
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(action_per_state.size()), n_actions);
    for (std::size_t s = 0; s < action_per_state.size(); ++s) {
        const int a = action_per_state[s];
        if (a < 0 || a >= n_actions)
            throw std::invalid_argument("deterministic policy: action out of range");
        p(static_cast<Eigen::Index>(s), a) = 1.0;
    }
    return TabularPolicy(std::move(p));
}

bool rows_match(const RowVector& a, const RowVector& b) {
    if (a.size() != b.size()) return false;
    return ((a - b).array().abs() <= kRowEqualTol).all();
}

bool policies_match(const TabularPolicy& a, const TabularPolicy& b) {
    if (a.probs.rows() != b.probs.rows() || a.probs.cols() != b.probs.cols()) return false;
    return ((a.probs - b.probs).array().abs() <= kRowEqualTol).all();
}

FiniteMdp::FiniteMdp(std::vector<Matrix> transition_by_action, Matrix reward,
                     Matrix noise_halfwidth, int horizon_, double discount_,
                     int initial_state_)
    : n_states(static_cast<int>(reward.rows())),
      n_actions(static_cast<int>(reward.cols())),
      transition(std::move(transition_by_action)),
      reward_mean(std::move(reward)),
      reward_noise_halfwidth(std::move(noise_halfwidth)),
      horizon(horizon_),
      discount(discount_),
      initial_state(initial_state_) {
    if (n_states < 1 || n_actions < 1) throw std::invalid_argument("mdp: empty tables");
    if (static_cast<int>(transition.size()) != n_actions)
        throw std::invalid_argument("mdp: transition needs one matrix per action");
    for (int a = 0; a < n_actions; ++a) {
        if (transition[a].rows() != n_states || transition[a].cols() != n_states)
            throw std::invalid_argument("mdp: transition matrix shape mismatch");
        require_stochastic_rows(transition[a], "mdp transition");
    }
    if (reward_noise_halfwidth.rows() != n_states ||
        reward_noise_halfwidth.cols() != n_actions)
        throw std::invalid_argument("mdp: reward noise shape mismatch");
    if ((reward_noise_halfwidth.array() < 0.0).any())
        throw std::invalid_argument("mdp: negative reward noise half-width");
    if (horizon < 1) throw std::invalid_argument("mdp: horizon must be >= 1");
    if (discount < 0.0 || discount > 1.0)
        throw std::invalid_argument("mdp: discount must lie in [0, 1]");
    if (initial_state < 0 || initial_state >= n_states)
        throw std::invalid_argument("mdp: initial state out of range");
}

double FiniteMdp::max_abs_reward() const {
    return (reward_mean.array().abs() + reward_noise_halfwidth.array()).maxCoeff();
}

void FiniteMdp::require_compatible(const TabularPolicy& policy) const {
    if (policy.n_states() != n_states || policy.n_actions() != n_actions)
        throw std::invalid_argument("policy shape does not match mdp");
}

Valuation evaluate_exact(const FiniteMdp& mdp, const TabularPolicy& policy) {
    mdp.require_compatible(policy);
    const double gamma = mdp.discount;
    Vector v_next = Vector::Zero(mdp.n_states);
    Matrix q(mdp.n_states, mdp.n_actions);
    for (int t = mdp.horizon - 1; t >= 0; --t) {
        for (int a = 0; a < mdp.n_actions; ++a)
            q.col(a) = mdp.reward_mean.col(a) + gamma * (mdp.transition[a] * v_next);
        v_next = (policy.probs.array() * q.array()).rowwise().sum();
    }
    return Valuation{std::move(v_next), std::move(q)};
}

Matrix evaluate_infinite(const FiniteMdp& mdp, const TabularPolicy& policy, double tol) {
    mdp.require_compatible(policy);
    const double gamma = mdp.discount;
    if (gamma >= 1.0)
        throw std::invalid_argument("evaluate_infinite: discount must be < 1");

    // State kernel and reward under the policy, then V = (I - gamma P_pi)^-1 R_pi.
    Matrix p_pi = Matrix::Zero(mdp.n_states, mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a)
        p_pi += policy.probs.col(a).asDiagonal() * mdp.transition[a];
    const Vector r_pi = (policy.probs.array() * mdp.reward_mean.array()).rowwise().sum();
    const Matrix system = Matrix::Identity(mdp.n_states, mdp.n_states) - gamma * p_pi;
    const Vector v = system.partialPivLu().solve(r_pi);

    Matrix q(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
        q.col(a) = mdp.reward_mean.col(a) + gamma * (mdp.transition[a] * v);

    // Residual of the Q fixed point itself.
    const Vector v_back = (policy.probs.array() * q.array()).rowwise().sum();
    Matrix residual(mdp.n_states, mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
        residual.col(a) =
            mdp.reward_mean.col(a) + gamma * (mdp.transition[a] * v_back) - q.col(a);
    if (residual.array().abs().maxCoeff() > tol)
        throw std::runtime_error("evaluate_infinite: residual above tolerance");
    return q;
}

std::vector<Trajectory> simulate(const FiniteMdp& mdp, const TabularPolicy& policy,
                                 int n_episodes, std::uint64_t seed) {
    mdp.require_compatible(policy);
    if (n_episodes < 1) throw std::invalid_argument("simulate: n_episodes must be >= 1");

    Rng rng(seed);
    std::vector<Trajectory> episodes;
    episodes.reserve(static_cast<std::size_t>(n_episodes));
    for (int ep = 0; ep < n_episodes; ++ep) {
        Trajectory traj;
        traj.steps.reserve(static_cast<std::size_t>(mdp.horizon));
        int s = mdp.initial_state;
        double factor = 1.0;
        for (int t = 0; t < mdp.horizon; ++t) {
            const int a = rng.sample(policy.probs.row(s));
            const double hw = mdp.reward_noise_halfwidth(s, a);
            double r = mdp.reward_mean(s, a);
            if (hw > 0.0) r += rng.uniform(-hw, hw);
            const int s_next = rng.sample(mdp.transition[a].row(s));
            traj.steps.push_back({s, a, r, s_next});
            traj.episode_return += factor * r;
            factor *= mdp.discount;
            s = s_next;
        }
        episodes.push_back(std::move(traj));
    }
    return episodes;
}

void write_mdp(std::ostream& out, const FiniteMdp& mdp) {
    out << "mdp " << mdp.n_states << ' ' << mdp.n_actions << ' ' << mdp.horizon << ' '
        << fmt_exact(mdp.discount) << ' ' << mdp.initial_state << '\n';
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            out << s << ' ' << a << ' ' << fmt_exact(mdp.reward_mean(s, a)) << ' '
                << fmt_exact(mdp.reward_noise_halfwidth(s, a));
            for (int sp = 0; sp < mdp.n_states; ++sp)
                out << ' ' << fmt_exact(mdp.transition[a](s, sp));
            out << '\n';
        }
    }
}

FiniteMdp read_mdp(std::istream& in) {
    std::string tag;
    int n_states = 0, n_actions = 0, horizon = 0, s0 = 0;
    double gamma = 0.0;
    if (!(in >> tag >> n_states >> n_actions >> horizon >> gamma >> s0) || tag != "mdp")
        throw std::runtime_error("mdp file: bad header");
    if (n_states < 1 || n_actions < 1)
        throw std::runtime_error("mdp file: bad dimensions");
    std::vector<Matrix> transition(static_cast<std::size_t>(n_actions),
                                   Matrix::Zero(n_states, n_states));
    Matrix reward = Matrix::Zero(n_states, n_actions);
    Matrix halfwidth = Matrix::Zero(n_states, n_actions);
    for (int line = 0; line < n_states * n_actions; ++line) {
        int s = 0, a = 0;
        if (!(in >> s >> a)) throw std::runtime_error("mdp file: truncated");
        if (s < 0 || s >= n_states || a < 0 || a >= n_actions)
            throw std::runtime_error("mdp file: state/action out of range");
        if (!(in >> reward(s, a) >> halfwidth(s, a)))
            throw std::runtime_error("mdp file: bad reward entry");
        for (int sp = 0; sp < n_states; ++sp)
            if (!(in >> transition[a](s, sp)))
                throw std::runtime_error("mdp file: bad transition entry");
    }
    try {
        return FiniteMdp(std::move(transition), std::move(reward), std::move(halfwidth),
                         horizon, gamma, s0);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("mdp file: ") + e.what());
    }
}

FiniteMdp load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_mdp(in);
}

void save_mdp(const std::string& path, const FiniteMdp& mdp) {
    atomic_write_file(path, [&](std::ostream& out) { write_mdp(out, mdp); });
}

void write_policy(std::ostream& out, const TabularPolicy& policy) {
    out << "policy " << policy.n_states() << ' ' << policy.n_actions() << '\n';
    for (int s = 0; s < policy.n_states(); ++s) {
        out << s;
        for (int a = 0; a < policy.n_actions(); ++a)
            out << ' ' << fmt_exact(policy.probs(s, a));
        out << '\n';
    }
}

TabularPolicy read_policy(std::istream& in) {
    std::string tag;
    int n_states = 0, n_actions = 0;
    if (!(in >> tag >> n_states >> n_actions) || tag != "policy")
        throw std::runtime_error("policy file: bad header");
    if (n_states < 1 || n_actions < 1)
        throw std::runtime_error("policy file: bad dimensions");
    Matrix p(n_states, n_actions);
    for (int line = 0; line < n_states; ++line) {
        int s = 0;
        if (!(in >> s) || s < 0 || s >= n_states)
            throw std::runtime_error("policy file: bad state index");
        for (int a = 0; a < n_actions; ++a)
            if (!(in >> p(s, a))) throw std::runtime_error("policy file: truncated row");
    }
    try {
        return TabularPolicy(std::move(p));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("policy file: ") + e.what());
    }
}

TabularPolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_policy(in);
}

void save_policy(const std::string& path, const TabularPolicy& policy) {
    atomic_write_file(path, [&](std::ostream& out) { write_policy(out, policy); });
}

}  // namespace switchrl
