#include "switchrl/verify.hpp"

#include "switchrl/config.hpp"
#include "switchrl/fixtures.hpp"
#include "switchrl/io.hpp"
#include "switchrl/nac.hpp"
#include "switchrl/net_value.hpp"
#include "switchrl/offline.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace switchrl {

namespace {

struct Expect {
    bool ok = true;
    std::string detail;

    void eq(const std::string& what, double got, double want, double tol = 0.0) {
        if (std::abs(got - want) <= tol) return;
        fail(what + ": got " + fmt_g12(got) + ", want " + fmt_g12(want));
    }
    void holds(const std::string& what, bool condition) {
        if (!condition) fail(what);
    }
    void fail(const std::string& what) {
        if (ok) detail = what;  // keep the first divergence
        ok = false;
    }
};

struct Check {
    std::string name;
    std::function<void(const VerificationInputs&, Expect&)> run;
};

SwitchProblem problem_at(const VerificationInputs& in, int s0) {
    return SwitchProblem(in.two_state, two_state_old_policy(),
                         CostSpec::custom(in.two_state_costs), s0);
}

Matrix random_stochastic(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (int c = 0; c < cols; ++c) {
            m(r, c) = rng.uniform(1e-3, 1.0);
            sum += m(r, c);
        }
        m.row(r) /= sum;
    }
    return m;
}

FiniteMdp random_mdp(Rng& rng, int max_states = 8, int max_actions = 4) {
    const int S = 2 + static_cast<int>(rng.uniform01() * (max_states - 1));
    const int A = 2 + static_cast<int>(rng.uniform01() * (max_actions - 1));
    std::vector<Matrix> transition;
    for (int a = 0; a < A; ++a) transition.push_back(random_stochastic(S, S, rng));
    Matrix reward(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) reward(s, a) = rng.uniform(-1.0, 1.0);
    const double gamma = rng.uniform(0.1, 0.99);
    return FiniteMdp(std::move(transition), std::move(reward), Matrix::Zero(S, A), 10,
                     gamma, 0);
}

std::vector<int> random_partition(int n_actions, int n_components, Rng& rng) {
    std::vector<int> partition(static_cast<std::size_t>(n_actions));
    for (int a = 0; a < n_components; ++a) partition[static_cast<std::size_t>(a)] = a;
    for (int a = n_components; a < n_actions; ++a)
        partition[static_cast<std::size_t>(a)] =
            static_cast<int>(rng.uniform01() * n_components);
    return partition;
}

const std::vector<Check>& checks() {
    static const std::vector<Check> kChecks = {
        {"two-state-values",
         [](const VerificationInputs& in, Expect& e) {
             const auto stay = evaluate_exact(in.two_state, two_state_policy_stay());
             e.eq("V_stay(0)", stay.v(0), 100.0);
             e.eq("V_stay(1)", stay.v(1), 0.0);
             const auto move = evaluate_exact(in.two_state, two_state_policy_move());
             e.eq("V_move(0)", move.v(0), 50.0);
             e.eq("V_move(1)", move.v(1), 50.0);
             const auto sm = evaluate_exact(in.two_state, two_state_policy_stay_move());
             e.eq("V_stay_move(0)", sm.v(0), 100.0);
             e.eq("V_stay_move(1)", sm.v(1), 100.0);
             const auto ms = evaluate_exact(in.two_state, two_state_policy_move_stay());
             e.eq("V_move_stay(0)", ms.v(0), 0.0);
             e.eq("V_move_stay(1)", ms.v(1), 0.0);
             const auto old = evaluate_exact(in.two_state, two_state_old_policy());
             e.eq("V_old(0)", old.v(0), 50.0);
             e.eq("V_old(1)", old.v(1), 50.0);
         }},
        {"two-state-net-values",
         [](const VerificationInputs& in, Expect& e) {
             const SwitchProblem prob = problem_at(in, 0);
             const auto n1 = net_value_exact(prob, two_state_policy_stay());
             e.eq("VN_stay(0)", n1.v_net_all(0), 75.0);
             e.eq("VN_stay(1)", n1.v_net_all(1), -25.0);
             const auto n2 = net_value_exact(prob, two_state_policy_move());
             e.eq("VN_move(0)", n2.v_net_all(0), 25.0);
             e.eq("VN_move(1)", n2.v_net_all(1), 25.0);
             const auto n3 = net_value_exact(prob, two_state_policy_stay_move());
             e.eq("VN_stay_move(0)", n3.v_net_all(0), 50.0);
             e.eq("VN_stay_move(1)", n3.v_net_all(1), 50.0);
             const auto n4 = net_value_exact(prob, two_state_policy_move_stay());
             e.eq("VN_move_stay(0)", n4.v_net_all(0), -50.0);
             e.eq("VN_move_stay(1)", n4.v_net_all(1), -50.0);
             const auto old = net_value_exact(prob, two_state_old_policy());
             e.eq("VN_old(0)", old.v_net_all(0), 50.0);
             e.eq("VN_old(1)", old.v_net_all(1), 50.0);
             e.eq("C(old,old)", old.switch_cost, 0.0);
         }},
        {"two-state-net-q",
         [](const VerificationInputs& in, Expect& e) {
             const SwitchProblem prob = problem_at(in, 0);
             const auto n1 = net_value_exact(prob, two_state_policy_stay());
             e.eq("QN_stay(0, stay)", n1.q_net(0, 0), 75.0);
             e.eq("QN_stay(0, move)", n1.q_net(0, 1), -25.0);
             const auto n3 = net_value_exact(prob, two_state_policy_stay_move());
             e.eq("QN_stay_move(0, move)", n3.q_net(0, 1), 49.0);
         }},
        {"switch-optimal-at-state-0",
         [](const VerificationInputs& in, Expect& e) {
             const auto result = switch_optimal_search(problem_at(in, 0), CandidateSet{});
             e.eq("best net value", result.v_net, 75.0);
             e.holds("best policy keeps the current state",
                     policies_match(result.best, two_state_policy_stay()));
         }},
        {"switch-optimal-at-state-1",
         [](const VerificationInputs& in, Expect& e) {
             const auto result = switch_optimal_search(problem_at(in, 1), CandidateSet{});
             e.eq("best net value", result.v_net, 50.0);
             e.holds("tie keeps the incumbent", result.kept_old);
         }},
        {"initial-state-dependence",
         [](const VerificationInputs& in, Expect& e) {
             const auto at0 = switch_optimal_search(problem_at(in, 0), CandidateSet{});
             const auto at1 = switch_optimal_search(problem_at(in, 1), CandidateSet{});
             e.holds("maximizers differ across initial states",
                     !policies_match(at0.best, at1.best));
         }},
        {"action-ranking-reversal",
         [](const VerificationInputs& in, Expect& e) {
             const SwitchProblem prob = problem_at(in, 0);
             const auto winner = net_value_exact(prob, two_state_policy_stay());
             const auto rival = net_value_exact(prob, two_state_policy_stay_move());
             e.holds("winner leads in net value", winner.v_net > rival.v_net);
             e.holds("rival leads on the alternate action",
                     rival.q_net(0, 1) > winner.q_net(0, 1));
             e.eq("rival QN(0, move)", rival.q_net(0, 1), 49.0);
             e.eq("winner QN(0, move)", winner.q_net(0, 1), -25.0);
         }},
        {"alternating-rollout",
         [](const VerificationInputs& in, Expect& e) {
             const auto eps = simulate(in.two_state, two_state_policy_move(), 1, 7);
             for (std::size_t t = 0; t < eps[0].steps.size(); ++t) {
                 const int want = static_cast<int>(t % 2);
                 if (eps[0].steps[t].state != want) {
                     e.fail("rollout leaves the alternating orbit at step " +
                            std::to_string(t));
                     break;
                 }
             }
         }},
        {"local-global-examples",
         [](const VerificationInputs&, Expect& e) {
             const TabularPolicy a = TabularPolicy::uniform(3, 2);
             TabularPolicy b = a;
             e.eq("local(identical)", local_cost(a, b), 0.0);
             e.eq("global(identical)", global_cost(a, b), 0.0);
             b.probs.row(1) << 1.0, 0.0;
             e.eq("local(one row)", local_cost(a, b), 1.0);
             e.eq("global(one row)", global_cost(a, b), 1.0);
         }},
        {"local-global-recovery",
         [](const VerificationInputs&, Expect& e) {
             Rng rng(11);
             for (int trial = 0; trial < 200 && e.ok; ++trial) {
                 const int S = 1 + static_cast<int>(rng.uniform01() * 9);
                 const int A = 1 + static_cast<int>(rng.uniform01() * 4);
                 const TabularPolicy p1(random_stochastic(S, A, rng));
                 TabularPolicy p2 = p1;
                 for (int s = 0; s < S; ++s)
                     if (rng.uniform01() < 0.5)
                         p2.probs.row(s) = random_stochastic(1, A, rng);
                 const double local = switching_cost(CostSpec::local(S), p1, p2);
                 const double global = switching_cost(CostSpec::global(), p1, p2);
                 if (local != static_cast<double>(local_cost(p1, p2)))
                     e.fail("family disagrees with the local count at trial " +
                            std::to_string(trial));
                 if (global != static_cast<double>(global_cost(p1, p2)))
                     e.fail("family disagrees with the global flag at trial " +
                            std::to_string(trial));
             }
         }},
        {"two-component-closed-forms",
         [](const VerificationInputs&, Expect& e) {
             const std::vector<int> partition{0, 0, 1};
             RowVector po(3), pn(3);
             po << 0.4, 0.3, 0.3;  // component masses 0.7 / 0.3
             pn << 0.1, 0.3, 0.6;  // component masses 0.4 / 0.6
             e.eq("learning", statewise_learning_two(po, pn, partition), 0.3, 1e-15);
             e.eq("transaction", statewise_transaction_two(po, pn, partition), 0.7,
                  1e-15);
             e.eq("learning at equal rows", statewise_learning_two(po, po, partition),
                  0.0);
             e.eq("transaction at equal rows",
                  statewise_transaction_two(po, po, partition), 1.0, 1e-15);
         }},
        {"transport-recovery",
         [](const VerificationInputs&, Expect& e) {
             Rng rng(13);
             const GroundCost c1 = GroundCost::cross_component_indicator();
             const GroundCost c2 = GroundCost::constant_one();
             for (int trial = 0; trial < 200 && e.ok; ++trial) {
                 const int A = 2 + static_cast<int>(rng.uniform01() * 6);
                 const std::vector<int> partition = random_partition(A, 2, rng);
                 const RowVector po = random_stochastic(1, A, rng).row(0);
                 const RowVector pn = random_stochastic(1, A, rng).row(0);
                 e.eq("learning recovery trial " + std::to_string(trial),
                      learning_cost_general(po, pn, partition, c1),
                      statewise_learning_two(po, pn, partition), 1e-9);
                 e.eq("transaction recovery trial " + std::to_string(trial),
                      transaction_cost_general(po, pn, partition, c2),
                      statewise_transaction_two(po, pn, partition), 1e-9);
             }
         }},
        {"plan-feasibility",
         [](const VerificationInputs&, Expect& e) {
             Rng rng(17);
             const GroundCost c1 = GroundCost::cross_component_indicator();
             const GroundCost c2 = GroundCost::constant_one();
             for (int trial = 0; trial < 200 && e.ok; ++trial) {
                 const int A = 2 + static_cast<int>(rng.uniform01() * 7);
                 const int L = 1 + static_cast<int>(rng.uniform01() *
                                                    std::min(4, A));
                 const std::vector<int> partition = random_partition(A, L, rng);
                 const RowVector po = random_stochastic(1, A, rng).row(0);
                 const RowVector pn = random_stochastic(1, A, rng).row(0);
                 const TransportPlan plan = combined_plan(po, pn, partition, c1, c2);
                 const Vector src = plan.source_marginal(A);
                 const Vector dst = plan.target_marginal(A);
                 const double err =
                     std::max((src.transpose() - po).array().abs().maxCoeff(),
                              (dst.transpose() - pn).array().abs().maxCoeff());
                 if (err > 1e-9)
                     e.fail("marginal error " + fmt_g12(err) + " at trial " +
                            std::to_string(trial));
             }
         }},
        {"backup-contraction",
         [](const VerificationInputs&, Expect& e) {
             Rng rng(19);
             for (int trial = 0; trial < 200 && e.ok; ++trial) {
                 const FiniteMdp mdp = random_mdp(rng);
                 const TabularPolicy old_pi(
                     random_stochastic(mdp.n_states, mdp.n_actions, rng));
                 const TabularPolicy pi(
                     random_stochastic(mdp.n_states, mdp.n_actions, rng));
                 const SwitchProblem prob(mdp, old_pi, CostSpec::local(mdp.n_states));
                 Matrix q1(mdp.n_states, mdp.n_actions), q2(mdp.n_states, mdp.n_actions);
                 for (int s = 0; s < mdp.n_states; ++s)
                     for (int a = 0; a < mdp.n_actions; ++a) {
                         q1(s, a) = rng.uniform(-5.0, 5.0);
                         q2(s, a) = rng.uniform(-5.0, 5.0);
                     }
                 const double lhs = (net_bellman_apply(prob, pi, q1) -
                                     net_bellman_apply(prob, pi, q2))
                                        .array()
                                        .abs()
                                        .maxCoeff();
                 const double rhs =
                     mdp.discount * (q1 - q2).array().abs().maxCoeff() + 1e-12;
                 if (lhs > rhs)
                     e.fail("backup expands at trial " + std::to_string(trial));
             }
         }},
        {"fixed-point-evaluation",
         [](const VerificationInputs&, Expect& e) {
             Rng rng(23);
             for (int trial = 0; trial < 50 && e.ok; ++trial) {
                 const FiniteMdp mdp = random_mdp(rng);
                 const TabularPolicy old_pi(
                     random_stochastic(mdp.n_states, mdp.n_actions, rng));
                 const TabularPolicy pi(
                     random_stochastic(mdp.n_states, mdp.n_actions, rng));
                 const SwitchProblem prob(mdp, old_pi, CostSpec::local(mdp.n_states));
                 const Matrix fixed = net_q_fixed_point(prob, pi, 1e-12, 100000);
                 const Matrix want =
                     (evaluate_infinite(mdp, pi, 1e-9).array() -
                      switching_cost(prob.cost, old_pi, pi))
                         .matrix();
                 const double err = (fixed - want).array().abs().maxCoeff();
                 if (err > 1e-8)
                     e.fail("fixed point off by " + fmt_g12(err) + " at trial " +
                            std::to_string(trial));
             }
         }},
        {"witness-construction",
         [](const VerificationInputs& in, Expect& e) {
             FiniteMdp mdp = in.two_state;
             mdp.initial_state = 1;
             const auto witness =
                 nontriviality_witness(mdp, two_state_old_policy(), CandidateSet{});
             e.holds("witness exists", witness.has_value());
             if (!witness) return;
             const SwitchProblem prob(mdp, two_state_old_policy(),
                                      CostSpec::custom(*witness), 1);
             const auto search = switch_optimal_search(prob, CandidateSet{});
             const auto star = net_value_exact(prob, two_state_policy_stay_move());
             e.holds("value-optimal policy loses in net value",
                     search.v_net > star.v_net);
         }},
        {"decision-consistency",
         [](const VerificationInputs&, Expect& e) {
             const SwitchProblem prob = chain_problem(4, 0.0, ChainIncumbent::Uniform);
             const TransitionDataset data =
                 generate_dataset(prob.mdp, prob.old_policy, 300, 31);
             NacConfig cfg;
             cfg.evaluation.epochs = 8;
             cfg.evaluation.steps_per_epoch = 150;
             cfg.evaluation.batch_size = 32;
             cfg.evaluation.lr_q = 0.2;
             cfg.evaluation.soft = 0.9;
             cfg.lr_q = 0.2;
             cfg.lr_actor = 0.05;
             cfg.soft = 0.9;
             cfg.batch_size = 32;
             cfg.steps_per_epoch = 150;
             cfg.max_epochs = 6;
             cfg.mc_cost_states_train = 0;
             cfg.stopping.epochs_stop = 6;
             cfg.seed = 5;
             const NacReport report = run_nac(prob, data, cfg);
             e.holds("switch flag matches the strict comparison",
                     report.switch_flag == (report.v_new_net > report.v_old));
             e.holds("chosen label matches the flag",
                     report.chosen == (report.switch_flag ? "new" : "old"));
         }},
    };
    return kChecks;
}

}  // namespace

VerificationInputs VerificationInputs::builtin() {
    return VerificationInputs{two_state_mdp(), two_state_cost_table()};
}

VerificationInputs VerificationInputs::from_directory(const std::string& dir) {
    VerificationInputs inputs;
    inputs.two_state = load_mdp(dir + "/two_state.mdp");
    const ConfigFile cfg = ConfigFile::load(dir + "/two_state_cost.cfg");
    const CostSpec spec = cost_spec_from_config(cfg, inputs.two_state.n_states,
                                                inputs.two_state.n_actions);
    if (spec.kind != StatewiseKind::CustomTable)
        throw std::runtime_error("fixture cost config must hold a custom table");
    inputs.two_state_costs = spec.table;
    return inputs;
}

std::vector<std::string> verification_check_names() {
    std::vector<std::string> names;
    for (const Check& c : checks()) names.push_back(c.name);
    return names;
}

std::vector<CheckResult> run_verification_checks(const VerificationInputs& inputs) {
    std::vector<CheckResult> results;
    for (const Check& c : checks()) {
        Expect e;
        try {
            c.run(inputs, e);
        } catch (const std::exception& ex) {
            e.fail(std::string("exception: ") + ex.what());
        }
        results.push_back({c.name, e.ok, e.detail});
    }
    return results;
}

}  // namespace switchrl
