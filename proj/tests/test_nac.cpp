#include "switchrl/fixtures.hpp"
#include "switchrl/nac.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace switchrl;
using testutil::random_mdp;
using testutil::random_policy;

namespace {

NacConfig chain_config(std::uint64_t seed) {
    NacConfig cfg;
    cfg.evaluation.lr_q = 0.25;
    cfg.evaluation.soft = 0.9;
    cfg.evaluation.batch_size = 64;
    cfg.evaluation.epochs = 60;
    cfg.evaluation.steps_per_epoch = 400;
    cfg.evaluation.loss_change_tol = 0.0;
    cfg.lr_q = 0.25;
    cfg.lr_actor = 0.05;
    cfg.soft = 0.9;
    cfg.batch_size = 64;
    cfg.steps_per_epoch = 400;
    cfg.max_epochs = 30;
    cfg.stopping.epochs_stop = 8;
    cfg.stopping.b_u = 1.2;
    cfg.seed = seed;
    return cfg;
}

TwinNetQ twin_from(const Matrix& q0, const Matrix& q1) {
    TwinNetQ twin = TwinNetQ::zeros(static_cast<int>(q0.rows()),
                                    static_cast<int>(q0.cols()));
    twin.q[0] = q0;
    twin.q[1] = q1;
    twin.target = twin.q;
    return twin;
}

}  // namespace

TEST_CASE("softmax actor round-trips a policy through logits") {
    Rng rng(50);
    const TabularPolicy pi(testutil::random_stochastic(4, 3, rng, 0.05));
    const ActorParams actor = ActorParams::from_policy(pi);
    CHECK((actor.policy().probs - pi.probs).array().abs().maxCoeff() <= 1e-9);

    // Degenerate rows survive through the floor.
    const ActorParams det = ActorParams::from_policy(TabularPolicy::deterministic({2}, 3));
    CHECK(det.policy().probs(0, 2) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("actor objective under uniform logits averages the pessimistic row") {
    const TwinNetQ twin =
        twin_from(Matrix::Constant(2, 3, 4.0), Matrix::Constant(2, 3, 7.0));
    ActorParams actor;
    actor.logits = Matrix::Zero(2, 3);
    CHECK(actor_objective(twin, actor, 0) == doctest::Approx(4.0).epsilon(1e-12));

    Matrix q0(2, 3), q1(2, 3);
    q0 << 1.0, 5.0, 3.0, 0.0, 0.0, 0.0;
    q1 << 2.0, 4.0, 9.0, 0.0, 0.0, 0.0;
    const TwinNetQ mixed = twin_from(q0, q1);
    // One-hot-dominant logits pick out the pessimistic value at the argmax.
    ActorParams hot;
    hot.logits = Matrix::Zero(2, 3);
    hot.logits(0, 1) = 30.0;
    CHECK(actor_objective(mixed, hot, 0) == doctest::Approx(4.0).epsilon(1e-9));

    Rng rng(51);
    const double exact = actor_objective(mixed, hot, 0);
    CHECK(actor_objective_mc(mixed, hot, 0, 5000, rng) ==
          doctest::Approx(exact).epsilon(1e-3));
}

TEST_CASE("constant rows produce zero gradient") {
    const TwinNetQ twin =
        twin_from(Matrix::Constant(2, 3, 2.5), Matrix::Constant(2, 3, 2.5));
    ActorParams actor;
    actor.logits = Matrix::Random(2, 3);
    CHECK(actor_gradient(twin, actor, 0).isZero(1e-12));
    const ActorParams stepped = actor_step(actor, twin, 0, 0.5, 1.0);
    CHECK((stepped.logits - actor.logits).isZero(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(52);
    for (int trial = 0; trial < 100; ++trial) {
        const int S = 2 + static_cast<int>(rng.uniform01() * 3);
        const int A = 2 + static_cast<int>(rng.uniform01() * 3);
        Matrix q0(S, A), q1(S, A), logits(S, A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                q0(s, a) = rng.uniform(-2.0, 2.0);
                q1(s, a) = rng.uniform(-2.0, 2.0);
                logits(s, a) = rng.uniform(-1.5, 1.5);
            }
        const TwinNetQ twin = twin_from(q0, q1);
        ActorParams actor;
        actor.logits = logits;
        const int s0 = static_cast<int>(rng.uniform01() * S);

        const RowVector analytic = actor_gradient(twin, actor, s0);
        RowVector fd(A);
        const double h = 1e-5;
        for (int a = 0; a < A; ++a) {
            ActorParams up = actor, down = actor;
            up.logits(s0, a) += h;
            down.logits(s0, a) -= h;
            fd(a) = (actor_objective(twin, up, s0) - actor_objective(twin, down, s0)) /
                    (2.0 * h);
        }
        const double rel = (analytic - fd).norm() / std::max(fd.norm(), 1e-6);
        CHECK(rel <= 1e-6);
    }
}

TEST_CASE("gradient updates touch only the decision-state row") {
    Rng rng(53);
    Matrix q0 = Matrix::Random(4, 3), q1 = Matrix::Random(4, 3);
    const TwinNetQ twin = twin_from(q0, q1);
    ActorParams actor;
    actor.logits = Matrix::Random(4, 3);
    const ActorParams stepped = actor_step(actor, twin, 2, 0.1, 10.0);
    for (int s = 0; s < 4; ++s) {
        if (s == 2) continue;
        CHECK((stepped.logits.row(s) - actor.logits.row(s)).isZero(0.0));
    }
}

TEST_CASE("repeated ascent on a fixed critic concentrates the policy") {
    Matrix q(1, 3);
    q << 0.3, 1.0, -0.2;
    const TwinNetQ twin = twin_from(q, q);
    ActorParams actor;
    actor.logits = Matrix::Zero(1, 3);
    for (int it = 0; it < 3000; ++it) actor = actor_step(actor, twin, 0, 0.3, 1.0);
    CHECK(actor.policy().probs(0, 1) >= 0.99);
}

TEST_CASE("stopping rule branches") {
    StoppingConfig cfg;
    cfg.epochs_stop = 3;
    cfg.alpha = 1.0;
    cfg.b_u = 50.0;
    cfg.b_d = 10.0;

    // Sustained relative rise above (1 + alpha) v0.
    CHECK(stopping_check(10.0, 25.0, 30.0, cfg, 5));
    CHECK_FALSE(stopping_check(10.0, 25.0, 19.0, cfg, 5));
    // Sign flip when the incumbent's net value is nonpositive.
    CHECK(stopping_check(-5.0, 1.0, 2.0, cfg, 5));
    CHECK_FALSE(stopping_check(-5.0, 1.0, -1.0, cfg, 5));
    // Minimum epoch gate wins over everything.
    CHECK_FALSE(stopping_check(10.0, 25.0, 30.0, cfg, 2));
    // Absolute rise bound.
    CHECK(stopping_check(100.0, 151.0, 150.0, cfg, 5));
    CHECK_FALSE(stopping_check(100.0, 151.0, 149.0, cfg, 5));
    // Sustained drop bound needs both epochs below.
    CHECK(stopping_check(100.0, 90.0, 89.0, cfg, 5));
    CHECK_FALSE(stopping_check(100.0, 90.0, 91.0, cfg, 5));

    StoppingConfig bad = cfg;
    bad.window = 3;
    CHECK_THROWS_AS(stopping_check(1.0, 1.0, 1.0, bad, 5), std::invalid_argument);

    // Pure function: once true for an epoch pair, rerunning keeps it true.
    for (int rep = 0; rep < 3; ++rep) CHECK(stopping_check(10.0, 25.0, 30.0, cfg, 5));
}

TEST_CASE("search improves a dawdling incumbent on the gated chain") {
    const SwitchProblem prob = chain_problem(5, 0.0, ChainIncumbent::Uniform);
    const TransitionDataset data = generate_dataset(prob.mdp, prob.old_policy, 1500, 71);
    int improved = 0;
    for (std::uint64_t seed = 4; seed <= 13; ++seed) {
        const NacReport report = run_nac(prob, data, chain_config(seed));
        if (report.switch_flag && report.v_new_net > report.v_old) ++improved;
    }
    CHECK(improved >= 8);
}

TEST_CASE("search leaves a prohibitively priced incumbent alone") {
    // Every fingerprint class other than the incumbent's own is priced far
    // beyond any attainable value gain.
    FiniteMdp mdp = chain_mdp(5);
    const TabularPolicy old_pi = TabularPolicy::uniform(5, 2);
    CustomCostTable table;
    table.entries[{"*", "*"}] = 1000.0;
    const SwitchProblem prob(mdp, old_pi, CostSpec::custom(table));
    const TransitionDataset data = generate_dataset(mdp, old_pi, 1500, 72);
    int kept = 0;
    for (std::uint64_t seed = 4; seed <= 13; ++seed) {
        NacConfig cfg = chain_config(seed);
        cfg.mc_cost_states_train = 0;  // table costs have no state integral
        const NacReport report = run_nac(prob, data, cfg);
        if (!report.switch_flag) ++kept;
    }
    CHECK(kept >= 8);
}

TEST_CASE("zero training epochs keep the warm-started actor") {
    const SwitchProblem prob = chain_problem(4, 0.0, ChainIncumbent::Uniform);
    const TransitionDataset data = generate_dataset(prob.mdp, prob.old_policy, 800, 73);
    NacConfig cfg = chain_config(4);
    cfg.max_epochs = 0;
    cfg.stopping.epochs_stop = 0;
    const NacReport report = run_nac(prob, data, cfg);
    CHECK(report.epochs_run == 0);
    CHECK((report.new_policy.probs - prob.old_policy.probs).array().abs().maxCoeff() <=
          1e-5);
    CHECK(std::abs(report.v_new_net - report.v_old) <= 0.05);
    CHECK_FALSE(report.switch_flag);
}

TEST_CASE("reports are internally consistent and reproducible") {
    const SwitchProblem prob = chain_problem(4, 0.1, ChainIncumbent::Uniform);
    const TransitionDataset data = generate_dataset(prob.mdp, prob.old_policy, 600, 74);
    NacConfig cfg = chain_config(11);
    cfg.max_epochs = 10;
    cfg.evaluation.epochs = 20;
    const NacReport a = run_nac(prob, data, cfg);
    const NacReport b = run_nac(prob, data, cfg);
    CHECK(a.switch_flag == (a.v_new_net > a.v_old));
    CHECK(a.chosen == (a.switch_flag ? "new" : "old"));
    CHECK(a.v_old == b.v_old);
    CHECK(a.v_new_net == b.v_new_net);
    CHECK(a.epochs_run == b.epochs_run);
    CHECK((a.new_policy.probs - b.new_policy.probs).isZero(0.0));
    REQUIRE(a.value_trace.size() == b.value_trace.size());
    for (std::size_t i = 0; i < a.value_trace.size(); ++i)
        CHECK(a.value_trace[i] == b.value_trace[i]);
}

TEST_CASE("ground-truth agreement checks") {
    SUBCASE("keeping the incumbent under zero cost agrees trivially") {
        const SwitchProblem prob = chain_problem(4, 0.0, ChainIncumbent::Uniform);
        NacReport report;
        report.new_policy = prob.old_policy;
        report.switch_flag = false;
        report.chosen = "old";
        CHECK(responsibility_check(prob, report, 0, 1));
        CHECK(responsibility_check(prob, report, 4000, 1));
    }
    SUBCASE("undiscounted problems fall back to finite-horizon truth") {
        const SwitchProblem prob = two_state_problem(0);
        NacReport report;
        report.new_policy = two_state_policy_stay();
        report.switch_flag = true;  // net 75 beats the incumbent's 50
        report.chosen = "new";
        CHECK(responsibility_check(prob, report, 0, 1));
        report.switch_flag = false;
        CHECK_FALSE(responsibility_check(prob, report, 0, 1));
    }
}

TEST_CASE("report files round-trip") {
    NacReport report;
    report.chosen = "new";
    report.switch_flag = true;
    report.v_old = 1.25;
    report.v_new_net = 2.75;
    report.epochs_run = 12;
    report.coverage_fraction = 0.875;
    report.value_trace = {1.0, 1.5, 2.7};
    report.new_policy = TabularPolicy::uniform(3, 2);

    std::stringstream ss;
    write_report(ss, report);
    const NacReport back = read_report(ss);
    CHECK(back.chosen == report.chosen);
    CHECK(back.switch_flag == report.switch_flag);
    CHECK(back.v_old == report.v_old);
    CHECK(back.v_new_net == report.v_new_net);
    CHECK(back.epochs_run == report.epochs_run);
    CHECK(back.coverage_fraction == report.coverage_fraction);
    CHECK(back.value_trace == report.value_trace);
    CHECK((back.new_policy.probs - report.new_policy.probs).isZero(0.0));
}
