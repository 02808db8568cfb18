#include "switchrl/config.hpp"
#include "switchrl/cost.hpp"
#include "switchrl/fixtures.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace switchrl;
using testutil::random_partition;
using testutil::random_row;
using testutil::random_stochastic;

TEST_CASE("activation catalogue") {
    CHECK(Activation::identity()(3.5) == 3.5);
    CHECK(Activation::scaled(4.0)(0.25) == 1.0);
    CHECK(Activation::positive_indicator()(0.0) == 0.0);
    CHECK(Activation::positive_indicator()(1e-300) == 1.0);
    CHECK(Activation::positive_indicator()(-2.0) == 0.0);

    const Activation step = Activation::step_table({{0.0, 1.0}, {2.0, 5.0}});
    CHECK(step(-1.0) == 0.0);
    CHECK(step(0.0) == 1.0);
    CHECK(step(1.9) == 1.0);
    CHECK(step(2.0) == 5.0);
    CHECK_THROWS_AS(Activation::step_table({{2.0, 1.0}, {0.0, 5.0}}),
                    std::invalid_argument);
}

TEST_CASE("two-component learning mass") {
    const std::vector<int> partition{0, 0, 1};
    RowVector po(3), pn(3);
    po << 0.4, 0.3, 0.3;  // 0.7 in the first component
    pn << 0.2, 0.2, 0.6;  // 0.4 in the first component
    CHECK(statewise_learning_two(po, pn, partition) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(statewise_learning_two(po, po, partition) == 0.0);

    RowVector all_first(3), all_second(3);
    all_first << 0.5, 0.5, 0.0;
    all_second << 0.0, 0.0, 1.0;
    CHECK(statewise_learning_two(all_first, all_second, partition) == 1.0);

    CHECK_THROWS_AS(statewise_learning_two(po, pn, {0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(statewise_learning_two(po, pn, {0, 1, 2}), std::invalid_argument);
}

TEST_CASE("two-component transaction mass") {
    const std::vector<int> partition{0, 0, 1};
    RowVector po(3), pn(3);
    po << 0.4, 0.3, 0.3;
    pn << 0.2, 0.2, 0.6;
    CHECK(statewise_transaction_two(po, pn, partition) ==
          doctest::Approx(0.7).epsilon(1e-14));
    CHECK(statewise_transaction_two(po, po, partition) ==
          doctest::Approx(1.0).epsilon(1e-14));

    RowVector all_first(3), all_second(3);
    all_first << 0.5, 0.5, 0.0;
    all_second << 0.0, 0.0, 1.0;
    CHECK(statewise_transaction_two(all_first, all_second, partition) == 0.0);
}

TEST_CASE("learning and transaction terms are symmetric and account for all mass") {
    Rng rng(10);
    for (int trial = 0; trial < 1000; ++trial) {
        const int A = 2 + static_cast<int>(rng.uniform01() * 5);
        const std::vector<int> partition = random_partition(A, 2, rng);
        const RowVector a = random_row(A, rng);
        const RowVector b = random_row(A, rng);
        const double l_ab = statewise_learning_two(a, b, partition);
        const double t_ab = statewise_transaction_two(a, b, partition);
        CHECK(l_ab == statewise_learning_two(b, a, partition));
        CHECK(t_ab == statewise_transaction_two(b, a, partition));
        CHECK(l_ab >= 0.0);
        CHECK(l_ab <= 1.0);
        CHECK(t_ab >= 0.0);
        CHECK(t_ab <= 1.0);
        CHECK(l_ab + t_ab == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("local and global counts") {
    const TabularPolicy a = TabularPolicy::uniform(4, 3);
    TabularPolicy b = a;
    CHECK(local_cost(a, b) == 0);
    CHECK(global_cost(a, b) == 0);
    b.probs.row(2) << 1.0, 0.0, 0.0;
    CHECK(local_cost(a, b) == 1);
    CHECK(global_cost(a, b) == 1);
    b.probs.row(0) << 0.0, 0.0, 1.0;
    CHECK(local_cost(a, b) == 2);
    CHECK(global_cost(a, b) == 1);
}

TEST_CASE("cost family recovers the local and global counts exactly") {
    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const int S = 1 + static_cast<int>(rng.uniform01() * 11);
        const int A = 1 + static_cast<int>(rng.uniform01() * 4);
        const TabularPolicy p1(random_stochastic(S, A, rng));
        TabularPolicy p2 = p1;
        for (int s = 0; s < S; ++s)
            if (rng.uniform01() < 0.4) p2.probs.row(s) = random_row(A, rng);
        CHECK(switching_cost(CostSpec::local(S), p1, p2) ==
              static_cast<double>(local_cost(p1, p2)));
        CHECK(switching_cost(CostSpec::global(), p1, p2) ==
              static_cast<double>(global_cost(p1, p2)));
    }
}

TEST_CASE("identical policies cost nothing under zero-at-zero activations") {
    Rng rng(12);
    const TabularPolicy pi(random_stochastic(5, 4, rng));
    CHECK(switching_cost(CostSpec::local(5), pi, pi) == 0.0);
    CHECK(switching_cost(CostSpec::global(), pi, pi) == 0.0);

    // Transport costs keep charging the transaction term at identical rows.
    const std::vector<int> partition{0, 0, 1, 1};
    const CostSpec spec = CostSpec::transport_two(partition, 5.0, 0.25);
    CHECK(switching_cost(spec, pi, pi) == doctest::Approx(0.25).epsilon(1e-12));
    const CostSpec no_trans = CostSpec::transport_two(partition, 5.0, 0.0);
    CHECK(switching_cost(no_trans, pi, pi) == 0.0);
}

TEST_CASE("weighted states steer the exact integral") {
    const TabularPolicy a = TabularPolicy::uniform(2, 2);
    TabularPolicy b = a;
    b.probs.row(1) << 1.0, 0.0;

    CostSpec spec;  // indicator kind, identity activation
    spec.state_measure = Vector(2);
    spec.state_measure << 3.0, 1.0;  // weights, normalized internally
    CHECK(switching_cost(spec, a, b) == doctest::Approx(0.25).epsilon(1e-14));

    spec.state_weight = Vector(2);
    spec.state_weight << 1.0, 8.0;
    CHECK(switching_cost(spec, a, b) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("monte-carlo cost is deterministic per seed and converges") {
    Rng rng(13);
    const int S = 6, A = 4;
    const TabularPolicy p1(random_stochastic(S, A, rng));
    const TabularPolicy p2(random_stochastic(S, A, rng));
    const CostSpec spec = CostSpec::transport_two(random_partition(A, 2, rng), 2.0, 0.5);

    const double exact = switching_cost(spec, p1, p2);
    const double mc1 = switching_cost(spec, p1, p2, 40000, 7);
    const double mc2 = switching_cost(spec, p1, p2, 40000, 7);
    CHECK(mc1 == mc2);
    CHECK(std::abs(mc1 - exact) <= 0.05);
    CHECK_THROWS_AS(switching_cost(spec, p1, p2, 0, 7), std::invalid_argument);
}

TEST_CASE("policy fingerprint classes") {
    CHECK(classify_policy(TabularPolicy::deterministic({1, 1, 1}, 3)) ==
          PolicyClass::DeterministicSameAction);
    CHECK(classify_policy(TabularPolicy::deterministic({0, 2, 0}, 3)) ==
          PolicyClass::DeterministicMixed);
    CHECK(classify_policy(TabularPolicy::uniform(3, 3)) ==
          PolicyClass::StochasticAnywhere);

    Matrix p(2, 2);
    p << 1.0, 0.0, 0.5, 0.5;  // deterministic in one state only
    CHECK(classify_policy(TabularPolicy(p)) == PolicyClass::StochasticAnywhere);
}

TEST_CASE("table costs reproduce the bundled construction") {
    const CostSpec spec = CostSpec::custom(two_state_cost_table());
    const TabularPolicy old_pi = two_state_old_policy();
    CHECK(switching_cost(spec, old_pi, two_state_policy_stay()) == 25.0);
    CHECK(switching_cost(spec, old_pi, two_state_policy_move()) == 25.0);
    CHECK(switching_cost(spec, old_pi, two_state_policy_stay_move()) == 50.0);
    CHECK(switching_cost(spec, old_pi, two_state_policy_move_stay()) == 50.0);
    Matrix p(2, 2);
    p << 0.9, 0.1, 1.0, 0.0;
    CHECK(switching_cost(spec, old_pi, TabularPolicy(p)) == 500.0);
    // Keeping the incumbent is free even though its class carries a charge.
    CHECK(switching_cost(spec, old_pi, old_pi) == 0.0);
}

TEST_CASE("table lookup honors wildcards and totality") {
    CustomCostTable table;
    table.entries[{"deterministic-same-action", "deterministic-mixed"}] = 7.0;
    table.entries[{"*", "deterministic-mixed"}] = 9.0;
    CHECK(table.lookup("deterministic-same-action", "deterministic-mixed") == 7.0);
    CHECK(table.lookup("stochastic-anywhere", "deterministic-mixed") == 9.0);
    CHECK_THROWS_AS(table.lookup("stochastic-anywhere", "stochastic-anywhere"),
                    std::invalid_argument);
}

TEST_CASE("cost spec validation") {
    const int S = 3, A = 4;
    CostSpec two = CostSpec::transport_two({0, 0, 1}, 1.0, 0.0);
    CHECK_THROWS_AS(two.validate(S, A), std::invalid_argument);  // partition size
    CostSpec three = CostSpec::transport_two({0, 1, 2, 0}, 1.0, 0.0);
    CHECK_THROWS_AS(three.validate(S, A), std::invalid_argument);  // needs L = 2

    CostSpec bad_mu;
    bad_mu.state_measure = Vector(S);
    bad_mu.state_measure << 1.0, -0.5, 0.2;
    CHECK_THROWS_AS(bad_mu.validate(S, A), std::invalid_argument);

    CostSpec empty_table;
    empty_table.kind = StatewiseKind::CustomTable;
    CHECK_THROWS_AS(empty_table.validate(S, A), std::invalid_argument);
}

TEST_CASE("cost spec blocks round-trip through the config format") {
    Rng rng(14);
    const int S = 4, A = 4;
    std::vector<CostSpec> specs;
    specs.push_back(CostSpec::local(S));
    specs.push_back(CostSpec::global());
    specs.push_back(CostSpec::transport_two(random_partition(A, 2, rng), 5.0, 0.1));
    specs.push_back(CostSpec::transport_general(random_partition(A, 3, rng), 2.0, 0.7,
                                                GroundCost::cross_component_indicator(),
                                                GroundCost::constant_one()));
    specs.push_back(CostSpec::custom(two_state_cost_table()));
    specs.back().sigma = Activation::step_table({{0.0, 1.0}, {10.0, 3.0}});

    for (const CostSpec& spec : specs) {
        const ConfigFile cfg = ConfigFile::parse_string(format_cost_spec(spec));
        const CostSpec back = cost_spec_from_config(cfg, S, A);
        for (int trial = 0; trial < 20; ++trial) {
            TabularPolicy p1(random_stochastic(S, A, rng));
            TabularPolicy p2 = p1;
            for (int s = 0; s < S; ++s)
                if (rng.uniform01() < 0.5) p2.probs.row(s) = random_row(A, rng);
            if (trial % 4 == 0) p2 = TabularPolicy::deterministic({1, 0, 2, 3}, A);
            CHECK(switching_cost(spec, p1, p2) == switching_cost(back, p1, p2));
        }
    }
}
