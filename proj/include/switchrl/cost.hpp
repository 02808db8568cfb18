#pragma once

#include "switchrl/mdp.hpp"
#include "switchrl/ot.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace switchrl {

/// Closed catalogue of activation maps applied to the state integral.
struct Activation {
    enum class Kind { Identity, ScaledIdentity, PositiveIndicator, StepTable };

    Kind kind = Kind::Identity;
    double factor = 1.0;
    // StepTable: sorted (threshold, value) pairs; value of the last entry
    // whose threshold is <= x, and 0 below the first threshold.
    std::vector<std::pair<double, double>> table;

    double operator()(double x) const;

    static Activation identity();
    static Activation scaled(double factor);
    static Activation positive_indicator();
    static Activation step_table(std::vector<std::pair<double, double>> table);
};

/// Whole-policy fingerprint classes used by table-driven costs.
enum class PolicyClass { DeterministicSameAction, DeterministicMixed, StochasticAnywhere };

PolicyClass classify_policy(const TabularPolicy& policy);
const char* policy_class_name(PolicyClass c);

/// Cost table keyed by (old-policy class, new-policy class). "*" acts as a
/// wildcard on either side. Identical policies always cost zero.
struct CustomCostTable {
    std::map<std::pair<std::string, std::string>, double> entries;

    double lookup(const std::string& old_class, const std::string& new_class) const;
    static CustomCostTable by_new_class(std::map<std::string, double> cost_per_class);
};

enum class StatewiseKind { Indicator, TransportTwo, TransportGeneral, CustomTable };

/// Parameters of the switching-cost family: an activation wrapped around a
/// state integral of weighted per-state learning and transaction terms.
/// `state_measure` holds nonnegative weights normalized internally to a
/// distribution; empty vectors mean uniform weights / unit importance.
struct CostSpec {
    StatewiseKind kind = StatewiseKind::Indicator;
    Activation sigma = Activation::identity();
    Vector state_weight;   // f, empty = ones
    Vector state_measure;  // mu weights, empty = uniform
    double learn_weight = 1.0;  // c_l
    double trans_weight = 0.0;  // c_t
    std::vector<int> partition;  // component label per action, 0-based
    GroundCost learn_ground = GroundCost::cross_component_indicator();  // c1
    GroundCost trans_ground = GroundCost::constant_one();               // c2
    PlanMode plan_mode = PlanMode::Optimal;
    CustomCostTable table;  // CustomTable kind only

    void validate(int n_states, int n_actions) const;

    static CostSpec local(int n_states);
    static CostSpec global();
    static CostSpec transport_two(std::vector<int> partition, double c_l, double c_t);
    static CostSpec transport_general(std::vector<int> partition, double c_l,
                                      double c_t, GroundCost c1, GroundCost c2);
    static CostSpec custom(CustomCostTable table);
};

/// Mass that must cross between the two components of a bipartition.
double statewise_learning_two(const RowVector& pi_o_row, const RowVector& pi_n_row,
                              const std::vector<int>& partition);

/// Mass that stays within its own component under the bipartition.
double statewise_transaction_two(const RowVector& pi_o_row, const RowVector& pi_n_row,
                                 const std::vector<int>& partition);

/// Number of states whose conditional distributions differ.
int local_cost(const TabularPolicy& pi_o, const TabularPolicy& pi_n);

/// 1 if the policies differ anywhere, else 0.
int global_cost(const TabularPolicy& pi_o, const TabularPolicy& pi_n);

/// Exact switching cost: sigma of the mu-weighted state integral.
double switching_cost(const CostSpec& spec, const TabularPolicy& pi_o,
                      const TabularPolicy& pi_n);

/// Monte-Carlo switching cost over `mc_states` state draws from mu.
double switching_cost(const CostSpec& spec, const TabularPolicy& pi_o,
                      const TabularPolicy& pi_n, int mc_states, std::uint64_t seed);

}  // namespace switchrl
