#pragma once

#include "switchrl/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace switchrl {

/// Number of components in an action partition. Labels must be 0..L-1
/// with every label used at least once.
int component_count(const std::vector<int>& partition);

/// Total probability mass each component carries under a policy row.
Vector component_masses(const RowVector& row, const std::vector<int>& partition, int n_components);

/// Nonnegative mass placed on a finite set of action indices.
struct DiscreteMeasure {
    std::vector<int> support;
    std::vector<double> mass;

    double total() const;
    void push(int action, double m);
    bool empty() const { return support.empty(); }
};

/// Sparse coupling between two action measures.
struct TransportPlan {
    struct Entry {
        int src;
        int dst;
        double mass;
    };
    std::vector<Entry> entries;

    double total() const;
    Vector source_marginal(int n_actions) const;
    Vector target_marginal(int n_actions) const;
};

enum class PlanMode {
    Optimal,        // min-cost flow
    FirstFeasible,  // northwest-corner plan, any feasible coupling
};

/// Ground cost c(x, y) between two actions.
struct GroundCost {
    enum class Kind { CrossComponentIndicator, ConstantOne, ExplicitMatrix };

    Kind kind = Kind::ConstantOne;
    Matrix matrix;  // ExplicitMatrix only

    static GroundCost cross_component_indicator();
    static GroundCost constant_one();
    static GroundCost explicit_matrix(Matrix m);

    double at(int x, int y, const std::vector<int>& partition) const;
};

/// Surplus measures of the two policy rows over a partition: rho carries
/// the mass each component must give up, eta the mass each component must
/// receive, both spread proportionally to the conditional distributions.
/// Components with zero mass contribute nothing.
std::pair<DiscreteMeasure, DiscreteMeasure> surplus_measures(
    const RowVector& pi_o_row, const RowVector& pi_n_row,
    const std::vector<int>& partition);

struct OtSolution {
    TransportPlan plan;
    double objective = 0.0;
};

/// Exact coupling between measures of equal total mass. Optimal mode runs
/// successive-shortest-path min-cost flow on the bipartite support graph
/// with masses scaled to integers; supports are capped at 64 points each.
OtSolution solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                    const GroundCost& cost,
                    const std::vector<int>& partition = {},
                    PlanMode mode = PlanMode::Optimal);

/// Cross-component learning cost: plan objective between the surplus measures.
double learning_cost_general(const RowVector& pi_o_row, const RowVector& pi_n_row,
                             const std::vector<int>& partition, const GroundCost& c1,
                             PlanMode mode = PlanMode::Optimal);

/// Within-component transaction cost: sum over components of the retained
/// mass times the plan objective between the component conditionals.
double transaction_cost_general(const RowVector& pi_o_row, const RowVector& pi_n_row,
                                const std::vector<int>& partition, const GroundCost& c2,
                                PlanMode mode = PlanMode::Optimal);

/// Cross-component plan plus the scaled within-component plans; its
/// marginals recover the two policy rows.
TransportPlan combined_plan(const RowVector& pi_o_row, const RowVector& pi_n_row,
                            const std::vector<int>& partition, const GroundCost& c1,
                            const GroundCost& c2, PlanMode mode = PlanMode::Optimal);

/// Sparse triples `(src, dst, mass)`, one per line, for debugging.
std::string format_plan(const TransportPlan& plan);

}  // namespace switchrl
