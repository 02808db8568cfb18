#include "switchrl/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace switchrl {

namespace {

bool row_deterministic(const RowVector& row, int* action) {
    for (int a = 0; a < row.size(); ++a) {
        if (row(a) >= 1.0 - kRowEqualTol) {
            *action = a;
            return true;
        }
    }
    return false;
}

void require_two_components(const std::vector<int>& partition) {
    if (component_count(partition) != 2)
        throw std::invalid_argument("two-component cost requires a bipartition");
}

struct StatewiseTerms {
    double learning = 0.0;
    double transaction = 0.0;
};

StatewiseTerms statewise_terms(const CostSpec& spec, const RowVector& row_o,
                               const RowVector& row_n) {
    StatewiseTerms t;
    switch (spec.kind) {
        case StatewiseKind::Indicator:
            t.learning = rows_match(row_o, row_n) ? 0.0 : 1.0;
            break;
        case StatewiseKind::TransportTwo:
            t.learning = statewise_learning_two(row_o, row_n, spec.partition);
            t.transaction = statewise_transaction_two(row_o, row_n, spec.partition);
            break;
        case StatewiseKind::TransportGeneral:
            t.learning = learning_cost_general(row_o, row_n, spec.partition,
                                               spec.learn_ground, spec.plan_mode);
            t.transaction = transaction_cost_general(row_o, row_n, spec.partition,
                                                     spec.trans_ground, spec.plan_mode);
            break;
        case StatewiseKind::CustomTable:
            throw std::logic_error("custom-table cost has no statewise form");
    }
    return t;
}

double state_weight_at(const Vector& w, int s) { return w.size() == 0 ? 1.0 : w(s); }

}  // namespace

double Activation::operator()(double x) const {
    switch (kind) {
        case Kind::Identity:
            return x;
        case Kind::ScaledIdentity:
            return factor * x;
        case Kind::PositiveIndicator:
            return x > 0.0 ? 1.0 : 0.0;
        case Kind::StepTable: {
            double value = 0.0;
            for (const auto& [threshold, v] : table) {
                if (x < threshold) break;
                value = v;
            }
            return value;
        }
    }
    return x;
}

Activation Activation::identity() { return Activation{}; }

Activation Activation::scaled(double factor) {
    return Activation{Kind::ScaledIdentity, factor, {}};
}

Activation Activation::positive_indicator() {
    return Activation{Kind::PositiveIndicator, 1.0, {}};
}

Activation Activation::step_table(std::vector<std::pair<double, double>> table) {
    if (!std::is_sorted(table.begin(), table.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; }))
        throw std::invalid_argument("activation table: thresholds must be sorted");
    return Activation{Kind::StepTable, 1.0, std::move(table)};
}

PolicyClass classify_policy(const TabularPolicy& policy) {
    int first_action = -1;
    bool same_action = true;
    for (int s = 0; s < policy.n_states(); ++s) {
        int a = -1;
        if (!row_deterministic(policy.probs.row(s), &a))
            return PolicyClass::StochasticAnywhere;
        if (first_action < 0)
            first_action = a;
        else if (a != first_action)
            same_action = false;
    }
    return same_action ? PolicyClass::DeterministicSameAction
                       : PolicyClass::DeterministicMixed;
}

const char* policy_class_name(PolicyClass c) {
    switch (c) {
        case PolicyClass::DeterministicSameAction:
            return "deterministic-same-action";
        case PolicyClass::DeterministicMixed:
            return "deterministic-mixed";
        case PolicyClass::StochasticAnywhere:
            return "stochastic-anywhere";
    }
    return "?";
}

double CustomCostTable::lookup(const std::string& old_class,
                               const std::string& new_class) const {
    const std::pair<std::string, std::string> keys[] = {
        {old_class, new_class}, {"*", new_class}, {old_class, "*"}, {"*", "*"}};
    for (const auto& key : keys) {
        auto it = entries.find(key);
        if (it != entries.end()) return it->second;
    }
    throw std::invalid_argument("cost table: no entry for (" + old_class + ", " +
                                new_class + ")");
}

CustomCostTable CustomCostTable::by_new_class(std::map<std::string, double> costs) {
    CustomCostTable table;
    for (auto& [cls, cost] : costs) table.entries[{"*", cls}] = cost;
    return table;
}

void CostSpec::validate(int n_states, int n_actions) const {
    if (state_weight.size() != 0 && state_weight.size() != n_states)
        throw std::invalid_argument("cost spec: state weight length mismatch");
    if (state_measure.size() != 0) {
        if (state_measure.size() != n_states)
            throw std::invalid_argument("cost spec: state measure length mismatch");
        if ((state_measure.array() < 0.0).any())
            throw std::invalid_argument("cost spec: negative state measure weight");
        if (state_measure.sum() <= 0.0)
            throw std::invalid_argument("cost spec: state measure has zero mass");
    }
    if (kind == StatewiseKind::TransportTwo || kind == StatewiseKind::TransportGeneral) {
        if (static_cast<int>(partition.size()) != n_actions)
            throw std::invalid_argument("cost spec: partition must cover every action");
        const int L = component_count(partition);
        if (kind == StatewiseKind::TransportTwo && L != 2)
            throw std::invalid_argument("cost spec: two-component kind needs L = 2");
    }
    if (kind == StatewiseKind::CustomTable && table.entries.empty())
        throw std::invalid_argument("cost spec: custom table is empty");
}

CostSpec CostSpec::local(int n_states) {
    CostSpec spec;
    spec.kind = StatewiseKind::Indicator;
    spec.sigma = Activation::scaled(static_cast<double>(n_states));
    spec.learn_weight = 1.0;
    spec.trans_weight = 0.0;
    return spec;
}

CostSpec CostSpec::global() {
    CostSpec spec;
    spec.kind = StatewiseKind::Indicator;
    spec.sigma = Activation::positive_indicator();
    spec.learn_weight = 1.0;
    spec.trans_weight = 0.0;
    return spec;
}

CostSpec CostSpec::transport_two(std::vector<int> partition, double c_l, double c_t) {
    CostSpec spec;
    spec.kind = StatewiseKind::TransportTwo;
    spec.partition = std::move(partition);
    spec.learn_weight = c_l;
    spec.trans_weight = c_t;
    return spec;
}

CostSpec CostSpec::transport_general(std::vector<int> partition, double c_l, double c_t,
                                     GroundCost c1, GroundCost c2) {
    CostSpec spec;
    spec.kind = StatewiseKind::TransportGeneral;
    spec.partition = std::move(partition);
    spec.learn_weight = c_l;
    spec.trans_weight = c_t;
    spec.learn_ground = std::move(c1);
    spec.trans_ground = std::move(c2);
    return spec;
}

CostSpec CostSpec::custom(CustomCostTable table) {
    CostSpec spec;
    spec.kind = StatewiseKind::CustomTable;
    spec.table = std::move(table);
    return spec;
}

double statewise_learning_two(const RowVector& pi_o_row, const RowVector& pi_n_row,
                              const std::vector<int>& partition) {
    require_two_components(partition);
    const Vector a = component_masses(pi_o_row, partition, 2);
    const Vector b = component_masses(pi_n_row, partition, 2);
    return std::abs(a(0) - b(0));
}

double statewise_transaction_two(const RowVector& pi_o_row, const RowVector& pi_n_row,
                                 const std::vector<int>& partition) {
    require_two_components(partition);
    const Vector a = component_masses(pi_o_row, partition, 2);
    const Vector b = component_masses(pi_n_row, partition, 2);
    return std::min(a(0), b(0)) + std::min(a(1), b(1));
}

int local_cost(const TabularPolicy& pi_o, const TabularPolicy& pi_n) {
    if (pi_o.probs.rows() != pi_n.probs.rows() || pi_o.probs.cols() != pi_n.probs.cols())
        throw std::invalid_argument("local cost: policy shapes differ");
    int count = 0;
    for (int s = 0; s < pi_o.n_states(); ++s)
        if (!rows_match(pi_o.probs.row(s), pi_n.probs.row(s))) ++count;
    return count;
}

int global_cost(const TabularPolicy& pi_o, const TabularPolicy& pi_n) {
    return local_cost(pi_o, pi_n) > 0 ? 1 : 0;
}

double switching_cost(const CostSpec& spec, const TabularPolicy& pi_o,
                      const TabularPolicy& pi_n) {
    if (pi_o.probs.rows() != pi_n.probs.rows() || pi_o.probs.cols() != pi_n.probs.cols())
        throw std::invalid_argument("switching cost: policy shapes differ");
    spec.validate(pi_o.n_states(), pi_o.n_actions());

    if (spec.kind == StatewiseKind::CustomTable) {
        if (policies_match(pi_o, pi_n)) return 0.0;
        return spec.table.lookup(policy_class_name(classify_policy(pi_o)),
                                 policy_class_name(classify_policy(pi_n)));
    }

    // The integral is kept as numerator over normalizer so that a
    // scaled-identity activation whose factor equals the normalizer (the
    // local-cost specialization with uniform mu) cancels exactly.
    double num = 0.0;
    double den = 0.0;
    for (int s = 0; s < pi_o.n_states(); ++s) {
        const double w = spec.state_measure.size() == 0 ? 1.0 : spec.state_measure(s);
        den += w;
        if (w == 0.0) continue;
        const StatewiseTerms t = statewise_terms(spec, pi_o.probs.row(s), pi_n.probs.row(s));
        num += w * state_weight_at(spec.state_weight, s) *
               (spec.learn_weight * t.learning + spec.trans_weight * t.transaction);
    }
    switch (spec.sigma.kind) {
        case Activation::Kind::Identity:
            return num / den;
        case Activation::Kind::ScaledIdentity:
            return (spec.sigma.factor * num) / den;
        default:
            return spec.sigma(num / den);
    }
}

double switching_cost(const CostSpec& spec, const TabularPolicy& pi_o,
                      const TabularPolicy& pi_n, int mc_states, std::uint64_t seed) {
    if (pi_o.probs.rows() != pi_n.probs.rows() || pi_o.probs.cols() != pi_n.probs.cols())
        throw std::invalid_argument("switching cost: policy shapes differ");
    spec.validate(pi_o.n_states(), pi_o.n_actions());
    if (mc_states <= 0)
        throw std::invalid_argument("switching cost: mc_states must be positive");
    if (spec.kind == StatewiseKind::CustomTable)
        return switching_cost(spec, pi_o, pi_n);  // no state integral to sample

    const Vector weights = spec.state_measure.size() == 0
                               ? Vector::Ones(pi_o.n_states())
                               : spec.state_measure;
    Rng rng(seed);
    double mean = 0.0;
    for (int i = 0; i < mc_states; ++i) {
        const int s = rng.sample(weights);
        const StatewiseTerms t = statewise_terms(spec, pi_o.probs.row(s), pi_n.probs.row(s));
        mean += state_weight_at(spec.state_weight, s) *
                (spec.learn_weight * t.learning + spec.trans_weight * t.transaction);
    }
    mean /= mc_states;
    return spec.sigma(mean);
}

}  // namespace switchrl
