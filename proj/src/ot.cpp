#include "switchrl/ot.hpp"

#include "switchrl/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace switchrl {

namespace {

// Mass quantum for the integer flow solver. 1e-12 keeps the rounding error
// of a full 64-point instance well below the 1e-9 marginal tolerance.
constexpr double kMassScale = 1e12;
constexpr int kMaxSupport = 64;

long long to_units(double mass) { return std::llround(mass * kMassScale); }

struct IntInstance {
    std::vector<int> src_action, dst_action;
    std::vector<long long> supply, demand;
};

IntInstance quantize(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    IntInstance inst;
    for (std::size_t i = 0; i < mu.support.size(); ++i) {
        const long long u = to_units(mu.mass[i]);
        if (u > 0) {
            inst.src_action.push_back(mu.support[i]);
            inst.supply.push_back(u);
        }
    }
    for (std::size_t j = 0; j < nu.support.size(); ++j) {
        const long long u = to_units(nu.mass[j]);
        if (u > 0) {
            inst.dst_action.push_back(nu.support[j]);
            inst.demand.push_back(u);
        }
    }
    // Rounding can leave the integer totals a few units apart; absorb the
    // difference in the largest entry so the flow problem balances.
    long long total_s = 0, total_d = 0;
    for (long long u : inst.supply) total_s += u;
    for (long long u : inst.demand) total_d += u;
    if (total_s != total_d) {
        if (!inst.supply.empty() && total_s < total_d) {
            auto it = std::max_element(inst.supply.begin(), inst.supply.end());
            *it += total_d - total_s;
        } else if (!inst.demand.empty() && total_d < total_s) {
            auto it = std::max_element(inst.demand.begin(), inst.demand.end());
            *it += total_s - total_d;
        }
    }
    return inst;
}

// Successive shortest paths with potentials on the bipartite support graph.
// Forward arcs are uncapacitated, so every augmentation exhausts a supply,
// a demand, or cancels a previously routed arc.
std::vector<TransportPlan::Entry> min_cost_flow(const IntInstance& inst,
                                                const Matrix& cost) {
    const int n = static_cast<int>(inst.supply.size());
    const int m = static_cast<int>(inst.demand.size());
    std::vector<long long> supply = inst.supply;
    std::vector<long long> demand = inst.demand;
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> flow =
        Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, m);

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> pot(static_cast<std::size_t>(n + m), 0.0);
    long long remaining = 0;
    for (long long u : supply) remaining += u;

    while (remaining > 0) {
        // Dense Dijkstra over sources [0, n) and sinks [n, n+m).
        std::vector<double> dist(static_cast<std::size_t>(n + m), inf);
        std::vector<int> parent(static_cast<std::size_t>(n + m), -1);
        std::vector<bool> done(static_cast<std::size_t>(n + m), false);
        for (int i = 0; i < n; ++i)
            if (supply[i] > 0) dist[i] = 0.0;

        for (int iter = 0; iter < n + m; ++iter) {
            int u = -1;
            double best = inf;
            for (int v = 0; v < n + m; ++v)
                if (!done[v] && dist[v] < best) {
                    best = dist[v];
                    u = v;
                }
            if (u < 0) break;
            done[u] = true;
            if (u < n) {
                for (int j = 0; j < m; ++j) {
                    const double rc = cost(u, j) + pot[u] - pot[n + j];
                    if (dist[u] + rc < dist[n + j] - 1e-15) {
                        dist[n + j] = dist[u] + rc;
                        parent[n + j] = u;
                    }
                }
            } else {
                const int j = u - n;
                for (int i = 0; i < n; ++i) {
                    if (flow(i, j) <= 0) continue;
                    const double rc = -cost(i, j) + pot[u] - pot[i];
                    if (dist[u] + rc < dist[i] - 1e-15) {
                        dist[i] = dist[u] + rc;
                        parent[i] = u;
                    }
                }
            }
        }

        int sink = -1;
        double best = inf;
        for (int j = 0; j < m; ++j)
            if (demand[j] > 0 && dist[n + j] < best) {
                best = dist[n + j];
                sink = n + j;
            }
        if (sink < 0) throw std::runtime_error("transport: no augmenting path");

        // Bottleneck along the alternating path: the path runs
        // source -> sink on forward (uncapacitated) arcs and sink -> source
        // on backward arcs bounded by the routed flow.
        long long push = demand[sink - n];
        int v = sink;
        while (parent[v] >= 0) {
            const int p = parent[v];
            if (v < n && p >= n) push = std::min(push, flow(v, p - n));
            v = p;
        }
        push = std::min(push, supply[v]);
        if (push <= 0) throw std::runtime_error("transport: zero augmentation");

        const int path_source = v;
        v = sink;
        while (parent[v] >= 0) {
            const int p = parent[v];
            if (v >= n && p < n)
                flow(p, v - n) += push;
            else if (v < n && p >= n)
                flow(v, p - n) -= push;
            v = p;
        }
        supply[path_source] -= push;
        demand[sink - n] -= push;
        remaining -= push;

        for (int w = 0; w < n + m; ++w)
            if (dist[w] < inf) pot[w] += dist[w];
    }

    std::vector<TransportPlan::Entry> entries;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            if (flow(i, j) > 0)
                entries.push_back({inst.src_action[i], inst.dst_action[j],
                                   static_cast<double>(flow(i, j)) / kMassScale});
    return entries;
}

std::vector<TransportPlan::Entry> northwest_corner(const DiscreteMeasure& mu,
                                                   const DiscreteMeasure& nu) {
    std::vector<TransportPlan::Entry> entries;
    std::size_t i = 0, j = 0;
    std::vector<double> supply = mu.mass, demand = nu.mass;
    while (i < supply.size() && j < demand.size()) {
        if (supply[i] <= 0.0) {
            ++i;
            continue;
        }
        if (demand[j] <= 0.0) {
            ++j;
            continue;
        }
        const double m = std::min(supply[i], demand[j]);
        entries.push_back({mu.support[i], nu.support[j], m});
        supply[i] -= m;
        demand[j] -= m;
        if (supply[i] <= demand[j])
            ++i;
        else
            ++j;
    }
    return entries;
}

DiscreteMeasure component_conditional(const RowVector& row,
                                      const std::vector<int>& partition, int label,
                                      double component_mass) {
    DiscreteMeasure out;
    for (int a = 0; a < static_cast<int>(partition.size()); ++a)
        if (partition[a] == label && row(a) > 0.0)
            out.push(a, row(a) / component_mass);
    return out;
}

void require_row_shapes(const RowVector& pi_o_row, const RowVector& pi_n_row,
                        const std::vector<int>& partition) {
    if (pi_o_row.size() != pi_n_row.size())
        throw std::invalid_argument("policy rows differ in length");
    if (static_cast<Eigen::Index>(partition.size()) != pi_o_row.size())
        throw std::invalid_argument("partition does not cover the action space");
}

}  // namespace

int component_count(const std::vector<int>& partition) {
    if (partition.empty()) throw std::invalid_argument("partition: empty");
    int max_label = -1;
    for (int l : partition) {
        if (l < 0) throw std::invalid_argument("partition: negative label");
        max_label = std::max(max_label, l);
    }
    std::vector<bool> seen(static_cast<std::size_t>(max_label + 1), false);
    for (int l : partition) seen[static_cast<std::size_t>(l)] = true;
    for (bool b : seen)
        if (!b) throw std::invalid_argument("partition: unused component label");
    return max_label + 1;
}

Vector component_masses(const RowVector& row, const std::vector<int>& partition,
                        int n_components) {
    Vector masses = Vector::Zero(n_components);
    for (int a = 0; a < static_cast<int>(partition.size()); ++a)
        masses(partition[a]) += row(a);
    return masses;
}

double DiscreteMeasure::total() const {
    double t = 0.0;
    for (double m : mass) t += m;
    return t;
}

void DiscreteMeasure::push(int action, double m) {
    if (m < 0.0) throw std::invalid_argument("measure: negative mass");
    support.push_back(action);
    mass.push_back(m);
}

double TransportPlan::total() const {
    double t = 0.0;
    for (const Entry& e : entries) t += e.mass;
    return t;
}

Vector TransportPlan::source_marginal(int n_actions) const {
    Vector out = Vector::Zero(n_actions);
    for (const Entry& e : entries) out(e.src) += e.mass;
    return out;
}

Vector TransportPlan::target_marginal(int n_actions) const {
    Vector out = Vector::Zero(n_actions);
    for (const Entry& e : entries) out(e.dst) += e.mass;
    return out;
}

GroundCost GroundCost::cross_component_indicator() {
    return GroundCost{Kind::CrossComponentIndicator, Matrix()};
}

GroundCost GroundCost::constant_one() { return GroundCost{Kind::ConstantOne, Matrix()}; }

GroundCost GroundCost::explicit_matrix(Matrix m) {
    if (!(m.array() >= 0.0).all() || !m.array().isFinite().all())
        throw std::invalid_argument("ground cost: matrix must be nonnegative and finite");
    return GroundCost{Kind::ExplicitMatrix, std::move(m)};
}

double GroundCost::at(int x, int y, const std::vector<int>& partition) const {
    switch (kind) {
        case Kind::CrossComponentIndicator:
            if (x >= static_cast<int>(partition.size()) ||
                y >= static_cast<int>(partition.size()))
                throw std::invalid_argument("ground cost: action outside partition");
            return partition[x] != partition[y] ? 1.0 : 0.0;
        case Kind::ConstantOne:
            return 1.0;
        case Kind::ExplicitMatrix:
            if (x >= matrix.rows() || y >= matrix.cols())
                throw std::invalid_argument("ground cost: action outside matrix");
            return matrix(x, y);
    }
    return 0.0;
}

std::pair<DiscreteMeasure, DiscreteMeasure> surplus_measures(
    const RowVector& pi_o_row, const RowVector& pi_n_row,
    const std::vector<int>& partition) {
    require_row_shapes(pi_o_row, pi_n_row, partition);
    const int L = component_count(partition);
    const Vector a = component_masses(pi_o_row, partition, L);
    const Vector b = component_masses(pi_n_row, partition, L);

    DiscreteMeasure rho, eta;
    for (int l = 0; l < L; ++l) {
        const double d = a(l) - b(l);
        if (d > 0.0) {
            for (int act = 0; act < static_cast<int>(partition.size()); ++act)
                if (partition[act] == l && pi_o_row(act) > 0.0)
                    rho.push(act, d * pi_o_row(act) / a(l));
        } else if (d < 0.0) {
            for (int act = 0; act < static_cast<int>(partition.size()); ++act)
                if (partition[act] == l && pi_n_row(act) > 0.0)
                    eta.push(act, -d * pi_n_row(act) / b(l));
        }
    }
    return {std::move(rho), std::move(eta)};
}

OtSolution solve_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                    const GroundCost& cost, const std::vector<int>& partition,
                    PlanMode mode) {
    const double total_mu = mu.total();
    const double total_nu = nu.total();
    if (std::abs(total_mu - total_nu) > kMarginalTol)
        throw std::runtime_error("transport: source and target masses differ");
    if (total_mu <= kMarginalTol) return OtSolution{};
    if (mu.support.size() > kMaxSupport || nu.support.size() > kMaxSupport)
        throw std::invalid_argument("transport: support larger than 64 points");

    TransportPlan plan;
    if (mode == PlanMode::FirstFeasible) {
        plan.entries = northwest_corner(mu, nu);
    } else {
        const IntInstance inst = quantize(mu, nu);
        Matrix c(inst.supply.size(), inst.demand.size());
        for (std::size_t i = 0; i < inst.supply.size(); ++i)
            for (std::size_t j = 0; j < inst.demand.size(); ++j)
                c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    cost.at(inst.src_action[i], inst.dst_action[j], partition);
        plan.entries = min_cost_flow(inst, c);
    }
    std::sort(plan.entries.begin(), plan.entries.end(),
              [](const TransportPlan::Entry& a, const TransportPlan::Entry& b) {
                  return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
              });
    double objective = 0.0;
    for (const TransportPlan::Entry& e : plan.entries)
        objective += e.mass * cost.at(e.src, e.dst, partition);
    return OtSolution{std::move(plan), objective};
}

double learning_cost_general(const RowVector& pi_o_row, const RowVector& pi_n_row,
                             const std::vector<int>& partition, const GroundCost& c1,
                             PlanMode mode) {
    const auto [rho, eta] = surplus_measures(pi_o_row, pi_n_row, partition);
    if (rho.empty() && eta.empty()) return 0.0;
    return solve_ot(rho, eta, c1, partition, mode).objective;
}

double transaction_cost_general(const RowVector& pi_o_row, const RowVector& pi_n_row,
                                const std::vector<int>& partition, const GroundCost& c2,
                                PlanMode mode) {
    require_row_shapes(pi_o_row, pi_n_row, partition);
    const int L = component_count(partition);
    const Vector a = component_masses(pi_o_row, partition, L);
    const Vector b = component_masses(pi_n_row, partition, L);
    double total = 0.0;
    for (int l = 0; l < L; ++l) {
        const double tau = std::min(a(l), b(l));
        if (tau <= 0.0) continue;
        const DiscreteMeasure po = component_conditional(pi_o_row, partition, l, a(l));
        const DiscreteMeasure pn = component_conditional(pi_n_row, partition, l, b(l));
        total += tau * solve_ot(po, pn, c2, partition, mode).objective;
    }
    return total;
}

TransportPlan combined_plan(const RowVector& pi_o_row, const RowVector& pi_n_row,
                            const std::vector<int>& partition, const GroundCost& c1,
                            const GroundCost& c2, PlanMode mode) {
    require_row_shapes(pi_o_row, pi_n_row, partition);
    const int L = component_count(partition);
    const Vector a = component_masses(pi_o_row, partition, L);
    const Vector b = component_masses(pi_n_row, partition, L);

    std::map<std::pair<int, int>, double> merged;
    const auto [rho, eta] = surplus_measures(pi_o_row, pi_n_row, partition);
    if (!rho.empty() || !eta.empty()) {
        for (const auto& e : solve_ot(rho, eta, c1, partition, mode).plan.entries)
            merged[{e.src, e.dst}] += e.mass;
    }
    for (int l = 0; l < L; ++l) {
        const double tau = std::min(a(l), b(l));
        if (tau <= 0.0) continue;
        const DiscreteMeasure po = component_conditional(pi_o_row, partition, l, a(l));
        const DiscreteMeasure pn = component_conditional(pi_n_row, partition, l, b(l));
        for (const auto& e : solve_ot(po, pn, c2, partition, mode).plan.entries)
            merged[{e.src, e.dst}] += tau * e.mass;
    }

    TransportPlan plan;
    for (const auto& [key, mass] : merged) plan.entries.push_back({key.first, key.second, mass});
    return plan;
}

std::string format_plan(const TransportPlan& plan) {
    std::ostringstream out;
    for (const auto& e : plan.entries)
        out << '(' << e.src << ", " << e.dst << ", " << fmt_g12(e.mass) << ")\n";
    return out.str();
}

}  // namespace switchrl
