#pragma once

// Seeded generators of random topologies and models for property tests.

#include <algorithm>
#include <random>
#include <vector>

#include <flownet/flownet.hpp>

namespace gen {

using namespace flownet;
using Rng = std::mt19937_64;

inline double uniform(Rng &rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_int(Rng &rng, std::size_t lo, std::size_t hi)
{
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(Rng &rng, double p)
{
    return std::bernoulli_distribution(p)(rng);
}

struct TopologySpec {
    std::size_t n_min = 1;
    std::size_t n_max = 8;
    double link_prob = 0.3;
    double outflow_prob = 0.3;
    double inflow_prob = 0.4;
    bool acyclic = false;
};

/// Any topology the parameters allow, connected or not.
inline Topology random_topology(Rng &rng, const TopologySpec &spec)
{
    const auto n = uniform_int(rng, spec.n_min, spec.n_max);
    std::vector<CellPair> adjacency;
    std::vector<CellIndex> in, out;
    for (CellIndex i = 0; i < n; ++i) {
        for (CellIndex j = 0; j < n; ++j) {
            if (i != j && (!spec.acyclic || i < j) && coin(rng, spec.link_prob)) {
                adjacency.emplace_back(i, j);
            }
        }
        if (coin(rng, spec.outflow_prob)) {
            out.push_back(i);
        }
        if (coin(rng, spec.inflow_prob)) {
            in.push_back(i);
        }
    }
    return Topology(n, std::move(adjacency), std::move(in), std::move(out));
}

/// Redraws until every cell reaches an outflow cell (and, optionally, is
/// reachable from an inflow cell).
inline Topology connected_topology(Rng &rng, TopologySpec spec, bool need_inflow = true)
{
    for (;;) {
        auto t = random_topology(rng, spec);
        if (outflow_connectivity(t).all && (!need_inflow || inflow_connectivity(t).all)) {
            return t;
        }
    }
}

/// Substochastic routing on the adjacency: rows of non-outflow cells sum to
/// one, outflow cells keep a deficit in [0.1, 1].
inline Matrix random_routing(Rng &rng, const Topology &t)
{
    const auto n = static_cast<Eigen::Index>(t.size());
    Matrix R = Matrix::Zero(n, n);
    for (CellIndex i = 0; i < t.size(); ++i) {
        const auto succ = t.out_neighbors(i);
        if (succ.empty()) {
            continue;
        }
        std::vector<double> w;
        double total = 0.0;
        for (std::size_t k = 0; k < succ.size(); ++k) {
            w.push_back(uniform(rng, 0.1, 1.0));
            total += w.back();
        }
        const double keep = t.is_outflow_cell(i) ? 1.0 - uniform(rng, 0.1, 1.0) : 1.0;
        for (std::size_t k = 0; k < succ.size(); ++k) {
            R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(succ[k])) = keep * w[k] / total;
        }
    }
    return R;
}

inline Vector random_inflow(Rng &rng, const Topology &t, double lo, double hi)
{
    Vector u = Vector::Zero(static_cast<Eigen::Index>(t.size()));
    for (auto r : t.inflow_cells()) {
        u[static_cast<Eigen::Index>(r)] = uniform(rng, lo, hi);
    }
    return u;
}

inline std::vector<DemandFunction> saturating_demands(Rng &rng, std::size_t n)
{
    std::vector<DemandFunction> d;
    for (std::size_t i = 0; i < n; ++i) {
        d.push_back(DemandFunction::saturating_exp(uniform(rng, 1.0, 3.0), uniform(rng, 0.5, 2.0)));
    }
    return d;
}

/// Affine model x' = u - L^T x with L = D (I - R).
inline Model random_affine(Rng &rng, const TopologySpec &spec)
{
    const auto t = connected_topology(rng, spec, false);
    const Matrix R = random_routing(rng, t);
    std::vector<DemandFunction> d;
    for (std::size_t i = 0; i < t.size(); ++i) {
        d.push_back(DemandFunction::linear(uniform(rng, 0.1, 1.0)));
    }
    return Model(t, std::move(d), std::nullopt, ConstantRoutingPolicy{R}, random_inflow(rng, t, 0.0, 2.0));
}

inline LogitParams random_logit_params(Rng &rng, std::size_t n)
{
    LogitParams p{Vector(static_cast<Eigen::Index>(n)), Vector(static_cast<Eigen::Index>(n))};
    for (std::size_t i = 0; i < n; ++i) {
        p.alpha[static_cast<Eigen::Index>(i)] = uniform(rng, -1.0, 1.0);
        p.beta[static_cast<Eigen::Index>(i)] = uniform(rng, 0.1, 1.0);
    }
    return p;
}

inline Model random_logit(Rng &rng, const TopologySpec &spec, bool with_control)
{
    const auto t = connected_topology(rng, spec, false);
    auto params = random_logit_params(rng, t.size());
    Policy policy = with_control ? Policy{LogitControlPolicy{params}} : Policy{LogitRoutingPolicy{params}};
    return Model(t, saturating_demands(rng, t.size()), std::nullopt, policy, random_inflow(rng, t, 0.0, 2.0));
}

/// Fixed-routing model with inflow rescaled so that max_i z*_i / C_i equals
/// `load` (below one: an equilibrium exists; above one: it does not).
inline Model random_fixed_routing(Rng &rng, const TopologySpec &spec, double load)
{
    for (;;) {
        const auto t = connected_topology(rng, spec, true);
        if (t.inflow_cells().empty()) {
            continue;
        }
        const Matrix R = random_routing(rng, t);
        auto demands = saturating_demands(rng, t.size());
        Vector u = random_inflow(rng, t, 0.5, 1.5);
        const auto n = static_cast<Eigen::Index>(t.size());
        const Vector z = (Matrix::Identity(n, n) - R.transpose()).partialPivLu().solve(u);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            worst = std::max(worst, z[i] / demands[static_cast<std::size_t>(i)].capacity());
        }
        if (worst <= 0.0) {
            continue;
        }
        u *= load / worst;
        return Model(t, std::move(demands), std::nullopt, ConstantRoutingPolicy{R}, u);
    }
}

inline ConvexCostSet random_quadratic_costs(Rng &rng, const Topology &t)
{
    ConvexCostSet costs;
    for (const auto &pair : t.adjacency()) {
        costs.links.emplace(pair, ConvexCost::quadratic(uniform(rng, 0.5, 2.0)));
    }
    for (auto k : t.outflow_cells()) {
        costs.outflows.emplace(k, ConvexCost::quadratic(uniform(rng, 0.5, 2.0)));
    }
    return costs;
}

/// Acyclic road network on nodes 1..k with on- and off-ramps through the
/// environment node 0.
inline NodeLinkDigraph random_road_network(Rng &rng, std::size_t k_min, std::size_t k_max)
{
    NodeLinkDigraph g{uniform_int(rng, k_min, k_max) + 1, {}};
    for (std::size_t a = 1; a < g.node_count; ++a) {
        for (std::size_t b = a + 1; b < g.node_count; ++b) {
            if (coin(rng, 0.5)) {
                g.links.emplace_back(a, b);
            }
        }
    }
    for (std::size_t a = 1; a < g.node_count; ++a) {
        if (coin(rng, 0.4)) {
            g.links.emplace_back(0, a);
        }
        if (coin(rng, 0.4)) {
            g.links.emplace_back(a, 0);
        }
    }
    return g;
}

inline Vector random_state(Rng &rng, std::size_t n, double lo, double hi)
{
    Vector x(static_cast<Eigen::Index>(n));
    for (auto &v : x) {
        v = uniform(rng, lo, hi);
    }
    return x;
}

} // namespace gen
