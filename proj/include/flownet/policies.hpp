#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <variant>

#include "error.hpp"
#include "flowfuncs.hpp"
#include "topology.hpp"
#include "types.hpp"

namespace flownet {

/// Cell-to-cell flows F (n x n) and outflows to the environment w.
struct Flows {
    Matrix F;
    Vector w;

    /// Total outflow z = F 1 + w.
    Vector total_outflow() const
    {
        return F.rowwise().sum() + w;
    }

    /// Mass balance u + F^T 1 - F 1 - w.
    Vector balance(const Vector &inflow) const
    {
        return inflow + F.colwise().sum().transpose() - F.rowwise().sum() - w;
    }
};

inline constexpr double routing_tolerance = 1e-12;

namespace detail {

inline void require_nonnegative(const Vector &x, ErrorCode code, const char *what)
{
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0)) {
            throw Error(code, std::string(what) + " entry " + std::to_string(i + 1) + " is negative");
        }
    }
}

inline void require_size(const Topology &t, Eigen::Index size, const char *what)
{
    if (static_cast<std::size_t>(size) != t.size()) {
        throw Error(ErrorCode::PolicyTopologyMismatch, std::string(what) + " has size " + std::to_string(size)
                                                           + ", topology has " + std::to_string(t.size()) + " cells");
    }
}

} // namespace detail

/// Validates a constant routing matrix against a topology: nonnegative,
/// supported on the adjacency, substochastic, and row-stochastic outside the
/// outflow cells.
inline void validate_routing(const Topology &t, const Matrix &R)
{
    const auto n = static_cast<Eigen::Index>(t.size());
    if (R.rows() != n || R.cols() != n) {
        throw Error(ErrorCode::PolicyTopologyMismatch, "routing matrix must be " + std::to_string(n) + "x"
                                                           + std::to_string(n));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double r = R(i, j);
            if (!(r >= 0.0) || !std::isfinite(r)) {
                throw Error(ErrorCode::NotSubstochastic, "R(" + std::to_string(i + 1) + "," + std::to_string(j + 1)
                                                             + ") is negative or not finite");
            }
            if (r > 0.0 && !t.adjacent(static_cast<CellIndex>(i), static_cast<CellIndex>(j))) {
                throw Error(ErrorCode::SupportViolation, "R(" + std::to_string(i + 1) + "," + std::to_string(j + 1)
                                                             + ") > 0 on a non-adjacent pair");
            }
            row += r;
        }
        if (row > 1.0 + routing_tolerance) {
            throw Error(ErrorCode::NotSubstochastic, "row " + std::to_string(i + 1) + " sums to " + std::to_string(row));
        }
        if (!t.is_outflow_cell(static_cast<CellIndex>(i)) && std::abs(row - 1.0) > routing_tolerance) {
            throw Error(ErrorCode::NonSinkRowSumNotOne,
                        "row " + std::to_string(i + 1) + " sums to " + std::to_string(row)
                            + " but cell " + std::to_string(i + 1) + " has no outflow to the environment");
        }
    }
}

/// Constant routing matrix, validated at construction.
class ConstantRouting
{
public:
    ConstantRouting(const Topology &t, Matrix R) : R_(std::move(R))
    {
        validate_routing(t, R_);
    }

    const Matrix &matrix() const noexcept
    {
        return R_;
    }

private:
    Matrix R_;
};

/// Parameters of the i-logit routing and flow-control family.
struct LogitParams {
    Vector alpha;
    Vector beta;

    void validate(const Topology &t) const
    {
        detail::require_size(t, alpha.size(), "alpha");
        detail::require_size(t, beta.size(), "beta");
        for (Eigen::Index i = 0; i < beta.size(); ++i) {
            if (!(beta[i] >= 0.0) || !std::isfinite(beta[i]) || !std::isfinite(alpha[i])) {
                throw Error(ErrorCode::InvalidParameter, "beta must be nonnegative and alpha finite");
            }
        }
    }

    friend bool operator==(const LogitParams &a, const LogitParams &b)
    {
        return same_values(a.alpha, b.alpha) && same_values(a.beta, b.beta);
    }
};

namespace detail {

// Shifted exponents over the out-neighborhood of i, plus the environment
// term (exponent 0) for outflow cells. Returns the shift used.
inline double logit_shift(const LogitParams &p, const Topology &t, const Vector &x, CellIndex i, bool include_self)
{
    double m = -infinity;
    for (auto k : t.out_neighbors(i)) {
        m = std::max(m, p.alpha[k] - p.beta[k] * x[k]);
    }
    if (t.is_outflow_cell(i)) {
        m = std::max(m, 0.0);
    }
    if (include_self) {
        m = std::max(m, p.alpha[i] - p.beta[i] * x[i]);
    }
    return std::isfinite(m) ? m : 0.0;
}

} // namespace detail

/// Logit routing R(x): R_ij = e^{a_j - b_j x_j} / (sum_{k in E_i} e^{a_k - b_k x_k} + [i outflow]).
inline Matrix logit_routing(const LogitParams &p, const Topology &t, const Vector &x)
{
    detail::require_size(t, x.size(), "state");
    detail::require_nonnegative(x, ErrorCode::NegativeState, "state");
    const auto n = static_cast<Eigen::Index>(t.size());
    Matrix R = Matrix::Zero(n, n);
    for (CellIndex i = 0; i < t.size(); ++i) {
        const auto neighbors = t.out_neighbors(i);
        if (neighbors.empty()) {
            continue;
        }
        const double m = detail::logit_shift(p, t, x, i, false);
        double denom = t.is_outflow_cell(i) ? std::exp(-m) : 0.0;
        for (auto k : neighbors) {
            denom += std::exp(p.alpha[k] - p.beta[k] * x[k] - m);
        }
        for (auto j : neighbors) {
            R(i, j) = std::exp(p.alpha[j] - p.beta[j] * x[j] - m) / denom;
        }
    }
    return R;
}

/// Locally responsive flow control gamma(x) in [0, 1]^n.
inline Vector logit_flow_control(const LogitParams &p, const Topology &t, const Vector &x)
{
    detail::require_size(t, x.size(), "state");
    detail::require_nonnegative(x, ErrorCode::NegativeState, "state");
    Vector gamma(t.size());
    for (CellIndex i = 0; i < t.size(); ++i) {
        const double m = detail::logit_shift(p, t, x, i, true);
        double downstream = t.is_outflow_cell(i) ? std::exp(-m) : 0.0;
        for (auto k : t.out_neighbors(i)) {
            downstream += std::exp(p.alpha[k] - p.beta[k] * x[k] - m);
        }
        gamma[i] = downstream / (std::exp(p.alpha[i] - p.beta[i] * x[i] - m) + downstream);
    }
    return gamma;
}

namespace detail {

inline void check_ctm_inputs(const Topology &t, const Matrix &R, const Vector &demand, const Vector &supply)
{
    require_size(t, demand.size(), "demand vector");
    require_size(t, supply.size(), "supply vector");
    require_size(t, R.rows(), "routing matrix");
    require_nonnegative(demand, ErrorCode::NegativeInput, "demand");
    require_nonnegative(supply, ErrorCode::NegativeInput, "supply");
}

// Admissible fraction of the aggregated demand that cell k accepts.
inline double admitted_fraction(double aggregated_demand, double supply)
{
    if (aggregated_demand <= 0.0) {
        return 1.0;
    }
    return std::min(1.0, supply / aggregated_demand);
}

} // namespace detail

/// FIFO flow control: the largest alpha in [0, 1] such that alpha times the
/// aggregated demand into every downstream cell of i fits its supply.
inline Vector fifo_gamma(const Topology &t, const Matrix &R, const Vector &demand, const Vector &supply)
{
    detail::check_ctm_inputs(t, R, demand, supply);
    const Vector aggregated = R.transpose() * demand;
    Vector gamma = Vector::Ones(t.size());
    for (CellIndex i = 0; i < t.size(); ++i) {
        for (auto k : t.out_neighbors(i)) {
            gamma[i] = std::min(gamma[i], detail::admitted_fraction(aggregated[k], supply[k]));
        }
    }
    return gamma;
}

/// Non-FIFO diverge rule: each link (i,j) is throttled independently by the
/// supply of j; F_ij = gamma_ij Rbar_ij phi_i and w_i = (1 - sum_j Rbar_ij) phi_i.
inline Flows nonfifo_flows(const Topology &t, const Matrix &R, const Vector &demand, const Vector &supply)
{
    detail::check_ctm_inputs(t, R, demand, supply);
    const auto n = static_cast<Eigen::Index>(t.size());
    const Vector aggregated = R.transpose() * demand;
    Flows flows{Matrix::Zero(n, n), Vector::Zero(n)};
    for (const auto &[i, j] : t.adjacency()) {
        flows.F(i, j) = detail::admitted_fraction(aggregated[j], supply[j]) * R(i, j) * demand[i];
    }
    flows.w = ((Vector::Ones(n) - R.rowwise().sum()).array() * demand.array()).matrix();
    return flows;
}

/// psi(y) = c y^2 / 2.
struct QuadraticCost {
    double c;
    friend bool operator==(const QuadraticCost &, const QuadraticCost &) = default;
};

/// Strictly convex increasing flow cost, exposed through its marginal cost
/// psi' and the inverse of psi'. Add families to the variant.
class ConvexCost
{
public:
    using Family = std::variant<QuadraticCost>;

    static ConvexCost quadratic(double c)
    {
        detail::require_positive(c, "quadratic cost coefficient");
        return ConvexCost(QuadraticCost{c});
    }

    const Family &family() const noexcept
    {
        return family_;
    }

    double value(double y) const
    {
        return std::visit([y](const QuadraticCost &f) { return 0.5 * f.c * y * y; }, family_);
    }

    double slope(double y) const
    {
        return std::visit([y](const QuadraticCost &f) { return f.c * y; }, family_);
    }

    double curvature(double) const
    {
        return std::visit([](const QuadraticCost &f) { return f.c; }, family_);
    }

    /// (psi')^{-1}(p) for p >= psi'(0).
    double slope_inverse(double p) const
    {
        return std::visit([p](const QuadraticCost &f) { return p / f.c; }, family_);
    }

    friend bool operator==(const ConvexCost &, const ConvexCost &) = default;

private:
    explicit ConvexCost(Family f) : family_(f) {}

    Family family_;
};

/// Costs on every adjacency pair and every outflow cell.
struct ConvexCostSet {
    std::map<CellPair, ConvexCost> links;
    std::map<CellIndex, ConvexCost> outflows;

    void validate(const Topology &t) const
    {
        for (const auto &pair : t.adjacency()) {
            if (!links.contains(pair)) {
                throw Error(ErrorCode::MissingCost, "no cost for pair (" + std::to_string(pair.first + 1) + ","
                                                        + std::to_string(pair.second + 1) + ")");
            }
        }
        for (const auto &[pair, cost] : links) {
            if (!t.adjacent(pair.first, pair.second)) {
                throw Error(ErrorCode::SupportViolation, "cost given for non-adjacent pair ("
                                                             + std::to_string(pair.first + 1) + ","
                                                             + std::to_string(pair.second + 1) + ")");
            }
        }
        for (auto k : t.outflow_cells()) {
            if (!outflows.contains(k)) {
                throw Error(ErrorCode::MissingCost, "no cost for outflow cell " + std::to_string(k + 1));
            }
        }
        for (const auto &[k, cost] : outflows) {
            if (k >= t.size() || !t.is_outflow_cell(k)) {
                throw Error(ErrorCode::SupportViolation,
                            "outflow cost given for cell " + std::to_string(k + 1) + " which is not an outflow cell");
            }
        }
    }

    /// Every pair and outflow cell priced by the same cost.
    static ConvexCostSet uniform(const Topology &t, const ConvexCost &cost)
    {
        ConvexCostSet set;
        for (const auto &pair : t.adjacency()) {
            set.links.emplace(pair, cost);
        }
        for (auto k : t.outflow_cells()) {
            set.outflows.emplace(k, cost);
        }
        return set;
    }

    friend bool operator==(const ConvexCostSet &, const ConvexCostSet &) = default;
};

/// Flows solving the first-order optimality conditions for multipliers x.
inline Flows dual_ascent_flows(const Topology &t, const ConvexCostSet &costs, const Vector &x)
{
    detail::require_size(t, x.size(), "multiplier vector");
    detail::require_nonnegative(x, ErrorCode::NegativeState, "multiplier vector");
    const auto n = static_cast<Eigen::Index>(t.size());
    Flows flows{Matrix::Zero(n, n), Vector::Zero(n)};
    for (const auto &[pair, cost] : costs.links) {
        const double gap = x[pair.first] - x[pair.second];
        if (gap >= cost.slope(0.0)) {
            flows.F(pair.first, pair.second) = cost.slope_inverse(gap);
        }
    }
    for (const auto &[k, cost] : costs.outflows) {
        if (x[k] >= cost.slope(0.0)) {
            flows.w[k] = cost.slope_inverse(x[k]);
        }
    }
    return flows;
}

} // namespace flownet
