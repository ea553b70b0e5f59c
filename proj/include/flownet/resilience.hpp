#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "topology.hpp"
#include "types.hpp"

namespace flownet {

/// Inflow increments and demand scalings phi~_i = s_i phi_i.
struct Perturbation {
    Vector inflow_delta;
    Vector demand_scale;

    static Perturbation none(std::size_t n)
    {
        const auto m = static_cast<Eigen::Index>(n);
        return {Vector::Zero(m), Vector::Ones(m)};
    }
};

namespace detail {

inline void require_finite_capacities(const Vector &C)
{
    for (Eigen::Index i = 0; i < C.size(); ++i) {
        if (!std::isfinite(C[i])) {
            throw Error(ErrorCode::InfiniteCapacity, "cell " + std::to_string(i + 1) + " has unbounded flow capacity");
        }
    }
}

inline Vector finite_capacities(const Model &m)
{
    if (!m.uses_demands()) {
        throw Error(ErrorCode::PreconditionViolated, "dual-ascent models have no flow capacities");
    }
    Vector C = m.capacities();
    require_finite_capacities(C);
    return C;
}

inline void check_perturbation(const Model &m, const Perturbation &p)
{
    const auto n = static_cast<Eigen::Index>(m.size());
    if (p.inflow_delta.size() != n || p.demand_scale.size() != n) {
        throw Error(ErrorCode::PolicyTopologyMismatch, "perturbation size does not match the model");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(p.demand_scale[i] > 0.0 && p.demand_scale[i] <= 1.0)) {
            throw Error(ErrorCode::InvalidParameter, "demand scaling at cell " + std::to_string(i + 1)
                                                         + " must lie in (0, 1]");
        }
        if (!std::isfinite(p.inflow_delta[i])) {
            throw Error(ErrorCode::InvalidParameter, "inflow increment must be finite");
        }
    }
}

} // namespace detail

/// delta = sum |du_i| + sum (1 - s_i) C_i.
inline double perturbation_magnitude(const Perturbation &p, const Model &m)
{
    detail::check_perturbation(m, p);
    const Vector C = detail::finite_capacities(m);
    return p.inflow_delta.cwiseAbs().sum() + ((1.0 - p.demand_scale.array()) * C.array()).sum();
}

/// Same topology, supplies and policy with inflow u + du and demands s phi.
inline Model apply_perturbation(const Model &m, const Perturbation &p)
{
    detail::check_perturbation(m, p);
    std::vector<DemandFunction> demands;
    demands.reserve(m.size());
    for (std::size_t i = 0; i < m.demands().size(); ++i) {
        const double s = p.demand_scale[static_cast<Eigen::Index>(i)];
        demands.push_back(s < 1.0 ? m.demands()[i].scaled(s) : m.demands()[i]);
    }
    return Model(m.topology(), std::move(demands), m.supplies(), m.policy(), m.inflow() + p.inflow_delta);
}

// ---------------------------------------------------------------------------
// Min-cut residual capacity
// ---------------------------------------------------------------------------

struct MinCutResult {
    double value = 0.0;
    std::vector<CellIndex> cut;     // argmin J
    std::vector<CellIndex> trapped; // K_J
};

inline constexpr std::size_t max_enumeration_cells = 24;

namespace detail {

inline std::vector<CellIndex> bits_to_cells(std::uint32_t mask, std::size_t n)
{
    std::vector<CellIndex> cells;
    for (CellIndex i = 0; i < n; ++i) {
        if (mask & (1u << i)) {
            cells.push_back(i);
        }
    }
    return cells;
}

} // namespace detail

/// min over nonempty J of max(0, C(J) - u(K_J)), by depth-first enumeration
/// of J with a bound on the best achievable value of any extension.
inline MinCutResult min_cut_residual_capacity(const Topology &t, const Vector &C, const Vector &u)
{
    const auto n = t.size();
    if (n > max_enumeration_cells) {
        throw Error(ErrorCode::TooManyCells, "enumeration supports at most " + std::to_string(max_enumeration_cells)
                                                  + " cells, got " + std::to_string(n));
    }
    detail::require_size(t, C.size(), "capacity vector");
    detail::require_size(t, u.size(), "inflow vector");
    detail::require_finite_capacities(C);
    detail::require_nonnegative(u, ErrorCode::NegativeInput, "inflow");
    if (!outflow_connectivity(t).all) {
        throw Error(ErrorCode::NotOutflowConnected, "topology is not outflow-connected");
    }

    std::vector<std::uint32_t> pred(n, 0);
    std::uint32_t exits = 0;
    for (const auto &[i, j] : t.adjacency()) {
        pred[j] |= 1u << i;
    }
    for (auto s : t.outflow_cells()) {
        exits |= 1u << s;
    }
    const double total_inflow = u.sum();

    // Cells that still reach an exit with J removed, as a fixpoint.
    auto alive = [&](std::uint32_t removed) {
        std::uint32_t reached = exits & ~removed;
        for (;;) {
            std::uint32_t next = reached;
            for (CellIndex j = 0; j < n; ++j) {
                if (reached & (1u << j)) {
                    next |= pred[j];
                }
            }
            next &= ~removed;
            if (next == reached) {
                return reached;
            }
            reached = next;
        }
    };
    const std::uint32_t all = n == 32 ? ~0u : ((1u << n) - 1u);

    MinCutResult best;
    best.value = infinity;
    std::uint32_t best_mask = 0, best_trapped = 0;

    auto visit = [&](auto &&self, CellIndex next, std::uint32_t mask, double cap) -> void {
        // Extending J only adds capacity; trapped inflow never exceeds the total.
        if (mask != 0 && std::max(0.0, cap - total_inflow) >= best.value) {
            return;
        }
        if (next == n) {
            if (mask == 0) {
                return;
            }
            const std::uint32_t trapped = all & ~alive(mask);
            double inflow = 0.0;
            for (CellIndex k = 0; k < n; ++k) {
                if (trapped & (1u << k)) {
                    inflow += u[static_cast<Eigen::Index>(k)];
                }
            }
            const double value = std::max(0.0, cap - inflow);
            if (value < best.value) {
                best.value = value;
                best_mask = mask;
                best_trapped = trapped;
            }
            return;
        }
        self(self, next + 1, mask | (1u << next), cap + C[static_cast<Eigen::Index>(next)]);
        self(self, next + 1, mask, cap);
    };
    visit(visit, 0, 0u, 0.0);

    best.cut = detail::bits_to_cells(best_mask, n);
    best.trapped = detail::bits_to_cells(best_trapped, n);
    return best;
}

/// C_min-cut of the model's capacities and inflow: an upper bound on every
/// margin of resilience.
inline MinCutResult upper_bound_min_cut(const Model &m)
{
    return min_cut_residual_capacity(m.topology(), detail::finite_capacities(m), m.inflow());
}

// ---------------------------------------------------------------------------
// Margin formulas
// ---------------------------------------------------------------------------

struct FormulaMargin {
    double value = 0.0;
    std::string formula; // "min-cell" or "out-neighborhood"
    std::vector<CellIndex> argmin;
    Vector outflow; // z* used by the formula
    bool nominal_stable = true;
    std::vector<std::string> notes;
};

namespace detail {

inline void require_line_digraph_class(const Topology &t)
{
    const auto p = line_digraph_properties(t);
    if (!p.all()) {
        std::string why;
        if (!p.inflow_cells_are_sources) {
            why += " inflow cells must be sources;";
        }
        if (!p.outflow_cells_are_sinks) {
            why += " outflow cells must be sinks;";
        }
        if (!p.neighborhoods_coincide_or_disjoint) {
            why += " out-neighborhoods must coincide or be disjoint;";
        }
        if (!p.acyclic) {
            why += " cell graph must be acyclic;";
        }
        why.pop_back();
        throw Error(ErrorCode::TopologyNotLineDigraphAcyclic, "topology outside the line-digraph class:" + why);
    }
}

} // namespace detail

/// Fixed routing: nu = min_i max(0, C_i - z*_i), z* = (I - R^T)^{-1} u.
inline FormulaMargin margin_fixed_routing(const Model &m)
{
    const auto *policy = std::get_if<ConstantRoutingPolicy>(&m.policy());
    if (!policy) {
        throw Error(ErrorCode::PreconditionViolated, "fixed-routing margin needs a constant routing policy");
    }
    const auto &t = m.topology();
    detail::require_line_digraph_class(t);
    const Vector C = detail::finite_capacities(m);
    if (!outflow_connectivity(t).all) {
        throw Error(ErrorCode::NotOutflowConnected, "topology is not outflow-connected");
    }
    const auto n = static_cast<Eigen::Index>(m.size());
    FormulaMargin r;
    r.formula = "min-cell";
    r.outflow = (Matrix::Identity(n, n) - policy->routing.transpose()).partialPivLu().solve(m.inflow());
    r.value = infinity;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (r.outflow[i] > C[i]) {
            throw Error(ErrorCode::CapacityViolated, "z*_" + std::to_string(i + 1) + " exceeds capacity; no equilibrium");
        }
        const double residual = std::max(0.0, C[i] - r.outflow[i]);
        if (residual < r.value) {
            r.value = residual;
            r.argmin = {static_cast<CellIndex>(i)};
        }
    }
    return r;
}

/// Locally responsive routing: nu = min over out-neighborhoods E of
/// sum_{j in E} (C_j - z*_j); z* = C when the nominal network is unstable.
/// The out-neighborhoods are the nonempty E_i plus one singleton {r} per
/// inflow cell r: exogenous inflow cannot be rerouted, so an on-ramp acts as
/// the only out-link of its own origin.
inline FormulaMargin margin_locally_responsive(const Model &m, const EquilibriumConfig &config = {})
{
    if (!std::holds_alternative<LogitRoutingPolicy>(m.policy())) {
        throw Error(ErrorCode::PreconditionViolated, "locally responsive margin needs a logit routing policy");
    }
    const auto &t = m.topology();
    detail::require_line_digraph_class(t);
    const Vector C = detail::finite_capacities(m);
    const auto n = static_cast<Eigen::Index>(m.size());

    FormulaMargin r;
    r.formula = "out-neighborhood";
    r.notes.push_back("minimum over nonempty out-neighborhoods and singleton inflow cells");
    const auto search = equilibrium_from_zero(m, config);
    r.nominal_stable = search.bounded;
    if (search.bounded) {
        // Conservation at the limit state pins z* down to the solve accuracy.
        const Matrix R = routing_at(m, search.equilibrium->state);
        r.outflow = (Matrix::Identity(n, n) - R.transpose()).partialPivLu().solve(m.inflow());
    } else {
        r.outflow = C;
    }

    std::vector<std::vector<CellIndex>> groups;
    for (CellIndex i = 0; i < t.size(); ++i) {
        const auto succ = t.out_neighbors(i);
        if (!succ.empty()) {
            groups.emplace_back(succ.begin(), succ.end());
        }
    }
    for (auto k : t.inflow_cells()) {
        groups.push_back({k});
    }
    r.value = infinity;
    for (const auto &group : groups) {
        double residual = 0.0;
        for (auto j : group) {
            const auto jj = static_cast<Eigen::Index>(j);
            residual += std::max(0.0, C[jj] - r.outflow[jj]);
        }
        if (residual < r.value) {
            r.value = residual;
            r.argmin = group;
        }
    }
    if (!std::isfinite(r.value)) {
        // No successors and no inflow anywhere: per-cell residual capacities.
        r.formula = "min-cell";
        r.notes.push_back("no out-neighborhoods; per-cell residual capacities used");
        for (Eigen::Index i = 0; i < n; ++i) {
            const double residual = std::max(0.0, C[i] - r.outflow[i]);
            if (residual < r.value) {
                r.value = residual;
                r.argmin = {static_cast<CellIndex>(i)};
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Empirical margin by bisection
// ---------------------------------------------------------------------------

/// One-parameter family p(delta) with magnitude exactly delta.
struct PerturbationFamily {
    enum class Kind { DemandScaling, InflowIncrease };
    Kind kind = Kind::DemandScaling;
    /// Demand scaling: cells whose demands shrink, delta split in proportion
    /// to capacity. Inflow increase: inflow cells sharing delta equally.
    std::vector<CellIndex> cells;
};

inline std::string_view to_string(PerturbationFamily::Kind k)
{
    return k == PerturbationFamily::Kind::DemandScaling ? "demand_scaling" : "inflow_increase";
}

/// Upper end of the delta range for which the family is defined.
inline double family_limit(const Model &m, const PerturbationFamily &family)
{
    const Vector C = detail::finite_capacities(m);
    if (family.cells.empty()) {
        throw Error(ErrorCode::InvalidParameter, "perturbation family needs at least one cell");
    }
    for (auto j : family.cells) {
        if (j >= m.size()) {
            throw Error(ErrorCode::IndexOutOfRange, "family cell outside topology");
        }
        if (family.kind == PerturbationFamily::Kind::InflowIncrease && !m.topology().is_inflow_cell(j)) {
            throw Error(ErrorCode::InflowNotSupported, "cell " + std::to_string(j + 1) + " is not an inflow cell");
        }
    }
    if (family.kind == PerturbationFamily::Kind::InflowIncrease) {
        return C.sum();
    }
    double cap = 0.0;
    for (auto j : family.cells) {
        cap += C[static_cast<Eigen::Index>(j)];
    }
    return std::min(C.sum(), cap);
}

inline Perturbation family_member(const Model &m, const PerturbationFamily &family, double delta)
{
    auto p = Perturbation::none(m.size());
    if (family.kind == PerturbationFamily::Kind::InflowIncrease) {
        for (auto j : family.cells) {
            p.inflow_delta[static_cast<Eigen::Index>(j)] = delta / static_cast<double>(family.cells.size());
        }
        return p;
    }
    const Vector C = detail::finite_capacities(m);
    double cap = 0.0;
    for (auto j : family.cells) {
        cap += C[static_cast<Eigen::Index>(j)];
    }
    const double s = 1.0 - delta / cap;
    if (!(s > 0.0)) {
        throw Error(ErrorCode::InvalidParameter, "delta removes the whole capacity of the family cells");
    }
    for (auto j : family.cells) {
        p.demand_scale[static_cast<Eigen::Index>(j)] = s;
    }
    return p;
}

struct EmpiricalMarginConfig {
    double tol = 1e-2;
    InstabilityConfig detector{};
    /// Horizon multipliers tried in turn while a probe is inconclusive or
    /// unstable only by its tail slope.
    std::vector<double> horizon_factors{1.0, 4.0, 16.0, 64.0};
    std::size_t max_probes = 200;
};

struct ProbeRecord {
    double delta = 0.0;
    StabilityVerdict verdict = StabilityVerdict::Inconclusive;
    StabilityVerdict from_zero = StabilityVerdict::Inconclusive;
    std::optional<StabilityVerdict> from_equilibrium;
    double horizon = 0.0;
};

struct MarginReport {
    std::optional<FormulaMargin> formula;
    std::optional<MinCutResult> min_cut;
    PerturbationFamily family;
    double lo = 0.0;
    double hi = infinity;
    double tol = 0.0;
    bool complete = false; // bracket narrowed to tol
    std::optional<double> inconclusive_delta;
    std::optional<Perturbation> witness; // member at hi
    std::vector<ProbeRecord> probes;
    std::vector<std::string> notes;
};

namespace detail {

inline StabilityVerdict combine(StabilityVerdict a, std::optional<StabilityVerdict> b)
{
    if (a == StabilityVerdict::Unstable || (b && *b == StabilityVerdict::Unstable)) {
        return StabilityVerdict::Unstable;
    }
    if (a == StabilityVerdict::Stable && (!b || *b == StabilityVerdict::Stable)) {
        return StabilityVerdict::Stable;
    }
    return StabilityVerdict::Inconclusive;
}

inline ProbeRecord run_probe(const Model &m, const PerturbationFamily &family, double delta,
                             const std::optional<Vector> &nominal_equilibrium, const EmpiricalMarginConfig &config)
{
    const Model perturbed = apply_perturbation(m, family_member(m, family, delta));
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(m.size()));
    ProbeRecord rec;
    rec.delta = delta;
    for (double factor : config.horizon_factors) {
        InstabilityConfig detector = config.detector;
        detector.horizon *= factor;
        rec.horizon = detector.horizon;
        const auto zero_run = detect_instability(perturbed, zero, detector);
        // Crossing X_max settles it; a tail slope alone may still be a slow
        // approach to a distant equilibrium, so it is rechecked over a longer
        // horizon when one is left.
        bool diverged = zero_run.verdict == StabilityVerdict::Unstable && zero_run.final_time < detector.horizon;
        rec.from_zero = zero_run.verdict;
        rec.from_equilibrium.reset();
        if (rec.from_zero != StabilityVerdict::Unstable && nominal_equilibrium) {
            const auto eq_run = detect_instability(perturbed, *nominal_equilibrium, detector);
            rec.from_equilibrium = eq_run.verdict;
            diverged = eq_run.verdict == StabilityVerdict::Unstable && eq_run.final_time < detector.horizon;
        }
        rec.verdict = combine(rec.from_zero, rec.from_equilibrium);
        if (rec.verdict == StabilityVerdict::Stable || diverged) {
            break;
        }
    }
    return rec;
}

} // namespace detail

/// Bisection on delta for the boundary between stable and unstable
/// perturbed networks. Probes start from 0 and from the nominal equilibrium.
/// An inconclusive midpoint is replaced by off-centre probes so the bracket
/// still shrinks; if none is conclusive the search stops there.
inline MarginReport empirical_margin(const Model &m, const PerturbationFamily &family,
                                     const EmpiricalMarginConfig &config = {})
{
    if (!(config.tol > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "tolerance must be positive");
    }
    MarginReport report;
    report.family = family;
    report.tol = config.tol;
    const double limit = family_limit(m, family);
    // Demand scaling cannot remove the entire capacity of the family cells.
    const double top = family.kind == PerturbationFamily::Kind::DemandScaling ? limit * (1.0 - 1e-9) : limit;

    const auto nominal = detail::run_probe(m, family, 0.0, std::nullopt, config);
    report.probes.push_back(nominal);
    if (nominal.verdict == StabilityVerdict::Unstable) {
        report.lo = report.hi = 0.0;
        report.complete = true;
        report.witness = Perturbation::none(m.size());
        report.notes.push_back("nominal network is unstable");
        return report;
    }
    if (nominal.verdict == StabilityVerdict::Inconclusive) {
        report.inconclusive_delta = 0.0;
        report.notes.push_back("nominal network could not be classified");
        return report;
    }
    std::optional<Vector> equilibrium;
    {
        InstabilityConfig detector = config.detector;
        detector.horizon *= config.horizon_factors.empty() ? 1.0 : config.horizon_factors.back();
        const auto settle = detect_instability(m, Vector::Zero(static_cast<Eigen::Index>(m.size())), detector);
        if (settle.verdict == StabilityVerdict::Stable) {
            equilibrium = settle.final_state;
        }
    }

    const auto upper = detail::run_probe(m, family, top, equilibrium, config);
    report.probes.push_back(upper);
    if (upper.verdict != StabilityVerdict::Unstable) {
        report.lo = upper.verdict == StabilityVerdict::Stable ? top : 0.0;
        report.hi = infinity;
        if (upper.verdict == StabilityVerdict::Inconclusive) {
            report.inconclusive_delta = top;
        }
        report.notes.push_back("no unstable member found in the family");
        return report;
    }

    double lo = 0.0, hi = top;
    while (hi - lo > config.tol && report.probes.size() < config.max_probes) {
        const double w = hi - lo;
        const double mid = 0.5 * (lo + hi);
        bool moved = false;
        for (double offset : {0.0, -0.25, 0.25, -0.375, 0.375}) {
            const double delta = mid + offset * w;
            const auto rec = detail::run_probe(m, family, delta, equilibrium, config);
            report.probes.push_back(rec);
            if (rec.verdict == StabilityVerdict::Stable) {
                lo = delta;
                moved = true;
                break;
            }
            if (rec.verdict == StabilityVerdict::Unstable) {
                hi = delta;
                moved = true;
                break;
            }
        }
        if (!moved) {
            report.inconclusive_delta = mid;
            break;
        }
    }
    report.lo = lo;
    report.hi = hi;
    report.complete = hi - lo <= config.tol;
    report.witness = family_member(m, family, hi);
    return report;
}

/// Formula margin for the model's policy, or none when no formula applies.
inline std::optional<FormulaMargin> formula_margin(const Model &m, const EquilibriumConfig &config = {})
{
    if (std::holds_alternative<ConstantRoutingPolicy>(m.policy())) {
        return margin_fixed_routing(m);
    }
    if (std::holds_alternative<LogitRoutingPolicy>(m.policy())) {
        return margin_locally_responsive(m, config);
    }
    return std::nullopt;
}

/// Default direction for the empirical search: the formula's argmin when a
/// formula applies, the min-cut otherwise.
inline PerturbationFamily default_family(const std::optional<FormulaMargin> &formula,
                                         const MinCutResult &cut)
{
    PerturbationFamily family;
    family.cells = formula && !formula->argmin.empty() ? formula->argmin : cut.cut;
    return family;
}

} // namespace flownet
