#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dynamics.hpp"
#include "error.hpp"
#include "topology.hpp"
#include "types.hpp"

namespace flownet {

// ---------------------------------------------------------------------------
// Compartmental matrices
// ---------------------------------------------------------------------------

struct CompartmentalCheck {
    bool compartmental = false;
    bool metzler = false;
    double worst_violation = 0.0;
};

/// Metzler (off-diagonals >= -tol) with row sums <= tol.
inline CompartmentalCheck is_compartmental(const Matrix &M, double tol = 1e-12)
{
    if (M.rows() != M.cols()) {
        throw Error(ErrorCode::InvalidParameter, "matrix must be square");
    }
    CompartmentalCheck check;
    double offdiag = 0.0, rows = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (i != j) {
                offdiag = std::max(offdiag, -M(i, j));
            }
        }
        rows = std::max(rows, M.row(i).sum());
    }
    check.metzler = offdiag <= tol;
    check.compartmental = check.metzler && rows <= tol;
    check.worst_violation = std::max({offdiag, rows, 0.0});
    return check;
}

struct CompartmentalDecomposition {
    Vector diagonal; // d_i = L_ii
    Matrix routing;  // R = I - D^{-1} L
};

/// Splits L (with -L compartmental) as L = D (I - R).
inline CompartmentalDecomposition compartmental_decompose(const Matrix &L)
{
    if (L.rows() != L.cols()) {
        throw Error(ErrorCode::InvalidParameter, "matrix must be square");
    }
    const auto n = L.rows();
    CompartmentalDecomposition out{L.diagonal(), Matrix(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(out.diagonal[i] > 0.0)) {
            throw Error(ErrorCode::ZeroDiagonal, "L(" + std::to_string(i + 1) + "," + std::to_string(i + 1)
                                                     + ") is not positive: cell is not outflow-connected");
        }
    }
    out.routing = Matrix::Identity(n, n) - out.diagonal.cwiseInverse().asDiagonal() * L;
    out.routing.diagonal().setZero();
    return out;
}

/// Affine network x' = u - L^T x expressed as constant routing with linear
/// demands phi_i(x) = L_ii x_i.
inline Model make_affine_model(const Topology &t, const Matrix &L, const Vector &inflow)
{
    if (!is_compartmental(-L).compartmental) {
        throw Error(ErrorCode::InvalidParameter, "-L must be compartmental");
    }
    const auto parts = compartmental_decompose(L);
    std::vector<DemandFunction> demands;
    for (Eigen::Index i = 0; i < parts.diagonal.size(); ++i) {
        demands.push_back(DemandFunction::linear(parts.diagonal[i]));
    }
    return Model(t, std::move(demands), std::nullopt, ConstantRoutingPolicy{parts.routing}, inflow);
}

/// Largest real part of the eigenvalues (dense, n <= 64).
inline double spectral_abscissa(const Matrix &M)
{
    if (M.rows() > 64) {
        throw Error(ErrorCode::TooLarge, "eigenvalue computation limited to n <= 64");
    }
    if (M.rows() == 0) {
        return -infinity;
    }
    Eigen::EigenSolver<Matrix> solver(M, false);
    return solver.eigenvalues().real().maxCoeff();
}

// ---------------------------------------------------------------------------
// Jacobians and monotonicity
// ---------------------------------------------------------------------------

/// Central-difference Jacobian of the right-hand side, h_j = 1e-6 (1 + x_j).
inline Matrix jacobian_fd(const Model &m, const Vector &x)
{
    detail::check_state(m, x);
    const auto n = x.size();
    Matrix J(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double h = 1e-6 * (1.0 + x[j]);
        if (!(x[j] - h > 0.0)) {
            throw Error(ErrorCode::BoundaryPoint, "x_" + std::to_string(j + 1) + " is too close to the boundary");
        }
        Vector plus = x, minus = x;
        plus[j] += h;
        minus[j] -= h;
        J.col(j) = (detail::rhs_unchecked(m, plus) - detail::rhs_unchecked(m, minus)) / (2.0 * h);
    }
    return J;
}

struct JacobianReport {
    Vector point;
    Matrix jacobian;
    bool is_metzler = false;
    bool transpose_is_compartmental = false;
    /// Graph of (grad f)^T with links on entries above `link_threshold` and
    /// outflow cells where the column sum of grad f is below -link_threshold.
    bool is_outflow_connected_jacobian = false;
    double link_threshold = 1e-9;
    double worst_violation = 0.0;
};

inline JacobianReport jacobian_report(const Model &m, const Vector &x, double tol = 1e-7, double link_threshold = 1e-9)
{
    JacobianReport r;
    r.point = x;
    r.jacobian = jacobian_fd(m, x);
    r.link_threshold = link_threshold;
    const auto check = is_compartmental(r.jacobian.transpose(), tol);
    r.is_metzler = check.metzler;
    r.transpose_is_compartmental = check.compartmental;
    r.worst_violation = check.worst_violation;

    const auto n = r.jacobian.rows();
    std::vector<CellPair> links;
    std::vector<CellIndex> exits;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && r.jacobian(j, i) > link_threshold) {
                links.emplace_back(static_cast<CellIndex>(i), static_cast<CellIndex>(j));
            }
        }
        if (r.jacobian.col(i).sum() < -link_threshold) {
            exits.push_back(static_cast<CellIndex>(i));
        }
    }
    r.is_outflow_connected_jacobian =
        outflow_connectivity(Topology(static_cast<std::size_t>(n), std::move(links), {}, std::move(exits))).all;
    return r;
}

struct MonotoneCheckConfig {
    double box_lo = 0.0;
    double box_hi = 5.0;
    std::size_t samples = 200;
    std::uint64_t seed = 1;
    double tol = 1e-7;
    /// Points closer than this to a demand or supply kink are redrawn.
    double kink_band = 1e-4;
    /// Optional restriction of the sampled domain (e.g. the free-flow region).
    std::function<bool(const Vector &)> accept;
    std::size_t max_draws = 1000000;
};

struct MonotoneReport {
    std::size_t samples = 0;
    std::size_t passed = 0;
    std::size_t draws = 0;
    double pass_rate = 0.0;
    double worst_violation = 0.0;
    Vector worst_point;
    std::uint64_t seed = 0;
    double box_lo = 0.0;
    double box_hi = 0.0;
};

namespace detail {

inline bool near_kink(const Model &m, const Vector &x, double band)
{
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (x[i] < band) {
            return true;
        }
        if (m.uses_demands() || !m.demands().empty()) {
            for (double k : m.demands()[idx].kinks()) {
                if (std::abs(x[i] - k) < band) {
                    return true;
                }
            }
        }
        if (m.has_supplies()) {
            for (double k : (*m.supplies())[idx].kinks()) {
                if (std::abs(x[i] - k) < band) {
                    return true;
                }
            }
        }
    }
    return false;
}

} // namespace detail

/// Samples uniform points in the box and tests whether (grad f)^T is
/// compartmental at each, f = rhs - u.
inline MonotoneReport check_monotone(const Model &m, const MonotoneCheckConfig &config = {})
{
    if (!(config.box_hi > config.box_lo) || config.box_lo < 0.0) {
        throw Error(ErrorCode::InvalidConfig, "sample box must satisfy 0 <= lo < hi");
    }
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> coord(config.box_lo, config.box_hi);
    const auto n = static_cast<Eigen::Index>(m.size());

    MonotoneReport report;
    report.seed = config.seed;
    report.box_lo = config.box_lo;
    report.box_hi = config.box_hi;
    Vector x(n);
    while (report.samples < config.samples) {
        if (report.draws >= config.max_draws) {
            throw Error(ErrorCode::NoConvergence, "could not draw enough admissible sample points");
        }
        ++report.draws;
        for (Eigen::Index i = 0; i < n; ++i) {
            x[i] = coord(rng);
        }
        if (detail::near_kink(m, x, config.kink_band) || (config.accept && !config.accept(x))) {
            continue;
        }
        const Matrix J = jacobian_fd(m, x);
        const auto check = is_compartmental(J.transpose(), config.tol);
        ++report.samples;
        if (check.compartmental) {
            ++report.passed;
        }
        if (check.worst_violation > report.worst_violation || report.worst_point.size() == 0) {
            report.worst_violation = std::max(report.worst_violation, check.worst_violation);
            report.worst_point = x;
        }
    }
    report.pass_rate = report.samples ? static_cast<double>(report.passed) / static_cast<double>(report.samples) : 1.0;
    return report;
}

// ---------------------------------------------------------------------------
// Equilibria
// ---------------------------------------------------------------------------

struct NeumannResult {
    Vector outflow;          // z* = sum_k (R^T)^k u
    std::size_t order = 0;   // highest power whose term was not negligible
    double last_increment = 0.0;
    double direct_gap = 0.0; // sup-norm gap to a direct solve of (I - R^T) z = u
};

/// Partial sums u + R^T u + (R^T)^2 u + ... until an increment falls below tol.
inline NeumannResult neumann_outflow(const Matrix &R, const Vector &u, std::size_t k_max = 100000, double tol = 1e-15)
{
    if (R.rows() != R.cols() || R.rows() != u.size()) {
        throw Error(ErrorCode::InvalidParameter, "dimension mismatch");
    }
    const Matrix Rt = R.transpose();
    NeumannResult out;
    out.outflow = u;
    Vector term = u;
    bool converged = false;
    for (std::size_t k = 1; k <= k_max; ++k) {
        term = Rt * term;
        out.outflow += term;
        out.last_increment = term.lpNorm<Eigen::Infinity>();
        if (out.last_increment <= tol * (1.0 + out.outflow.lpNorm<Eigen::Infinity>())) {
            out.order = k - 1;
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw Error(ErrorCode::NoConvergence, "series did not converge within k_max terms");
    }
    const auto n = R.rows();
    const Vector direct = (Matrix::Identity(n, n) - Rt).partialPivLu().solve(u);
    out.direct_gap = (direct - out.outflow).lpNorm<Eigen::Infinity>();
    return out;
}

struct EquilibriumResult {
    Vector state;   // x*
    Vector outflow; // z*
    std::string method;
    double residual = 0.0;
    bool strictly_positive = false;
    bool inflow_connected = false;
};

/// Fixed routing: z* = (I - R^T)^{-1} u and x* = phi^{-1}(z*) when z* < C.
inline EquilibriumResult equilibrium_closed_form(const Model &m)
{
    const auto *policy = std::get_if<ConstantRoutingPolicy>(&m.policy());
    if (!policy) {
        throw Error(ErrorCode::PreconditionViolated, "closed form needs a constant routing policy");
    }
    const auto &t = m.topology();
    if (!outflow_connectivity(t).all) {
        throw Error(ErrorCode::NotOutflowConnected, "topology is not outflow-connected");
    }
    const auto n = static_cast<Eigen::Index>(m.size());
    EquilibriumResult r;
    r.method = "closed-form";
    r.outflow = (Matrix::Identity(n, n) - policy->routing.transpose()).partialPivLu().solve(m.inflow());
    r.state.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &phi = m.demands()[static_cast<std::size_t>(i)];
        const double z = std::max(r.outflow[i], 0.0);
        if (z >= phi.capacity()) {
            throw Error(ErrorCode::CapacityViolated, "z*_" + std::to_string(i + 1) + " = " + std::to_string(z)
                                                         + " is not below capacity " + std::to_string(phi.capacity()));
        }
        r.state[i] = phi.inverse(z);
    }
    r.residual = rhs(m, r.state).lpNorm<Eigen::Infinity>();
    r.strictly_positive = (r.state.array() > 0.0).all();
    r.inflow_connected = inflow_connectivity(t).all;
    return r;
}

struct EquilibriumConfig {
    double horizon = 1000.0;
    double dt = 1e-2;
    double eq_tol = 1e-8;
    double slope_min = 1e-3;
    double max_state = 0.0;

    InstabilityConfig detector() const
    {
        return {horizon, dt, max_state, slope_min, eq_tol};
    }
};

struct EquilibriumSearch {
    bool bounded = false;
    std::optional<EquilibriumResult> equilibrium;
    InstabilityReport detection;
};

/// Integrates from x(0) = 0: either the trajectory settles (equilibrium) or it
/// is classified as unbounded. Throws Inconclusive otherwise.
inline EquilibriumSearch equilibrium_from_zero(const Model &m, const EquilibriumConfig &config = {})
{
    EquilibriumSearch out;
    out.detection = detect_instability(m, Vector::Zero(static_cast<Eigen::Index>(m.size())), config.detector());
    switch (out.detection.verdict) {
    case StabilityVerdict::Stable: {
        out.bounded = true;
        EquilibriumResult r;
        r.method = "trajectory-limit";
        r.state = out.detection.final_state;
        r.outflow = evaluate_flows(m, r.state).total_outflow();
        r.residual = out.detection.rate_norm;
        r.strictly_positive = (r.state.array() > 0.0).all();
        r.inflow_connected = inflow_connectivity(m.topology()).all;
        out.equilibrium = std::move(r);
        break;
    }
    case StabilityVerdict::Unstable: out.bounded = false; break;
    case StabilityVerdict::Inconclusive:
        throw Error(ErrorCode::Inconclusive, "horizon exhausted: |dx/dt| = " + std::to_string(out.detection.rate_norm)
                                                 + ", tail slope = " + std::to_string(out.detection.tail_slope));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trajectory audits
// ---------------------------------------------------------------------------

struct L1AuditReport {
    double max_increase = 0.0;       // largest one-step growth of |x - y|_1
    double per_step_tolerance = 0.0; // 10 dt^4 (1 + |x0 - y0|_1)
    double initial_distance = 0.0;
    double final_distance = 0.0;
    bool passed = false;
};

inline L1AuditReport l1_audit(const Model &m, const Vector &x0, const Vector &y0, const SimulationConfig &config = {})
{
    detail::check_state(m, x0);
    detail::check_state(m, y0);
    const auto steps = detail::step_count(config.horizon, config.dt);
    const Rk4Stepper stepper(m, config.dt);
    Vector x = x0, y = y0;
    L1AuditReport r;
    r.initial_distance = (x - y).lpNorm<1>();
    r.per_step_tolerance = 10.0 * std::pow(config.dt, 4) * (1.0 + r.initial_distance);
    double prev = r.initial_distance;
    for (std::size_t k = 1; k <= steps; ++k) {
        stepper.step(x);
        stepper.step(y);
        detail::check_finite(x, k);
        detail::check_finite(y, k);
        const double d = (x - y).lpNorm<1>();
        r.max_increase = std::max(r.max_increase, d - prev);
        prev = d;
    }
    r.final_distance = prev;
    r.passed = r.max_increase <= r.per_step_tolerance;
    return r;
}

struct OrderAuditReport {
    double max_violation = 0.0; // largest x_i(t) - y_i(t)
    double tolerance = 1e-6;
    bool passed = false;
};

/// Runs x from (x0, u) and y from (y0, u_tilde) with x0 <= y0, u <= u_tilde
/// and reports how far x(t) <= y(t) is violated.
inline OrderAuditReport order_audit(const Model &m, const Vector &x0, const Vector &y0, const Vector &u_tilde,
                                    const SimulationConfig &config = {}, double tol = 1e-6)
{
    detail::check_state(m, x0);
    detail::check_state(m, y0);
    if (((x0 - y0).array() > 0.0).any()) {
        throw Error(ErrorCode::PreconditionViolated, "initial states must satisfy x0 <= y0");
    }
    if (u_tilde.size() != m.inflow().size() || ((m.inflow() - u_tilde).array() > 0.0).any()) {
        throw Error(ErrorCode::PreconditionViolated, "inflows must satisfy u <= u_tilde");
    }
    const Model upper = m.with_inflow(u_tilde);
    const auto steps = detail::step_count(config.horizon, config.dt);
    const Rk4Stepper lo_stepper(m, config.dt), hi_stepper(upper, config.dt);
    Vector x = x0, y = y0;
    OrderAuditReport r;
    r.tolerance = tol;
    r.max_violation = std::max(0.0, (x - y).maxCoeff());
    for (std::size_t k = 1; k <= steps; ++k) {
        lo_stepper.step(x);
        hi_stepper.step(y);
        detail::check_finite(x, k);
        detail::check_finite(y, k);
        r.max_violation = std::max(r.max_violation, (x - y).maxCoeff());
    }
    r.passed = r.max_violation <= tol;
    return r;
}

/// Largest one-step decrease of any entry along the trajectory from 0.
inline double from_zero_monotonicity_defect(const Model &m, const SimulationConfig &config = {})
{
    const auto steps = detail::step_count(config.horizon, config.dt);
    const Rk4Stepper stepper(m, config.dt);
    Vector x = Vector::Zero(static_cast<Eigen::Index>(m.size()));
    double worst = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        const Vector prev = x;
        stepper.step(x);
        detail::check_finite(x, k);
        worst = std::max(worst, (prev - x).maxCoeff());
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Convex network flow: static oracle and dual ascent
// ---------------------------------------------------------------------------

struct ConvexFlowSolution {
    Flows flows;
    double objective = 0.0;
    double kkt_residual = 0.0;
    double violation = 0.0;
    std::size_t outer_iterations = 0;
    std::size_t inner_iterations = 0;
};

struct OracleConfig {
    double kkt_tol = 1e-8;
    double violation_tol = 1e-10;
    std::size_t max_outer = 200;
    std::size_t max_inner = 2000000;
};

/// Minimises sum psi_ij(F_ij) + sum psi_k(w_k) subject to mass conservation
/// and nonnegativity by an augmented Lagrangian with projected-gradient inner
/// solves (backtracking line search). Independent of the dual ascent route.
inline ConvexFlowSolution solve_convex_flow_oracle(const Topology &t, const ConvexCostSet &costs, const Vector &inflow,
                                                   const OracleConfig &config = {})
{
    costs.validate(t);
    detail::require_size(t, inflow.size(), "inflow vector");
    detail::require_nonnegative(inflow, ErrorCode::NegativeInput, "inflow");
    if (!outflow_connectivity(t).all) {
        throw Error(ErrorCode::NotOutflowConnected, "topology is not outflow-connected");
    }

    // Variables: one per adjacency pair, then one per outflow cell.
    struct Var {
        CellIndex from;
        std::optional<CellIndex> to;
        const ConvexCost *cost;
    };
    std::vector<Var> vars;
    for (const auto &[pair, cost] : costs.links) {
        vars.push_back({pair.first, pair.second, &cost});
    }
    for (const auto &[k, cost] : costs.outflows) {
        vars.push_back({k, std::nullopt, &cost});
    }
    const auto nv = static_cast<Eigen::Index>(vars.size());
    const auto n = static_cast<Eigen::Index>(t.size());

    // Residual r = B y - u: outflow minus inflow minus external inflow.
    auto residual = [&](const Vector &y) {
        Vector r = -inflow;
        for (Eigen::Index e = 0; e < nv; ++e) {
            r[static_cast<Eigen::Index>(vars[e].from)] += y[e];
            if (vars[e].to) {
                r[static_cast<Eigen::Index>(*vars[e].to)] -= y[e];
            }
        }
        return r;
    };
    auto objective = [&](const Vector &y) {
        double s = 0.0;
        for (Eigen::Index e = 0; e < nv; ++e) {
            s += vars[e].cost->value(y[e]);
        }
        return s;
    };
    // Gradient of the objective plus B^T mu.
    auto gradient = [&](const Vector &y, const Vector &mu) {
        Vector g(nv);
        for (Eigen::Index e = 0; e < nv; ++e) {
            g[e] = vars[e].cost->slope(y[e]) + mu[static_cast<Eigen::Index>(vars[e].from)];
            if (vars[e].to) {
                g[e] -= mu[static_cast<Eigen::Index>(*vars[e].to)];
            }
        }
        return g;
    };
    auto projected_residual = [](const Vector &y, const Vector &g) {
        return (y - (y - g).cwiseMax(0.0)).lpNorm<Eigen::Infinity>();
    };

    Vector y = Vector::Zero(nv);
    Vector lambda = Vector::Zero(n);
    double rho = 1.0;
    double step = 1.0;
    double last_violation = residual(y).lpNorm<Eigen::Infinity>();
    ConvexFlowSolution sol;

    for (std::size_t outer = 1; outer <= config.max_outer; ++outer) {
        sol.outer_iterations = outer;
        const double inner_tol = std::max(1e-13, 0.1 * std::min(config.kkt_tol, config.violation_tol));
        auto aug_gradient = [&](const Vector &v) { return gradient(v, lambda + rho * residual(v)); };
        Vector g = aug_gradient(y);
        for (std::size_t it = 0; it < config.max_inner; ++it) {
            ++sol.inner_iterations;
            if (projected_residual(y, g) < inner_tol) {
                break;
            }
            // Backtrack on a local Lipschitz estimate of the gradient. Objective
            // differences drown in rounding near the optimum; gradients do not.
            step *= 2.0;
            Vector next, g_next;
            for (;;) {
                next = (y - step * g).cwiseMax(0.0);
                g_next = aug_gradient(next);
                const double moved = (next - y).norm();
                if (step * (g_next - g).norm() <= moved || step < 1e-300) {
                    break;
                }
                step *= 0.5;
            }
            y = std::move(next);
            g = std::move(g_next);
        }
        const Vector r = residual(y);
        const double violation = r.lpNorm<Eigen::Infinity>();
        lambda += rho * r;
        sol.violation = violation;
        sol.kkt_residual = projected_residual(y, gradient(y, lambda));
        if (violation < config.violation_tol && sol.kkt_residual < config.kkt_tol) {
            break;
        }
        if (outer == config.max_outer) {
            throw Error(ErrorCode::NoConvergence, "augmented Lagrangian did not converge: violation "
                                                      + std::to_string(violation) + ", KKT residual "
                                                      + std::to_string(sol.kkt_residual));
        }
        if (violation > 0.25 * last_violation) {
            rho *= 2.0;
        }
        last_violation = violation;
    }

    sol.flows = Flows{Matrix::Zero(n, n), Vector::Zero(n)};
    for (Eigen::Index e = 0; e < nv; ++e) {
        if (vars[e].to) {
            sol.flows.F(static_cast<Eigen::Index>(vars[e].from), static_cast<Eigen::Index>(*vars[e].to)) = y[e];
        } else {
            sol.flows.w[static_cast<Eigen::Index>(vars[e].from)] = y[e];
        }
    }
    sol.objective = objective(y);
    return sol;
}

struct DualAscentConfig {
    double horizon = 20000.0;
    double dt = 1e-2;
    double eq_tol = 1e-9;
};

struct DualAscentSolution {
    Vector multipliers; // x*
    Flows flows;
    double conservation_residual = 0.0;
    double time = 0.0;
};

/// The dual-ascent flow network started at 0 and integrated to equilibrium.
inline Model dual_ascent_model(const Topology &t, const ConvexCostSet &costs, const Vector &inflow)
{
    return Model(t, {}, std::nullopt, DualAscentPolicy{costs}, inflow);
}

inline DualAscentSolution dual_ascent_solve(const Topology &t, const ConvexCostSet &costs, const Vector &inflow,
                                            const DualAscentConfig &config = {})
{
    if (!outflow_connectivity(t).all) {
        throw Error(ErrorCode::NotOutflowConnected, "topology is not outflow-connected");
    }
    if (!inflow_connectivity(t).all) {
        throw Error(ErrorCode::NotInflowConnected, "topology is not inflow-connected");
    }
    const Model m = dual_ascent_model(t, costs, inflow);
    InstabilityConfig detector;
    detector.horizon = config.horizon;
    detector.dt = config.dt;
    detector.eq_tol = config.eq_tol;
    const auto report = detect_instability(m, Vector::Zero(inflow.size()), detector);
    if (report.verdict != StabilityVerdict::Stable) {
        throw Error(ErrorCode::Inconclusive, "dual ascent did not settle: |dx/dt| = " + std::to_string(report.rate_norm));
    }
    DualAscentSolution sol;
    sol.multipliers = report.final_state;
    sol.flows = evaluate_flows(m, sol.multipliers);
    sol.conservation_residual = sol.flows.balance(inflow).lpNorm<Eigen::Infinity>();
    sol.time = report.final_time;
    return sol;
}

} // namespace flownet
