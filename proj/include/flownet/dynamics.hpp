#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "error.hpp"
#include "flowfuncs.hpp"
#include "policies.hpp"
#include "topology.hpp"
#include "types.hpp"

namespace flownet {

/// Fixed split ratios with demand met exactly. With linear demands this is
/// the affine model.
struct ConstantRoutingPolicy {
    Matrix routing;
};

/// Logit routing R(x), no flow control.
struct LogitRoutingPolicy {
    LogitParams params;
};

/// Logit routing R(x) with locally responsive flow control gamma(x).
struct LogitControlPolicy {
    LogitParams params;
};

/// Cell transmission model, FIFO diverge rule.
struct FifoPolicy {
    Matrix routing;
};

/// Cell transmission model, non-FIFO diverge rule.
struct NonFifoPolicy {
    Matrix routing;
};

/// Continuous-time dual ascent for a convex network flow problem; the state
/// is the vector of multipliers.
struct DualAscentPolicy {
    ConvexCostSet costs;
};

using Policy =
    std::variant<ConstantRoutingPolicy, LogitRoutingPolicy, LogitControlPolicy, FifoPolicy, NonFifoPolicy, DualAscentPolicy>;

inline std::string_view policy_kind(const Policy &p)
{
    return std::visit(detail::overloaded{
                          [](const ConstantRoutingPolicy &) { return std::string_view("constant"); },
                          [](const LogitRoutingPolicy &) { return std::string_view("logit"); },
                          [](const LogitControlPolicy &) { return std::string_view("logit_control"); },
                          [](const FifoPolicy &) { return std::string_view("fifo"); },
                          [](const NonFifoPolicy &) { return std::string_view("nonfifo"); },
                          [](const DualAscentPolicy &) { return std::string_view("dual_ascent"); },
                      },
                      p);
}

inline bool operator==(const Policy &a, const Policy &b)
{
    if (a.index() != b.index()) {
        return false;
    }
    return std::visit(detail::overloaded{
                          [&](const ConstantRoutingPolicy &p) {
                              return same_values(p.routing, std::get<ConstantRoutingPolicy>(b).routing);
                          },
                          [&](const LogitRoutingPolicy &p) { return p.params == std::get<LogitRoutingPolicy>(b).params; },
                          [&](const LogitControlPolicy &p) { return p.params == std::get<LogitControlPolicy>(b).params; },
                          [&](const FifoPolicy &p) { return same_values(p.routing, std::get<FifoPolicy>(b).routing); },
                          [&](const NonFifoPolicy &p) { return same_values(p.routing, std::get<NonFifoPolicy>(b).routing); },
                          [&](const DualAscentPolicy &p) { return p.costs == std::get<DualAscentPolicy>(b).costs; },
                      },
                      a);
}

/// Topology, per-cell demand (and optional supply) functions, a policy and
/// a constant external inflow. Validated at construction.
class Model
{
public:
    Model(Topology topology, std::vector<DemandFunction> demands, std::optional<std::vector<SupplyFunction>> supplies,
          Policy policy, Vector inflow)
        : topology_(std::move(topology)), demands_(std::move(demands)), supplies_(std::move(supplies)),
          policy_(std::move(policy)), inflow_(std::move(inflow))
    {
        validate();
    }

    const Topology &topology() const noexcept
    {
        return topology_;
    }
    std::size_t size() const noexcept
    {
        return topology_.size();
    }
    const std::vector<DemandFunction> &demands() const noexcept
    {
        return demands_;
    }
    const std::optional<std::vector<SupplyFunction>> &supplies() const noexcept
    {
        return supplies_;
    }
    bool has_supplies() const noexcept
    {
        return supplies_.has_value();
    }
    const Policy &policy() const noexcept
    {
        return policy_;
    }
    const Vector &inflow() const noexcept
    {
        return inflow_;
    }

    bool uses_demands() const noexcept
    {
        return !std::holds_alternative<DualAscentPolicy>(policy_);
    }

    Model with_inflow(Vector inflow) const
    {
        return Model(topology_, demands_, supplies_, policy_, std::move(inflow));
    }

    Model with_demands(std::vector<DemandFunction> demands) const
    {
        return Model(topology_, std::move(demands), supplies_, policy_, inflow_);
    }

    /// Flow capacities C_i (+inf for linear demands).
    Vector capacities() const
    {
        Vector c(demands_.size());
        for (std::size_t i = 0; i < demands_.size(); ++i) {
            c[static_cast<Eigen::Index>(i)] = demands_[i].capacity();
        }
        return c;
    }

    /// Buffer capacities; +inf everywhere without supply functions.
    Vector buffer_capacities() const
    {
        Vector b = Vector::Constant(static_cast<Eigen::Index>(size()), infinity);
        if (supplies_) {
            for (std::size_t i = 0; i < size(); ++i) {
                b[static_cast<Eigen::Index>(i)] = (*supplies_)[i].buffer_capacity();
            }
        }
        return b;
    }

    Vector demand_at(const Vector &x) const
    {
        Vector d(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            d[i] = demands_[static_cast<std::size_t>(i)].eval_unchecked(x[i]);
        }
        return d;
    }

    Vector supply_at(const Vector &x) const
    {
        Vector s = Vector::Constant(x.size(), infinity);
        if (supplies_) {
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                s[i] = (*supplies_)[static_cast<std::size_t>(i)].eval_unchecked(x[i]);
            }
        }
        return s;
    }

    friend bool operator==(const Model &a, const Model &b)
    {
        return a.topology_ == b.topology_ && a.demands_ == b.demands_ && a.supplies_ == b.supplies_
               && a.policy_ == b.policy_ && same_values(a.inflow_, b.inflow_);
    }

private:
    void validate() const
    {
        const auto n = topology_.size();
        detail::require_size(topology_, inflow_.size(), "inflow vector");
        for (CellIndex i = 0; i < n; ++i) {
            const double u = inflow_[static_cast<Eigen::Index>(i)];
            if (!(u >= 0.0) || !std::isfinite(u)) {
                throw Error(ErrorCode::NegativeInput, "inflow at cell " + std::to_string(i + 1) + " is negative");
            }
            if (u > 0.0 && !topology_.is_inflow_cell(i)) {
                throw Error(ErrorCode::InflowNotSupported,
                            "cell " + std::to_string(i + 1) + " receives inflow but is not an inflow cell");
            }
        }
        if (uses_demands() || !demands_.empty()) {
            if (demands_.size() != n) {
                throw Error(ErrorCode::PolicyTopologyMismatch,
                            "expected " + std::to_string(n) + " demand functions, got " + std::to_string(demands_.size()));
            }
        }
        if (supplies_ && supplies_->size() != n) {
            throw Error(ErrorCode::PolicyTopologyMismatch,
                        "expected " + std::to_string(n) + " supply functions, got " + std::to_string(supplies_->size()));
        }
        std::visit(detail::overloaded{
                       [&](const ConstantRoutingPolicy &p) { validate_routing(topology_, p.routing); },
                       [&](const LogitRoutingPolicy &p) { p.params.validate(topology_); },
                       [&](const LogitControlPolicy &p) { p.params.validate(topology_); },
                       [&](const FifoPolicy &p) {
                           require_supplies();
                           validate_routing(topology_, p.routing);
                       },
                       [&](const NonFifoPolicy &p) {
                           require_supplies();
                           validate_routing(topology_, p.routing);
                       },
                       [&](const DualAscentPolicy &p) { p.costs.validate(topology_); },
                   },
                   policy_);
    }

    void require_supplies() const
    {
        if (!supplies_) {
            throw Error(ErrorCode::NoSupplyFunctions, std::string(policy_kind(policy_)) + " policy needs supply functions");
        }
    }

    Topology topology_;
    std::vector<DemandFunction> demands_;
    std::optional<std::vector<SupplyFunction>> supplies_;
    Policy policy_;
    Vector inflow_;
};

namespace detail {

inline void check_state(const Model &m, const Vector &x)
{
    require_size(m.topology(), x.size(), "state");
    require_nonnegative(x, ErrorCode::NegativeState, "state");
}

// Flows for a demand-limited policy where the outflow z_i = gamma_i phi_i is
// split according to R.
inline Flows routed_flows(const Matrix &R, const Vector &outflow)
{
    const auto n = outflow.size();
    Flows f{Matrix(n, n), Vector(n)};
    f.F = outflow.asDiagonal() * R;
    f.w = ((Vector::Ones(n) - R.rowwise().sum()).array() * outflow.array()).matrix();
    return f;
}

// No validation: x must be nonnegative and of the right size.
inline Flows flows_unchecked(const Model &m, const Vector &x)
{
    const auto &t = m.topology();
    return std::visit(overloaded{
                          [&](const ConstantRoutingPolicy &p) { return routed_flows(p.routing, m.demand_at(x)); },
                          [&](const LogitRoutingPolicy &p) {
                              return routed_flows(logit_routing(p.params, t, x), m.demand_at(x));
                          },
                          [&](const LogitControlPolicy &p) {
                              const Vector z = (logit_flow_control(p.params, t, x).array() * m.demand_at(x).array()).matrix();
                              return routed_flows(logit_routing(p.params, t, x), z);
                          },
                          [&](const FifoPolicy &p) {
                              const Vector phi = m.demand_at(x);
                              const Vector gamma = fifo_gamma(t, p.routing, phi, m.supply_at(x));
                              return routed_flows(p.routing, (gamma.array() * phi.array()).matrix());
                          },
                          [&](const NonFifoPolicy &p) {
                              return nonfifo_flows(t, p.routing, m.demand_at(x), m.supply_at(x));
                          },
                          [&](const DualAscentPolicy &p) { return dual_ascent_flows(t, p.costs, x); },
                      },
                      m.policy());
}

inline Vector rhs_unchecked(const Model &m, const Vector &x)
{
    return flows_unchecked(m, x).balance(m.inflow());
}

} // namespace detail

/// Flows F(x), w(x) prescribed by the model's policy.
inline Flows evaluate_flows(const Model &m, const Vector &x)
{
    detail::check_state(m, x);
    return detail::flows_unchecked(m, x);
}

/// Right-hand side u + F^T 1 - F 1 - w.
inline Vector rhs(const Model &m, const Vector &x)
{
    detail::check_state(m, x);
    return detail::rhs_unchecked(m, x);
}

/// Routing matrix in effect at x for demand-based policies.
inline Matrix routing_at(const Model &m, const Vector &x)
{
    detail::check_state(m, x);
    return std::visit(detail::overloaded{
                          [](const ConstantRoutingPolicy &p) { return p.routing; },
                          [&](const LogitRoutingPolicy &p) { return logit_routing(p.params, m.topology(), x); },
                          [&](const LogitControlPolicy &p) { return logit_routing(p.params, m.topology(), x); },
                          [](const FifoPolicy &p) { return p.routing; },
                          [](const NonFifoPolicy &p) { return p.routing; },
                          [](const DualAscentPolicy &) -> Matrix {
                              throw Error(ErrorCode::PreconditionViolated, "dual ascent has no routing matrix");
                          },
                      },
                      m.policy());
}

/// True iff u + R^T phi(x) <= sigma(x) entrywise.
inline bool free_flow_check(const Model &m, const Vector &x, double tol = 1e-12)
{
    if (!m.has_supplies()) {
        throw Error(ErrorCode::NoSupplyFunctions, "free-flow region needs supply functions");
    }
    const Matrix R = routing_at(m, x);
    const Vector load = m.inflow() + R.transpose() * m.demand_at(x);
    const Vector supply = m.supply_at(x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (load[i] > supply[i] + tol) {
            return false;
        }
    }
    return true;
}

/// Classical fourth-order Runge-Kutta step followed by projection onto
/// [0, buffer capacity].
class Rk4Stepper
{
public:
    Rk4Stepper(const Model &m, double dt) : model_(m), dt_(dt), upper_(m.buffer_capacities())
    {
        if (!(dt > 0.0) || !std::isfinite(dt)) {
            throw Error(ErrorCode::InvalidConfig, "dt must be positive");
        }
    }

    double dt() const noexcept
    {
        return dt_;
    }

    /// Derivative at a state, evaluated on its projection.
    Vector derivative(const Vector &x) const
    {
        return detail::rhs_unchecked(model_, x.cwiseMax(0.0));
    }

    struct StepInfo {
        double clamp = 0.0;      // largest correction applied by the projection
        double min_before = 0.0; // smallest entry before projection
    };

    StepInfo step(Vector &x, const Vector &k1) const
    {
        const Vector k2 = derivative(x + 0.5 * dt_ * k1);
        const Vector k3 = derivative(x + 0.5 * dt_ * k2);
        const Vector k4 = derivative(x + dt_ * k3);
        x += (dt_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        StepInfo info;
        info.min_before = x.size() > 0 ? x.minCoeff() : 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double clamped = std::clamp(x[i], 0.0, upper_[i]);
            info.clamp = std::max(info.clamp, std::abs(clamped - x[i]));
            x[i] = clamped;
        }
        return info;
    }

    StepInfo step(Vector &x) const
    {
        return step(x, derivative(x));
    }

private:
    const Model &model_;
    double dt_;
    Vector upper_;
};

struct SimulationConfig {
    double horizon = 1000.0;
    double dt = 1e-2;
    bool record_flows = false;
};

/// Time grid, states and optional flow records of a simulation.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> total_outflow;    // z(t), when recorded
    std::vector<Vector> external_outflow; // w(t), when recorded
    double max_clamp = 0.0;
    double min_before_clamp = 0.0;

    std::size_t steps() const noexcept
    {
        return times.empty() ? 0 : times.size() - 1;
    }
};

namespace detail {

inline std::size_t step_count(double horizon, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw Error(ErrorCode::InvalidConfig, "dt must be positive");
    }
    if (!(horizon >= dt) || !std::isfinite(horizon)) {
        throw Error(ErrorCode::InvalidConfig, "horizon must be at least dt");
    }
    return static_cast<std::size_t>(std::llround(horizon / dt));
}

inline void check_finite(const Vector &x, std::size_t step)
{
    if (!x.allFinite()) {
        throw Error(ErrorCode::NonFiniteState, "non-finite state at step " + std::to_string(step));
    }
}

} // namespace detail

/// Fixed-step RK4 integration from x0 over [0, horizon]. Deterministic.
inline Trajectory simulate(const Model &m, const Vector &x0, const SimulationConfig &config = {})
{
    detail::check_state(m, x0);
    const auto steps = detail::step_count(config.horizon, config.dt);
    const Rk4Stepper stepper(m, config.dt);

    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    Vector x = x0;
    auto record = [&](std::size_t k) {
        traj.times.push_back(static_cast<double>(k) * config.dt);
        traj.states.push_back(x);
        if (config.record_flows) {
            const Flows f = detail::flows_unchecked(m, x);
            traj.total_outflow.push_back(f.total_outflow());
            traj.external_outflow.push_back(f.w);
        }
    };
    record(0);
    for (std::size_t k = 1; k <= steps; ++k) {
        const auto info = stepper.step(x);
        detail::check_finite(x, k);
        traj.max_clamp = std::max(traj.max_clamp, info.clamp);
        traj.min_before_clamp = std::min(traj.min_before_clamp, info.min_before);
        record(k);
    }
    return traj;
}

/// Writes `t,x_1,...,x_n[,z_1,...,z_n]` with 17 significant digits.
inline void write_trajectory_csv(std::ostream &os, const Trajectory &traj, bool with_flows)
{
    if (traj.states.empty()) {
        return;
    }
    with_flows = with_flows && traj.total_outflow.size() == traj.states.size();
    const auto n = traj.states.front().size();
    os << 't';
    for (Eigen::Index i = 0; i < n; ++i) {
        os << ",x_" << (i + 1);
    }
    if (with_flows) {
        for (Eigen::Index i = 0; i < n; ++i) {
            os << ",z_" << (i + 1);
        }
    }
    os << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        put(traj.times[k]);
        for (Eigen::Index i = 0; i < n; ++i) {
            os << ',';
            put(traj.states[k][i]);
        }
        if (with_flows) {
            for (Eigen::Index i = 0; i < n; ++i) {
                os << ',';
                put(traj.total_outflow[k][i]);
            }
        }
        os << '\n';
    }
}

struct InstabilityConfig {
    double horizon = 1000.0;
    double dt = 1e-2;
    /// Divergence threshold; zero selects 1e6 (1 + |x0|_inf).
    double max_state = 0.0;
    double slope_min = 1e-3;
    double eq_tol = 1e-8;
};

enum class StabilityVerdict { Stable, Unstable, Inconclusive };

inline std::string_view to_string(StabilityVerdict v)
{
    switch (v) {
    case StabilityVerdict::Stable: return "stable";
    case StabilityVerdict::Unstable: return "unstable";
    case StabilityVerdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

struct InstabilityReport {
    StabilityVerdict verdict = StabilityVerdict::Inconclusive;
    Vector final_state;     // limit estimate when stable
    double final_time = 0.0;
    double tail_slope = 0.0; // least-squares slope of total mass over the last quarter
    double rate_norm = 0.0;  // |dx/dt|_inf at final_time
    double max_norm = 0.0;   // largest |x|_inf seen
    double max_clamp = 0.0;
};

/// Integrates from x0 and classifies the trajectory: unstable when the state
/// exceeds max_state or total mass keeps growing over the last quarter of the
/// horizon, stable once |dx/dt|_inf < eq_tol, inconclusive otherwise.
inline InstabilityReport detect_instability(const Model &m, const Vector &x0, const InstabilityConfig &config = {})
{
    detail::check_state(m, x0);
    const auto steps = detail::step_count(config.horizon, config.dt);
    const double limit = config.max_state > 0.0 ? config.max_state : 1e6 * (1.0 + x0.lpNorm<Eigen::Infinity>());
    const Rk4Stepper stepper(m, config.dt);
    const double tail_start = 0.75 * config.horizon;

    InstabilityReport report;
    Vector x = x0;
    // Running sums for the tail regression, time measured from tail_start.
    double n_tail = 0.0, st = 0.0, stt = 0.0, sm = 0.0, stm = 0.0;

    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * config.dt;
        const Vector dx = stepper.derivative(x);
        report.final_time = t;
        report.rate_norm = dx.lpNorm<Eigen::Infinity>();
        report.max_norm = std::max(report.max_norm, x.lpNorm<Eigen::Infinity>());
        if (report.max_norm > limit) {
            report.verdict = StabilityVerdict::Unstable;
            break;
        }
        if (report.rate_norm < config.eq_tol) {
            report.verdict = StabilityVerdict::Stable;
            break;
        }
        if (t >= tail_start) {
            const double tau = t - tail_start;
            const double mass = x.sum();
            n_tail += 1.0;
            st += tau;
            stt += tau * tau;
            sm += mass;
            stm += tau * mass;
        }
        if (k == steps) {
            const double denom = n_tail * stt - st * st;
            report.tail_slope = denom > 0.0 ? (n_tail * stm - st * sm) / denom : 0.0;
            report.verdict = report.tail_slope > config.slope_min ? StabilityVerdict::Unstable
                                                                  : StabilityVerdict::Inconclusive;
            break;
        }
        const auto info = stepper.step(x, dx);
        detail::check_finite(x, k + 1);
        report.max_clamp = std::max(report.max_clamp, info.clamp);
    }
    report.final_state = x;
    return report;
}

} // namespace flownet
