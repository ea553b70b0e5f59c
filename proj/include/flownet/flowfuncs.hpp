#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "types.hpp"

namespace flownet {

// Demand families. All satisfy phi(0) = 0 and are nondecreasing and concave.

/// phi(x) = a x, unbounded capacity. Only meaningful for affine models.
struct LinearDemand {
    double slope;
    friend bool operator==(const LinearDemand &, const LinearDemand &) = default;
};

/// phi(x) = C (1 - exp(-lambda x)).
struct SaturatingExpDemand {
    double capacity;
    double rate;
    friend bool operator==(const SaturatingExpDemand &, const SaturatingExpDemand &) = default;
};

/// phi(x) = min(a x, C).
struct PiecewiseLinearCapDemand {
    double slope;
    double capacity;
    friend bool operator==(const PiecewiseLinearCapDemand &, const PiecewiseLinearCapDemand &) = default;
};

namespace detail {

inline void require_positive(double v, const char *name)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::InvalidParameter, std::string(name) + " must be positive and finite");
    }
}

inline void require_mass(double x)
{
    if (!(x >= 0.0)) {
        throw Error(ErrorCode::NegativeMass, "mass " + std::to_string(x) + " is negative");
    }
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace detail

/// Maximum outflow rate of a cell as a function of its mass.
class DemandFunction
{
public:
    using Family = std::variant<LinearDemand, SaturatingExpDemand, PiecewiseLinearCapDemand>;

    static DemandFunction linear(double slope)
    {
        detail::require_positive(slope, "linear slope");
        return DemandFunction(LinearDemand{slope});
    }

    static DemandFunction saturating_exp(double capacity, double rate)
    {
        detail::require_positive(capacity, "capacity");
        detail::require_positive(rate, "lambda");
        return DemandFunction(SaturatingExpDemand{capacity, rate});
    }

    static DemandFunction piecewise_linear_cap(double slope, double capacity)
    {
        detail::require_positive(slope, "slope");
        detail::require_positive(capacity, "capacity");
        return DemandFunction(PiecewiseLinearCapDemand{slope, capacity});
    }

    const Family &family() const noexcept
    {
        return family_;
    }

    double operator()(double x) const
    {
        detail::require_mass(x);
        return eval_unchecked(x);
    }

    // Hot path for integrators; x must already be nonnegative.
    double eval_unchecked(double x) const noexcept
    {
        return std::visit(detail::overloaded{
                              [x](const LinearDemand &f) { return f.slope * x; },
                              [x](const SaturatingExpDemand &f) { return -f.capacity * std::expm1(-f.rate * x); },
                              [x](const PiecewiseLinearCapDemand &f) { return std::min(f.slope * x, f.capacity); },
                          },
                          family_);
    }

    /// Right derivative.
    double derivative(double x) const
    {
        detail::require_mass(x);
        return std::visit(detail::overloaded{
                              [](const LinearDemand &f) { return f.slope; },
                              [x](const SaturatingExpDemand &f) { return f.capacity * f.rate * std::exp(-f.rate * x); },
                              [x](const PiecewiseLinearCapDemand &f) {
                                  return f.slope * x < f.capacity ? f.slope : 0.0;
                              },
                          },
                          family_);
    }

    /// Largest slope, i.e. the Lipschitz constant.
    double lipschitz() const noexcept
    {
        return std::visit(detail::overloaded{
                              [](const LinearDemand &f) { return f.slope; },
                              [](const SaturatingExpDemand &f) { return f.capacity * f.rate; },
                              [](const PiecewiseLinearCapDemand &f) { return f.slope; },
                          },
                          family_);
    }

    /// Flow capacity sup phi; +inf for the linear family.
    double capacity() const noexcept
    {
        return std::visit(detail::overloaded{
                              [](const LinearDemand &) { return infinity; },
                              [](const SaturatingExpDemand &f) { return f.capacity; },
                              [](const PiecewiseLinearCapDemand &f) { return f.capacity; },
                          },
                          family_);
    }

    /// Masses where phi is not differentiable.
    std::vector<double> kinks() const
    {
        if (const auto *f = std::get_if<PiecewiseLinearCapDemand>(&family_)) {
            return {f->capacity / f->slope};
        }
        return {};
    }

    /// Mass x with phi(x) = z, for 0 <= z < capacity.
    double inverse(double z) const
    {
        check_invertible(z);
        return std::visit(detail::overloaded{
                              [z](const LinearDemand &f) { return z / f.slope; },
                              [z](const SaturatingExpDemand &f) { return -std::log1p(-z / f.capacity) / f.rate; },
                              [z](const PiecewiseLinearCapDemand &f) { return z / f.slope; },
                          },
                          family_);
    }

    /// Same function scaled by s in (0, 1]; stays in the same family.
    DemandFunction scaled(double s) const
    {
        if (!(s > 0.0 && s <= 1.0)) {
            throw Error(ErrorCode::InvalidParameter, "demand scaling must lie in (0, 1]");
        }
        return std::visit(detail::overloaded{
                              [s](const LinearDemand &f) { return DemandFunction(LinearDemand{s * f.slope}); },
                              [s](const SaturatingExpDemand &f) {
                                  return DemandFunction(SaturatingExpDemand{s * f.capacity, f.rate});
                              },
                              [s](const PiecewiseLinearCapDemand &f) {
                                  return DemandFunction(PiecewiseLinearCapDemand{s * f.slope, s * f.capacity});
                              },
                          },
                          family_);
    }

    void check_invertible(double z) const
    {
        if (!(z >= 0.0)) {
            throw Error(ErrorCode::NotInvertible, "flow rate " + std::to_string(z) + " is negative");
        }
        if (z >= capacity()) {
            throw Error(ErrorCode::AtOrAboveCapacity,
                        "flow rate " + std::to_string(z) + " is not below capacity " + std::to_string(capacity()));
        }
    }

    friend bool operator==(const DemandFunction &, const DemandFunction &) = default;

private:
    explicit DemandFunction(Family f) : family_(f) {}

    Family family_;
};

/// Generic inverse by bisection, for families without a closed form.
/// Upper bracket doubles until phi(hi) >= z; stops at |hi - lo| <= tol (1 + hi).
inline double invert_by_bisection(const DemandFunction &phi, double z, double tol = 1e-12)
{
    phi.check_invertible(z);
    if (z == 0.0) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (phi.eval_unchecked(hi) < z) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) {
            throw Error(ErrorCode::NotInvertible, "could not bracket the inverse");
        }
    }
    while (hi - lo > tol * (1.0 + hi)) {
        const double mid = 0.5 * (lo + hi);
        if (phi.eval_unchecked(mid) < z) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Supply families. All are nonincreasing and concave on their support.

struct ConstantSupply {
    double level;
    friend bool operator==(const ConstantSupply &, const ConstantSupply &) = default;
};

/// sigma(x) = max(s - b x, 0).
struct AffineDecreasingSupply {
    double level;
    double slope;
    friend bool operator==(const AffineDecreasingSupply &, const AffineDecreasingSupply &) = default;
};

/// sigma = +inf: no supply constraint.
struct UnlimitedSupply {
    friend bool operator==(const UnlimitedSupply &, const UnlimitedSupply &) = default;
};

/// Maximum inflow rate a cell accepts as a function of its mass.
class SupplyFunction
{
public:
    using Family = std::variant<ConstantSupply, AffineDecreasingSupply, UnlimitedSupply>;

    static SupplyFunction constant(double level)
    {
        detail::require_positive(level, "supply level");
        return SupplyFunction(ConstantSupply{level});
    }

    static SupplyFunction affine_decreasing(double level, double slope)
    {
        detail::require_positive(level, "supply level");
        detail::require_positive(slope, "supply slope");
        return SupplyFunction(AffineDecreasingSupply{level, slope});
    }

    static SupplyFunction unlimited()
    {
        return SupplyFunction(UnlimitedSupply{});
    }

    const Family &family() const noexcept
    {
        return family_;
    }

    double operator()(double x) const
    {
        detail::require_mass(x);
        return eval_unchecked(x);
    }

    double eval_unchecked(double x) const noexcept
    {
        return std::visit(detail::overloaded{
                              [](const ConstantSupply &f) { return f.level; },
                              [x](const AffineDecreasingSupply &f) { return std::max(f.level - f.slope * x, 0.0); },
                              [](const UnlimitedSupply &) { return infinity; },
                          },
                          family_);
    }

    /// Buffer capacity sup{x : sigma(x) > 0}.
    double buffer_capacity() const noexcept
    {
        return std::visit(detail::overloaded{
                              [](const ConstantSupply &) { return infinity; },
                              [](const AffineDecreasingSupply &f) { return f.level / f.slope; },
                              [](const UnlimitedSupply &) { return infinity; },
                          },
                          family_);
    }

    std::vector<double> kinks() const
    {
        if (const auto *f = std::get_if<AffineDecreasingSupply>(&family_)) {
            return {f->level / f->slope};
        }
        return {};
    }

    friend bool operator==(const SupplyFunction &, const SupplyFunction &) = default;

private:
    explicit SupplyFunction(Family f) : family_(f) {}

    Family family_;
};

} // namespace flownet
