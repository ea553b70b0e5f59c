#include <catch_amalgamated.hpp>

#include <cmath>

#include <flownet/flowfuncs.hpp>

#include "support/random_models.hpp"

using namespace flownet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("demand evaluation")
{
    const auto sat = DemandFunction::saturating_exp(2.0, 1.0);
    CHECK(sat(0.0) == 0.0);
    CHECK_THAT(sat(50.0), WithinAbs(2.0, 1e-15));
    CHECK(sat(1.0) < 2.0);
    const auto cap = DemandFunction::piecewise_linear_cap(1.0, 2.0);
    CHECK(cap(3.0) == 2.0);
    CHECK(cap(1.5) == 1.5);
    CHECK(DemandFunction::linear(3.0)(2.0) == 6.0);
}

TEST_CASE("negative mass is rejected")
{
    const auto sat = DemandFunction::saturating_exp(2.0, 1.0);
    try {
        (void)sat(-1e-3);
        FAIL("expected NegativeMass");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NegativeMass);
    }
    CHECK_THROWS_AS(SupplyFunction::constant(1.0)(-1.0), Error);
}

TEST_CASE("invalid parameters are rejected")
{
    CHECK_THROWS_AS(DemandFunction::linear(0.0), Error);
    CHECK_THROWS_AS(DemandFunction::saturating_exp(-1.0, 1.0), Error);
    CHECK_THROWS_AS(DemandFunction::piecewise_linear_cap(1.0, std::nan("")), Error);
    CHECK_THROWS_AS(SupplyFunction::affine_decreasing(1.0, 0.0), Error);
}

TEST_CASE("demand inverse")
{
    const auto sat = DemandFunction::saturating_exp(2.0, 1.0);
    const double x = sat.inverse(1.0);
    CHECK_THAT(x, WithinAbs(std::log(2.0), 1e-15));
    CHECK_THAT(sat(x), WithinAbs(1.0, 1e-10 * 2.0));
    CHECK(sat.inverse(0.0) == 0.0);
    CHECK(DemandFunction::linear(2.0).inverse(0.0) == 0.0);
    CHECK(DemandFunction::piecewise_linear_cap(2.0, 1.0).inverse(0.0) == 0.0);
    try {
        (void)sat.inverse(2.0);
        FAIL("expected AtOrAboveCapacity");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::AtOrAboveCapacity);
    }
    try {
        (void)sat.inverse(-0.5);
        FAIL("expected NotInvertible");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NotInvertible);
    }
}

TEST_CASE("bisection inverse agrees with the analytic inverse")
{
    const auto sat = DemandFunction::saturating_exp(2.0, 1.0);
    CHECK_THAT(invert_by_bisection(sat, 1.0), WithinAbs(std::log(2.0), 1e-10));
    gen::Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        const auto f = DemandFunction::saturating_exp(gen::uniform(rng, 0.5, 4.0), gen::uniform(rng, 0.1, 3.0));
        const double z = gen::uniform(rng, 0.0, 0.999) * f.capacity();
        const double x = invert_by_bisection(f, z);
        CHECK(std::abs(f(x) - z) <= 1e-10 * (1.0 + z));
        CHECK_THAT(x, WithinRel(f.inverse(z), 1e-9));
    }
}

TEST_CASE("capacities")
{
    CHECK(DemandFunction::saturating_exp(2.0, 1.0).capacity() == 2.0);
    CHECK(std::isinf(DemandFunction::linear(3.0).capacity()));
    CHECK(DemandFunction::piecewise_linear_cap(1.0, 5.0).capacity() == 5.0);
}

TEST_CASE("supply evaluation and buffer capacity")
{
    const auto aff = SupplyFunction::affine_decreasing(2.0, 1.0);
    CHECK(aff(0.0) == 2.0);
    CHECK(aff(2.0) == 0.0);
    CHECK(aff(3.0) == 0.0);
    CHECK(aff.buffer_capacity() == 2.0);
    const auto c = SupplyFunction::constant(3.0);
    CHECK(c(0.0) == 3.0);
    CHECK(c(1e6) == 3.0);
    CHECK(std::isinf(c.buffer_capacity()));
    CHECK(std::isinf(SupplyFunction::unlimited()(5.0)));
}

TEST_CASE("random demand functions: shape properties")
{
    gen::Rng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        const double a = gen::uniform(rng, 0.1, 5.0), C = gen::uniform(rng, 0.1, 5.0);
        const double lam = gen::uniform(rng, 0.1, 5.0);
        const DemandFunction fs[] = {DemandFunction::linear(a), DemandFunction::saturating_exp(C, lam),
                                     DemandFunction::piecewise_linear_cap(a, C)};
        for (const auto &f : fs) {
            CHECK(f(0.0) == 0.0);
            const double x = gen::uniform(rng, 0.0, 10.0), y = gen::uniform(rng, 0.0, 10.0);
            const double lo = std::min(x, y), hi = std::max(x, y);
            CHECK(f(lo) <= f(hi));
            CHECK(f(0.5 * (x + y)) >= 0.5 * (f(x) + f(y)) - 1e-12);
            CHECK(f(x) <= f.capacity());
            // Lipschitz bound.
            CHECK(f(hi) - f(lo) <= f.lipschitz() * (hi - lo) + 1e-12);
            // Inverse round trip on the invertible range.
            const double z = f(x);
            if (z < f.capacity()) {
                CHECK_THAT(f(f.inverse(z)), WithinAbs(z, 1e-9));
                // z carries a rounding error of eps * z, which the inverse
                // amplifies by 1 / phi'(x) where the demand flattens out.
                const double conditioning = 4.0 * std::numeric_limits<double>::epsilon() * z / f.derivative(x);
                CHECK_THAT(f.inverse(z), WithinAbs(x, 1e-9 * (1.0 + x) + conditioning));
            }
        }
    }
}

TEST_CASE("random supply functions: shape properties")
{
    gen::Rng rng(29);
    for (int trial = 0; trial < 300; ++trial) {
        const auto f = SupplyFunction::affine_decreasing(gen::uniform(rng, 0.1, 5.0), gen::uniform(rng, 0.1, 5.0));
        const double x = gen::uniform(rng, 0.0, 10.0), y = gen::uniform(rng, 0.0, 10.0);
        CHECK(f(std::min(x, y)) >= f(std::max(x, y)));
        CHECK(f(f.buffer_capacity() + x) == 0.0);
        CHECK(f(x) >= 0.0);
    }
}

TEST_CASE("scaled demands keep their family and shrink the capacity")
{
    const auto f = DemandFunction::piecewise_linear_cap(2.0, 4.0).scaled(0.5);
    CHECK(std::holds_alternative<PiecewiseLinearCapDemand>(f.family()));
    CHECK(f.capacity() == 2.0);
    CHECK(f(0.5) == 0.5);
    const auto g = DemandFunction::saturating_exp(2.0, 1.0);
    CHECK(g.scaled(0.85).capacity() == Catch::Approx(1.7));
    // Sup-norm gap of a scaled function is (1 - s) C.
    double gap = 0.0;
    for (double x = 0.0; x < 60.0; x += 0.01) {
        gap = std::max(gap, g(x) - g.scaled(0.85)(x));
    }
    CHECK_THAT(gap, WithinAbs(0.15 * 2.0, 1e-12));
    CHECK_THROWS_AS(g.scaled(0.0), Error);
    CHECK_THROWS_AS(g.scaled(1.5), Error);
}

TEST_CASE("kinks")
{
    CHECK(DemandFunction::piecewise_linear_cap(2.0, 4.0).kinks() == std::vector<double>{2.0});
    CHECK(DemandFunction::saturating_exp(2.0, 1.0).kinks().empty());
    CHECK(SupplyFunction::affine_decreasing(3.0, 1.5).kinks() == std::vector<double>{2.0});
}
