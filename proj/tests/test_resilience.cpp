#include <catch_amalgamated.hpp>

#include <cmath>

#include <flownet/resilience.hpp>

#include "support/common.hpp"
#include "support/networks.hpp"
#include "support/oracles.hpp"
#include "support/random_models.hpp"

using namespace flownet;
using testing::code_of;
using testing::vec;
using Catch::Matchers::WithinAbs;

namespace {

const Topology line(2, {{0, 1}}, {0}, {1});

Model saturating_line(double C1, double C2, double u1)
{
    Matrix R = Matrix::Zero(2, 2);
    R(0, 1) = 1.0;
    return Model(line, {DemandFunction::saturating_exp(C1, 1.0), DemandFunction::saturating_exp(C2, 1.0)},
                 std::nullopt, ConstantRoutingPolicy{R}, vec({u1, 0.0}));
}

Model single_cell(double C, double u)
{
    const Topology one(1, {}, {0}, {0});
    return Model(one, {DemandFunction::saturating_exp(C, 1.0)}, std::nullopt, ConstantRoutingPolicy{Matrix::Zero(1, 1)},
                 vec({u}));
}

Model logit_diverge(double u1)
{
    const Topology t(3, {{0, 1}, {0, 2}}, {0}, {1, 2});
    return Model(t,
                 {DemandFunction::saturating_exp(5.0, 1.0), DemandFunction::saturating_exp(2.0, 1.0),
                  DemandFunction::saturating_exp(2.0, 1.0)},
                 std::nullopt, LogitRoutingPolicy{{Vector::Zero(3), Vector::Ones(3)}}, vec({u1, 0.0, 0.0}));
}

EmpiricalMarginConfig quick()
{
    EmpiricalMarginConfig cfg;
    cfg.detector.horizon = 500.0;
    return cfg;
}

} // namespace

TEST_CASE("perturbation magnitude examples")
{
    const auto m = saturating_line(2.0, 3.0, 1.0);
    auto p = Perturbation::none(2);
    CHECK(perturbation_magnitude(p, m) == 0.0);
    p.inflow_delta[0] = 0.2;
    CHECK_THAT(perturbation_magnitude(p, m), WithinAbs(0.2, 1e-15));
    auto q = Perturbation::none(2);
    q.demand_scale[0] = 0.85;
    CHECK_THAT(perturbation_magnitude(q, m), WithinAbs(0.3, 1e-15));
    p.demand_scale[0] = 0.85;
    CHECK_THAT(perturbation_magnitude(p, m), WithinAbs(0.5, 1e-15));

    const auto linear = Model(line, std::vector<DemandFunction>(2, DemandFunction::linear(1.0)), std::nullopt,
                              m.policy(), vec({1.0, 0.0}));
    CHECK(code_of([&] { perturbation_magnitude(p, linear); }) == ErrorCode::InfiniteCapacity);
    auto bad = Perturbation::none(2);
    bad.demand_scale[1] = 0.0;
    CHECK(code_of([&] { perturbation_magnitude(bad, m); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("magnitude equals the sup-norm gap of the perturbed demands")
{
    const auto m = saturating_line(2.0, 3.0, 1.0);
    auto p = Perturbation::none(2);
    p.inflow_delta[0] = 0.1;
    p.demand_scale = vec({0.9, 0.7});
    const auto perturbed = apply_perturbation(m, p);
    double gap = (perturbed.inflow() - m.inflow()).cwiseAbs().sum();
    for (std::size_t i = 0; i < 2; ++i) {
        double sup = 0.0;
        for (double x = 0.0; x < 60.0; x += 0.01) {
            sup = std::max(sup, m.demands()[i](x) - perturbed.demands()[i](x));
        }
        gap += sup;
    }
    CHECK_THAT(perturbation_magnitude(p, m), WithinAbs(gap, 1e-12));
    CHECK((perturbed.capacities() - vec({1.8, 2.1})).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(perturbed.policy() == m.policy());
}

TEST_CASE("min-cut examples")
{
    const auto r = min_cut_residual_capacity(line, vec({2, 3}), vec({1, 0}));
    CHECK(r.value == 1.0);
    CHECK(r.cut == std::vector<CellIndex>{0});
    CHECK(r.trapped == std::vector<CellIndex>{0});

    CHECK(min_cut_residual_capacity(line, vec({2, 3}), vec({0, 0})).value == 2.0);
    CHECK(min_cut_residual_capacity(line, vec({2, 3}), vec({2.5, 0})).value == 0.0);

    const Topology big(25, {}, {}, std::vector<CellIndex>(25, 0));
    CHECK(code_of([&] { min_cut_residual_capacity(big, Vector::Ones(25), Vector::Zero(25)); })
          == ErrorCode::TooManyCells);
    CHECK(code_of([&] { min_cut_residual_capacity(line, vec({2, infinity}), vec({1, 0})); })
          == ErrorCode::InfiniteCapacity);
    const Topology closed(2, {{0, 1}, {1, 0}}, {0}, {});
    CHECK(code_of([&] { min_cut_residual_capacity(closed, vec({1, 1}), vec({1, 0})); })
          == ErrorCode::NotOutflowConnected);
}

TEST_CASE("min-cut: enumeration with pruning matches brute force")
{
    gen::Rng rng(151);
    for (int trial = 0; trial < 400; ++trial) {
        const auto t = gen::connected_topology(rng, {1, 10, 0.3, 0.3, 0.4, false}, false);
        const Vector C = gen::random_state(rng, t.size(), 0.5, 3.0);
        const Vector u = gen::random_inflow(rng, t, 0.0, 3.0);
        const auto fast = min_cut_residual_capacity(t, C, u);
        const auto slow = oracle::min_cut_brute_force(t, C, u);
        CHECK_THAT(fast.value, WithinAbs(slow.value, 1e-12));
        // The reported cut attains the value.
        double cap = 0.0, in = 0.0;
        for (auto j : fast.cut) {
            cap += C[static_cast<Eigen::Index>(j)];
        }
        for (auto k : fast.trapped) {
            in += u[static_cast<Eigen::Index>(k)];
        }
        CHECK_THAT(std::max(0.0, cap - in), WithinAbs(fast.value, 1e-12));
        CHECK(fast.trapped == trapped_set(t, fast.cut));
    }
}

TEST_CASE("min-cut is monotone in capacities and inflows")
{
    gen::Rng rng(157);
    for (int trial = 0; trial < 200; ++trial) {
        const auto t = gen::connected_topology(rng, {1, 8, 0.3, 0.3, 0.4, false}, false);
        const Vector C = gen::random_state(rng, t.size(), 0.5, 3.0);
        const Vector u = gen::random_inflow(rng, t, 0.0, 3.0);
        const double base = min_cut_residual_capacity(t, C, u).value;
        const auto j = static_cast<Eigen::Index>(gen::uniform_int(rng, 0, t.size() - 1));
        Vector C2 = C;
        C2[j] += gen::uniform(rng, 0.0, 2.0);
        CHECK(min_cut_residual_capacity(t, C2, u).value >= base);
        if (!t.inflow_cells().empty()) {
            Vector u2 = u;
            u2[static_cast<Eigen::Index>(t.inflow_cells().front())] += gen::uniform(rng, 0.0, 2.0);
            CHECK(min_cut_residual_capacity(t, C, u2).value <= base);
        }
    }
}

TEST_CASE("fixed-routing margin examples")
{
    const auto r = margin_fixed_routing(saturating_line(2.0, 3.0, 1.0));
    CHECK(r.value == 1.0);
    CHECK(r.formula == "min-cell");
    CHECK(r.argmin == std::vector<CellIndex>{0});
    CHECK(r.value <= upper_bound_min_cut(saturating_line(2.0, 3.0, 1.0)).value);
    CHECK(margin_fixed_routing(saturating_line(2.0, 3.0, 0.0)).value == 2.0);
    CHECK(margin_fixed_routing(saturating_line(2.0, 3.0, 2.0)).value == 0.0);
    CHECK(code_of([] { margin_fixed_routing(saturating_line(2.0, 3.0, 2.5)); }) == ErrorCode::CapacityViolated);

    const Topology loop(2, {{0, 1}, {1, 0}}, {0}, {0});
    Matrix R = Matrix::Zero(2, 2);
    R(0, 1) = 0.5;
    R(1, 0) = 1.0;
    const Model cyclic(loop, std::vector<DemandFunction>(2, DemandFunction::saturating_exp(2.0, 1.0)), std::nullopt,
                       ConstantRoutingPolicy{R}, vec({0.5, 0.0}));
    CHECK(code_of([&] { margin_fixed_routing(cyclic); }) == ErrorCode::TopologyNotLineDigraphAcyclic);
    CHECK(code_of([] { margin_fixed_routing(logit_diverge(1.0)); }) == ErrorCode::PreconditionViolated);
}

TEST_CASE("locally responsive margin examples")
{
    const auto r = margin_locally_responsive(logit_diverge(1.0));
    CHECK_THAT(r.value, WithinAbs(3.0, 1e-6));
    CHECK(r.formula == "out-neighborhood");
    CHECK(r.argmin == std::vector<CellIndex>{1, 2});
    CHECK(r.nominal_stable);

    const auto over = margin_locally_responsive(logit_diverge(4.5));
    CHECK_FALSE(over.nominal_stable);
    CHECK(over.value == 0.0);

    const auto single = margin_locally_responsive(regression::load("line_logit").model);
    CHECK_THAT(single.value, WithinAbs(2.0, 1e-6));

    // A narrow on-ramp binds: its inflow has nowhere else to go.
    const auto ramp = logit_diverge(1.0).with_demands({DemandFunction::saturating_exp(1.5, 1.0),
                                                       DemandFunction::saturating_exp(2.0, 1.0),
                                                       DemandFunction::saturating_exp(2.0, 1.0)});
    const auto bound = margin_locally_responsive(ramp);
    CHECK_THAT(bound.value, WithinAbs(0.5, 1e-12));
    CHECK(bound.argmin == std::vector<CellIndex>{0});
    CHECK_THAT(upper_bound_min_cut(ramp).value, WithinAbs(0.5, 1e-12));
    const auto probe = empirical_margin(ramp, default_family(bound, upper_bound_min_cut(ramp)), quick());
    CHECK(probe.lo <= 0.5);
    CHECK(probe.hi >= 0.5);

    CHECK(code_of([] { margin_locally_responsive(saturating_line(2.0, 3.0, 1.0)); })
          == ErrorCode::PreconditionViolated);
}

TEST_CASE("min-cut bound examples")
{
    CHECK(upper_bound_min_cut(saturating_line(2.0, 3.0, 0.0)).value == 2.0);
    const auto control = regression::load("diverge_logit_control").model;
    CHECK(upper_bound_min_cut(control).value == 1.0);
    CHECK(!formula_margin(control).has_value());
}

TEST_CASE("formula margins never exceed the min-cut bound on random line-digraph networks")
{
    gen::Rng rng(163);
    int checked = 0;
    for (int trial = 0; trial < 200 && checked < 40; ++trial) {
        const auto g = gen::random_road_network(rng, 3, 5);
        if (g.links.empty()) {
            continue;
        }
        const auto t = line_digraph(g);
        if (!outflow_connectivity(t).all || t.inflow_cells().empty()) {
            continue;
        }
        const Matrix R = gen::random_routing(rng, t);
        const Model m(t, gen::saturating_demands(rng, t.size()), std::nullopt, ConstantRoutingPolicy{R},
                      gen::random_inflow(rng, t, 0.1, 0.6));
        const auto bound = upper_bound_min_cut(m).value;
        try {
            const double nu = margin_fixed_routing(m).value;
            CHECK(nu <= bound + 1e-12);
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::CapacityViolated);
        }
        const Model logit(t, m.demands(), std::nullopt, LogitRoutingPolicy{gen::random_logit_params(rng, t.size())},
                          m.inflow());
        CHECK(margin_locally_responsive(logit).value <= bound + 1e-9);
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("perturbation families")
{
    const auto m = saturating_line(2.0, 3.0, 1.0);
    const PerturbationFamily cell1{PerturbationFamily::Kind::DemandScaling, {0}};
    CHECK(family_limit(m, cell1) == 2.0);
    const auto p = family_member(m, cell1, 0.5);
    CHECK(p.demand_scale == vec({0.75, 1.0}));
    CHECK_THAT(perturbation_magnitude(p, m), WithinAbs(0.5, 1e-15));

    const PerturbationFamily both{PerturbationFamily::Kind::DemandScaling, {0, 1}};
    CHECK_THAT(perturbation_magnitude(family_member(m, both, 1.3), m), WithinAbs(1.3, 1e-14));

    const PerturbationFamily inflow{PerturbationFamily::Kind::InflowIncrease, {0}};
    CHECK(family_limit(m, inflow) == 5.0);
    CHECK(family_member(m, inflow, 0.4).inflow_delta == vec({0.4, 0.0}));
    const PerturbationFamily wrong{PerturbationFamily::Kind::InflowIncrease, {1}};
    CHECK(code_of([&] { family_limit(m, wrong); }) == ErrorCode::InflowNotSupported);
    CHECK(code_of([&] { family_member(m, cell1, 2.0); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("empirical margin of a single cell")
{
    const auto m = single_cell(2.0, 1.0);
    const auto r = empirical_margin(m, {PerturbationFamily::Kind::DemandScaling, {0}}, quick());
    REQUIRE(r.complete);
    CHECK(r.lo <= 1.0 + 1e-2);
    CHECK(r.hi >= 1.0 - 1e-2);
    CHECK(r.hi - r.lo <= 1e-2);
    CHECK(r.probes.front().delta == 0.0);
    CHECK(r.probes.front().verdict == StabilityVerdict::Stable);
    REQUIRE(r.witness.has_value());
    CHECK_THAT(perturbation_magnitude(*r.witness, m), WithinAbs(r.hi, 1e-12));
}

TEST_CASE("empirical margin of the fixed-routing line matches the formula")
{
    const auto m = saturating_line(2.0, 3.0, 1.0);
    const auto formula = margin_fixed_routing(m);
    const auto r = empirical_margin(m, default_family(formula, upper_bound_min_cut(m)), quick());
    REQUIRE(r.complete);
    CHECK(r.lo - r.tol <= formula.value);
    CHECK(formula.value <= r.hi + r.tol);
}

TEST_CASE("empirical margin of an unstable network is zero")
{
    const auto r = empirical_margin(single_cell(2.0, 3.0), {PerturbationFamily::Kind::DemandScaling, {0}}, quick());
    CHECK(r.complete);
    CHECK(r.lo == 0.0);
    CHECK(r.hi == 0.0);
    CHECK(r.probes.size() == 1);
}

TEST_CASE("empirical margin: probes below the formula margin are stable from both starts")
{
    const auto m = regression::load("diverge_logit").model;
    const auto formula = margin_locally_responsive(m);
    const auto r = empirical_margin(m, default_family(formula, upper_bound_min_cut(m)), quick());
    REQUIRE(r.complete);
    CHECK(r.lo - r.tol <= formula.value);
    CHECK(formula.value <= r.hi + r.tol);
    for (const auto &probe : r.probes) {
        if (probe.delta < formula.value - r.tol) {
            CHECK(probe.from_zero == StabilityVerdict::Stable);
            if (probe.delta > 0.0) {
                REQUIRE(probe.from_equilibrium.has_value());
                CHECK(*probe.from_equilibrium == StabilityVerdict::Stable);
            }
        }
    }
}

TEST_CASE("empirical margin reports an unresolvable family")
{
    // Cell 2 carries no flow, so shrinking it never destabilises anything.
    const Topology apart(2, {}, {0}, {0, 1});
    const Model m(apart, std::vector<DemandFunction>(2, DemandFunction::saturating_exp(2.0, 1.0)), std::nullopt,
                  ConstantRoutingPolicy{Matrix::Zero(2, 2)}, vec({1.0, 0.0}));
    EmpiricalMarginConfig cfg = quick();
    const auto r = empirical_margin(m, {PerturbationFamily::Kind::DemandScaling, {1}}, cfg);
    CHECK_FALSE(r.complete);
    CHECK(std::isinf(r.hi));
    CHECK_FALSE(r.notes.empty());
    cfg.tol = 0.0;
    CHECK(code_of([&] { empirical_margin(m, {PerturbationFamily::Kind::DemandScaling, {1}}, cfg); })
          == ErrorCode::InvalidConfig);
}
