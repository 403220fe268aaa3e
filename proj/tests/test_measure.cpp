#include "doctest.h"

#include <cmath>
#include <random>

#include "linelab/measure.hpp"

using namespace linelab;

namespace {

DiracComb integer_comb(int lo, int hi) {
    DiracComb c;
    for (int n = lo; n <= hi; ++n) c.points.push_back(n);
    c.weights.assign(c.points.size(), 1.0);
    return c;
}

// bumps supported inside each gap: moves points within gaps, fixes the rest
Homeo gap_bumps(const std::vector<Interval>& gaps) {
    std::vector<Homeo> maps;
    for (const auto& g : gaps) maps.push_back(Homeo::exp_bump(g));
    return Homeo::compose(std::move(maps));
}

std::vector<Interval> periodic_gaps(int lo, int hi) {
    std::vector<Interval> gaps;
    for (int n = lo; n <= hi; ++n) gaps.push_back(Interval(n + 0.2, n + 0.8));
    return gaps;
}

} // namespace

TEST_CASE("comb measure counts weighted atoms in closed intervals") {
    const RadonMeasure mu = integer_comb(-10, 10);
    CHECK(measure_interval(mu, 0.0, 2.5) == doctest::Approx(3.0)); // 0, 1, 2
    CHECK(measure_interval(mu, -0.5, 0.5) == doctest::Approx(1.0));
    CHECK(measure_interval(mu, 0.1, 0.9) == doctest::Approx(0.0));
}

TEST_CASE("identity Stieltjes is Lebesgue") {
    StieltjesMeasure s;
    const RadonMeasure mu = s;
    CHECK(measure_interval(mu, -1.25, 3.5) == doctest::Approx(4.75));
}

TEST_CASE("collapse map is weakly increasing and exactly constant on gaps") {
    const auto gaps = periodic_gaps(-4, 3);
    CollapseMap cm = CollapseMap::from_gaps(gaps);
    double prev = cm(-6.0);
    for (int i = 1; i <= 4000; ++i) {
        const double x = -6.0 + 12.0 * i / 4000;
        const double v = cm(x);
        CHECK(v >= prev);
        prev = v;
    }
    for (const auto& g : gaps) {
        CHECK(cm(g.lo) == cm(g.hi));
        CHECK(cm(g.midpoint()) == cm(g.lo));
    }
}

TEST_CASE("measures are finite on nested bounded intervals") {
    std::vector<RadonMeasure> mus;
    mus.push_back(integer_comb(-50, 50));
    StieltjesMeasure st;
    st.phi = MonotoneMap{CollapseMap::from_gaps(periodic_gaps(-6, 5)), std::nullopt};
    mus.push_back(st);
    for (const auto& mu : mus) {
        for (int k = 1; k <= 10; ++k) {
            const double m = measure_interval(mu, -4.0 * k / 10, 4.0 * k / 10);
            CHECK(std::isfinite(m));
            CHECK(m >= 0.0);
        }
    }
}

TEST_CASE("collapse map: one gap contributes zero mass") {
    CollapseMap cm = CollapseMap::from_gaps({Interval(-1, 1)});
    StieltjesMeasure s;
    s.phi = MonotoneMap{cm, std::nullopt};
    const RadonMeasure mu = s;
    CHECK(measure_interval(mu, -2.0, 2.0) == doctest::Approx(2.0));
    CHECK(measure_interval(mu, -1.0, 1.0) == 0.0); // exactly zero by construction
    CHECK(measure_interval(mu, -0.3, 0.9) == 0.0);
}

TEST_CASE("additivity over adjacent intervals for every variant") {
    std::vector<RadonMeasure> mus;
    mus.push_back(integer_comb(-20, 20));
    StieltjesMeasure st;
    st.phi = MonotoneMap{CollapseMap::from_gaps(periodic_gaps(-6, 5)), std::nullopt};
    mus.push_back(st);
    LebesguePullback pb;
    pb.expr = Homeo::exp_bump(Interval(-2, 2));
    mus.push_back(pb);
    OrbitCounting oc;
    for (int n = -20; n <= 20; ++n) oc.points.push_back(0.5 * n);
    oc.normalization = 0.5;
    mus.push_back(oc);

    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (const auto& mu : mus) {
        for (int trial = 0; trial < 200; ++trial) {
            double a = u(rng), b = u(rng), c = u(rng);
            if (a > b) std::swap(a, b);
            if (b > c) std::swap(b, c);
            if (a > b) std::swap(a, b);
            // atom-boundary probes excluded for counting measures
            if (std::holds_alternative<DiracComb>(mu) || std::holds_alternative<OrbitCounting>(mu)) {
                auto off_atom = [](double x) { return std::abs(x - std::round(2.0 * x) / 2.0) > 1e-3; };
                if (!off_atom(a) || !off_atom(b) || !off_atom(c)) continue;
            }
            const double whole = measure_interval(mu, a, c);
            const double split = measure_interval(mu, a, b) + measure_interval(mu, b, c);
            CHECK(whole == doctest::Approx(split).epsilon(1e-9));
            CHECK(whole >= -1e-12);
        }
    }
}

TEST_CASE("invariance residuals: exact invariance and exact failure") {
    const RadonMeasure comb = integer_comb(-30, 30);
    const auto probes = probe_intervals(Interval(-5, 5), 64);
    CHECK(invariance_residual(comb, Homeo::translation(1), probes) == doctest::Approx(0.0));

    StieltjesMeasure lebesgue;
    const RadonMeasure mu = lebesgue;
    // doubling map scales Lebesgue: residual on [0,1] is exactly 1
    CHECK(invariance_residual(mu, Homeo::affine(2, 0), {Interval(0, 1)}) == doctest::Approx(1.0));
}

TEST_CASE("translation number of plain and conjugated translations") {
    const auto est = translation_number(Homeo::translation(0.7), 0.3, 1000, Interval(-5, 5));
    CHECK(est.tau == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(est.error_bar < 1e-9);

    // affine slope-1 conjugation is the same translation
    const Homeo a = Homeo::affine(1, 5);
    const Homeo conj = Homeo::compose({a, Homeo::translation(1), a.inverse()});
    CHECK(translation_number(conj, 0.0, 1000, Interval(-5, 5)).tau == doctest::Approx(1.0).epsilon(1e-12));

    // nonlinear conjugation: estimate converges at rate O(1/n)
    const Homeo h = Homeo::exp_bump(Interval(-1, 1));
    const Homeo g = Homeo::compose({h, Homeo::translation(1), h.inverse()});
    const auto est2 = translation_number(g, 0.0, 10000, Interval(-5, 5));
    CHECK(est2.tau == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("translation number is additive on commuting fixed-point-free pairs") {
    const Homeo h = Homeo::exp_bump(Interval(-1, 1));
    const Interval window(-5, 5);
    const double pairs[][2] = {{1.0, 0.3}, {0.7, 0.7}, {1.3, -0.4}};
    for (const auto& p : pairs) {
        const Homeo f = Homeo::compose({h, Homeo::translation(p[0]), h.inverse()});
        const Homeo g = Homeo::compose({h, Homeo::translation(p[1]), h.inverse()});
        const Homeo fg = Homeo::compose({f, g});
        const auto tf = translation_number(f, 0.1, 4000, window);
        const auto tg = translation_number(g, 0.1, 4000, window);
        const auto tfg = translation_number(fg, 0.1, 4000, window);
        const double budget = tf.error_bar + tg.error_bar + tfg.error_bar + 1e-3;
        CHECK(std::abs(tfg.tau - tf.tau - tg.tau) <= budget);
    }
}

TEST_CASE("translation number refuses maps with fixed points") {
    CHECK_THROWS_AS(translation_number(Homeo::exp_bump(Interval(-1, 1)), 0.0, 100, Interval(-2, 2)),
                    Error);
    try {
        translation_number(Homeo::exp_bump(Interval(-1, 1)), 0.0, 100, Interval(-2, 2));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::HasFixedPoints);
    }
}

TEST_CASE("escaping orbits are reported") {
    // doubling map has no fixed point inside [1,5]; iterates blow up
    CHECK_THROWS_AS(translation_number(Homeo::affine(2, 0), 1.0, 100, Interval(1, 5)), Error);
    try {
        translation_number(Homeo::affine(2, 0), 1.0, 100, Interval(1, 5));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::WindowEscape);
    }
}

TEST_CASE("conjugacy for plain translations is exact") {
    GroupSpec spec;
    spec.window = Interval(-5, 5);
    spec.generators = {{"a", Homeo::translation(1.0)}};
    const auto res = conjugacy_to_translation(spec, spec.window, 0.0, 256);
    CHECK(res.report.anchor_index == 0);
    CHECK(res.report.taus[0].tau == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.report.generator_residuals[0] <= 1e-9);
    // the recovered measure is Lebesgue up to normalization
    CHECK(measure_interval(res.measure, 0.0, 2.0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("conjugacy for a pair of translations keeps both residuals tiny") {
    GroupSpec spec;
    spec.window = Interval(-5, 5);
    spec.generators = {{"a", Homeo::translation(1.0)}, {"b", Homeo::translation(std::sqrt(2.0))}};
    const auto res = conjugacy_to_translation(spec, spec.window, 0.0, 1024);
    CHECK(res.report.taus[0].tau == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.report.taus[1].tau == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(res.report.generator_residuals[0] <= 1e-9);
    CHECK(res.report.generator_residuals[1] <= 1e-9);
}

TEST_CASE("conjugacy recovers a nonlinear conjugated pair") {
    const Homeo h = Homeo::exp_bump(Interval(-1, 1));
    GroupSpec spec;
    spec.window = Interval(-4, 4);
    spec.generators = {
        {"a", Homeo::compose({h, Homeo::translation(1.0), h.inverse()})},
        {"b", Homeo::compose({h, Homeo::translation(std::sqrt(2.0)), h.inverse()})},
    };
    const auto res = conjugacy_to_translation(spec, spec.window, 0.0, 4000);
    const double ratio = res.report.taus[1].tau / res.report.taus[0].tau;
    CHECK(ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
    CHECK(res.report.generator_residuals[0] <= 1e-4);
    CHECK(res.report.generator_residuals[1] <= 1e-4);
}

TEST_CASE("conjugacy requires freeness and nonzero translation numbers") {
    GroupSpec fixed;
    fixed.window = Interval(-2, 2);
    fixed.generators = {{"f", Homeo::exp_bump(Interval(-1, 1))}};
    CHECK_THROWS_AS(conjugacy_to_translation(fixed, fixed.window), Error);
    try {
        conjugacy_to_translation(fixed, fixed.window);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotFree);
    }

    GroupSpec tiny;
    tiny.window = Interval(-2, 2);
    tiny.generators = {{"t", Homeo::translation(1e-8)}};
    CHECK_THROWS_AS(conjugacy_to_translation(tiny, tiny.window), Error);
    try {
        conjugacy_to_translation(tiny, tiny.window);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateTau);
    }
}

TEST_CASE("collapse with no gaps and identity quotient is Lebesgue") {
    const auto res = collapse_and_measure({}, {{"t", Homeo::translation(1)}}, Interval(-5, 5));
    CHECK(measure_interval(res.measure, -1.0, 2.0) == doctest::Approx(3.0));
    CHECK(res.generator_residuals[0] <= 1e-9);
}

TEST_CASE("collapse fixture: periodic gaps with a translation and gap bumps") {
    const auto gaps = periodic_gaps(-8, 7);
    std::vector<Generator> gens = {{"t", Homeo::translation(1)}, {"bumps", gap_bumps(gaps)}};
    const Interval window(-5, 5);
    const auto res = collapse_and_measure(gaps, gens, window);
    CHECK(res.generator_residuals[0] <= 1e-6);
    CHECK(res.generator_residuals[1] <= 1e-6);
    // every gap has measure exactly zero
    for (const auto& g : gaps) CHECK(measure_interval(res.measure, g.lo, g.hi) == 0.0);
    // one gap inside [-1,2]: mass is length minus the three covered gaps
    CHECK(measure_interval(res.measure, -1.0, 2.0) == doctest::Approx(3.0 - 3 * 0.6));
}

TEST_CASE("collapse with a quotient conjugacy stays invariant") {
    const auto gaps = periodic_gaps(-8, 7);
    std::vector<Generator> gens = {{"t", Homeo::translation(1)}};
    const auto res =
        collapse_and_measure(gaps, gens, Interval(-5, 5), Homeo::affine(2.0, 0.3));
    CHECK(res.generator_residuals[0] <= 1e-6);
}

TEST_CASE("moving a gap off the gap set is rejected") {
    std::vector<Generator> gens = {{"t", Homeo::translation(0.31)}};
    CHECK_THROWS_AS(collapse_and_measure(periodic_gaps(-6, 5), gens, Interval(-4, 4)), Error);
}

TEST_CASE("discrete orbit measures") {
    GroupSpec spec;
    spec.window = Interval(-5, 5);
    spec.generators = {{"t", Homeo::translation(1)}};
    const auto comb = discrete_orbit_measure(spec, 0.0, spec.window);
    CHECK(comb.points.size() == 11); // integers in [-5, 5]
    CHECK(comb.points.front() == doctest::Approx(-5.0));
    CHECK(comb.points.back() == doctest::Approx(5.0));

    GroupSpec half;
    half.window = Interval(-5, 5);
    half.generators = {{"a", Homeo::translation(1)}, {"b", Homeo::translation(0.5)}};
    const auto comb2 = discrete_orbit_measure(half, 0.0, half.window);
    CHECK(comb2.points.size() == 21); // half-integers

    GroupSpec dense;
    dense.window = Interval(-5, 5);
    dense.generators = {{"a", Homeo::translation(1)}, {"b", Homeo::translation(std::sqrt(2.0))}};
    CHECK_THROWS_AS(discrete_orbit_measure(dense, 0.0, dense.window), Error);
    try {
        discrete_orbit_measure(dense, 0.0, dense.window);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OrbitAccumulates);
    }
}

TEST_CASE("orbit counting normalizes the unit slice") {
    GroupSpec half;
    half.window = Interval(-5, 5);
    half.generators = {{"a", Homeo::translation(1)}, {"b", Homeo::translation(0.5)}};
    const auto oc = orbit_counting_measure(half, 0.0, half.window);
    // atoms at 0, 1/2, 1 inside [0,1]: normalization 1/3
    CHECK(oc.normalization == doctest::Approx(1.0 / 3.0));
    const RadonMeasure mu = oc;
    CHECK(measure_interval(mu, -0.25, 1.25) == doctest::Approx(1.0));
}

TEST_CASE("measure JSON round trips") {
    const auto probes = probe_intervals(Interval(-3, 3), 32, 7);

    RadonMeasure comb = integer_comb(-5, 5);
    RadonMeasure comb2 = measure_from_json(measure_to_json(comb));
    for (const auto& iv : probes)
        CHECK(measure_interval(comb, iv.lo, iv.hi) == measure_interval(comb2, iv.lo, iv.hi));

    StieltjesMeasure st;
    st.phi = MonotoneMap{CollapseMap::from_gaps(periodic_gaps(-4, 3)), Homeo::affine(1.5, 0.0)};
    RadonMeasure stm = st;
    RadonMeasure stm2 = measure_from_json(measure_to_json(stm));
    for (const auto& iv : probes)
        CHECK(measure_interval(stm, iv.lo, iv.hi) ==
              doctest::Approx(measure_interval(stm2, iv.lo, iv.hi)).epsilon(1e-12));

    // pullback serialized as a sampled table reloads as an interpolant
    LebesguePullback pb;
    pb.fn = [](double x) { return x + 0.1 * std::tanh(x); };
    for (int i = 0; i <= 400; ++i) {
        const double x = -4.0 + 8.0 * i / 400;
        pb.sample_x.push_back(x);
        pb.sample_y.push_back(pb.fn(x));
    }
    RadonMeasure p = pb;
    RadonMeasure p2 = measure_from_json(measure_to_json(p));
    for (const auto& iv : probes)
        CHECK(measure_interval(p, iv.lo, iv.hi) ==
              doctest::Approx(measure_interval(p2, iv.lo, iv.hi)).epsilon(1e-4));
}
