#include "doctest.h"

#include <cmath>
#include <random>

#include "linelab/homeo.hpp"

using namespace linelab;

namespace {

// symbolic derivative of the bump map, written independently of the library:
// f(x) = x + exp(1/(x-1) - 1/(x+1)), f'(x) = 1 + e^w * w' with
// w' = -1/(x-1)^2 + 1/(x+1)^2
double bump_deriv_oracle(double x) {
    const double w = 1.0 / (x - 1.0) - 1.0 / (x + 1.0);
    const double wp = -1.0 / ((x - 1.0) * (x - 1.0)) + 1.0 / ((x + 1.0) * (x + 1.0));
    return 1.0 + std::exp(w) * wp;
}

} // namespace

TEST_CASE("bump map endpoint and closed-form values") {
    Homeo f1 = Homeo::exp_bump(Interval(-1, 1));
    CHECK(f1(1.0) == 1.0);
    CHECK(f1(-1.0) == -1.0);
    CHECK(f1(0.37) > 0.37);
    // frozen from the closed form exp(-2) + 0
    CHECK(f1(0.0) == doctest::Approx(0.13533528323661269189).epsilon(1e-14));
    CHECK(Homeo::identity()(0.37) == 0.37);
}

TEST_CASE("bump map interior strictly above the diagonal") {
    Homeo f1 = Homeo::exp_bump(Interval(-1, 1));
    for (int i = 1; i < 400; ++i) {
        const double x = -1.0 + 2.0 * i / 400;
        CHECK(f1(x) >= x);
        // the displacement drops below one ulp near the flat endpoints
        if (std::abs(x) <= 0.94) CHECK(f1(x) > x);
    }
}

TEST_CASE("derivatives: affine, bump oracle, one-sided endpoint limits") {
    CHECK(Homeo::affine(2, 5).derivative(-3.7) == 2.0);
    CHECK(Homeo::affine(2, 5).derivative(11.0) == 2.0);

    Homeo f1 = Homeo::exp_bump(Interval(-1, 1));
    CHECK(f1.derivative(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 1; i < 100; ++i) {
        const double x = -1.0 + 2.0 * i / 100;
        CHECK(f1.derivative(x) == doctest::Approx(bump_deriv_oracle(x)).epsilon(1e-10));
    }
    // one-sided quotient at the endpoint tends to 1
    const double h = 1e-6;
    CHECK(std::abs((f1(-1.0 + h) - f1(-1.0)) / h - 1.0) < 1e-9);
    CHECK(std::abs((f1(1.0) - f1(1.0 - h)) / h - 1.0) < 1e-9);
}

TEST_CASE("closed-form derivative matches central differences for every leaf kind") {
    const std::vector<Homeo> leaves = {
        Homeo::affine(1.7, -0.3),
        Homeo::translation(0.9),
        Homeo::exp_bump(Interval(-1, 1)),
        Homeo::exp_bump(Interval(0.5, 3.5)),
        Homeo::yoccoz(Interval(0, 1), Interval(2, 3.5)),
        Homeo::stage_map(1, 3),
        Homeo::stage_map(2, 3),
    };
    for (const auto& f : leaves) {
        for (int i = 1; i < 100; ++i) {
            const double x = -0.95 + 1.9 * i / 100;
            CHECK(f.derivative(x) == doctest::Approx(fd_derivative(f, x)).epsilon(1e-6));
        }
    }
}

TEST_CASE("inversion round trips") {
    Homeo t = Homeo::translation(2.5);
    CHECK(t.inverse()(7.0) == doctest::Approx(4.5));

    Homeo a = Homeo::affine(2, 1);
    CHECK(a.inverse()(5.0) == doctest::Approx(2.0));

    Homeo f1 = Homeo::exp_bump(Interval(-1, 1));
    CHECK(f1.inverse()(f1(0.5)) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(max_inverse_residual(f1, Interval(-1, 1), 1000) <= 1e-10);

    Homeo s2 = Homeo::stage_map(2, 4);
    CHECK(max_inverse_residual(s2, Interval(-3.8, 3.8), 1000) <= 1e-10);
}

TEST_CASE("composition order and associativity") {
    // compose({g, f}) evaluates g(f(x))
    CHECK(Homeo::compose({Homeo::translation(1), Homeo::translation(2)})(0.0) == doctest::Approx(3.0));
    CHECK(Homeo::compose({Homeo::affine(2, 0), Homeo::translation(1)})(1.0) == doctest::Approx(4.0));

    Homeo f = Homeo::exp_bump(Interval(-1, 1));
    CHECK(Homeo::compose({f, f.inverse()})(0.31) == doctest::Approx(0.31).epsilon(1e-10));

    Homeo g = Homeo::translation(0.25), h = Homeo::affine(3, -1);
    Homeo left = Homeo::compose({Homeo::compose({f, g}), h});
    Homeo right = Homeo::compose({f, Homeo::compose({g, h})});
    for (double x : {-0.7, 0.1, 0.9, 2.3})
        CHECK(left(x) == doctest::Approx(right(x)).epsilon(1e-12));
}

TEST_CASE("monotonicity of every constructed node on sampled grids") {
    std::vector<Homeo> maps = {
        Homeo::identity(),
        Homeo::affine(0.4, 2.0),
        Homeo::translation(-3.0),
        Homeo::exp_bump(Interval(-2, 5)),
        Homeo::yoccoz(Interval(-1, 1), Interval(4, 4.5)),
        Homeo::stage_map(1, 4),
        Homeo::stage_map(3, 4),
        Homeo::compose({Homeo::exp_bump(Interval(-1, 1)), Homeo::translation(0.4)}),
        Homeo::exp_bump(Interval(-1, 1)).inverse(),
    };
    for (const auto& f : maps) CHECK(check_strictly_increasing(f, Interval(-6, 6), 997));
}

TEST_CASE("piecewise construction validates continuity and window fixing") {
    // increasing PL fixing {0, 1/2, 1}, above on (0,1/2), below on (1/2,1)
    auto pl = Homeo::piecewise(Interval(0, 1),
                               {{Interval(0, 0.25), Homeo::affine(2.0, 0.0)},
                                {Interval(0.25, 0.5), Homeo::affine(0.0001, 0.49995)},
                                {Interval(0.5, 1.0), Homeo::affine(1.0, 0.0)}},
                               1e-3);
    CHECK(pl(0.0) == doctest::Approx(0.0));
    CHECK(pl(0.1) == doctest::Approx(0.2));
    CHECK(pl(2.0) == 2.0); // identity outside

    CHECK_THROWS_AS(Homeo::piecewise(Interval(0, 1),
                                     {{Interval(0, 0.5), Homeo::affine(2.0, 0.0)},
                                      {Interval(0.5, 1.0), Homeo::affine(1.0, 0.0)}},
                                     1e-9),
                    Error); // value jump at 0.5

    CHECK_THROWS_AS(Homeo::piecewise(Interval(0, 1), {{Interval(0, 0.5), Homeo::identity()}}, 1e-9),
                    Error); // does not cover the window
}

TEST_CASE("piecewise inverse locates pieces by image") {
    std::vector<std::pair<Interval, Homeo>> pieces = {
        {Interval(0, 1), Homeo::affine(0.5, 0.0)},
        {Interval(1, 4), Homeo::affine(7.0 / 6.0, -2.0 / 3.0)},
    };
    Homeo pw = Homeo::piecewise(Interval(0, 4), std::move(pieces), 1e-9);
    for (double x : {0.2, 0.9, 1.5, 3.7})
        CHECK(pw.inverse_at(pw(x)) == doctest::Approx(x).epsilon(1e-12));
}

TEST_CASE("stage map fixed boundary values and identity outside truncation") {
    Homeo s1 = Homeo::stage_map(1, 3);
    Homeo s3 = Homeo::stage_map(3, 3);
    CHECK(s1(1.0) == 1.0);
    CHECK(s1(-1.0) == -1.0);
    CHECK(s1(2.0) == 2.0);
    CHECK(s3(3.0) == 3.0);
    CHECK(s1(5.5) == 5.5);
    CHECK(s3(-9.0) == -9.0);
}

TEST_CASE("evaluation past the piece cap truncates to the identity") {
    Homeo s1 = Homeo::stage_map(1, 3);
    // within 1e-7 of the stage-2 boundary the piece displacement is below
    // 1e-14; the evaluator reports the identity there
    const double x = 2.0 - 1e-7;
    CHECK(s1(x) == x);
    // the conjugated bump's action concentrates at piece centers; a midpoint
    // deep in the ladder (but inside the cap) is still strictly moved
    const double mid = 2.0 - 0.5 * (1.0 / 201 + 1.0 / 202);
    CHECK(s1(mid) > mid);
}

TEST_CASE("derivative past the piece cap is unresolvable and reported") {
    Homeo s1 = Homeo::stage_map(1, 3);
    CHECK_THROWS_AS(s1.derivative(2.0 - 1e-5), Error);
    try {
        s1.derivative(2.0 - 1e-5);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PieceDepthExceeded);
    }
    // far past the cap the pieces are flat within tau_deriv: derivative is 1
    CHECK(s1.derivative(2.0 - 1e-8) == 1.0);
}

TEST_CASE("stage geometry invariants") {
    StageGeometry g{1};
    CHECK(g.validate(200));
    CHECK(g.left(0) == -1.0);
    CHECK(g.right(0) == 1.0);
    CHECK(g.left(1) == doctest::Approx(-1.5));
    CHECK(g.right(1) == doctest::Approx(1.5));
    double prev = g.gap_ratio(1);
    for (int n = 2; n <= 100; ++n) {
        const double r = g.gap_ratio(n);
        CHECK(r < prev); // ratio decreases toward 1
        CHECK(r > 1.0);
        prev = r;
    }
    CHECK(std::abs(g.gap_ratio(100) - 1.0) < 0.03);
}

TEST_CASE("non-finite evaluation is reported") {
    Homeo a = Homeo::affine(2.0, 0.0);
    CHECK_THROWS_AS(a(1e308), Error);
}

TEST_CASE("inverse round trip over random sample points") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3.5, 3.5);
    Homeo maps[] = {Homeo::stage_map(1, 4), Homeo::stage_map(2, 4),
                    Homeo::compose({Homeo::exp_bump(Interval(-2, 1)), Homeo::translation(0.7)})};
    for (const auto& f : maps) {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double y = u(rng);
            worst = std::max(worst, std::abs(f(f.inverse_at(y)) - y));
        }
        CHECK(worst <= 1e-10);
    }
}
