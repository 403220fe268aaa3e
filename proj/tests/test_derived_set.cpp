#include "doctest.h"

#include "linelab/derived_set.hpp"

using namespace linelab;

TEST_CASE("finite sets empty in one step") {
    DerivedSet y;
    y.points = {Rational(1), Rational(2), Rational(3)};
    const auto seq = derive_until_empty(y);
    REQUIRE(seq.levels.size() == 2);
    CHECK(seq.levels[1].empty());
}

TEST_CASE("a single convergent sequence peels to its limit, then empties") {
    DerivedSet y;
    y.points = {Rational(0)};
    y.seqs = {SeqDescriptor{Rational(0), Rational(1), 0, 1}}; // 1/(n+1)
    const auto seq = derive_until_empty(y);
    REQUIRE(seq.levels.size() == 3);
    CHECK(seq.levels[1].points == std::vector<Rational>{Rational(0)});
    CHECK(seq.levels[1].seqs.empty());
    CHECK(seq.levels[2].empty());
}

TEST_CASE("nested depth-2 families reach empty in three steps") {
    DerivedSet y;
    y.points = {Rational(0)};
    y.seqs = {SeqDescriptor{Rational(0), Rational(1), 0, 2}};
    const auto seq = derive_until_empty(y);
    REQUIRE(seq.levels.size() == 4); // depth-2 tree, spine, limit, empty
    CHECK(seq.levels[1].seqs.size() == 1);
    CHECK(seq.levels[1].seqs[0].depth == 1);
    CHECK(seq.levels[2].points == std::vector<Rational>{Rational(0)});
    CHECK(seq.levels[3].empty());
}

TEST_CASE("derived step is monotone: each level contains the next") {
    DerivedSet y;
    y.points = {Rational(0), Rational(10)};
    y.seqs = {SeqDescriptor{Rational(0), Rational(1), 0, 2},
              SeqDescriptor{Rational(10), Rational(-2), 1, 1}};
    auto seq = derive_until_empty(y);
    for (std::size_t lvl = 0; lvl + 1 < seq.levels.size(); ++lvl) {
        // sample members of the next level and confirm membership in this one
        const auto& next = seq.levels[lvl + 1];
        for (const auto& p : next.points) CHECK(contains_point(seq.levels[lvl], p));
        for (const auto& d : next.seqs)
            for (int n = d.n0; n < d.n0 + 12; ++n)
                CHECK(contains_point(seq.levels[lvl], d.spine(n)));
    }
}

TEST_CASE("structural step agrees with the counting-based isolation oracle") {
    DerivedSet y;
    y.points = {Rational(0), Rational(10)};
    y.seqs = {SeqDescriptor{Rational(0), Rational(1), 0, 2},
              SeqDescriptor{Rational(10), Rational(-2), 1, 1}};
    validate_derived_set(y);
    const DerivedSet y1 = derived_step(y);

    // membership survey: spine points, leaf points, limits, explicit points
    std::vector<Rational> sample;
    sample.push_back(Rational(0));
    sample.push_back(Rational(10));
    for (const auto& d : y.seqs) {
        for (int n = d.n0; n < d.n0 + 8; ++n) {
            sample.push_back(d.spine(n));
            if (d.depth >= 2) {
                const auto c = d.child(n);
                for (int m2 = 0; m2 < 4; ++m2) sample.push_back(c.spine(m2));
            }
        }
    }
    for (const auto& x : sample) {
        REQUIRE(contains_point(y, x));
        const bool survives = contains_point(y1, x);
        const bool isolated = is_isolated_by_counting(y, x);
        CHECK(survives == !isolated);
    }
}

TEST_CASE("rank cap is enforced") {
    DerivedSet y;
    y.points = {Rational(0)};
    y.seqs = {SeqDescriptor{Rational(0), Rational(1), 0, 6}};
    CHECK_THROWS_AS(derive_until_empty(y, 4), Error);
}

TEST_CASE("ill-formed representations are rejected") {
    DerivedSet missing_limit;
    missing_limit.seqs = {SeqDescriptor{Rational(0), Rational(1), 0, 1}};
    CHECK_THROWS_AS(validate_derived_set(missing_limit), Error);

    DerivedSet overlapping;
    overlapping.points = {Rational(0), Rational(1, 2)};
    overlapping.seqs = {SeqDescriptor{Rational(0), Rational(1), 0, 1},
                        SeqDescriptor{Rational(1, 2), Rational(1, 3), 0, 1}};
    CHECK_THROWS_AS(validate_derived_set(overlapping), Error);
}

TEST_CASE("exact counting in open intervals") {
    DerivedSet y;
    y.points = {Rational(0)};
    y.seqs = {SeqDescriptor{Rational(0), Rational(1), 0, 1}};
    // members 1, 1/2, 1/3, ... ; (1/4, 1) holds exactly 1/2 and 1/3
    CHECK(count_in_open_interval(y, Rational(1, 4), Rational(1), 100) == 2);
    // a ball around the limit holds a whole tail (capped)
    CHECK(count_in_open_interval(y, Rational(-1, 10), Rational(1, 10), 7) == 7);
}
