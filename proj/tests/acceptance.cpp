// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and budgets are pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "linelab/classify.hpp"
#include "linelab/counterexample.hpp"
#include "linelab/measure.hpp"
#include "linelab/tower.hpp"

#include "support/pl_fixtures.hpp"

using namespace linelab;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion_1_staged_reproduction() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto build = build_counterexample(4);
    VerifyOptions opt;
    opt.samples = 1000;
    opt.n_check = 40;
    opt.comm_tol = 1e-8;
    opt.endpoint_tol = 1e-6;
    opt.junction_tol = 1e-5;
    const auto rep = verify_counterexample(build, opt);
    const double secs = seconds_since(t0);
    const bool tower_ok = rep.tower.pass && rep.tower.levels.size() == 4;
    const bool pass = rep.pass && rep.commutativity_max <= 1e-8 && rep.endpoint_max <= 1e-6 &&
                      rep.junction_max <= 1e-5 && tower_ok && secs <= 120.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "stage-4 build verified: commutativity %.3g (<=1e-8), endpoint %.3g (<=1e-6), "
                  "junction %.3g (<=1e-5), tower %s, %.1f s (<=120 s)",
                  rep.commutativity_max, rep.endpoint_max, rep.junction_max,
                  tower_ok ? "4/4 pass" : "FAIL", secs);
    report(1, pass, buf);
}

void criterion_2_mass_pump() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto build = build_counterexample(4);
    Tower t;
    for (int k = 1; k <= 4; ++k) {
        TowerLevel lvl;
        lvl.interval = Interval(-static_cast<double>(k), k);
        lvl.map = build.maps[k - 1];
        lvl.name = build.names[k - 1];
        t.levels.push_back(lvl);
    }
    const auto cert = mass_pump(t, 1, 100);
    const double secs = seconds_since(t0);
    bool inside = true;
    for (const auto& im : cert.images) inside &= im.lo >= -2.0 - 1e-12 && im.hi <= 2.0 + 1e-12;
    const bool pass = cert.pass() && cert.images.size() == 101 && inside &&
                      cert.multiplier == 101 && secs <= 5.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%zu pairwise disjoint images of int(I_1) inside [-2,2], increasing endpoints, "
                  "certificate multiplier %d, %.2f s (<=5 s)",
                  cert.images.size(), cert.multiplier, secs);
    report(2, pass, buf);
}

void criterion_3_oracle_equivalence() {
    std::mt19937 rng(424242);
    int decided = 0, inconclusive = 0, agreed = 0, generated = 0, crossed = 0;
    while (decided + inconclusive < 200 && generated < 5000) {
        ++generated;
        const auto f = pltest::random_pl(rng);
        const auto g = pltest::random_pl(rng);
        if (pltest::oracle_margin(f, g) < 1e-3) continue;
        const bool oracle = pltest::oracle_is_crossed(f, g);
        const auto numeric = is_crossed(pltest::to_homeo(f), pltest::to_homeo(g), Interval(-20, 20), 4096);
        if (numeric.status == CrossStatus::Inconclusive) {
            ++inconclusive;
            continue;
        }
        ++decided;
        crossed += oracle ? 1 : 0;
        agreed += ((numeric.status == CrossStatus::Crossed) == oracle) ? 1 : 0;
    }
    const int total = decided + inconclusive;
    const bool pass = total >= 200 && agreed == decided && inconclusive * 50 <= total;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%d PL pairs (%d crossed): %d/%d decided cases agree with the exact oracle, "
                  "%d inconclusive (<=2%%)",
                  total, crossed, agreed, decided, inconclusive);
    report(3, pass, buf);
}

void criterion_4_threshold() {
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    const double a3 = kopell_alpha_threshold(3);
    bool pass = std::abs(a3 - golden) <= 1e-10;
    double prev = a3;
    double worst_resid = 0.0;
    for (int k = 4; k <= 60; ++k) {
        const double cur = kopell_alpha_threshold(k);
        pass &= cur < prev;
        worst_resid = std::max(worst_resid, std::abs(cur * std::pow(1.0 + cur, k - 2) - 1.0));
        prev = cur;
    }
    pass &= worst_resid <= 1e-10;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "alpha*(3) = %.12f vs (sqrt5-1)/2 (|diff| %.2g <= 1e-10), strictly decreasing to "
                  "k=60, substitution residual %.2g (<=1e-10)",
                  a3, std::abs(a3 - golden), worst_resid);
    report(4, pass, buf);
}

void criterion_5_lex_family() {
    const auto build = build_counterexample(4);
    const std::vector<Homeo> hs = {build.maps[3], build.maps[2], build.maps[1]};
    const auto fam = build_lex_family(Interval(-1, 1), hs, 2);
    const bool pass = fam.ok && fam.intervals.size() == 125 && fam.max_shift_residual <= 1e-8;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "125 intervals disjoint and in lexicographic order, shift-rule residual %.3g (<=1e-8)",
                  fam.max_shift_residual);
    report(5, pass, buf);
}

void criterion_6_holder_pipeline() {
    const Homeo h = Homeo::exp_bump(Interval(-1, 1));
    GroupSpec spec;
    spec.name = "conjugated-translations";
    spec.window = Interval(-4, 4);
    spec.generators = {
        {"a", Homeo::compose({h, Homeo::translation(1.0), h.inverse()})},
        {"b", Homeo::compose({h, Homeo::translation(std::sqrt(2.0)), h.inverse()})},
    };
    const auto res = conjugacy_to_translation(spec, spec.window, 0.0, 8000);
    const double ratio = res.report.taus[1].tau / res.report.taus[0].tau;
    const double worst =
        std::max(res.report.generator_residuals[0], res.report.generator_residuals[1]);
    const bool pass = std::abs(ratio - std::sqrt(2.0)) <= 1e-3 && worst <= 1e-4;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "recovered tau ratio %.6f vs sqrt(2) (|diff| %.2g <= 1e-3), invariance residual "
                  "%.3g (<=1e-4) on 64 probes",
                  ratio, std::abs(ratio - std::sqrt(2.0)), worst);
    report(6, pass, buf);
}

void criterion_7_collapse_pipeline() {
    std::vector<Interval> gaps;
    for (int n = -8; n <= 7; ++n) gaps.push_back(Interval(n + 0.2, n + 0.8));
    std::vector<Homeo> bumps;
    for (const auto& g : gaps) bumps.push_back(Homeo::exp_bump(g));
    std::vector<Generator> gens = {{"t", Homeo::translation(1)},
                                   {"bumps", Homeo::compose(bumps)}};
    const auto res = collapse_and_measure(gaps, gens, Interval(-5, 5));
    double worst = 0.0;
    for (double r : res.generator_residuals) worst = std::max(worst, r);
    double gap_mass = 0.0;
    for (const auto& g : gaps)
        gap_mass = std::max(gap_mass, std::abs(measure_interval(res.measure, g.lo, g.hi)));
    const bool pass = worst <= 1e-6 && gap_mass == 0.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "generator invariance residual %.3g (<=1e-6), max gap mass %.1f (exactly 0)",
                  worst, gap_mass);
    report(7, pass, buf);
}

void criterion_8_chart_family() {
    std::mt19937 rng(1112);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_real_distribution<double> len(0.1, 4.0);
    std::uniform_real_distribution<double> frac(0.02, 0.98);
    double worst_cocycle = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Interval I(u(rng), u(rng) + 10.0), J0(u(rng), u(rng) + 10.0), K0(u(rng), u(rng) + 10.0);
        const Interval Iv(I.lo, I.lo + len(rng)), Jv(J0.lo, J0.lo + len(rng)),
            Kv(K0.lo, K0.lo + len(rng));
        const double x = Iv.lo + Iv.length() * frac(rng);
        worst_cocycle = std::max(worst_cocycle, std::abs(yoccoz_eval(Jv, Kv, yoccoz_eval(Iv, Jv, x)) -
                                                         yoccoz_eval(Iv, Kv, x)));
    }
    double worst_id = 0.0;
    const Interval I(0.25, 1.75);
    for (int i = 0; i <= 100; ++i) {
        const double x = I.lo + I.length() * i / 100;
        worst_id = std::max(worst_id, std::abs(yoccoz_eval(I, I, x) - x));
    }
    auto sup_dev = [](const Interval& from, const Interval& to) {
        double worst = 0.0;
        for (int i = 1; i < 1000; ++i) {
            const double x = from.lo + from.length() * i / 1000;
            worst = std::max(worst, std::abs(yoccoz_deriv(from, to, x) - 1.0));
        }
        return worst;
    };
    const double near = sup_dev(Interval(0, 1), Interval(2, 3.01));
    const double far = sup_dev(Interval(0, 1), Interval(2, 4));
    const bool pass = worst_cocycle <= 1e-10 && worst_id <= 1e-10 && near < far;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "cocycle residual %.3g (<=1e-10) on 100 random triples, identity chart residual "
                  "%.3g (<=1e-10), ratio control sup|phi'-1|: %.4f @1.01 < %.4f @2.0",
                  worst_cocycle, worst_id, near, far);
    report(8, pass, buf);
}

void criterion_9_classification_trio() {
    GroupSpec fixed;
    fixed.name = "pl-fixing-zero";
    fixed.window = Interval(-3, 3);
    fixed.generators = {{"p", Homeo::piecewise(Interval(-1, 1),
                                               {{Interval(-1, -0.5), Homeo::affine(0.5, -0.5)},
                                                {Interval(-0.5, 0.5), Homeo::affine(1.5, 0.0)},
                                                {Interval(0.5, 1), Homeo::affine(0.5, 0.5)}})}};
    GroupSpec trans;
    trans.name = "one-translation";
    trans.window = Interval(-5, 5);
    trans.generators = {{"t", Homeo::translation(1)}};
    GroupSpec staged;
    staged.name = "staged-family";
    staged.window = Interval(-3.5, 3.5);
    for (int k = 1; k <= 4; ++k)
        staged.generators.push_back({"f" + std::to_string(k), Homeo::stage_map(k, 4)});

    const auto r1 = classify_action(fixed);
    const auto r2 = classify_action(trans);
    const auto r3 = classify_action(staged);
    const auto r3b = classify_action(staged);
    const bool deterministic = r3.detail == r3b.detail && r3.fired == r3b.fired;
    const bool pass = r1.fired == ActionCase::GlobalFixedPoint &&
                      r2.fired == ActionCase::FreeTranslation &&
                      r3.fired == ActionCase::Unclassified && r3.tower.has_value() &&
                      r3.certificate.has_value() && r3.certificate->pass() && deterministic;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "fixtures land in %s / %s / %s (tower %s, certificate %s, deterministic %s)",
                  action_case_label(r1.fired), action_case_label(r2.fired),
                  action_case_label(r3.fired), r3.tower ? "attached" : "missing",
                  r3.certificate && r3.certificate->pass() ? "pass" : "missing",
                  deterministic ? "yes" : "no");
    report(9, pass, buf);
}

} // namespace

int main() {
    criterion_1_staged_reproduction();
    criterion_2_mass_pump();
    criterion_3_oracle_equivalence();
    criterion_4_threshold();
    criterion_5_lex_family();
    criterion_6_holder_pipeline();
    criterion_7_collapse_pipeline();
    criterion_8_chart_family();
    criterion_9_classification_trio();
    if (failures == 0)
        std::printf("all acceptance criteria pass\n");
    else
        std::printf("%d acceptance criteria failed\n", failures);
    return failures;
}
