#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "linelab/fixed_points.hpp"
#include "linelab/group_spec.hpp"
#include "linelab/homeo.hpp"
#include "linelab/serialize.hpp"

namespace linelab {

// ---------------------------------------------------------------------------
// Collapse maps: weakly increasing, constant exactly on each declared gap,
// slope 1 elsewhere. Values on a gap and at its endpoints are produced by the
// same floating expression, so gaps have measure exactly zero.
// ---------------------------------------------------------------------------

struct CollapseMap {
    std::vector<Interval> gaps;      // disjoint, sorted
    std::vector<double> cum{0.0};    // cum[i] = total gap length left of gap i

    static CollapseMap from_gaps(std::vector<Interval> gs) {
        std::sort(gs.begin(), gs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (std::size_t i = 0; i + 1 < gs.size(); ++i)
            if (gs[i].hi > gs[i + 1].lo)
                throw Error(ErrorCode::IllFormed, "collapse gaps must be disjoint");
        CollapseMap m;
        m.gaps = std::move(gs);
        m.cum.resize(m.gaps.size() + 1, 0.0);
        for (std::size_t i = 0; i < m.gaps.size(); ++i)
            m.cum[i + 1] = m.cum[i] + (m.gaps[i].hi - m.gaps[i].lo);
        return m;
    }

    double operator()(double x) const {
        // i = number of gaps with lo < x
        std::size_t lo = 0, hi = gaps.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (gaps[mid].lo < x)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo == 0) return x - cum[0];
        const Interval& g = gaps[lo - 1];
        if (x <= g.hi) return g.lo - cum[lo - 1]; // constant on the gap closure
        return x - cum[lo];
    }
};

// phi = post o collapse; with no gaps and no post this is the identity.
struct MonotoneMap {
    CollapseMap collapse;
    std::optional<Homeo> post;

    double operator()(double x) const {
        const double c = collapse(x);
        return post ? (*post)(c) : c;
    }
};

// ---------------------------------------------------------------------------
// Radon measure representations.
// ---------------------------------------------------------------------------

struct DiracComb {
    std::vector<double> points; // sorted
    std::vector<double> weights;
};

struct OrbitCounting {
    std::vector<double> points; // sorted orbit slice
    double normalization = 1.0;
    double base_point = 0.0;
};

struct StieltjesMeasure {
    MonotoneMap phi;
};

struct LebesguePullback {
    std::function<double(double)> fn; // monotone conjugacy
    std::optional<Homeo> expr;        // present when the conjugacy is a closed tree
    std::vector<double> sample_x;     // sampled table for serialization otherwise
    std::vector<double> sample_y;

    double operator()(double x) const { return expr ? (*expr)(x) : fn(x); }
};

using RadonMeasure = std::variant<DiracComb, OrbitCounting, StieltjesMeasure, LebesguePullback>;

inline double measure_interval(const RadonMeasure& mu, double a, double b) {
    if (!(a <= b)) throw Error(ErrorCode::BadArgument, "measure_interval needs a <= b");
    if (std::holds_alternative<DiracComb>(mu)) {
        const auto& c = std::get<DiracComb>(mu);
        auto lo = std::lower_bound(c.points.begin(), c.points.end(), a);
        auto hi = std::upper_bound(c.points.begin(), c.points.end(), b);
        double s = 0.0;
        for (auto it = lo; it != hi; ++it) s += c.weights[static_cast<std::size_t>(it - c.points.begin())];
        return s;
    }
    if (std::holds_alternative<OrbitCounting>(mu)) {
        const auto& c = std::get<OrbitCounting>(mu);
        auto lo = std::lower_bound(c.points.begin(), c.points.end(), a);
        auto hi = std::upper_bound(c.points.begin(), c.points.end(), b);
        return c.normalization * static_cast<double>(hi - lo);
    }
    if (std::holds_alternative<StieltjesMeasure>(mu)) {
        const auto& s = std::get<StieltjesMeasure>(mu);
        return s.phi(b) - s.phi(a);
    }
    const auto& p = std::get<LebesguePullback>(mu);
    return p(b) - p(a);
}

// max over probe intervals of |mu(g([a,b])) - mu([a,b])|
inline double invariance_residual(const RadonMeasure& mu, const Homeo& g,
                                  const std::vector<Interval>& probes) {
    double worst = 0.0;
    for (const auto& iv : probes) {
        const double direct = measure_interval(mu, iv.lo, iv.hi);
        const double moved = measure_interval(mu, g(iv.lo), g(iv.hi));
        worst = std::max(worst, std::abs(moved - direct));
    }
    return worst;
}

// deterministic probe intervals inside the window
inline std::vector<Interval> probe_intervals(const Interval& window, int count, unsigned seed = 12345) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(window.lo, window.hi);
    std::vector<Interval> probes;
    probes.reserve(count);
    while (static_cast<int>(probes.size()) < count) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        if (b - a < 1e-6 * window.length()) continue;
        probes.push_back(Interval(a, b));
    }
    return probes;
}

// ---------------------------------------------------------------------------
// Translation number: asymptotic displacement of a fixed-point-free map.
// ---------------------------------------------------------------------------

struct TranslationNumberEstimate {
    double tau = 0.0;
    double error_bar = 0.0;
    long iterates = 0;
    double base_point = 0.0;
    std::vector<double> tail; // sampled f^n(x0)/n values from the last quarter
};

inline TranslationNumberEstimate translation_number(const Homeo& f, double x0, long n_max,
                                                    const Interval& window, const Tolerances& tol = {}) {
    if (n_max < 8) throw Error(ErrorCode::BadArgument, "translation_number needs n_max >= 8");
    const auto fs = fixed_set(f, window, 1024, tol);
    if (fs.has_fixed_points() || fs.max_displacement <= tol.eps_fix)
        throw Error(ErrorCode::HasFixedPoints, "map has fixed points in the analysis window");

    TranslationNumberEstimate est;
    est.iterates = n_max;
    est.base_point = x0;
    double x = x0;
    double tail_min = std::numeric_limits<double>::infinity();
    double tail_max = -std::numeric_limits<double>::infinity();
    const long tail_start = n_max - n_max / 4;
    for (long n = 1; n <= n_max; ++n) {
        x = f(x);
        if (!std::isfinite(x) || std::abs(x) > 1e12)
            throw Error(ErrorCode::WindowEscape, "orbit left the representable window");
        if (n >= tail_start) {
            const double q = (x - x0) / static_cast<double>(n);
            tail_min = std::min(tail_min, q);
            tail_max = std::max(tail_max, q);
            if (est.tail.size() < 8 && (n - tail_start) % std::max<long>(1, (n_max / 4) / 8) == 0)
                est.tail.push_back(q);
        }
    }
    est.tau = (x - x0) / static_cast<double>(n_max);
    est.error_bar = 0.5 * (tail_max - tail_min) + 2.0 * std::abs(est.tau) * 1e-12;
    return est;
}

// ---------------------------------------------------------------------------
// Conjugacy to translations for a budget-verified free action.
//
// The base coordinate is the orbit-crossing count of x with respect to the
// fundamental domain [x0, g0(x0)) of the largest-translation-number
// generator, with linear interpolation inside each orbit cell. That already
// conjugates g0 to a translation exactly; a Birkhoff average over the other
// generators then suppresses the interpolation distortion by O(1/m), which
// the report records per generator.
// ---------------------------------------------------------------------------

struct ConjugacyReport {
    int anchor_index = -1;
    std::vector<TranslationNumberEstimate> taus;
    std::vector<double> generator_residuals; // invariance residual per generator
    int refine_iterates = 0;
    bool used_refinement = false;
};

struct ConjugacyResult {
    RadonMeasure measure; // LebesguePullback
    ConjugacyReport report;
};

namespace detail {

struct OrbitLattice {
    std::vector<double> pts; // g0^k(x0) for k in [-K, K]
    int K = 0;
    double tau0 = 1.0;

    double coordinate(double x) const {
        // index of the cell [pts[i], pts[i+1]) containing x
        const auto it = std::upper_bound(pts.begin(), pts.end(), x);
        std::size_t i = it == pts.begin() ? 0 : static_cast<std::size_t>(it - pts.begin() - 1);
        if (i + 1 >= pts.size()) i = pts.size() - 2;
        const double frac = (x - pts[i]) / (pts[i + 1] - pts[i]);
        return tau0 * (static_cast<double>(static_cast<long>(i) - K) + frac);
    }
};

} // namespace detail

inline ConjugacyResult conjugacy_to_translation(const GroupSpec& spec, const Interval& window,
                                                double x0 = 0.0, int refine_iterates = 8000) {
    const Tolerances& tol = spec.tol;
    const auto freeness = is_free_action(spec, window, spec.budget.word_length);
    if (!freeness.free_up_to_budget)
        throw Error(ErrorCode::NotFree, "action has a fixed word: " + freeness.counterexample_name);

    ConjugacyResult out;
    out.report.refine_iterates = refine_iterates;

    // translation numbers for all generators
    int anchor = -1;
    double best = 0.0;
    for (std::size_t i = 0; i < spec.generators.size(); ++i) {
        const auto est = translation_number(spec.generators[i].map, x0, spec.budget.iterates, window, tol);
        out.report.taus.push_back(est);
        if (std::abs(est.tau) > std::abs(best)) {
            best = est.tau;
            anchor = static_cast<int>(i);
        }
    }
    if (anchor < 0 || std::abs(best) < 1e-6)
        throw Error(ErrorCode::DegenerateTau, "all generators have negligible translation number");
    out.report.anchor_index = anchor;

    Homeo g0 = spec.generators[anchor].map;
    if (best < 0) g0 = g0.inverse();
    const double tau0 = std::abs(best);

    // orbit lattice of x0 under g0, wide enough to cover the refinement drift
    double drift = 0.0;
    for (const auto& est : out.report.taus) drift = std::max(drift, std::abs(est.tau));
    const double reach = std::max(std::abs(window.lo), std::abs(window.hi)) +
                         drift * static_cast<double>(refine_iterates) + 4.0 * tau0 + 4.0;
    const int K = static_cast<int>(reach / tau0) + 2;
    auto lattice = std::make_shared<detail::OrbitLattice>();
    lattice->K = K;
    lattice->tau0 = tau0;
    lattice->pts.resize(2 * static_cast<std::size_t>(K) + 1);
    lattice->pts[K] = x0;
    double up = x0, down = x0;
    for (int k = 1; k <= K; ++k) {
        up = g0(up);
        down = g0.inverse_at(down);
        lattice->pts[static_cast<std::size_t>(K) + k] = up;
        lattice->pts[static_cast<std::size_t>(K) - k] = down;
    }

    // Refinement: Birkhoff-average the base coordinate along one non-anchor
    // generator's orbit. Telescoping makes that generator's increment error
    // O(1/m); the averaging also drives every other generator's residual to
    // the orbit-average of a mean-zero defect, and g0-equivariance is kept.
    int refine_gen = -1;
    double refine_tau = 0.0;
    for (std::size_t i = 0; i < spec.generators.size(); ++i) {
        if (static_cast<int>(i) == anchor) continue;
        if (refine_gen < 0 || std::abs(out.report.taus[i].tau) > std::abs(refine_tau)) {
            refine_gen = static_cast<int>(i);
            refine_tau = out.report.taus[i].tau;
        }
    }
    out.report.used_refinement = refine_gen >= 0;
    const int m = refine_gen >= 0 ? std::max(64, refine_iterates) : 0;
    std::function<double(double)> H;
    if (refine_gen < 0) {
        H = [lattice](double x) { return lattice->coordinate(x); };
    } else {
        const Homeo g1 = spec.generators[refine_gen].map;
        const double tau1 = refine_tau;
        H = [lattice, g1, tau1, m](double x) {
            double sum = 0.0, y = x;
            for (int j = 0; j < m; ++j) {
                sum += lattice->coordinate(y);
                y = g1(y);
            }
            return sum / m - tau1 * (m - 1) / 2.0;
        };
    }

    LebesguePullback pb;
    pb.fn = H;
    const int table_n = 512;
    for (int i = 0; i <= table_n; ++i) {
        const double x = window.lo + window.length() * i / table_n;
        pb.sample_x.push_back(x);
        pb.sample_y.push_back(H(x));
    }
    out.measure = pb;

    // invariance residuals per generator on probe intervals
    const auto probes = probe_intervals(window, 64);
    for (const auto& gen : spec.generators)
        out.report.generator_residuals.push_back(invariance_residual(out.measure, gen.map, probes));
    return out;
}

// ---------------------------------------------------------------------------
// Collapse measure: gaps are collapsed to points, the quotient conjugacy
// (when supplied) straightens the quotient action, and the induced Stieltjes
// measure is invariant.
// ---------------------------------------------------------------------------

struct CollapseResult {
    CollapseMap collapse;
    RadonMeasure measure; // StieltjesMeasure
    std::vector<double> generator_residuals;
};

inline CollapseResult collapse_and_measure(const std::vector<Interval>& gaps,
                                           const std::vector<Generator>& gens, const Interval& window,
                                           std::optional<Homeo> quotient_conjugacy = std::nullopt,
                                           const Tolerances& tol = {}) {
    // gap set must be carried to itself by every generator (both directions);
    // images escaping the declared gap span are unverifiable and skipped
    const double match_tol = 1e-6;
    double span_lo = std::numeric_limits<double>::infinity();
    double span_hi = -std::numeric_limits<double>::infinity();
    for (const auto& gap : gaps) {
        span_lo = std::min(span_lo, gap.lo);
        span_hi = std::max(span_hi, gap.hi);
    }
    for (const auto& gen : gens) {
        for (int dir = 0; dir < 2; ++dir) {
            for (const auto& gap : gaps) {
                const double u = dir == 0 ? gen.map(gap.lo) : gen.map.inverse_at(gap.lo);
                const double v = dir == 0 ? gen.map(gap.hi) : gen.map.inverse_at(gap.hi);
                if (v < span_lo + match_tol || u > span_hi - match_tol) continue;
                bool matched = false;
                for (const auto& g2 : gaps)
                    matched |= std::abs(u - g2.lo) <= match_tol && std::abs(v - g2.hi) <= match_tol;
                if (!matched)
                    throw Error(ErrorCode::GapsNotInvariant,
                                "generator " + gen.name + " moves a gap off the gap set");
            }
        }
    }
    CollapseResult out;
    out.collapse = CollapseMap::from_gaps(gaps);
    StieltjesMeasure st;
    st.phi = MonotoneMap{out.collapse, quotient_conjugacy};
    out.measure = st;
    const auto probes = probe_intervals(window, 64);
    for (const auto& gen : gens)
        out.generator_residuals.push_back(invariance_residual(out.measure, gen.map, probes));
    (void)tol;
    return out;
}

// ---------------------------------------------------------------------------
// Discrete orbit measure: the counting comb over a separated orbit.
// ---------------------------------------------------------------------------

inline DiracComb discrete_orbit_measure(const GroupSpec& spec, double y, const Interval& window,
                                        int rounds = 40) {
    const Tolerances& tol = spec.tol;
    const double dedupe = 1e-7;
    const double margin = 1.0;
    std::vector<double> pts{y};
    auto find_slot = [&](double v) {
        return std::lower_bound(pts.begin(), pts.end(), v);
    };
    bool grew = true;
    for (int r = 0; r < rounds && grew; ++r) {
        grew = false;
        std::vector<double> snapshot = pts;
        for (double p : snapshot) {
            for (const auto& gen : spec.generators) {
                for (int dir = 0; dir < 2; ++dir) {
                    const double q = dir == 0 ? gen.map(p) : gen.map.inverse_at(p);
                    if (q < window.lo - margin || q > window.hi + margin) continue;
                    auto it = find_slot(q);
                    const double dl = it == pts.begin() ? std::numeric_limits<double>::infinity()
                                                        : q - *(it - 1);
                    const double dr = it == pts.end() ? std::numeric_limits<double>::infinity() : *it - q;
                    const double nearest = std::min(dl, dr);
                    if (nearest <= dedupe) continue; // same point numerically
                    if (nearest < tol.eps_sep)
                        throw Error(ErrorCode::OrbitAccumulates,
                                    "orbit points closer than eps_sep near " + std::to_string(q));
                    pts.insert(it, q);
                    grew = true;
                    if (static_cast<int>(pts.size()) > spec.budget.orbit_cap)
                        throw Error(ErrorCode::OrbitAccumulates, "orbit cap exceeded in window");
                }
            }
        }
    }
    DiracComb comb;
    for (double p : pts)
        if (p >= window.lo && p <= window.hi) comb.points.push_back(p);
    comb.weights.assign(comb.points.size(), 1.0);
    return comb;
}

inline OrbitCounting orbit_counting_measure(const GroupSpec& spec, double x0, const Interval& window) {
    const DiracComb comb = discrete_orbit_measure(spec, x0, window);
    OrbitCounting oc;
    oc.points = comb.points;
    oc.base_point = x0;
    long unit = 0;
    for (double p : oc.points)
        if (p >= 0.0 && p <= 1.0) ++unit;
    oc.normalization = unit > 0 ? 1.0 / static_cast<double>(unit) : 1.0;
    return oc;
}

// ---------------------------------------------------------------------------
// Measure (de)serialization.
// ---------------------------------------------------------------------------

inline Json measure_to_json(const RadonMeasure& mu) {
    if (std::holds_alternative<DiracComb>(mu)) {
        const auto& c = std::get<DiracComb>(mu);
        Json pts = Json::array(), ws = Json::array();
        for (double p : c.points) pts.push_back(num_str(p));
        for (double w : c.weights) ws.push_back(num_str(w));
        return Json{{"type", "dirac_comb"}, {"points", pts}, {"weights", ws}};
    }
    if (std::holds_alternative<OrbitCounting>(mu)) {
        const auto& c = std::get<OrbitCounting>(mu);
        Json pts = Json::array();
        for (double p : c.points) pts.push_back(num_str(p));
        return Json{{"type", "orbit_counting"},
                    {"points", pts},
                    {"normalization", num_str(c.normalization)},
                    {"base_point", num_str(c.base_point)}};
    }
    if (std::holds_alternative<StieltjesMeasure>(mu)) {
        const auto& s = std::get<StieltjesMeasure>(mu);
        Json gaps = Json::array();
        for (const auto& g : s.phi.collapse.gaps) gaps.push_back(interval_json(g));
        Json j{{"type", "stieltjes"}, {"gaps", gaps}};
        j["post"] = s.phi.post ? to_json(*s.phi.post) : Json(nullptr);
        return j;
    }
    const auto& p = std::get<LebesguePullback>(mu);
    if (p.expr) return Json{{"type", "lebesgue_pullback"}, {"h", to_json(*p.expr)}};
    Json xs = Json::array(), ys = Json::array();
    for (double x : p.sample_x) xs.push_back(num_str(x));
    for (double y : p.sample_y) ys.push_back(num_str(y));
    return Json{{"type", "lebesgue_pullback"}, {"table", Json{{"x", xs}, {"y", ys}}}};
}

inline RadonMeasure measure_from_json(const Json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "dirac_comb") {
        DiracComb c;
        for (const auto& p : j.at("points")) c.points.push_back(num_parse(p));
        for (const auto& w : j.at("weights")) c.weights.push_back(num_parse(w));
        return c;
    }
    if (type == "orbit_counting") {
        OrbitCounting c;
        for (const auto& p : j.at("points")) c.points.push_back(num_parse(p));
        c.normalization = num_parse(j.at("normalization"));
        c.base_point = num_parse(j.at("base_point"));
        return c;
    }
    if (type == "stieltjes") {
        std::vector<Interval> gaps;
        for (const auto& g : j.at("gaps")) gaps.push_back(interval_from_json(g));
        StieltjesMeasure s;
        s.phi.collapse = CollapseMap::from_gaps(std::move(gaps));
        if (!j.at("post").is_null()) s.phi.post = homeo_from_json(j.at("post"));
        return s;
    }
    if (type == "lebesgue_pullback") {
        LebesguePullback p;
        if (j.contains("h")) {
            p.expr = homeo_from_json(j.at("h"));
            return p;
        }
        for (const auto& x : j.at("table").at("x")) p.sample_x.push_back(num_parse(x));
        for (const auto& y : j.at("table").at("y")) p.sample_y.push_back(num_parse(y));
        auto xs = std::make_shared<std::vector<double>>(p.sample_x);
        auto ys = std::make_shared<std::vector<double>>(p.sample_y);
        p.fn = [xs, ys](double x) {
            const auto& X = *xs;
            const auto& Y = *ys;
            if (x <= X.front())
                return Y.front() + (x - X.front()) * (Y[1] - Y[0]) / (X[1] - X[0]);
            if (x >= X.back()) {
                const std::size_t n = X.size();
                return Y.back() + (x - X.back()) * (Y[n - 1] - Y[n - 2]) / (X[n - 1] - X[n - 2]);
            }
            const auto it = std::upper_bound(X.begin(), X.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - X.begin()) - 1;
            const double t = (x - X[i]) / (X[i + 1] - X[i]);
            return Y[i] + t * (Y[i + 1] - Y[i]);
        };
        return p;
    }
    throw Error(ErrorCode::IllFormed, "unknown measure type: " + type);
}

} // namespace linelab
