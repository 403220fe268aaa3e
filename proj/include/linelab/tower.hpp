#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "linelab/fixed_points.hpp"
#include "linelab/group_spec.hpp"
#include "linelab/homeo.hpp"

namespace linelab {

// ---------------------------------------------------------------------------
// Towers: strictly nested closed intervals whose maps fix exactly the level
// endpoints within the level.
// ---------------------------------------------------------------------------

struct TowerLevel {
    Interval interval{-1.0, 1.0};
    Homeo map;
    std::string name;
    double lo_residual = 0.0; // |f(lo)-lo|
    double hi_residual = 0.0;
    Sign interior_sign = Sign::Above;
    double interior_max_displacement = 0.0;
};

struct Tower {
    std::vector<TowerLevel> levels;
};

struct LevelReport {
    bool endpoints_fixed = false;
    bool interior_clear = false; // no interior fixed features detached from the ends
    bool not_identity_like = false;
    bool nested_in_next = true;
    double lo_residual = 0.0;
    double hi_residual = 0.0;
    std::string detail;

    bool pass() const { return endpoints_fixed && interior_clear && not_identity_like && nested_in_next; }
};

struct TowerReport {
    std::vector<LevelReport> levels;
    bool pass = false;
};

// Re-derives the fixed set per level and checks endpoint fixing, absence of
// interior fixed features, and strict nesting. Numerically-fixed plateaus
// attached to the level endpoints count as endpoint closure: maps that are
// very flat near their fixed ends dip below eps_fix there.
inline TowerReport validate_tower(const Tower& t, int grid = 2048, const Tolerances& tol = {}) {
    TowerReport rep;
    if (t.levels.empty()) throw Error(ErrorCode::BadArgument, "validate_tower needs levels");
    for (std::size_t k = 0; k < t.levels.size(); ++k) {
        const auto& lvl = t.levels[k];
        LevelReport lr;
        const Interval& I = lvl.interval;
        lr.lo_residual = std::abs(lvl.map(I.lo) - I.lo);
        lr.hi_residual = std::abs(lvl.map(I.hi) - I.hi);
        lr.endpoints_fixed = lr.lo_residual <= tol.eps_fix && lr.hi_residual <= tol.eps_fix;

        const auto fs = fixed_set(lvl.map, I, grid, tol);
        lr.not_identity_like = fs.max_displacement > tol.eps_fix;
        lr.interior_clear = true;
        for (const auto& part : fs.fixed_parts) {
            const bool at_lo = part.touches_window_lo || part.lo <= I.lo + tol.eps_fix;
            const bool at_hi = part.touches_window_hi || part.hi >= I.hi - tol.eps_fix;
            if (!at_lo && !at_hi) {
                lr.interior_clear = false;
                lr.detail = "interior fixed feature near " + std::to_string(part.lo);
            }
        }
        if (fs.components.size() > 1) {
            lr.interior_clear = false;
            if (lr.detail.empty()) lr.detail = "interior splits into multiple components";
        }
        if (k + 1 < t.levels.size()) {
            const Interval& J = t.levels[k + 1].interval;
            const bool contained = J.lo <= I.lo + tol.eps_fix && I.hi <= J.hi + tol.eps_fix;
            const bool strict = J.lo < I.lo - tol.eps_fix || I.hi < J.hi - tol.eps_fix;
            lr.nested_in_next = contained && strict;
            if (!lr.nested_in_next && lr.detail.empty()) lr.detail = "nesting violated with next level";
        }
        rep.levels.push_back(lr);
    }
    rep.pass = true;
    for (const auto& lr : rep.levels) rep.pass &= lr.pass();
    return rep;
}

// ---------------------------------------------------------------------------
// Constructive tower search: pick a seed component of a generator's fixed-set
// complement, then repeatedly find a word that moves the whole current level
// off itself and pass to the component of that word's fixed-set complement
// containing it.
// ---------------------------------------------------------------------------

enum class TowerSearchStatus { Found, BudgetExhausted, NoSeedElement, SeriesViolation, NoComponent };

struct TowerSearchResult {
    TowerSearchStatus status = TowerSearchStatus::BudgetExhausted;
    Tower tower;
    Interval base{-1.0, 1.0}; // nilpotent variant: I_0 with Fix(A) cap I_0 = End(I_0)
    bool has_base = false;
    std::string log;
};

namespace detail {

inline bool word_moves_interval(const std::vector<Generator>& gens, const Word& w, double lo, double hi,
                                const Tolerances& tol, int probes = 128) {
    double prev = 0.0;
    for (int i = 0; i <= probes; ++i) {
        const double x = lo + (hi - lo) * i / probes;
        const double d = word_eval(gens, w, x) - x;
        if (std::abs(d) <= tol.eps_fix) return false;
        if (i > 0 && (d < 0) != (prev < 0)) return false;
        prev = d;
    }
    return true;
}

inline std::optional<Component> component_containing(const std::vector<Component>& comps, double lo,
                                                     double hi) {
    for (const auto& c : comps)
        if (c.lo <= lo && hi <= c.hi) return c;
    return std::nullopt;
}

// Shrink a candidate component against tangential fixed points invisible to
// the grid scan: the nearest refined displacement dips outside the carried
// interval become the component endpoints (they are genuinely fixed). A dip
// strictly inside the carried interval disqualifies the candidate.
inline std::optional<Component> refine_component_against_dips(const Homeo& h, Component comp,
                                                              double cur_lo, double cur_hi,
                                                              const Tolerances& tol) {
    const auto dips = find_fixed_dips(h, comp.lo, comp.hi, tol);
    for (double dip : dips) {
        if (dip > cur_lo && dip < cur_hi) return std::nullopt;
        if (dip <= cur_lo && dip > comp.lo + tol.eps_fix) {
            comp.lo = dip;
            comp.lo_genuine = true;
        }
        if (dip >= cur_hi && dip < comp.hi - tol.eps_fix) {
            comp.hi = dip;
            comp.hi_genuine = true;
            break; // dips are sorted; the first one past the interval wins
        }
    }
    return comp;
}

struct LevelScanResult {
    bool found = false;
    TowerLevel level;
};

// First point strictly beyond `from` (scanning toward `to`) where |h - id|
// falls to eps_fix: a sign-scan crossing, an eps plateau edge, or a
// ternary-refined tangential dip. Returns nothing when h stays clear of the
// identity all the way to `to`.
inline std::optional<double> first_fixed_beyond(const Homeo& h, double from, double to,
                                                const Tolerances& tol, int samples = 512) {
    if (from == to) return std::nullopt;
    auto disp = [&](double x) { return std::abs(h(x) - x); };
    std::vector<double> xs(static_cast<std::size_t>(samples) + 1);
    std::vector<double> d(static_cast<std::size_t>(samples) + 1);
    for (int i = 0; i <= samples; ++i) {
        xs[static_cast<std::size_t>(i)] = from + (to - from) * i / samples;
        d[static_cast<std::size_t>(i)] = disp(xs[static_cast<std::size_t>(i)]);
    }
    // refine only minima small enough to plausibly dip to eps inside one
    // cell, and cap the refinement work per scan
    const double refine_threshold = std::max(1e4 * tol.eps_fix, 0.5 * std::abs(to - from) / samples);
    int refines_left = 8;
    for (int i = 1; i <= samples; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        if (d[k] <= tol.eps_fix) {
            // locate the eps crossing between the moving zone and the feature
            double a = xs[k - 1], b = xs[k];
            for (int it = 0; it < 120 && std::abs(b - a) > tol.delta_root; ++it) {
                const double m = 0.5 * (a + b);
                (disp(m) > tol.eps_fix ? a : b) = m;
            }
            return b;
        }
        if (i < samples && d[k] <= d[k - 1] && d[k] <= d[k + 1] && d[k] <= refine_threshold) {
            if (--refines_left < 0) return std::nullopt; // conservative give-up
            double a = xs[k - 1], b = xs[k + 1];
            for (int it = 0; it < 60 && std::abs(b - a) > 1e-12; ++it) {
                const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
                if (disp(m1) < disp(m2))
                    b = m2;
                else
                    a = m1;
            }
            const double m = 0.5 * (a + b);
            if (disp(m) <= tol.eps_fix) return m;
        }
    }
    return std::nullopt;
}

// Deterministic pusher scan over the word ball; a candidate is accepted when
// it moves the whole current interval and has fixed features strictly beyond
// it on both sides within the window — those features become the new level's
// endpoints. Scan work is bounded per level: at most pusher_words words are
// probed, of which at most pusher_candidates get the directed feature scans.
inline LevelScanResult scan_for_next_level(const GroupSpec& spec, const std::vector<int>& allowed,
                                           const Interval& window, double cur_lo, double cur_hi,
                                           int word_len, int /*grid*/, const Tolerances& tol) {
    LevelScanResult out;
    std::vector<Generator> sub;
    for (int idx : allowed) sub.push_back(spec.generators[idx]);
    long words_left = spec.budget.pusher_words;
    int candidates_left = spec.budget.pusher_candidates;
    for_each_reduced_word(static_cast<int>(sub.size()), word_len, [&](const Word& w) {
        if (--words_left < 0 || candidates_left <= 0) return false;
        if (!word_moves_interval(sub, w, cur_lo, cur_hi, tol)) return true;
        --candidates_left;
        const Homeo h = word_homeo(sub, w);
        const auto hi_end = first_fixed_beyond(h, cur_hi, window.hi, tol);
        if (!hi_end || !(*hi_end > cur_hi + tol.eps_fix)) return true;
        const auto lo_end = first_fixed_beyond(h, cur_lo, window.lo, tol);
        if (!lo_end || !(*lo_end < cur_lo - tol.eps_fix)) return true;
        TowerLevel lvl;
        lvl.interval = Interval(*lo_end, *hi_end);
        lvl.map = h;
        lvl.name = word_name(sub, w);
        lvl.lo_residual = std::abs(h(*lo_end) - *lo_end);
        lvl.hi_residual = std::abs(h(*hi_end) - *hi_end);
        const double mid = 0.5 * (cur_lo + cur_hi);
        lvl.interior_sign = h(mid) >= mid ? Sign::Above : Sign::Below;
        out.found = true;
        out.level = lvl;
        return false;
    });
    return out;
}

} // namespace detail

inline TowerSearchResult search_tower(const GroupSpec& spec, const Interval& window, const Budget& budget) {
    TowerSearchResult res;
    const Tolerances& tol = spec.tol;
    const int grid = budget.grid;
    const auto t0 = std::chrono::steady_clock::now();

    // seed: first generator (declaration order) offering a complement
    // component with genuine endpoints; prefer the one holding the window
    // midpoint, else the widest
    std::optional<TowerLevel> seed;
    for (const auto& gen : spec.generators) {
        const auto fs = fixed_set(gen.map, window, grid, tol);
        if (fs.max_displacement <= tol.eps_fix) continue; // identity-like
        if (!fs.has_fixed_points()) continue;
        const Component* best = nullptr;
        for (const auto& c : fs.components) {
            if (!c.lo_genuine || !c.hi_genuine) continue;
            if (c.lo <= window.midpoint() && window.midpoint() <= c.hi) {
                best = &c;
                break;
            }
            if (!best || (c.hi - c.lo) > (best->hi - best->lo)) best = &c;
        }
        if (!best) continue;
        const double mid = 0.5 * (best->lo + best->hi);
        const auto refined = detail::refine_component_against_dips(gen.map, *best, mid, mid, tol);
        if (!refined) continue;
        TowerLevel lvl;
        lvl.interval = Interval(refined->lo, refined->hi);
        lvl.map = gen.map;
        lvl.name = gen.name;
        lvl.lo_residual = std::abs(gen.map(refined->lo) - refined->lo);
        lvl.hi_residual = std::abs(gen.map(refined->hi) - refined->hi);
        lvl.interior_sign = refined->sign;
        seed = lvl;
        break;
    }
    if (!seed) {
        res.status = TowerSearchStatus::NoSeedElement;
        res.log = "no generator has a usable fixed-set component in the window";
        return res;
    }
    res.tower.levels.push_back(*seed);

    std::vector<int> all;
    for (std::size_t i = 0; i < spec.generators.size(); ++i) all.push_back(static_cast<int>(i));
    const double cover = std::max(1e-6, 1e-4 * window.length());
    while (static_cast<int>(res.tower.levels.size()) < budget.levels) {
        const auto& cur = res.tower.levels.back().interval;
        if (cur.lo <= window.lo + cover && cur.hi >= window.hi - cover) {
            res.status = TowerSearchStatus::Found;
            res.log = "window exhausted";
            return res;
        }
        const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0);
        if (elapsed.count() > budget.wall_ms) {
            res.log = "wall clock budget spent";
            return res;
        }
        const auto next =
            detail::scan_for_next_level(spec, all, window, cur.lo, cur.hi, budget.word_length, grid, tol);
        if (!next.found) {
            res.log = "no pusher word within budget";
            return res;
        }
        res.tower.levels.push_back(next.level);
    }
    const auto& cur = res.tower.levels.back().interval;
    if (cur.lo <= window.lo + cover && cur.hi >= window.hi - cover) {
        res.status = TowerSearchStatus::Found;
        res.log = "window exhausted";
    } else {
        res.log = "level budget spent";
    }
    return res;
}

// Nilpotent-series variant: requires declared subgroups A and B with
// [B,B] <= A (spot-checked on generator commutators); the base interval I_0
// is a component of the window minus Fix(A), and tower maps are B-words.
inline TowerSearchResult search_tower_nilpotent(const GroupSpec& spec, const Interval& window,
                                                const Budget& budget) {
    TowerSearchResult res;
    const Tolerances& tol = spec.tol;
    const int grid = budget.grid;
    const auto A_idx = spec.subgroup_indices("A");
    const auto B_idx = spec.subgroup_indices("B");

    std::vector<Generator> a_gens, b_gens;
    for (int i : A_idx) a_gens.push_back(spec.generators[i]);
    for (int i : B_idx) b_gens.push_back(spec.generators[i]);

    // spot check [B,B] <= A on generator commutators: identity-like, or
    // matched by an A-word, or at least preserving Fix(A)'s parts
    std::vector<std::vector<FixedPart>> a_parts;
    for (const auto& g : a_gens) a_parts.push_back(fixed_set(g.map, window, grid, tol).fixed_parts);
    const auto fixA = intersect_fixed_parts(a_parts);
    auto in_fixA = [&](double x) {
        for (const auto& p : fixA)
            if (x >= p.lo - 1e-7 && x <= p.hi + 1e-7) return true;
        return false;
    };
    const int probes = 64;
    for (std::size_t i = 0; i < b_gens.size(); ++i) {
        for (std::size_t j = i + 1; j < b_gens.size(); ++j) {
            const Word comm = {static_cast<int>(i) + 1, static_cast<int>(j) + 1, -(static_cast<int>(i) + 1),
                               -(static_cast<int>(j) + 1)};
            double sup = 0.0;
            for (int s = 0; s <= probes; ++s) {
                const double x = window.lo + window.length() * s / probes;
                sup = std::max(sup, std::abs(word_eval(b_gens, comm, x) - x));
            }
            if (sup <= tol.eps_fix * 10) continue; // commutator acts as identity
            bool matched = false;
            for_each_reduced_word(static_cast<int>(a_gens.size()), std::min(3, budget.word_length),
                                  [&](const Word& aw) {
                                      double d = 0.0;
                                      for (int s = 0; s <= probes; ++s) {
                                          const double x = window.lo + window.length() * s / probes;
                                          d = std::max(d, std::abs(word_eval(b_gens, comm, x) -
                                                                   word_eval(a_gens, aw, x)));
                                      }
                                      if (d <= tol.eps_fix * 100) {
                                          matched = true;
                                          return false;
                                      }
                                      return true;
                                  });
            if (matched) continue;
            bool preserves = true;
            for (const auto& p : fixA) {
                preserves &= in_fixA(word_eval(b_gens, comm, p.lo));
                if (!p.degenerate()) preserves &= in_fixA(word_eval(b_gens, comm, p.hi));
            }
            if (!preserves) {
                res.status = TowerSearchStatus::SeriesViolation;
                res.log = "commutator " + b_gens[i].name + "," + b_gens[j].name +
                          " leaves the declared A fixed-set structure";
                return res;
            }
        }
    }

    const auto comps = components_from_parts(window, fixA);
    const Component* base = nullptr;
    for (const auto& c : comps) {
        if (!c.lo_genuine || !c.hi_genuine) continue;
        if (c.lo <= window.midpoint() && window.midpoint() <= c.hi) {
            base = &c;
            break;
        }
        if (!base || (c.hi - c.lo) > (base->hi - base->lo)) base = &c;
    }
    if (!base) {
        res.status = TowerSearchStatus::NoComponent;
        res.log = "no component of the window minus Fix(A) has genuine finite endpoints";
        return res;
    }
    res.base = Interval(base->lo, base->hi);
    res.has_base = true;

    // levels: like search_tower, but over B-words, starting from I_0
    double cur_lo = base->lo, cur_hi = base->hi;
    const double cover = std::max(1e-6, 1e-4 * window.length());
    res.status = TowerSearchStatus::BudgetExhausted;
    while (static_cast<int>(res.tower.levels.size()) < budget.levels) {
        const auto next =
            detail::scan_for_next_level(spec, B_idx, window, cur_lo, cur_hi, budget.word_length, grid, tol);
        if (!next.found) {
            res.log = res.tower.levels.empty() ? "no pusher in B moves the base interval"
                                               : "no pusher word within budget";
            return res;
        }
        res.tower.levels.push_back(next.level);
        cur_lo = next.level.interval.lo;
        cur_hi = next.level.interval.hi;
        if (cur_lo <= window.lo + cover && cur_hi >= window.hi - cover) {
            res.status = TowerSearchStatus::Found;
            res.log = "window exhausted";
            return res;
        }
    }
    res.log = "level budget spent";
    return res;
}

inline Json tower_to_json(const Tower& t) {
    Json levels = Json::array();
    for (const auto& lvl : t.levels)
        levels.push_back(Json{{"name", lvl.name},
                              {"interval", interval_json(lvl.interval)},
                              {"map", to_json(lvl.map)},
                              {"lo_residual", num_str(lvl.lo_residual)},
                              {"hi_residual", num_str(lvl.hi_residual)}});
    return Json{{"schema", 1}, {"kind", "tower"}, {"levels", levels}};
}

inline Tower tower_from_json(const Json& j) {
    Tower t;
    for (const auto& l : j.at("levels")) {
        TowerLevel lvl;
        lvl.name = l.at("name").get<std::string>();
        lvl.interval = interval_from_json(l.at("interval"));
        lvl.map = homeo_from_json(l.at("map"));
        t.levels.push_back(lvl);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Lexicographic interval family L_w = h_1^{l_1}(h_2^{l_2}(... h_k^{l_k}(I_0))).
// h_1 is the coarsest separator (outermost, most significant index digit);
// with that ordering the family is disposed left-to-right in standard
// lexicographic order of w.
// ---------------------------------------------------------------------------

struct LexFamily {
    Interval base{-1.0, 1.0};
    int radius = 0;
    std::vector<std::vector<int>> indices; // lex order
    std::vector<Interval> intervals;
    bool ok = false;
    double max_shift_residual = 0.0;
    std::string violation;
    std::optional<std::pair<std::vector<int>, std::vector<int>>> offending;
};

inline LexFamily build_lex_family(const Interval& I0, const std::vector<Homeo>& hs, int radius,
                                  const Tolerances& tol = {}) {
    if (hs.size() < 3) throw Error(ErrorCode::BadArgument, "lex family needs at least 3 maps");
    if (radius < 0) throw Error(ErrorCode::BadArgument, "lex family radius must be >= 0");
    const int k = static_cast<int>(hs.size());
    for (const auto& h : hs) {
        if (!(h(I0.lo) > I0.lo) || !(h(I0.hi) > I0.hi) || !(h(I0.midpoint()) > I0.midpoint()))
            throw Error(ErrorCode::BadArgument, "every map must move the base interval rightward");
    }

    LexFamily fam;
    fam.base = I0;
    fam.radius = radius;

    std::vector<int> w(k, -radius);
    long count = 1;
    for (int j = 0; j < k; ++j) count *= 2L * radius + 1L;
    for (long c = 0; c < count; ++c) {
        double lo = I0.lo, hi = I0.hi;
        for (int j = k - 1; j >= 0; --j) {
            lo = hs[j].power_at(w[j], lo);
            hi = hs[j].power_at(w[j], hi);
        }
        fam.indices.push_back(w);
        fam.intervals.push_back(Interval(lo, hi));
        // odometer in lex order: last digit fastest
        for (int j = k - 1; j >= 0; --j) {
            if (w[j] < radius) {
                ++w[j];
                break;
            }
            w[j] = -radius;
        }
    }

    fam.ok = true;
    for (std::size_t i = 0; i + 1 < fam.intervals.size(); ++i) {
        if (fam.intervals[i].hi > fam.intervals[i + 1].lo + tol.tau_inv * 10) {
            fam.ok = false;
            fam.violation = "order/disjointness violated between consecutive indices";
            fam.offending = std::make_pair(fam.indices[i], fam.indices[i + 1]);
            break;
        }
    }

    // shift rule h_j(L_w) = L_{w + e_j} on the box interior
    if (fam.ok) {
        const long stride_base = 2 * radius + 1;
        for (std::size_t i = 0; i < fam.indices.size(); ++i) {
            for (int j = 0; j < k; ++j) {
                if (fam.indices[i][j] >= radius) continue;
                long target = static_cast<long>(i);
                long stride = 1;
                for (int d = k - 1; d > j; --d) stride *= stride_base;
                target += stride;
                const double lo = hs[j](fam.intervals[i].lo);
                const double hi = hs[j](fam.intervals[i].hi);
                fam.max_shift_residual = std::max(
                    fam.max_shift_residual, std::max(std::abs(lo - fam.intervals[target].lo),
                                                     std::abs(hi - fam.intervals[target].hi)));
            }
        }
    }
    return fam;
}

inline Json lex_family_to_json(const LexFamily& fam) {
    Json entries = Json::array();
    for (std::size_t i = 0; i < fam.indices.size(); ++i) {
        Json idx = Json::array();
        for (int l : fam.indices[i]) idx.push_back(l);
        entries.push_back(Json{{"index", idx}, {"interval", interval_json(fam.intervals[i])}});
    }
    Json j{{"schema", 1},
           {"kind", "lex-family"},
           {"base", interval_json(fam.base)},
           {"radius", fam.radius},
           {"ok", fam.ok},
           {"max_shift_residual", num_str(fam.max_shift_residual)},
           {"intervals", entries}};
    if (!fam.violation.empty()) j["violation"] = fam.violation;
    return j;
}

// ---------------------------------------------------------------------------
// Regularity threshold: the unique positive root of a(1+a)^{k-2} = 1.
// ---------------------------------------------------------------------------

inline double kopell_alpha_threshold(int k) {
    if (k < 3) throw Error(ErrorCode::BadArgument, "threshold defined for k >= 3");
    auto g = [&](double a) { return a * std::pow(1.0 + a, k - 2) - 1.0; };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline int kopell_min_k(double alpha) {
    if (!(alpha > 0)) throw Error(ErrorCode::BadArgument, "alpha must be positive");
    for (int k = 3; k <= 1000000; ++k)
        if (alpha * std::pow(1.0 + alpha, k - 2) >= 1.0) return k;
    throw Error(ErrorCode::BadArgument, "alpha too small for a practical k");
}

// ---------------------------------------------------------------------------
// Mass-pump certificate: iterated images of a tower level's interior under
// the next level's map are pairwise disjoint inside the next interval, so an
// invariant Radon measure giving the interior positive mass is impossible in
// the limit. The certificate carries the finite arithmetic witness.
// ---------------------------------------------------------------------------

struct MassPumpCertificate {
    int level_N = 1;
    int iterates_K = 0;
    Interval base{-1.0, 1.0};
    Interval target{-1.0, 1.0};
    std::vector<Interval> images; // K+1 open-interval endpoint pairs
    bool disjoint = false;
    bool contained = false;
    bool endpoints_increasing = false;
    int multiplier = 1; // K+1
    std::string failure;

    bool pass() const { return disjoint && contained && endpoints_increasing; }
};

inline MassPumpCertificate mass_pump(const Tower& t, int N, int K, const Tolerances& tol = {}) {
    if (N < 1 || static_cast<std::size_t>(N + 1) > t.levels.size())
        throw Error(ErrorCode::BadArgument, "mass_pump needs levels N and N+1 in the tower");
    if (K < 0) throw Error(ErrorCode::BadArgument, "iterate count must be >= 0");
    MassPumpCertificate cert;
    cert.level_N = N;
    cert.iterates_K = K;
    cert.base = t.levels[N - 1].interval;
    cert.target = t.levels[N].interval;
    cert.multiplier = K + 1;
    const Homeo& f = t.levels[N].map;

    double lo = cert.base.lo, hi = cert.base.hi;
    for (int i = 0; i <= K; ++i) {
        if (i > 0) {
            lo = f(lo);
            hi = f(hi);
        }
        cert.images.push_back(Interval(lo, hi));
    }
    cert.disjoint = true;
    cert.endpoints_increasing = true;
    for (int i = 0; i + 1 <= K; ++i) {
        if (cert.images[i].hi > cert.images[i + 1].lo + tol.eps_fix) {
            cert.disjoint = false;
            cert.failure = "images " + std::to_string(i) + " and " + std::to_string(i + 1) + " overlap";
            break;
        }
        if (!(cert.images[i + 1].lo >= cert.images[i].lo) || !(cert.images[i + 1].hi > cert.images[i].hi)) {
            cert.endpoints_increasing = false;
            if (cert.failure.empty()) cert.failure = "image endpoints fail to increase";
            break;
        }
    }
    cert.contained = true;
    for (const auto& im : cert.images)
        cert.contained &= im.lo >= cert.target.lo - tol.eps_fix && im.hi <= cert.target.hi + tol.eps_fix;
    if (!cert.contained && cert.failure.empty()) cert.failure = "an image leaves the target interval";
    return cert;
}

} // namespace linelab
