#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "linelab/homeo.hpp"
#include "linelab/interval.hpp"
#include "linelab/tolerances.hpp"

namespace linelab {

// A maximal stretch of the window where |f(x)-x| <= eps_fix. Degenerate
// (lo == hi) parts are isolated fixed points located by bisection.
struct FixedPart {
    double lo = 0.0;
    double hi = 0.0;
    bool touches_window_lo = false;
    bool touches_window_hi = false;

    bool degenerate() const { return lo == hi; }
};

enum class Sign { Above, Below };

// Component of the window minus the detected fixed set. An endpoint is
// "genuine" when it abuts a fixed part; otherwise it is the analysis-window
// edge, which plays the role of an infinite endpoint and is never a
// candidate for being sent inside.
struct Component {
    double lo = 0.0;
    double hi = 0.0;
    Sign sign = Sign::Above;
    bool lo_genuine = false;
    bool hi_genuine = false;
};

struct FixedSetReport {
    Interval window{-1.0, 1.0};
    std::vector<FixedPart> fixed_parts;
    std::vector<Component> components;
    bool grid_too_coarse = false; // advisory: distinct features within one cell
    double max_displacement = 0.0;

    bool has_fixed_points() const { return !fixed_parts.empty(); }
};

namespace detail {

inline double bisect_sign_change(const Homeo& f, double a, double b, double width) {
    double fa = f(a) - a;
    for (int it = 0; it < 200 && b - a > width; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m) - m;
        if ((fa < 0) == (fm < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// locate where |f(x)-x| crosses eps between a (inside the plateau) and b
inline double bisect_plateau_edge(const Homeo& f, double a, double b, double eps, double width) {
    for (int it = 0; it < 200 && std::abs(b - a) > width; ++it) {
        const double m = 0.5 * (a + b);
        if (std::abs(f(m) - m) <= eps)
            a = m;
        else
            b = m;
    }
    return a;
}

} // namespace detail

// Sign-change scan of f(x)-x on a uniform grid, bisection refinement of
// isolated zeros, eps_fix plateaus merged into fixed parts.
inline FixedSetReport fixed_set(const Homeo& f, const Interval& window, int grid = 2048,
                                const Tolerances& tol = {}) {
    if (!window.finite()) throw Error(ErrorCode::BadArgument, "fixed_set needs a finite window");
    if (grid < 2) throw Error(ErrorCode::BadArgument, "fixed_set needs grid >= 2");

    FixedSetReport rep;
    rep.window = window;
    const double cell = window.length() / grid;

    std::vector<double> xs(grid + 1), disp(grid + 1);
    for (int i = 0; i <= grid; ++i) {
        xs[i] = window.lo + window.length() * i / grid;
        disp[i] = f(xs[i]) - xs[i];
        rep.max_displacement = std::max(rep.max_displacement, std::abs(disp[i]));
    }
    auto fixed_at = [&](int i) { return std::abs(disp[i]) <= tol.eps_fix; };

    std::vector<FixedPart> parts;
    int i = 0;
    while (i <= grid) {
        if (fixed_at(i)) {
            int j = i;
            while (j + 1 <= grid && fixed_at(j + 1)) ++j;
            FixedPart part;
            part.lo = (i == 0) ? window.lo
                               : detail::bisect_plateau_edge(f, xs[i], xs[i - 1], tol.eps_fix, tol.delta_root);
            part.hi = (j == grid) ? window.hi
                                  : detail::bisect_plateau_edge(f, xs[j], xs[j + 1], tol.eps_fix, tol.delta_root);
            part.touches_window_lo = (i == 0);
            part.touches_window_hi = (j == grid);
            if (part.hi < part.lo) part.lo = part.hi = 0.5 * (part.lo + part.hi);
            parts.push_back(part);
            i = j + 1;
        } else {
            if (i + 1 <= grid && !fixed_at(i + 1) && (disp[i] < 0) != (disp[i + 1] < 0)) {
                const double r = detail::bisect_sign_change(f, xs[i], xs[i + 1], tol.delta_root);
                parts.push_back(FixedPart{r, r, false, false});
            }
            ++i;
        }
    }

    // merge parts that collapsed onto each other after refinement
    std::sort(parts.begin(), parts.end(), [](const FixedPart& a, const FixedPart& b) { return a.lo < b.lo; });
    for (const auto& p : parts) {
        if (!rep.fixed_parts.empty() && p.lo <= rep.fixed_parts.back().hi + tol.delta_root * 4) {
            rep.fixed_parts.back().hi = std::max(rep.fixed_parts.back().hi, p.hi);
            rep.fixed_parts.back().touches_window_hi |= p.touches_window_hi;
        } else {
            rep.fixed_parts.push_back(p);
        }
    }

    // advisory when separate features sit within one grid cell
    for (std::size_t k = 1; k < rep.fixed_parts.size(); ++k)
        if (rep.fixed_parts[k].lo - rep.fixed_parts[k - 1].hi < cell) rep.grid_too_coarse = true;

    // complement components, tagged with the sign of f - id
    auto add_component = [&](double lo, double hi, bool lo_gen, bool hi_gen) {
        if (!(hi > lo)) return;
        Component c;
        c.lo = lo;
        c.hi = hi;
        c.lo_genuine = lo_gen;
        c.hi_genuine = hi_gen;
        double probe = 0.0, best = 0.0;
        for (int s = 1; s < 16; ++s) {
            const double x = lo + (hi - lo) * s / 16.0;
            const double d = f(x) - x;
            if (std::abs(d) > std::abs(best)) {
                best = d;
                probe = x;
            }
        }
        (void)probe;
        c.sign = best >= 0 ? Sign::Above : Sign::Below;
        rep.components.push_back(c);
    };

    if (rep.fixed_parts.empty()) {
        add_component(window.lo, window.hi, false, false);
        return rep;
    }
    if (rep.fixed_parts.front().lo > window.lo)
        add_component(window.lo, rep.fixed_parts.front().lo, false, true);
    for (std::size_t k = 0; k + 1 < rep.fixed_parts.size(); ++k)
        add_component(rep.fixed_parts[k].hi, rep.fixed_parts[k + 1].lo, true, true);
    if (rep.fixed_parts.back().hi < window.hi)
        add_component(rep.fixed_parts.back().hi, window.hi, true, false);
    return rep;
}

// ---------------------------------------------------------------------------
// Crossed-pair detection: a component (a,b) of one map's fixed-set complement
// whose genuine endpoint is sent strictly inside by the other map.
// ---------------------------------------------------------------------------

struct CrossWitness {
    std::string fixed_map;  // the map supplying the interval (a,b)
    std::string moving_map; // the map sending an endpoint inside
    double a = 0.0;
    double b = 0.0;
    bool a_unbounded = false; // endpoint is a window edge standing in for +-inf
    bool b_unbounded = false;
    double endpoint = 0.0;
    double sent_to = 0.0;
};

enum class CrossStatus { Crossed, NotCrossed, Inconclusive };

struct CrossResult {
    CrossStatus status = CrossStatus::NotCrossed;
    std::optional<CrossWitness> witness;
};

namespace detail {

// Tangential fixed points (displacement touching zero without a sign change)
// are invisible to grid sign scans. Before trusting a witness, sweep the
// stretch between the fixed endpoint e and its image y for displacement
// minima and refine each by ternary search: a refined dip to eps_fix refutes
// the premise that the component has no interior fixed points. The boundary
// cell next to y is refined too (a dip can hide there); the cell next to e
// is not, since e itself is legitimately fixed.
inline bool has_interior_fixed_dip(const Homeo& f, double e, double y, const Tolerances& tol,
                                   int samples = 2048) {
    const double lo = std::min(e, y), hi = std::max(e, y);
    if (!(hi > lo)) return false;
    auto disp = [&](double x) { return std::abs(f(x) - x); };
    auto refine = [&](double a, double b) {
        for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
            const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
            if (disp(m1) < disp(m2))
                b = m2;
            else
                a = m1;
        }
        return disp(0.5 * (a + b)) <= tol.eps_fix;
    };
    std::vector<double> d(static_cast<std::size_t>(samples) + 1);
    for (int i = 0; i <= samples; ++i) d[static_cast<std::size_t>(i)] = disp(lo + (hi - lo) * i / samples);
    for (int i = 1; i < samples; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        if (d[k] > d[k - 1] || d[k] > d[k + 1]) continue;
        if (refine(lo + (hi - lo) * (i - 1) / samples, lo + (hi - lo) * (i + 1) / samples)) return true;
    }
    if (y > e) {
        if (refine(lo + (hi - lo) * (samples - 1) / samples, hi)) return true;
    } else {
        if (refine(lo, lo + (hi - lo) * 1.0 / samples)) return true;
    }
    return false;
}

// Locations where |f - id| dips to eps_fix strictly inside (lo, hi), found
// by local-minimum refinement; sorted ascending.
inline std::vector<double> find_fixed_dips(const Homeo& f, double lo, double hi, const Tolerances& tol,
                                           int samples = 2048) {
    std::vector<double> dips;
    if (!(hi > lo)) return dips;
    auto disp = [&](double x) { return std::abs(f(x) - x); };
    std::vector<double> d(static_cast<std::size_t>(samples) + 1);
    for (int i = 0; i <= samples; ++i) d[static_cast<std::size_t>(i)] = disp(lo + (hi - lo) * i / samples);
    for (int i = 1; i < samples; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        if (d[k] > d[k - 1] || d[k] > d[k + 1]) continue;
        double a = lo + (hi - lo) * (i - 1) / samples;
        double b = lo + (hi - lo) * (i + 1) / samples;
        for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
            const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
            if (disp(m1) < disp(m2))
                b = m2;
            else
                a = m1;
        }
        const double m = 0.5 * (a + b);
        if (disp(m) <= tol.eps_fix && (dips.empty() || m - dips.back() > (hi - lo) / samples))
            dips.push_back(m);
    }
    return dips;
}

inline CrossResult cross_one_direction(const Homeo& f, const std::string& fname, const Homeo& g,
                                       const std::string& gname, const FixedSetReport& rf,
                                       const Tolerances& tol) {
    bool saw_inconclusive = false;
    for (const auto& comp : rf.components) {
        // a window-edge endpoint stands in for an infinite one: there is no
        // bound on that side, and the endpoint itself is not testable
        const double lo_bound = comp.lo_genuine ? comp.lo : -std::numeric_limits<double>::infinity();
        const double hi_bound = comp.hi_genuine ? comp.hi : std::numeric_limits<double>::infinity();
        for (int side = 0; side < 2; ++side) {
            const bool genuine = side == 0 ? comp.lo_genuine : comp.hi_genuine;
            if (!genuine) continue;
            const double e = side == 0 ? comp.lo : comp.hi;
            const double y = g(e);
            const bool inside = y > lo_bound + tol.eps_fix && y < hi_bound - tol.eps_fix;
            const bool near_edge = std::abs(y - lo_bound) <= tol.eps_fix || std::abs(y - hi_bound) <= tol.eps_fix;
            if (inside && std::abs(y - e) > tol.eps_fix) {
                if (has_interior_fixed_dip(f, e, y, tol)) continue; // premise refuted
                CrossWitness w;
                w.fixed_map = fname;
                w.moving_map = gname;
                w.a = comp.lo;
                w.b = comp.hi;
                w.a_unbounded = !comp.lo_genuine;
                w.b_unbounded = !comp.hi_genuine;
                w.endpoint = e;
                w.sent_to = y;
                return CrossResult{CrossStatus::Crossed, w};
            }
            if (near_edge) saw_inconclusive = true;
        }
    }
    return CrossResult{saw_inconclusive ? CrossStatus::Inconclusive : CrossStatus::NotCrossed, std::nullopt};
}

} // namespace detail

inline CrossResult is_crossed(const Homeo& f, const Homeo& g, const Interval& window,
                              int grid = 2048, const Tolerances& tol = {},
                              const std::string& fname = "f", const std::string& gname = "g") {
    const auto rf = fixed_set(f, window, grid, tol);
    const auto rg = fixed_set(g, window, grid, tol);
    const auto d1 = detail::cross_one_direction(f, fname, g, gname, rf, tol);
    if (d1.status == CrossStatus::Crossed) return d1;
    const auto d2 = detail::cross_one_direction(g, gname, f, fname, rg, tol);
    if (d2.status == CrossStatus::Crossed) return d2;
    if (d1.status == CrossStatus::Inconclusive || d2.status == CrossStatus::Inconclusive)
        return CrossResult{CrossStatus::Inconclusive, std::nullopt};
    return CrossResult{CrossStatus::NotCrossed, std::nullopt};
}

// Intersection of several detected fixed sets (each a sorted list of closed
// parts). Slack absorbs the bisection-level disagreement between maps that
// fix the same mathematical point.
inline std::vector<FixedPart> intersect_fixed_parts(const std::vector<std::vector<FixedPart>>& lists,
                                                    double slack = 1e-8) {
    if (lists.empty()) return {};
    std::vector<FixedPart> acc = lists.front();
    for (std::size_t k = 1; k < lists.size(); ++k) {
        std::vector<FixedPart> next;
        std::size_t i = 0, j = 0;
        const auto& b = lists[k];
        while (i < acc.size() && j < b.size()) {
            const double lo = std::max(acc[i].lo, b[j].lo);
            const double hi = std::min(acc[i].hi, b[j].hi);
            if (hi >= lo - slack) {
                FixedPart p;
                p.lo = std::min(lo, hi);
                p.hi = std::max(lo, hi);
                if (hi < lo) p.lo = p.hi = 0.5 * (lo + hi);
                p.touches_window_lo = acc[i].touches_window_lo && b[j].touches_window_lo;
                p.touches_window_hi = acc[i].touches_window_hi && b[j].touches_window_hi;
                next.push_back(p);
            }
            if (acc[i].hi < b[j].hi)
                ++i;
            else
                ++j;
        }
        acc = std::move(next);
        if (acc.empty()) break;
    }
    return acc;
}

// Complement components of a part list inside the window (no sign tagging).
inline std::vector<Component> components_from_parts(const Interval& window,
                                                    const std::vector<FixedPart>& parts) {
    std::vector<Component> comps;
    auto add = [&](double lo, double hi, bool lo_gen, bool hi_gen) {
        if (hi > lo) comps.push_back(Component{lo, hi, Sign::Above, lo_gen, hi_gen});
    };
    if (parts.empty()) {
        add(window.lo, window.hi, false, false);
        return comps;
    }
    if (parts.front().lo > window.lo) add(window.lo, parts.front().lo, false, true);
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) add(parts[k].hi, parts[k + 1].lo, true, true);
    if (parts.back().hi < window.hi) add(parts.back().hi, window.hi, true, false);
    return comps;
}

// Conjugation carries fixed points to fixed points: for each detected
// x in Fix(f), |g f g^{-1}(g(x)) - g(x)| must vanish numerically.
inline bool fix_conjugation_check(const Homeo& f, const Homeo& g, const Interval& window,
                                  int grid = 1024, const Tolerances& tol = {}) {
    const auto rf = fixed_set(f, window, grid, tol);
    auto residual_at = [&](double x) {
        const double gx = g(x);
        return std::abs(g(f(g.inverse_at(gx))) - gx);
    };
    for (const auto& part : rf.fixed_parts) {
        if (residual_at(part.lo) > tol.eps_fix * 10 + tol.tau_inv) return false;
        if (!part.degenerate() && residual_at(part.hi) > tol.eps_fix * 10 + tol.tau_inv) return false;
    }
    return true;
}

} // namespace linelab
