#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "linelab/interval.hpp"
#include "linelab/tolerances.hpp"

namespace linelab {

// Maximum ladder piece index resolved near stage-boundary accumulation points.
inline constexpr int kPieceCap = 10000;

// ---------------------------------------------------------------------------
// Reference chart for the equivariant interval diffeomorphisms.
//
// psi_[a,b](x) = 1/(b-x) - 1/(x-a) is a strictly increasing bijection
// (a,b) -> R whose singular part at each endpoint is -1/(x-a) resp. 1/(b-x),
// independent of the interval. The induced map psi_J^{-1} o psi_I therefore
// has one-sided derivative exactly 1 at both endpoints, and the chart
// factorization makes the cocycle identity hold by construction.
// ---------------------------------------------------------------------------

inline double chart_forward(const Interval& I, double x) {
    return 1.0 / (I.hi - x) - 1.0 / (x - I.lo);
}

// psi_I^{-1}(v) - I.lo. Solving 1/(L-u) - 1/u = v gives the quadratic
// v u^2 + (2 - vL) u - L = 0 with discriminant 4 + v^2 L^2; the admissible
// root is rewritten in two cancellation-free branches.
inline double chart_inverse_offset(double L, double v) {
    if (!std::isfinite(v)) return v < 0 ? 0.0 : L;
    const double r = std::sqrt(4.0 + v * v * L * L);
    if (v <= 0) return 2.0 * L / (r + 2.0 - v * L);
    return L - 2.0 * L / (r + 2.0 + v * L);
}

inline double chart_inverse(const Interval& I, double v) {
    return I.lo + chart_inverse_offset(I.hi - I.lo, v);
}

inline double chart_forward_deriv(const Interval& I, double x) {
    const double t1 = x - I.lo, t2 = I.hi - x;
    return 1.0 / (t2 * t2) + 1.0 / (t1 * t1);
}

// phi_{I,J} extended to a homeomorphism of the line by slope-1 translation
// outside I; the extension is C^1 because the endpoint derivatives are 1.
inline double yoccoz_eval(const Interval& I, const Interval& J, double x) {
    if (x <= I.lo) return J.lo + (x - I.lo);
    if (x >= I.hi) return J.hi + (x - I.hi);
    return chart_inverse(J, chart_forward(I, x));
}

inline double yoccoz_deriv(const Interval& I, const Interval& J, double x) {
    if (x <= I.lo || x >= I.hi) return 1.0;
    const double LJ = J.hi - J.lo;
    const double s1 = chart_inverse_offset(LJ, chart_forward(I, x));
    const double s2 = LJ - s1;
    const double t1 = x - I.lo, t2 = I.hi - x;
    if (std::min(t1, t2) < 1e-120 || std::min(s1, s2) < 1e-120) return 1.0;
    // dpsi_I(x)/dpsi_J(y), factored to avoid overflow near the endpoints
    return (s1 * s1) * (s2 * s2) * (t1 * t1 + t2 * t2) /
           ((t1 * t1) * (t2 * t2) * (s1 * s1 + s2 * s2));
}

// ---------------------------------------------------------------------------
// The compactly supported bump map: f(x) = x + exp(1/(x-1) - 1/(x+1)) on
// (-1,1), extended by the identity. The exponent equals -2/(1-x^2).
// ---------------------------------------------------------------------------

inline double expbump_displacement(double t) {
    const double w = 1.0 - t * t;
    if (w <= 0) return 0.0;
    return std::exp(-2.0 / w);
}

inline double expbump_unit_eval(double t) {
    if (t <= -1.0 || t >= 1.0) return t;
    return t + expbump_displacement(t);
}

inline double expbump_unit_deriv(double t) {
    if (t <= -1.0 || t >= 1.0) return 1.0;
    const double w = 1.0 - t * t;
    const double e = std::exp(-2.0 / w);
    if (e == 0.0) return 1.0;
    return 1.0 - 4.0 * t * e / (w * w);
}

// bracket-safeguarded Newton; the root of f(t) = y lies in [y - e^{-2}, y]
// since 0 < f(t) - t <= e^{-2} and f' >= 3/4 on (-1,1)
inline double expbump_unit_inverse(double y) {
    if (y <= -1.0 || y >= 1.0) return y;
    double lo = std::max(-1.0, y - 0.14), hi = y;
    double t = std::clamp(y - expbump_displacement(y), lo, hi);
    for (int it = 0; it < 60; ++it) {
        const double r = expbump_unit_eval(t) - y;
        if (std::abs(r) <= 1e-15) break;
        (r < 0 ? lo : hi) = t;
        const double d = expbump_unit_deriv(t);
        double next = t - r / d;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (next == t) break;
        t = next;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Stage geometry: breakpoint ladders accumulating at the next integer stage
// boundary, with consecutive-gap ratio tending to 1.
// ---------------------------------------------------------------------------

struct StageGeometry {
    int stage_k = 1; // ladders approach +-(stage_k + 1)

    double left(int n) const { return -(stage_k + 1.0) + 1.0 / (n + 1.0); }
    double right(int n) const { return (stage_k + 1.0) - 1.0 / (n + 1.0); }

    // gap ratio (left(n-1)-left(n)) / (left(n)-left(n+1)) = (n+2)/n
    double gap_ratio(int n) const {
        return (left(n - 1) - left(n)) / (left(n) - left(n + 1));
    }

    // checks monotonicity, limits and the gap-ratio -> 1 condition on n <= n_geom
    bool validate(int n_geom = 100, double ratio_slack = 0.05) const {
        if (stage_k < 1) return false;
        if (left(0) != -static_cast<double>(stage_k)) return false;
        if (right(0) != static_cast<double>(stage_k)) return false;
        for (int n = 1; n <= n_geom; ++n) {
            if (!(left(n) < left(n - 1)) || !(right(n) > right(n - 1))) return false;
            if (!(left(n) > -(stage_k + 1.0)) || !(right(n) < stage_k + 1.0)) return false;
        }
        const double r = gap_ratio(n_geom);
        return std::abs(r - 1.0) <= std::max(ratio_slack, 3.0 / n_geom);
    }
};

namespace detail {

// Piece index n with x in [c_{n+1}, c_n] (left) or [d_n, d_{n+1}] (right),
// recovered by inverting the reciprocal ladder; h is the distance to the
// stage boundary, in (0,1). The cap bounds conjugation-word depth, which
// costs O(n) per evaluation. Past the cap (index -1) the map truncates to
// the identity: the piece displacement there is under gap(cap) ~ 1e-8 and
// shrinks quadratically with depth.
inline int ladder_index_soft(double h, int cap) {
    const double q = 1.0 / h;
    if (q > cap + 2.0) return -1;
    int n = static_cast<int>(std::floor(q)) - 1;
    return n < 0 ? 0 : n;
}

// Core chart pieces are O(1) to evaluate regardless of index, but below
// gap ~ 1/q^2 the ladder breakpoints collapse in double precision; there the
// map is within ~1e-14 of the identity and is evaluated as such (index -1).
inline int core_ladder_index(double h) {
    const double q = 1.0 / h;
    if (q > 1e7) return -1;
    int n = static_cast<int>(std::floor(q)) - 1;
    return n < 0 ? 0 : n;
}

inline double stage_ladder_c(int j, int n) { return -j + 1.0 / (n + 1.0); }
inline double stage_ladder_d(int j, int n) { return j - 1.0 / (n + 1.0); }

// f_j restricted to [-j, j], j >= 2: chart pieces over the stage-j ladders.
inline double stage_core_eval(int j, double x, int /*cap*/) {
    const double lo = -(j - 1.0), hi = j - 1.0;
    if (x <= -j) return -static_cast<double>(j);
    if (x >= j) return j;
    if (x >= lo && x <= hi)
        return yoccoz_eval(Interval(lo, hi), Interval(stage_ladder_d(j, 0), stage_ladder_d(j, 1)), x);
    if (x < lo) {
        const int n = core_ladder_index(x + j);
        if (n < 0) return x;
        if (n == 0)
            return yoccoz_eval(Interval(stage_ladder_c(j, 1), stage_ladder_c(j, 0)), Interval(lo, hi), x);
        return yoccoz_eval(Interval(stage_ladder_c(j, n + 1), stage_ladder_c(j, n)),
                           Interval(stage_ladder_c(j, n), stage_ladder_c(j, n - 1)), x);
    }
    const int n = core_ladder_index(j - x);
    if (n < 0) return x;
    return yoccoz_eval(Interval(stage_ladder_d(j, n), stage_ladder_d(j, n + 1)),
                       Interval(stage_ladder_d(j, n + 1), stage_ladder_d(j, n + 2)), x);
}

inline double stage_core_inverse(int j, double y, int /*cap*/) {
    const double lo = -(j - 1.0), hi = j - 1.0;
    if (y <= -j) return -static_cast<double>(j);
    if (y >= j) return j;
    if (y > hi) {
        const int n = core_ladder_index(j - y);
        if (n < 0) return y;
        if (n == 0)
            return yoccoz_eval(Interval(stage_ladder_d(j, 0), stage_ladder_d(j, 1)), Interval(lo, hi), y);
        return yoccoz_eval(Interval(stage_ladder_d(j, n), stage_ladder_d(j, n + 1)),
                           Interval(stage_ladder_d(j, n - 1), stage_ladder_d(j, n)), y);
    }
    if (y >= lo)
        return yoccoz_eval(Interval(lo, hi), Interval(stage_ladder_c(j, 1), stage_ladder_c(j, 0)), y);
    const int n = core_ladder_index(y + j);
    if (n < 0) return y;
    return yoccoz_eval(Interval(stage_ladder_c(j, n + 1), stage_ladder_c(j, n)),
                       Interval(stage_ladder_c(j, n + 2), stage_ladder_c(j, n + 1)), y);
}

inline double stage_core_deriv(int j, double x, int /*cap*/) {
    const double lo = -(j - 1.0), hi = j - 1.0;
    if (x <= -j || x >= j) return 1.0;
    if (x >= lo && x <= hi)
        return yoccoz_deriv(Interval(lo, hi), Interval(stage_ladder_d(j, 0), stage_ladder_d(j, 1)), x);
    if (x < lo) {
        const int n = core_ladder_index(x + j);
        if (n < 0) return 1.0;
        if (n == 0)
            return yoccoz_deriv(Interval(stage_ladder_c(j, 1), stage_ladder_c(j, 0)), Interval(lo, hi), x);
        return yoccoz_deriv(Interval(stage_ladder_c(j, n + 1), stage_ladder_c(j, n)),
                            Interval(stage_ladder_c(j, n), stage_ladder_c(j, n - 1)), x);
    }
    const int n = core_ladder_index(j - x);
    if (n < 0) return 1.0;
    return yoccoz_deriv(Interval(stage_ladder_d(j, n), stage_ladder_d(j, n + 1)),
                        Interval(stage_ladder_d(j, n + 1), stage_ladder_d(j, n + 2)), x);
}

inline double expbump_core_eval(double x) { return expbump_unit_eval(x); }

// f_i truncated at depth K: identity outside [-K, K], the stage-k core on
// [-i, i], and the conjugation extension f_j^{+-(n+1)} f_i f_j^{-+(n+1)} on the
// stage-j annuli for i < j <= K.
inline double stage_eval(int i, int K, double x, int cap) {
    if (!std::isfinite(x)) return x;
    if (x <= -K || x >= K) return x;
    const double ax = std::abs(x);
    if (ax <= i) return i == 1 ? expbump_core_eval(x) : stage_core_eval(i, x, cap);
    const int j = static_cast<int>(std::ceil(ax));
    if (ax == static_cast<double>(j)) return x; // stage boundaries are fixed
    const double inner_hi = j - 1.0;
    double y = x;
    if (x > 0) {
        const int n = ladder_index_soft(j - x, cap);
        if (n < 0) return x;
        for (int s = 0; s <= n; ++s) y = stage_core_inverse(j, y, cap);
        y = std::clamp(y, -inner_hi, inner_hi);
        y = stage_eval(i, K, y, cap);
        for (int s = 0; s <= n; ++s) y = stage_core_eval(j, y, cap);
    } else {
        const int n = ladder_index_soft(x + j, cap);
        if (n < 0) return x;
        for (int s = 0; s <= n; ++s) y = stage_core_eval(j, y, cap);
        y = std::clamp(y, -inner_hi, inner_hi);
        y = stage_eval(i, K, y, cap);
        for (int s = 0; s <= n; ++s) y = stage_core_inverse(j, y, cap);
    }
    return y;
}

inline double stage_inverse(int i, int K, double y, int cap) {
    if (!std::isfinite(y)) return y;
    if (y <= -K || y >= K) return y;
    const double ay = std::abs(y);
    if (ay <= i) {
        if (i == 1) return expbump_unit_inverse(y);
        return stage_core_inverse(i, y, cap);
    }
    const int j = static_cast<int>(std::ceil(ay));
    if (ay == static_cast<double>(j)) return y;
    const double inner_hi = j - 1.0;
    double z = y;
    if (y > 0) {
        const int n = ladder_index_soft(j - y, cap);
        if (n < 0) return y;
        for (int s = 0; s <= n; ++s) z = stage_core_inverse(j, z, cap);
        z = std::clamp(z, -inner_hi, inner_hi);
        z = stage_inverse(i, K, z, cap);
        for (int s = 0; s <= n; ++s) z = stage_core_eval(j, z, cap);
    } else {
        const int n = ladder_index_soft(y + j, cap);
        if (n < 0) return y;
        for (int s = 0; s <= n; ++s) z = stage_core_eval(j, z, cap);
        z = std::clamp(z, -inner_hi, inner_hi);
        z = stage_inverse(i, K, z, cap);
        for (int s = 0; s <= n; ++s) z = stage_core_inverse(j, z, cap);
    }
    return z;
}

// Derivative resolution guard. Values truncate to the identity past the cap
// with error under gap(cap) ~ 1e-8, but the chain-rule derivative genuinely
// oscillates by ~4/n across deep pieces, so between the cap and the index
// where 4/n falls below tau_deriv it cannot be reported to tolerance.
inline void stage_check_deriv_depth(int i, int K, double x, int cap) {
    if (!std::isfinite(x)) return;
    const double ax = std::abs(x);
    if (ax <= i || ax >= K) return;
    const int j = static_cast<int>(std::ceil(ax));
    if (ax == static_cast<double>(j)) return;
    const double q = 1.0 / (j - ax);
    if (q > cap + 2.0 && q < 4e5)
        throw Error(ErrorCode::PieceDepthExceeded,
                    "derivative unresolvable within tolerance near an accumulation point");
}

struct ValDeriv {
    double val;
    double deriv;
};

inline ValDeriv stage_eval_with_deriv(int i, int K, double x, int cap) {
    if (!std::isfinite(x)) return {x, 1.0};
    if (x <= -K || x >= K) return {x, 1.0};
    const double ax = std::abs(x);
    if (ax <= i) {
        if (i == 1) return {expbump_core_eval(x), expbump_unit_deriv(x)};
        return {stage_core_eval(i, x, cap), stage_core_deriv(i, x, cap)};
    }
    const int j = static_cast<int>(std::ceil(ax));
    if (ax == static_cast<double>(j)) return {x, 1.0};
    if (ladder_index_soft(j - ax, cap) < 0) return {x, 1.0};
    const double inner_hi = j - 1.0;
    double y = x, d = 1.0;
    if (x > 0) {
        const int n = ladder_index_soft(j - x, cap);
        for (int s = 0; s <= n; ++s) {
            y = stage_core_inverse(j, y, cap);
            d /= stage_core_deriv(j, y, cap);
        }
        y = std::clamp(y, -inner_hi, inner_hi);
        const ValDeriv in = stage_eval_with_deriv(i, K, y, cap);
        y = in.val;
        d *= in.deriv;
        for (int s = 0; s <= n; ++s) {
            d *= stage_core_deriv(j, y, cap);
            y = stage_core_eval(j, y, cap);
        }
    } else {
        const int n = ladder_index_soft(x + j, cap);
        for (int s = 0; s <= n; ++s) {
            d *= stage_core_deriv(j, y, cap);
            y = stage_core_eval(j, y, cap);
        }
        y = std::clamp(y, -inner_hi, inner_hi);
        const ValDeriv in = stage_eval_with_deriv(i, K, y, cap);
        y = in.val;
        d *= in.deriv;
        for (int s = 0; s <= n; ++s) {
            y = stage_core_inverse(j, y, cap);
            d /= stage_core_deriv(j, y, cap);
        }
    }
    return {y, d};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Expression trees for orientation-preserving homeomorphisms of the line.
// Trees are immutable after construction; evaluation is pure.
// ---------------------------------------------------------------------------

enum class NodeKind {
    Identity,
    Affine,
    Translation,
    ExpBump,
    Piecewise,
    Compose,
    Inverse,
    Yoccoz,
    Stage,
};

class Homeo;

struct HomeoNode {
    NodeKind kind = NodeKind::Identity;
    double slope = 1.0;
    double offset = 0.0;
    Interval iv{-1.0, 1.0};  // expbump support / yoccoz source / piecewise window
    Interval iv2{-1.0, 1.0}; // yoccoz target
    int stage = 1;
    int depth = 1;
    std::vector<Homeo> children;   // compose list (outermost first) / inverse child / piece maps
    std::vector<Interval> domains; // piecewise piece domains, ordered
};

class Homeo {
public:
    Homeo() : node_(identity_node()) {}

    static Homeo identity() { return Homeo(); }

    static Homeo affine(double slope, double offset) {
        if (!(slope > 0) || !std::isfinite(slope) || !std::isfinite(offset))
            throw Error(ErrorCode::BadArgument, "affine map requires finite slope > 0");
        auto n = std::make_shared<HomeoNode>();
        n->kind = NodeKind::Affine;
        n->slope = slope;
        n->offset = offset;
        return Homeo(std::move(n));
    }

    static Homeo translation(double c) {
        if (!std::isfinite(c)) throw Error(ErrorCode::BadArgument, "translation offset must be finite");
        auto n = std::make_shared<HomeoNode>();
        n->kind = NodeKind::Translation;
        n->offset = c;
        return Homeo(std::move(n));
    }

    static Homeo exp_bump(const Interval& support) {
        if (!support.finite()) throw Error(ErrorCode::DegenerateInterval, "exp_bump needs a finite support");
        auto n = std::make_shared<HomeoNode>();
        n->kind = NodeKind::ExpBump;
        n->iv = support;
        return Homeo(std::move(n));
    }

    // Pieces must tile the window in order and agree at breakpoints within
    // tau_cont; the map is the identity outside the window, so the outermost
    // piece values must meet the window edges.
    static Homeo piecewise(const Interval& window,
                           std::vector<std::pair<Interval, Homeo>> pieces,
                           double tau_cont = Tolerances{}.tau_cont) {
        if (!window.finite()) throw Error(ErrorCode::DegenerateInterval, "piecewise window must be finite");
        if (pieces.empty()) throw Error(ErrorCode::BadArgument, "piecewise needs at least one piece");
        auto n = std::make_shared<HomeoNode>();
        n->kind = NodeKind::Piecewise;
        n->iv = window;
        double cursor = window.lo;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const Interval& dom = pieces[i].first;
            if (std::abs(dom.lo - cursor) > tau_cont)
                throw Error(ErrorCode::IllFormed, "piecewise pieces must tile the window");
            cursor = dom.hi;
            n->domains.push_back(dom);
            n->children.push_back(pieces[i].second);
        }
        if (std::abs(cursor - window.hi) > tau_cont)
            throw Error(ErrorCode::IllFormed, "piecewise pieces must cover the window");
        // value continuity at interior breakpoints and identity at the edges
        for (std::size_t i = 0; i + 1 < n->children.size(); ++i) {
            const double b = n->domains[i].hi;
            if (std::abs(n->children[i](b) - n->children[i + 1](b)) > tau_cont)
                throw Error(ErrorCode::IllFormed, "piecewise value discontinuity at breakpoint");
        }
        if (std::abs(n->children.front()(window.lo) - window.lo) > tau_cont ||
            std::abs(n->children.back()(window.hi) - window.hi) > tau_cont)
            throw Error(ErrorCode::IllFormed, "piecewise must fix the window edges");
        return Homeo(std::move(n));
    }

    // compose({g, f}) evaluates g(f(x)): the list is outermost-first.
    static Homeo compose(std::vector<Homeo> maps) {
        if (maps.empty()) throw Error(ErrorCode::BadArgument, "compose needs at least one map");
        if (maps.size() == 1) return maps.front();
        auto n = std::make_shared<HomeoNode>();
        n->kind = NodeKind::Compose;
        n->children = std::move(maps);
        return Homeo(std::move(n));
    }

    static Homeo yoccoz(const Interval& from, const Interval& to) {
        if (!from.finite() || !to.finite())
            throw Error(ErrorCode::DegenerateInterval, "yoccoz chart maps need finite intervals");
        auto n = std::make_shared<HomeoNode>();
        n->kind = NodeKind::Yoccoz;
        n->iv = from;
        n->iv2 = to;
        return Homeo(std::move(n));
    }

    static Homeo stage_map(int stage, int depth) {
        if (stage < 1 || depth < stage)
            throw Error(ErrorCode::BadArgument, "stage_map requires 1 <= stage <= depth");
        auto n = std::make_shared<HomeoNode>();
        n->kind = NodeKind::Stage;
        n->stage = stage;
        n->depth = depth;
        return Homeo(std::move(n));
    }

    Homeo inverse() const {
        if (node_->kind == NodeKind::Inverse) return node_->children.front();
        auto n = std::make_shared<HomeoNode>();
        n->kind = NodeKind::Inverse;
        n->children.push_back(*this);
        return Homeo(std::move(n));
    }

    double operator()(double x) const { return eval(*node_, x); }
    double derivative(double x) const {
        const double d = deriv(*node_, x);
        if (!std::isfinite(d) || d <= 0)
            throw Error(ErrorCode::NonFinite, "derivative not finite positive at x=" + std::to_string(x));
        return d;
    }
    double inverse_at(double y) const { return inv_eval(*node_, y); }

    // f^k(x) for any integer k
    double power_at(int k, double x) const {
        double y = x;
        if (k >= 0)
            for (int s = 0; s < k; ++s) y = (*this)(y);
        else
            for (int s = 0; s < -k; ++s) y = inverse_at(y);
        return y;
    }

    NodeKind kind() const { return node_->kind; }
    const HomeoNode& node() const { return *node_; }

private:
    explicit Homeo(std::shared_ptr<const HomeoNode> n) : node_(std::move(n)) {}

    static std::shared_ptr<const HomeoNode> identity_node() {
        static const std::shared_ptr<const HomeoNode> id = std::make_shared<HomeoNode>();
        return id;
    }

    static double eval(const HomeoNode& n, double x) {
        switch (n.kind) {
        case NodeKind::Identity: return x;
        case NodeKind::Affine: {
            const double y = n.slope * x + n.offset;
            if (!std::isfinite(y) && std::isfinite(x))
                throw Error(ErrorCode::NonFinite, "affine evaluation overflow");
            return y;
        }
        case NodeKind::Translation: return x + n.offset;
        case NodeKind::ExpBump: {
            if (x <= n.iv.lo || x >= n.iv.hi) return x;
            const double half = 0.5 * (n.iv.hi - n.iv.lo);
            const double mid = 0.5 * (n.iv.lo + n.iv.hi);
            const double t = (x - mid) / half;
            return mid + half * expbump_unit_eval(t);
        }
        case NodeKind::Piecewise: {
            if (x <= n.iv.lo || x >= n.iv.hi) return x;
            return n.children[piece_index(n, x)](x);
        }
        case NodeKind::Compose: {
            double y = x;
            for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) y = (*it)(y);
            return y;
        }
        case NodeKind::Inverse: return n.children.front().inverse_at(x);
        case NodeKind::Yoccoz: return yoccoz_eval(n.iv, n.iv2, x);
        case NodeKind::Stage: return detail::stage_eval(n.stage, n.depth, x, kPieceCap);
        }
        return x;
    }

    static double inv_eval(const HomeoNode& n, double y) {
        switch (n.kind) {
        case NodeKind::Identity: return y;
        case NodeKind::Affine: return (y - n.offset) / n.slope;
        case NodeKind::Translation: return y - n.offset;
        case NodeKind::ExpBump: {
            if (y <= n.iv.lo || y >= n.iv.hi) return y;
            const double half = 0.5 * (n.iv.hi - n.iv.lo);
            const double mid = 0.5 * (n.iv.lo + n.iv.hi);
            return mid + half * expbump_unit_inverse((y - mid) / half);
        }
        case NodeKind::Piecewise: {
            if (y <= n.iv.lo || y >= n.iv.hi) return y;
            // pieces map the window onto itself in order; locate by image
            std::size_t lo = 0, hi = n.children.size() - 1;
            while (lo < hi) {
                const std::size_t mid = (lo + hi) / 2;
                if (n.children[mid](n.domains[mid].hi) >= y)
                    hi = mid;
                else
                    lo = mid + 1;
            }
            return n.children[lo].inverse_at(y);
        }
        case NodeKind::Compose: {
            double x = y;
            for (const auto& child : n.children) x = child.inverse_at(x);
            return x;
        }
        case NodeKind::Inverse: return n.children.front()(y);
        case NodeKind::Yoccoz: return yoccoz_eval(n.iv2, n.iv, y);
        case NodeKind::Stage: return detail::stage_inverse(n.stage, n.depth, y, kPieceCap);
        }
        return y;
    }

    static double deriv(const HomeoNode& n, double x) {
        switch (n.kind) {
        case NodeKind::Identity: return 1.0;
        case NodeKind::Affine: return n.slope;
        case NodeKind::Translation: return 1.0;
        case NodeKind::ExpBump: {
            if (x <= n.iv.lo || x >= n.iv.hi) return 1.0;
            const double half = 0.5 * (n.iv.hi - n.iv.lo);
            const double mid = 0.5 * (n.iv.lo + n.iv.hi);
            return expbump_unit_deriv((x - mid) / half);
        }
        case NodeKind::Piecewise: {
            if (x <= n.iv.lo || x >= n.iv.hi) return 1.0;
            return n.children[piece_index(n, x)].derivative(x);
        }
        case NodeKind::Compose: {
            double y = x, d = 1.0;
            for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
                d *= it->derivative(y);
                y = (*it)(y);
            }
            return d;
        }
        case NodeKind::Inverse: {
            const double xin = n.children.front().inverse_at(x);
            return 1.0 / n.children.front().derivative(xin);
        }
        case NodeKind::Yoccoz: return yoccoz_deriv(n.iv, n.iv2, x);
        case NodeKind::Stage:
            detail::stage_check_deriv_depth(n.stage, n.depth, x, kPieceCap);
            return detail::stage_eval_with_deriv(n.stage, n.depth, x, kPieceCap).deriv;
        }
        return 1.0;
    }

    static std::size_t piece_index(const HomeoNode& n, double x) {
        std::size_t lo = 0, hi = n.domains.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (n.domains[mid].hi >= x)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

    std::shared_ptr<const HomeoNode> node_;
};

// ---------------------------------------------------------------------------
// Sampled-grid validation and finite-difference helpers.
// ---------------------------------------------------------------------------

inline bool check_strictly_increasing(const Homeo& f, const Interval& window, int samples = 256) {
    double prev = f(window.lo);
    for (int i = 1; i <= samples; ++i) {
        const double x = window.lo + window.length() * i / samples;
        const double y = f(x);
        if (!(y > prev)) return false;
        prev = y;
    }
    return true;
}

inline double max_inverse_residual(const Homeo& f, const Interval& window, int samples = 1000) {
    double worst = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double y = window.lo + window.length() * i / samples;
        worst = std::max(worst, std::abs(f(f.inverse_at(y)) - y));
    }
    return worst;
}

// central difference with one Richardson step
inline double fd_derivative(const Homeo& f, double x, double h = Tolerances{}.h_fd) {
    const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double d2 = (f(x + h / 2) - f(x - h / 2)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

// one-sided difference quotient; dir = +1 from the right, -1 from the left
inline double fd_one_sided(const Homeo& f, double x, int dir, double h) {
    return dir > 0 ? (f(x + h) - f(x)) / h : (f(x) - f(x - h)) / h;
}

} // namespace linelab
