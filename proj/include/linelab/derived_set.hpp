#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "linelab/rational.hpp"
#include "linelab/tolerances.hpp"

namespace linelab {

// A convergent-sequence descriptor: the points limit + scale/(n+1), n >= n0.
// depth >= 2 nests a canonical child family inside each gap, so "sequences of
// sequences" have a finite exact representation: the children of the spine
// point q_n occupy the quarter-gap toward the limit, with scale
// -scale/(4(n+1)(n+2)). The descriptor's member set excludes the limit
// itself; closedness requires the limit to be listed as an explicit point.
struct SeqDescriptor {
    Rational limit;
    Rational scale; // nonzero; sign gives the approach direction
    int n0 = 0;
    int depth = 1;

    Rational spine(int n) const { return limit + scale / Rational(n + 1); }
    Rational child_scale(int n) const {
        return -scale / Rational(4LL * (n + 1) * (n + 2));
    }
    SeqDescriptor child(int n) const { return SeqDescriptor{spine(n), child_scale(n), 0, depth - 1}; }

    // closed hull of the member points together with the limit
    std::pair<Rational, Rational> span() const {
        const Rational e = spine(n0);
        return scale.sign() > 0 ? std::make_pair(limit, e) : std::make_pair(e, limit);
    }
};

// Finite exact representation of a countable compact set.
struct DerivedSet {
    std::vector<Rational> points;
    std::vector<SeqDescriptor> seqs;

    bool empty() const { return points.empty() && seqs.empty(); }
};

struct DerivedSetSequence {
    std::vector<DerivedSet> levels; // levels[0] is the base set
};

namespace detail {

inline bool spans_overlap(const std::pair<Rational, Rational>& a, const std::pair<Rational, Rational>& b) {
    return !(a.second < b.first || b.second < a.first);
}

} // namespace detail

inline void validate_derived_set(const DerivedSet& s) {
    for (const auto& d : s.seqs) {
        if (d.scale.sign() == 0) throw Error(ErrorCode::IllFormed, "descriptor scale must be nonzero");
        if (d.depth < 1 || d.depth > 8) throw Error(ErrorCode::IllFormed, "descriptor depth out of range");
        if (d.n0 < 0) throw Error(ErrorCode::IllFormed, "descriptor n0 must be >= 0");
        bool limit_present = false;
        for (const auto& p : s.points) limit_present |= (p == d.limit);
        if (!limit_present)
            throw Error(ErrorCode::IllFormed, "descriptor limit must be listed as an explicit point");
    }
    for (std::size_t i = 0; i < s.seqs.size(); ++i)
        for (std::size_t j = i + 1; j < s.seqs.size(); ++j)
            if (detail::spans_overlap(s.seqs[i].span(), s.seqs[j].span()))
                throw Error(ErrorCode::IllFormed, "descriptor spans must be pairwise disjoint");
    for (const auto& p : s.points)
        for (const auto& d : s.seqs) {
            const auto sp = d.span();
            if (p == d.limit) continue;
            if (sp.first < p && p < sp.second)
                throw Error(ErrorCode::IllFormed, "explicit point inside a descriptor span");
        }
    for (std::size_t i = 0; i < s.points.size(); ++i)
        for (std::size_t j = i + 1; j < s.points.size(); ++j)
            if (s.points[i] == s.points[j]) throw Error(ErrorCode::IllFormed, "duplicate explicit point");
}

// One isolated-point-removal step, computed exactly on the representation:
// descriptor leaves are isolated and vanish (depth decreases); an explicit
// point survives iff some descriptor accumulates at it.
inline DerivedSet derived_step(const DerivedSet& s) {
    DerivedSet out;
    for (const auto& p : s.points) {
        bool accumulated = false;
        for (const auto& d : s.seqs) accumulated |= (d.limit == p);
        if (accumulated) out.points.push_back(p);
    }
    for (const auto& d : s.seqs)
        if (d.depth >= 2) out.seqs.push_back(SeqDescriptor{d.limit, d.scale, d.n0, d.depth - 1});
    return out;
}

inline DerivedSetSequence derive_until_empty(DerivedSet base, int rank_cap = Budget{}.rank_cap) {
    validate_derived_set(base);
    DerivedSetSequence seq;
    seq.levels.push_back(std::move(base));
    while (!seq.levels.back().empty()) {
        if (static_cast<int>(seq.levels.size()) > rank_cap)
            throw Error(ErrorCode::RankCapExceeded, "derived-set iteration exceeded rank cap");
        seq.levels.push_back(derived_step(seq.levels.back()));
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Exact membership and punctured-ball counting. These drive the independent
// isolation oracle in the test suite: a member x is isolated iff some dyadic
// punctured ball around it contains no other member.
// ---------------------------------------------------------------------------

namespace detail {

inline bool desc_contains(const SeqDescriptor& d, const Rational& x);

// n with q_{n+1} < x < q_n for scale > 0 (mirrored otherwise), if any
inline std::optional<int> gap_index(const SeqDescriptor& d, const Rational& x) {
    const Rational diff = x - d.limit;
    if (diff.sign() != d.scale.sign() || diff.sign() == 0) return std::nullopt;
    const Rational t = d.scale / diff; // q_n vs x: n+1 < t inside
    // n = ceil(t) - 2; compute ceil exactly
    const std::int64_t fl = [&] {
        std::int64_t a = t.num(), b = t.den();
        std::int64_t q = a / b, r = a % b;
        if (r != 0 && ((r < 0) != (b < 0))) --q;
        return q;
    }();
    const bool integral = (t.den() == 1);
    const std::int64_t ceil_t = integral ? fl : fl + 1;
    const std::int64_t n = ceil_t - 2;
    if (n < d.n0 || n > (1LL << 40)) return std::nullopt;
    return static_cast<int>(n);
}

inline bool desc_contains(const SeqDescriptor& d, const Rational& x) {
    const Rational diff = x - d.limit;
    if (diff.sign() == 0) return false;
    if (diff.sign() != d.scale.sign()) return false;
    const Rational t = d.scale / diff; // spine hit iff t is an integer >= n0+1
    if (t.den() == 1 && t.num() >= d.n0 + 1) return true;
    if (d.depth >= 2) {
        if (auto n = gap_index(d, x)) {
            const SeqDescriptor c = d.child(*n);
            const auto sp = c.span();
            if (!(x < sp.first) && !(sp.second < x)) return desc_contains(c, x);
        }
    }
    return false;
}

inline long desc_count_in(const SeqDescriptor& d, const Rational& lo, const Rational& hi, long cap) {
    if (!(lo < hi)) return 0;
    // interval containing the limit contains a whole tail
    if (lo < d.limit && d.limit < hi) return cap;
    long count = 0;
    // spine points q_n in (lo, hi): bounded index range since the limit is outside
    const Rational from = d.scale.sign() > 0 ? lo : hi; // furthest-from-limit side is n small
    (void)from;
    for (int n = d.n0; n <= d.n0 + 4096 && count < cap; ++n) {
        const Rational q = d.spine(n);
        const bool past = d.scale.sign() > 0 ? (q < lo || q == lo) : (hi < q || q == hi);
        if (past) break; // q_n moves monotonically toward the limit, which is outside
        if (lo < q && q < hi) ++count;
        if (d.depth >= 2) {
            const SeqDescriptor c = d.child(n);
            const auto sp = c.span();
            if (!(hi < sp.first || sp.second < lo)) count += desc_count_in(c, lo, hi, cap - count);
        }
        // stop once the whole remaining tail (spine and clusters) is past the window
        const auto rest = SeqDescriptor{d.limit, d.scale, n + 1, d.depth}.span();
        if (hi < rest.first || rest.second < lo) break;
    }
    return std::min(count, cap);
}

} // namespace detail

inline bool contains_point(const DerivedSet& s, const Rational& x) {
    for (const auto& p : s.points)
        if (p == x) return true;
    for (const auto& d : s.seqs)
        if (detail::desc_contains(d, x)) return true;
    return false;
}

inline long count_in_open_interval(const DerivedSet& s, const Rational& lo, const Rational& hi, long cap) {
    long count = 0;
    for (const auto& p : s.points)
        if (lo < p && p < hi && ++count >= cap) return cap;
    for (const auto& d : s.seqs) {
        count += detail::desc_count_in(d, lo, hi, cap - count);
        if (count >= cap) return cap;
    }
    return count;
}

// Independent isolation probe: x (a member) is isolated iff some dyadic
// punctured ball around it is empty.
inline bool is_isolated_by_counting(const DerivedSet& s, const Rational& x, int max_halvings = 48) {
    Rational eps(1, 2);
    for (int j = 0; j < max_halvings; ++j) {
        const long c = count_in_open_interval(s, x - eps, x + eps, 4);
        const long self = contains_point(s, x) ? 1 : 0;
        if (c - self <= 0) return true;
        eps = eps / Rational(2);
    }
    return false;
}

} // namespace linelab
