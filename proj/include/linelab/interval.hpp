#pragma once

#include <cmath>
#include <limits>
#include <ostream>

#include "linelab/tolerances.hpp"

namespace linelab {

// Closed interval of the extended real line. Endpoint infinities are explicit
// and never enter arithmetic: length()/midpoint() require finiteness.
struct Interval {
    double lo = -1.0;
    double hi = 1.0;

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (std::isnan(lo) || std::isnan(hi) || !(lo < hi))
            throw Error(ErrorCode::DegenerateInterval, "interval requires lo < hi");
    }

    static Interval whole_line() {
        return Interval(-std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity());
    }

    bool lo_finite() const { return std::isfinite(lo); }
    bool hi_finite() const { return std::isfinite(hi); }
    bool finite() const { return lo_finite() && hi_finite(); }

    double length() const {
        if (!finite())
            throw Error(ErrorCode::BadArgument, "length of unbounded interval");
        return hi - lo;
    }

    double midpoint() const {
        if (!finite())
            throw Error(ErrorCode::BadArgument, "midpoint of unbounded interval");
        return 0.5 * (lo + hi);
    }

    bool contains(double x) const { return x >= lo && x <= hi; }
    bool contains_strict(double x) const { return x > lo && x < hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool contains_in_interior(const Interval& o) const { return lo < o.lo && o.hi < hi; }

    double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
};

inline bool same_interval(const Interval& a, const Interval& b, double tol) {
    return std::abs(a.lo - b.lo) <= tol && std::abs(a.hi - b.hi) <= tol;
}

inline std::ostream& operator<<(std::ostream& os, const Interval& iv) {
    return os << '[' << iv.lo << ", " << iv.hi << ']';
}

} // namespace linelab
