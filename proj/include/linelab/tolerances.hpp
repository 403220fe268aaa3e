#pragma once

#include <stdexcept>
#include <string>

namespace linelab {

// Numeric tolerances shared across the library. Defaults are the documented
// desk-scale values; analyses may override per run.
struct Tolerances {
    double tau_inv = 1e-10;   // inverse round-trip residual
    double tau_cont = 1e-9;   // piecewise value continuity at breakpoints
    double tau_deriv = 1e-5;  // one-sided derivative mismatch (adaptive use)
    double eps_fix = 1e-9;    // |f(x)-x| below this counts as numerically fixed
    double delta_root = 1e-11; // bisection width for isolated fixed points
    double tau_meas = 1e-6;   // measure invariance residual
    double eps_sep = 5e-2;    // minimal atom separation for orbit combs
    double h_fd = 1e-6;       // base step for finite differences
};

struct Budget {
    int word_length = 6;
    int levels = 8;
    long iterates = 10000;
    int samples = 1000;
    int grid = 2048;         // default grid for fixed-set scans
    int piece_cap = 10000;   // max ladder piece index near accumulation points
    int pusher_words = 4096;      // words examined per tower level
    int pusher_candidates = 128;  // words per level that get a full fixed-set scan
    int orbit_cap = 4096;    // max orbit points enumerated in a window
    int rank_cap = 32;       // max derived-set iterations
    double wall_ms = 600000; // hard safety cap on search loops
};

enum class ErrorCode {
    NonFinite,
    PieceDepthExceeded,
    DegenerateInterval,
    NonDifferentiablePoint,
    HasFixedPoints,
    WindowEscape,
    NotFree,
    DegenerateTau,
    GapsNotInvariant,
    OrbitAccumulates,
    RankCapExceeded,
    IllFormed,
    BadArgument,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::PieceDepthExceeded: return "PieceDepthExceeded";
    case ErrorCode::DegenerateInterval: return "DegenerateInterval";
    case ErrorCode::NonDifferentiablePoint: return "NonDifferentiablePoint";
    case ErrorCode::HasFixedPoints: return "HasFixedPoints";
    case ErrorCode::WindowEscape: return "WindowEscape";
    case ErrorCode::NotFree: return "NotFree";
    case ErrorCode::DegenerateTau: return "DegenerateTau";
    case ErrorCode::GapsNotInvariant: return "GapsNotInvariant";
    case ErrorCode::OrbitAccumulates: return "OrbitAccumulates";
    case ErrorCode::RankCapExceeded: return "RankCapExceeded";
    case ErrorCode::IllFormed: return "IllFormed";
    case ErrorCode::BadArgument: return "BadArgument";
    }
    return "Unknown";
}

} // namespace linelab
