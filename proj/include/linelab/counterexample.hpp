#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "linelab/homeo.hpp"
#include "linelab/parallel.hpp"
#include "linelab/serialize.hpp"
#include "linelab/tower.hpp"

namespace linelab {

struct YoccozMap {
    Interval from{-1.0, 1.0};
    Interval to{-1.0, 1.0};
    Homeo map;
};

inline YoccozMap yoccoz_map(const Interval& from, const Interval& to) {
    if (!from.finite() || !to.finite())
        throw Error(ErrorCode::DegenerateInterval, "yoccoz map needs finite nondegenerate intervals");
    return YoccozMap{from, to, Homeo::yoccoz(from, to)};
}

// ---------------------------------------------------------------------------
// Staged commuting family, truncated at depth K. Stage 1 is the bump map on
// [-1,1]; stage k+1 is assembled from chart pieces over the breakpoint
// ladders; earlier stages extend across each new annulus by the conjugation
// rule recorded below.
// ---------------------------------------------------------------------------

struct ExtensionRecord {
    int map_stage = 1;     // the map being extended
    int through_stage = 2; // the stage whose annulus it is extended across
    std::string rule;      // the conjugation word pattern, for the record
};

struct CounterexampleBuild {
    int depth = 2;
    std::vector<std::string> names; // f1..fK
    std::vector<Homeo> maps;
    std::vector<StageGeometry> geometry; // ladders for f_2..f_K
    std::vector<ExtensionRecord> extensions;
};

inline CounterexampleBuild build_counterexample(int K) {
    if (K < 2) throw Error(ErrorCode::BadArgument, "counterexample needs at least 2 stages");
    CounterexampleBuild b;
    b.depth = K;
    for (int k = 1; k < K; ++k) {
        StageGeometry g{k};
        if (!g.validate())
            throw Error(ErrorCode::IllFormed, "stage geometry fails the gap-ratio condition");
        b.geometry.push_back(g);
    }
    for (int i = 1; i <= K; ++i) {
        b.names.push_back("f" + std::to_string(i));
        b.maps.push_back(Homeo::stage_map(i, K));
        for (int j = i + 1; j <= K; ++j)
            b.extensions.push_back(ExtensionRecord{
                i, j,
                "f" + std::to_string(j) + "^{-(n+1)} f" + std::to_string(i) + " f" + std::to_string(j) +
                    "^{n+1} on left pieces; mirrored exponents on right pieces"});
    }
    return b;
}

inline Json build_to_json(const CounterexampleBuild& b) {
    Json stages = Json::array();
    for (std::size_t i = 0; i < b.maps.size(); ++i)
        stages.push_back(Json{{"name", b.names[i]}, {"map", to_json(b.maps[i])}});
    Json geom = Json::array();
    for (const auto& g : b.geometry) geom.push_back(Json{{"stage_k", g.stage_k}});
    Json ext = Json::array();
    for (const auto& e : b.extensions)
        ext.push_back(Json{{"map_stage", e.map_stage}, {"through_stage", e.through_stage}, {"rule", e.rule}});
    return Json{{"schema", 1},
                {"kind", "counterexample-build"},
                {"depth", b.depth},
                {"stages", stages},
                {"geometry", geom},
                {"extensions", ext}};
}

inline CounterexampleBuild build_from_json(const Json& j) {
    CounterexampleBuild b;
    b.depth = j.at("depth").get<int>();
    for (const auto& s : j.at("stages")) {
        b.names.push_back(s.at("name").get<std::string>());
        b.maps.push_back(homeo_from_json(s.at("map")));
    }
    for (const auto& g : j.at("geometry")) b.geometry.push_back(StageGeometry{g.at("stage_k").get<int>()});
    if (j.contains("extensions"))
        for (const auto& e : j.at("extensions"))
            b.extensions.push_back(ExtensionRecord{e.at("map_stage").get<int>(),
                                                   e.at("through_stage").get<int>(),
                                                   e.at("rule").get<std::string>()});
    return b;
}

// ---------------------------------------------------------------------------
// Verification battery.
// ---------------------------------------------------------------------------

struct CheckRow {
    std::string check;
    std::string location;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct VerifyOptions {
    int samples = 1000;
    int n_check = 40;
    double comm_tol = 1e-8;
    double endpoint_tol = 1e-6;
    double junction_tol = 1e-5;
    int mass_pump_iterates = 50;
    int grid = 2048;
    Tolerances tol;
};

struct VerifyReport {
    std::vector<CheckRow> rows;
    bool pass = true;
    double commutativity_max = 0.0;
    double junction_max = 0.0;
    double endpoint_max = 0.0;
    TowerReport tower;

    void add(CheckRow row) {
        pass &= row.pass;
        rows.push_back(std::move(row));
    }
};

namespace detail {

inline double one_sided_mismatch(const Homeo& f, double x, const double* steps, int nsteps) {
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < nsteps; ++s) {
        const double h = steps[s];
        const double right = (f(x + h) - f(x)) / h;
        const double left = (f(x) - f(x - h)) / h;
        best = std::min(best, std::abs(right - left));
    }
    return best;
}

inline double one_sided_quotient_error(const Homeo& f, double x, int dir, double target,
                                       const double* steps, int nsteps) {
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < nsteps; ++s) {
        const double h = steps[s];
        const double q = dir > 0 ? (f(x + h) - f(x)) / h : (f(x) - f(x - h)) / h;
        best = std::min(best, std::abs(q - target));
    }
    return best;
}

} // namespace detail

inline VerifyReport verify_counterexample(const CounterexampleBuild& b, const VerifyOptions& opt = {}) {
    VerifyReport rep;
    const int K = b.depth;
    const std::size_t nmaps = b.maps.size();

    // (i) commutativity of every pair on [-K+1, K-1]
    {
        const double lo = -(K - 1.0), hi = K - 1.0;
        for (std::size_t i = 0; i < nmaps; ++i) {
            for (std::size_t j = i + 1; j < nmaps; ++j) {
                std::vector<double> res(static_cast<std::size_t>(opt.samples) + 1);
                parallel_for(res.size(), [&](std::size_t s) {
                    const double x = lo + (hi - lo) * static_cast<double>(s) / opt.samples;
                    const double a = b.maps[i](b.maps[j](x));
                    const double c = b.maps[j](b.maps[i](x));
                    res[s] = std::abs(a - c);
                });
                double worst = 0.0;
                for (double r : res) worst = std::max(worst, r);
                rep.commutativity_max = std::max(rep.commutativity_max, worst);
                rep.add(CheckRow{"commutativity", b.names[i] + "," + b.names[j], worst, opt.comm_tol,
                                 worst <= opt.comm_tol});
            }
        }
    }

    // (ii) one-sided C^1 agreement at the ladder junctions of every stage
    {
        const double steps[3] = {1e-7, 5e-8, 2.5e-8};
        for (int s = 2; s <= K; ++s) {
            for (int n = 0; n <= opt.n_check; ++n) {
                const double cpt = detail::stage_ladder_c(s, n);
                const double dpt = detail::stage_ladder_d(s, n);
                for (std::size_t i = 0; i < nmaps; ++i) {
                    const double mc = detail::one_sided_mismatch(b.maps[i], cpt, steps, 3);
                    const double md = detail::one_sided_mismatch(b.maps[i], dpt, steps, 3);
                    const double worst = std::max(mc, md);
                    rep.junction_max = std::max(rep.junction_max, worst);
                    rep.add(CheckRow{"junction-c1",
                                     b.names[i] + "@stage" + std::to_string(s) + ",n=" + std::to_string(n),
                                     worst, opt.junction_tol, worst <= opt.junction_tol});
                }
            }
        }
    }

    // (iii) endpoint derivatives: |f_k'(+-k) - 1| by inner one-sided quotients
    {
        const double steps[3] = {1e-6, 5e-7, 2.5e-7};
        for (std::size_t i = 0; i < nmaps; ++i) {
            const double k = static_cast<double>(i + 1);
            const double at_hi = detail::one_sided_quotient_error(b.maps[i], k, -1, 1.0, steps, 3);
            const double at_lo = detail::one_sided_quotient_error(b.maps[i], -k, +1, 1.0, steps, 3);
            const double worst = std::max(at_hi, at_lo);
            rep.endpoint_max = std::max(rep.endpoint_max, worst);
            rep.add(CheckRow{"endpoint-derivative", b.names[i] + "@+-" + std::to_string(i + 1), worst,
                             opt.endpoint_tol, worst <= opt.endpoint_tol});
        }
    }

    // (iv) tower validation over the nested stage intervals
    {
        Tower t;
        for (std::size_t i = 0; i < nmaps; ++i) {
            TowerLevel lvl;
            const double k = static_cast<double>(i + 1);
            lvl.interval = Interval(-k, k);
            lvl.map = b.maps[i];
            lvl.name = b.names[i];
            t.levels.push_back(lvl);
        }
        rep.tower = validate_tower(t, opt.grid, opt.tol);
        for (std::size_t i = 0; i < rep.tower.levels.size(); ++i) {
            const auto& lr = rep.tower.levels[i];
            rep.add(CheckRow{"tower-level", b.names[i],
                             std::max(lr.lo_residual, lr.hi_residual), opt.tol.eps_fix, lr.pass()});
        }

        // (v) mass pump at each level
        for (int N = 1; N < K; ++N) {
            const auto cert = mass_pump(t, N, opt.mass_pump_iterates, opt.tol);
            rep.add(CheckRow{"mass-pump", "N=" + std::to_string(N), cert.pass() ? 0.0 : 1.0, 0.0,
                             cert.pass()});
        }
    }

    // well-definedness of the conjugation extension at piece boundaries:
    // evaluating through one extra conjugation level must agree
    {
        for (int s = 2; s <= K && static_cast<std::size_t>(s) <= nmaps; ++s) {
            const Homeo& fs = b.maps[static_cast<std::size_t>(s) - 1];
            for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(s); ++i) {
                double worst = 0.0;
                for (int n = 0; n < 6; ++n) {
                    const double mid =
                        0.5 * (detail::stage_ladder_d(s, n) + detail::stage_ladder_d(s, n + 1));
                    const double direct = b.maps[i](mid);
                    const double lifted = fs(b.maps[i](fs.inverse_at(mid)));
                    worst = std::max(worst, std::abs(direct - lifted));
                }
                rep.add(CheckRow{"conjugation-coherence",
                                 b.names[i] + "@stage" + std::to_string(s), worst, opt.tol.tau_inv * 100,
                                 worst <= opt.tol.tau_inv * 100});
            }
        }
    }

    return rep;
}

inline void write_residuals_csv(const VerifyReport& rep, std::ostream& os) {
    os << "check,location,residual,tolerance,pass\n";
    for (const auto& r : rep.rows)
        os << r.check << ',' << r.location << ',' << num_str(r.residual) << ',' << num_str(r.tolerance)
           << ',' << (r.pass ? "true" : "false") << '\n';
}

inline Json verify_report_to_json(const VerifyReport& rep) {
    Json rows = Json::array();
    for (const auto& r : rep.rows)
        rows.push_back(Json{{"check", r.check},
                            {"location", r.location},
                            {"residual", num_str(r.residual)},
                            {"tolerance", num_str(r.tolerance)},
                            {"pass", r.pass}});
    return Json{{"schema", 1},
                {"kind", "counterexample-verify"},
                {"pass", rep.pass},
                {"commutativity_max", num_str(rep.commutativity_max)},
                {"junction_max", num_str(rep.junction_max)},
                {"endpoint_max", num_str(rep.endpoint_max)},
                {"rows", rows}};
}

} // namespace linelab
