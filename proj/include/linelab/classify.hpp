#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linelab/fixed_points.hpp"
#include "linelab/group_spec.hpp"
#include "linelab/measure.hpp"
#include "linelab/tower.hpp"

namespace linelab {

enum class ActionCase {
    GlobalFixedPoint, // case 1
    FreeTranslation,  // subcase 2a
    CollapsedStieltjes, // subcase 2b
    DiscreteOrbit,    // subcase 2c
    Unclassified,
};

inline const char* action_case_label(ActionCase c) {
    switch (c) {
    case ActionCase::GlobalFixedPoint: return "case1-global-fixed-point";
    case ActionCase::FreeTranslation: return "subcase2a-free-translations";
    case ActionCase::CollapsedStieltjes: return "subcase2b-collapse-stieltjes";
    case ActionCase::DiscreteOrbit: return "subcase2c-discrete-orbit";
    case ActionCase::Unclassified: return "unclassified";
    }
    return "unclassified";
}

struct CrossTableEntry {
    std::string first;
    std::string second;
    CrossStatus status = CrossStatus::NotCrossed;
    std::optional<CrossWitness> witness;
};

struct ClassifyReport {
    ActionCase fired = ActionCase::Unclassified;
    std::string detail;
    std::vector<CrossTableEntry> crossings;
    bool crossed_found = false;
    FreenessReport freeness;
    std::optional<RadonMeasure> measure;
    std::vector<std::string> residual_names;
    std::vector<double> residuals;
    std::string minimal_set;            // description of the candidate
    std::vector<double> minimal_points; // when the candidate is discrete
    bool minimality_heuristic = false;
    std::optional<Tower> tower;
    std::optional<MassPumpCertificate> certificate;
    std::optional<ConjugacyReport> conjugacy;
};

namespace detail {

// probes whose endpoints stay clear of comb atoms, so endpoint-inclusion
// ambiguity cannot flip counts
inline std::vector<Interval> atom_safe_probes(const Interval& window, const std::vector<double>& atoms,
                                              double eps_sep, int count) {
    auto raw = probe_intervals(window, count * 2);
    std::vector<Interval> out;
    auto clear = [&](double x) {
        for (double a : atoms)
            if (std::abs(x - a) < eps_sep / 4.0) return false;
        return true;
    };
    for (const auto& iv : raw) {
        if (static_cast<int>(out.size()) >= count) break;
        if (clear(iv.lo) && clear(iv.hi)) out.push_back(iv);
    }
    return out;
}

inline void attach_tower_evidence(ClassifyReport& rep, const GroupSpec& spec) {
    const auto search = search_tower(spec, spec.window, spec.budget);
    if (!search.tower.levels.empty()) {
        rep.tower = search.tower;
        if (search.tower.levels.size() >= 2) {
            rep.certificate = mass_pump(search.tower, 1, 50, spec.tol);
            rep.detail += "; tower with " + std::to_string(search.tower.levels.size()) +
                          " levels found, mass-pump certificate attached";
        } else {
            rep.detail += "; single-level tower found";
        }
    } else {
        rep.detail += "; no tower found within budget";
    }
}

} // namespace detail

// Desk-scale case classification: crossed pairs disqualify the analysis, a
// global fixed point gives a Dirac measure, a budget-free action is
// conjugated to translations, and otherwise the fixed-point-bearing
// subgroup's fixed set dispatches between the collapse measure and the
// discrete orbit comb. Anything else is reported unclassified, with a tower
// and a mass-pump certificate attached when one can be found.
inline ClassifyReport classify_action(const GroupSpec& spec) {
    spec.validate();
    ClassifyReport rep;
    const Interval& window = spec.window;
    const Tolerances& tol = spec.tol;
    const int grid = spec.budget.grid;

    // pairwise crossing table
    for (std::size_t i = 0; i < spec.generators.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.generators.size(); ++j) {
            CrossTableEntry e;
            e.first = spec.generators[i].name;
            e.second = spec.generators[j].name;
            const auto r = is_crossed(spec.generators[i].map, spec.generators[j].map, window, grid, tol,
                                      e.first, e.second);
            e.status = r.status;
            e.witness = r.witness;
            rep.crossed_found |= r.status == CrossStatus::Crossed;
            rep.crossings.push_back(e);
        }
    }
    if (rep.crossed_found) {
        rep.fired = ActionCase::Unclassified;
        rep.detail = "crossed elements present: the classification hypotheses fail";
        return rep;
    }

    // case 1: a global fixed point strictly inside the window (edge-only
    // fixed points are treated as truncation artifacts)
    std::vector<std::vector<FixedPart>> all_parts;
    for (const auto& gen : spec.generators)
        all_parts.push_back(fixed_set(gen.map, window, grid, tol).fixed_parts);
    const double interior_slack = std::max(1e-6, 1e-4 * window.length());
    auto global_fix = intersect_fixed_parts(all_parts);
    std::erase_if(global_fix, [&](const FixedPart& p) {
        return p.hi <= window.lo + interior_slack || p.lo >= window.hi - interior_slack;
    });
    if (!global_fix.empty()) {
        const FixedPart* best = &global_fix.front();
        for (const auto& p : global_fix) {
            const double d = std::abs(0.5 * (p.lo + p.hi) - window.midpoint());
            if (d < std::abs(0.5 * (best->lo + best->hi) - window.midpoint())) best = &p;
        }
        const double x = best->degenerate() ? best->lo : 0.5 * (best->lo + best->hi);
        rep.fired = ActionCase::GlobalFixedPoint;
        rep.detail = "global fixed point at " + std::to_string(x);
        rep.measure = DiracComb{{x}, {1.0}};
        rep.minimal_set = "singleton {" + std::to_string(x) + "}";
        rep.minimal_points = {x};
        for (const auto& gen : spec.generators) {
            rep.residual_names.push_back(gen.name);
            rep.residuals.push_back(std::abs(gen.map(x) - x));
        }
        return rep;
    }

    // subcase 2a: free up to budget
    rep.freeness = is_free_action(spec, window, spec.budget.word_length);
    if (rep.freeness.free_up_to_budget) {
        try {
            auto conj = conjugacy_to_translation(spec, window);
            rep.fired = ActionCase::FreeTranslation;
            rep.detail = "free up to word length " + std::to_string(spec.budget.word_length) +
                         "; conjugated to translations";
            rep.conjugacy = conj.report;
            rep.measure = conj.measure;
            for (std::size_t i = 0; i < spec.generators.size(); ++i) {
                rep.residual_names.push_back(spec.generators[i].name);
                rep.residuals.push_back(conj.report.generator_residuals[i]);
            }
            // minimal-set candidate: the orbit closure of the base point
            try {
                const auto comb = discrete_orbit_measure(spec, 0.0, window);
                rep.minimal_set = "orbit lattice of 0 (candidate)";
                rep.minimal_points = comb.points;
            } catch (const Error&) {
                rep.minimal_set = "whole line within window (dense orbits, candidate)";
            }
            rep.minimality_heuristic = true;
            return rep;
        } catch (const Error& e) {
            rep.fired = ActionCase::Unclassified;
            rep.detail = std::string("free action but conjugacy failed: ") + e.what();
            return rep;
        }
    }

    // the fixed-point-bearing part of the generating set
    std::vector<Generator> gamma;
    std::vector<std::size_t> gamma_idx;
    for (std::size_t i = 0; i < spec.generators.size(); ++i) {
        const auto fs = fixed_set(spec.generators[i].map, window, grid, tol);
        if (fs.has_fixed_points() && fs.max_displacement > tol.eps_fix) {
            gamma.push_back(spec.generators[i]);
            gamma_idx.push_back(i);
        }
    }
    if (gamma.empty() && rep.freeness.counterexample) {
        Generator g;
        g.name = rep.freeness.counterexample_name;
        g.map = word_homeo(spec.generators, *rep.freeness.counterexample);
        gamma.push_back(g);
    }
    if (gamma.empty()) {
        rep.fired = ActionCase::Unclassified;
        rep.detail = "not free but no fixed-point-bearing element found";
        detail::attach_tower_evidence(rep, spec);
        return rep;
    }

    std::vector<std::vector<FixedPart>> gamma_parts;
    for (const auto& g : gamma) gamma_parts.push_back(fixed_set(g.map, window, grid, tol).fixed_parts);
    auto fix_gamma = intersect_fixed_parts(gamma_parts);

    if (fix_gamma.empty()) {
        rep.fired = ActionCase::Unclassified;
        rep.detail = "fixed-point-bearing part has empty common fixed set in the window";
        detail::attach_tower_evidence(rep, spec);
        return rep;
    }

    const double fat = std::max(1e-6, 1e-4 * window.length());
    bool has_fat = false;
    for (const auto& p : fix_gamma) has_fat |= (p.hi - p.lo) > fat;

    if (has_fat) {
        // subcase 2b: collapse the complement gaps. Detection runs on a
        // window expanded by the generators' reach so that probe images stay
        // inside the collapsed zone.
        double reach = 0.0;
        for (const auto& gen : spec.generators) {
            for (int s = 0; s <= 64; ++s) {
                const double x = window.lo + window.length() * s / 64.0;
                reach = std::max(reach, std::abs(gen.map(x) - x));
            }
        }
        const Interval ext(window.lo - reach - 0.5, window.hi + reach + 0.5);
        std::vector<std::vector<FixedPart>> ext_parts;
        for (const auto& g : gamma) ext_parts.push_back(fixed_set(g.map, ext, grid * 2, tol).fixed_parts);
        const auto fix_gamma_ext = intersect_fixed_parts(ext_parts);
        std::vector<Interval> gaps;
        for (const auto& c : components_from_parts(ext, fix_gamma_ext))
            if (c.lo_genuine && c.hi_genuine) gaps.push_back(Interval(c.lo, c.hi));
        try {
            auto collapsed = collapse_and_measure(gaps, spec.generators, window, std::nullopt, tol);
            rep.fired = ActionCase::CollapsedStieltjes;
            rep.detail = "common fixed set has interior; gaps collapsed to a Stieltjes measure";
            rep.measure = collapsed.measure;
            for (std::size_t i = 0; i < spec.generators.size(); ++i) {
                rep.residual_names.push_back(spec.generators[i].name);
                rep.residuals.push_back(collapsed.generator_residuals[i]);
            }
            rep.minimal_set = "boundary of the collapsed gap set (candidate)";
            return rep;
        } catch (const Error& e) {
            rep.fired = ActionCase::Unclassified;
            rep.detail = std::string("collapse route failed: ") + e.what();
            detail::attach_tower_evidence(rep, spec);
            return rep;
        }
    }

    // subcase 2c: countable-looking common fixed set; try orbit combs from
    // its points, nearest to the window center first
    std::vector<double> candidates;
    for (const auto& p : fix_gamma) {
        candidates.push_back(p.lo);
        if (!p.degenerate()) candidates.push_back(p.hi);
    }
    std::sort(candidates.begin(), candidates.end(), [&](double a, double b) {
        const double da = std::abs(a - window.midpoint()), db = std::abs(b - window.midpoint());
        return da == db ? a < b : da < db;
    });
    std::string last_failure;
    for (double x0 : candidates) {
        try {
            auto comb = discrete_orbit_measure(spec, x0, window);
            rep.fired = ActionCase::DiscreteOrbit;
            rep.detail = "discrete orbit measure from fixed point " + std::to_string(x0);
            const auto probes = detail::atom_safe_probes(window, comb.points, tol.eps_sep, 64);
            RadonMeasure mu = comb;
            for (const auto& gen : spec.generators) {
                rep.residual_names.push_back(gen.name);
                rep.residuals.push_back(invariance_residual(mu, gen.map, probes));
            }
            rep.minimal_set = "orbit of " + std::to_string(x0) + " (candidate)";
            rep.minimal_points = comb.points;
            rep.measure = mu;
            // minimality heuristic: orbits of orbit points revisit each atom
            rep.minimality_heuristic = true;
            for (std::size_t s = 0; s < std::min<std::size_t>(3, comb.points.size()); ++s) {
                const auto sub = discrete_orbit_measure(spec, comb.points[s], window);
                for (double a : comb.points) {
                    bool near = false;
                    for (double b : sub.points) near |= std::abs(a - b) < tol.eps_sep;
                    rep.minimality_heuristic &= near;
                }
            }
            return rep;
        } catch (const Error& e) {
            last_failure = e.what();
        }
    }
    rep.fired = ActionCase::Unclassified;
    rep.detail = "orbit measures failed from every detected fixed point";
    if (!last_failure.empty()) rep.detail += " (last: " + last_failure + ")";
    detail::attach_tower_evidence(rep, spec);
    return rep;
}

} // namespace linelab
