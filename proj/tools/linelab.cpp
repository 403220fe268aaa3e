// linelab: batch analyses of finitely generated groups of line
// homeomorphisms: crossing tables, towers, invariant measures, the staged
// commuting counterexample, and the regularity threshold.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "linelab/classify.hpp"
#include "linelab/counterexample.hpp"
#include "linelab/group_spec.hpp"
#include "linelab/measure.hpp"
#include "linelab/serialize.hpp"
#include "linelab/tower.hpp"

namespace fs = std::filesystem;
using namespace linelab;

namespace {

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadArgument, "cannot open " + path);
    Json j;
    in >> j;
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::BadArgument, "cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json cross_table_json(const std::vector<CrossTableEntry>& entries) {
    Json table = Json::array();
    for (const auto& e : entries) {
        Json row{{"first", e.first}, {"second", e.second}};
        switch (e.status) {
        case CrossStatus::Crossed: row["status"] = "crossed"; break;
        case CrossStatus::NotCrossed: row["status"] = "not-crossed"; break;
        case CrossStatus::Inconclusive: row["status"] = "inconclusive"; break;
        }
        if (e.witness) {
            row["witness"] = Json{{"fixed_map", e.witness->fixed_map},
                                  {"moving_map", e.witness->moving_map},
                                  {"a", num_str(e.witness->a)},
                                  {"b", num_str(e.witness->b)},
                                  {"endpoint", num_str(e.witness->endpoint)},
                                  {"sent_to", num_str(e.witness->sent_to)}};
        }
        table.push_back(row);
    }
    return table;
}

Json fixed_summaries_json(const GroupSpec& spec) {
    Json out = Json::array();
    for (const auto& gen : spec.generators) {
        const auto fs_rep = fixed_set(gen.map, spec.window, spec.budget.grid, spec.tol);
        Json parts = Json::array();
        for (const auto& p : fs_rep.fixed_parts)
            parts.push_back(Json{{"lo", num_str(p.lo)}, {"hi", num_str(p.hi)}});
        out.push_back(Json{{"generator", gen.name},
                           {"fixed_parts", parts},
                           {"components", fs_rep.components.size()},
                           {"max_displacement", num_str(fs_rep.max_displacement)},
                           {"grid_too_coarse", fs_rep.grid_too_coarse}});
    }
    return out;
}

Json certificate_json(const MassPumpCertificate& cert) {
    Json images = Json::array();
    for (const auto& im : cert.images) images.push_back(interval_json(im));
    return Json{{"level", cert.level_N},
                {"iterates", cert.iterates_K},
                {"base", interval_json(cert.base)},
                {"target", interval_json(cert.target)},
                {"multiplier", cert.multiplier},
                {"disjoint", cert.disjoint},
                {"contained", cert.contained},
                {"endpoints_increasing", cert.endpoints_increasing},
                {"images", images}};
}

int cmd_analyze(const std::string& spec_path, const std::string& out_dir, int budget_words,
                std::optional<std::pair<double, double>> window_override) {
    GroupSpec spec = group_spec_from_json(load_json(spec_path));
    if (budget_words > 0) spec.budget.word_length = budget_words;
    if (window_override) spec.window = Interval(window_override->first, window_override->second);

    const auto report = classify_action(spec);

    Json j{{"schema", 1}, {"kind", "analysis"}, {"group", spec.name}};
    j["window"] = interval_json(spec.window);
    j["budget"] = Json{{"word_length", spec.budget.word_length},
                       {"levels", spec.budget.levels},
                       {"iterates", spec.budget.iterates},
                       {"samples", spec.budget.samples}};
    j["tolerances"] = Json{{"eps_fix", num_str(spec.tol.eps_fix)},
                           {"tau_inv", num_str(spec.tol.tau_inv)},
                           {"tau_meas", num_str(spec.tol.tau_meas)},
                           {"eps_sep", num_str(spec.tol.eps_sep)}};
    j["crossings"] = cross_table_json(report.crossings);
    j["crossed_found"] = report.crossed_found;
    j["fixed_sets"] = fixed_summaries_json(spec);
    j["classification"] = Json{{"case", action_case_label(report.fired)}, {"detail", report.detail}};
    if (report.crossed_found) {
        j["tower_search"] = "skipped: crossed elements present";
    } else if (report.tower) {
        j["tower_search"] = Json{{"status", "found"}, {"levels", report.tower->levels.size()}};
    } else {
        const auto ts = search_tower(spec, spec.window, spec.budget);
        const char* st = ts.status == TowerSearchStatus::Found ? "found"
                         : ts.status == TowerSearchStatus::NoSeedElement ? "no-seed-element"
                                                                         : "budget-exhausted";
        j["tower_search"] = Json{{"status", st}, {"log", ts.log}, {"levels", ts.tower.levels.size()}};
        if (!ts.tower.levels.empty()) j["tower"] = tower_to_json(ts.tower);
    }
    if (spec.subgroups.count("A") && spec.subgroups.count("B")) {
        const auto ns = search_tower_nilpotent(spec, spec.window, spec.budget);
        Json nj{{"status", ns.status == TowerSearchStatus::Found ? "found"
                           : ns.status == TowerSearchStatus::SeriesViolation ? "series-violation"
                           : ns.status == TowerSearchStatus::NoComponent ? "no-component"
                                                                         : "budget-exhausted"},
                {"log", ns.log},
                {"levels", ns.tower.levels.size()}};
        if (ns.has_base) nj["base_interval"] = interval_json(ns.base);
        j["nilpotent_tower_search"] = nj;
    }
    j["freeness"] = Json{{"free_up_to_budget", report.freeness.free_up_to_budget},
                         {"words_checked", report.freeness.words_checked},
                         {"counterexample", report.freeness.counterexample_name}};
    if (report.measure) j["measure"] = measure_to_json(*report.measure);
    Json residuals = Json::array();
    for (std::size_t i = 0; i < report.residuals.size(); ++i)
        residuals.push_back(
            Json{{"generator", report.residual_names[i]}, {"residual", num_str(report.residuals[i])},
                 {"tolerance", num_str(spec.tol.tau_meas)}});
    j["invariance_residuals"] = residuals;
    Json minimal{{"candidate", report.minimal_set}, {"heuristic_pass", report.minimality_heuristic}};
    if (!report.minimal_points.empty()) {
        Json pts = Json::array();
        for (double p : report.minimal_points) pts.push_back(num_str(p));
        minimal["points"] = pts;
    }
    j["minimal_set"] = minimal;
    if (report.tower) j["tower"] = tower_to_json(*report.tower);
    if (report.certificate) j["mass_pump_certificate"] = certificate_json(*report.certificate);

    write_json(fs::path(out_dir) / "report.json", j);
    std::cout << "group: " << spec.name << "\n"
              << "classification: " << action_case_label(report.fired) << "\n"
              << "detail: " << report.detail << "\n"
              << "report: " << (fs::path(out_dir) / "report.json").string() << "\n";
    return report.fired == ActionCase::Unclassified ? 2 : 0;
}

// per-generator (x, f(x), f'(x)) tables for downstream plotting
int cmd_sweep(const std::string& spec_path, const std::string& out_dir, int points) {
    GroupSpec spec = group_spec_from_json(load_json(spec_path));
    for (const auto& gen : spec.generators) {
        std::ostringstream csv;
        csv << "x,f,f_prime\n";
        for (int i = 0; i <= points; ++i) {
            const double x = spec.window.lo + spec.window.length() * i / points;
            csv << num_str(x) << ',' << num_str(gen.map(x)) << ',';
            try {
                csv << num_str(gen.map.derivative(x));
            } catch (const Error&) {
                // derivative unresolvable within tolerance near an
                // accumulation point; leave the cell empty
            }
            csv << '\n';
        }
        const fs::path path = fs::path(out_dir) / ("sweep_" + gen.name + ".csv");
        write_text(path, csv.str());
        std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
}

int cmd_counterexample_build(int stages, const std::string& out_path) {
    const auto build = build_counterexample(stages);
    write_json(out_path, build_to_json(build));
    std::cout << "wrote " << out_path << " with " << stages << " stage maps\n";
    return 0;
}

int cmd_counterexample_verify(const std::string& build_path, const std::string& report_path,
                              const std::string& csv_path, int samples, int n_check) {
    const auto build = build_from_json(load_json(build_path));
    VerifyOptions opt;
    if (samples > 0) opt.samples = samples;
    if (n_check > 0) opt.n_check = n_check;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = verify_counterexample(build, opt);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (!report_path.empty()) write_json(report_path, verify_report_to_json(rep));
    if (!csv_path.empty()) {
        std::ostringstream os;
        write_residuals_csv(rep, os);
        write_text(csv_path, os.str());
    }
    std::cout << "checks: " << rep.rows.size() << "\n"
              << "commutativity_max: " << num_str(rep.commutativity_max) << "\n"
              << "junction_max: " << num_str(rep.junction_max) << "\n"
              << "endpoint_max: " << num_str(rep.endpoint_max) << "\n"
              << "pass: " << (rep.pass ? "true" : "false") << "\n";
    std::cerr << "verify wall time: " << ms << " ms\n";
    return rep.pass ? 0 : 2;
}

int cmd_kopell(int k, double alpha) {
    if (k >= 3) {
        const double a = kopell_alpha_threshold(k);
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(12);
        os << a;
        std::cout << "alpha*(" << k << ") = " << os.str() << "\n";
        return 0;
    }
    if (alpha > 0) {
        std::cout << "smallest k with threshold condition at alpha=" << num_str(alpha) << ": "
                  << kopell_min_k(alpha) << "\n";
        return 0;
    }
    std::cerr << "kopell needs --k N (N >= 3) or --alpha X (X > 0)\n";
    return 1;
}

int cmd_tower_find(const std::string& spec_path, const std::string& out_path) {
    GroupSpec spec = group_spec_from_json(load_json(spec_path));
    const auto res = search_tower(spec, spec.window, spec.budget);
    const char* status = res.status == TowerSearchStatus::Found ? "found"
                         : res.status == TowerSearchStatus::NoSeedElement ? "no-seed-element"
                                                                          : "budget-exhausted";
    std::cout << "status: " << status << " (" << res.log << ")\n"
              << "levels: " << res.tower.levels.size() << "\n";
    for (const auto& lvl : res.tower.levels)
        std::cout << "  " << lvl.name << "  [" << num_str(lvl.interval.lo) << ", "
                  << num_str(lvl.interval.hi) << "]\n";
    if (!out_path.empty() && !res.tower.levels.empty()) {
        Json j = tower_to_json(res.tower);
        j["status"] = status;
        write_json(out_path, j);
        std::cout << "wrote " << out_path << "\n";
    }
    return res.status == TowerSearchStatus::Found ? 0 : 2;
}

int cmd_tower_verify(const std::string& tower_path) {
    const Tower t = tower_from_json(load_json(tower_path));
    const auto rep = validate_tower(t);
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        const auto& lr = rep.levels[i];
        std::cout << "level " << (i + 1) << " " << t.levels[i].name << ": "
                  << (lr.pass() ? "pass" : "FAIL") << "  endpoint residuals " << num_str(lr.lo_residual)
                  << ", " << num_str(lr.hi_residual);
        if (!lr.detail.empty()) std::cout << "  (" << lr.detail << ")";
        std::cout << "\n";
    }
    std::cout << "tower: " << (rep.pass ? "pass" : "FAIL") << "\n";
    return rep.pass ? 0 : 2;
}

int cmd_measure_estimate(const std::string& spec_path, const std::string& out_path) {
    GroupSpec spec = group_spec_from_json(load_json(spec_path));
    const auto report = classify_action(spec);
    if (!report.measure) {
        std::cout << "no invariant measure candidate: " << report.detail << "\n";
        return 2;
    }
    Json j{{"schema", 1}, {"kind", "measure"}, {"case", action_case_label(report.fired)}};
    j["measure"] = measure_to_json(*report.measure);
    write_json(out_path, j);
    std::cout << "case: " << action_case_label(report.fired) << "\nwrote " << out_path << "\n";
    return 0;
}

int cmd_measure_verify(const std::string& measure_path, const std::string& spec_path,
                       const std::string& csv_path) {
    GroupSpec spec = group_spec_from_json(load_json(spec_path));
    const Json mj = load_json(measure_path);
    const RadonMeasure mu = measure_from_json(mj.contains("measure") ? mj.at("measure") : mj);
    const auto probes = probe_intervals(spec.window, 64);
    std::ostringstream csv;
    csv << "generator,residual,tolerance,pass\n";
    bool all_pass = true;
    for (const auto& gen : spec.generators) {
        const double r = invariance_residual(mu, gen.map, probes);
        const bool pass = r <= spec.tol.tau_meas;
        all_pass &= pass;
        csv << gen.name << ',' << num_str(r) << ',' << num_str(spec.tol.tau_meas) << ','
            << (pass ? "true" : "false") << '\n';
        std::cout << gen.name << ": residual " << num_str(r) << (pass ? " (pass)" : " (FAIL)") << "\n";
    }
    if (!csv_path.empty()) write_text(csv_path, csv.str());
    return all_pass ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"analyses of groups acting on the line"};
    app.require_subcommand(1);

    // analyze
    std::string spec_path, out_dir = ".";
    int budget_words = 0;
    std::vector<double> window_flag;
    auto* analyze = app.add_subcommand("analyze", "classify a group spec and write a report");
    analyze->add_option("spec", spec_path, "group spec JSON")->required();
    analyze->add_option("--out", out_dir, "output directory");
    analyze->add_option("--budget-words", budget_words, "override word-length budget");
    analyze->add_option("--window", window_flag, "override analysis window (two numbers)")->expected(2);

    // sweep
    std::string sweep_spec, sweep_out = ".";
    int sweep_points = 512;
    auto* sw = app.add_subcommand("sweep", "write x, f(x), f'(x) CSV tables per generator");
    sw->add_option("spec", sweep_spec, "group spec JSON")->required();
    sw->add_option("--out", sweep_out, "output directory");
    sw->add_option("--points", sweep_points, "sample count");

    // counterexample
    auto* ce = app.add_subcommand("counterexample", "staged commuting family");
    int stages = 3;
    std::string build_out = "build.json";
    auto* ce_build = ce->add_subcommand("build", "construct the staged family");
    ce_build->add_option("--stages", stages, "number of stages K (>= 2)")->required();
    ce_build->add_option("--out", build_out, "output build JSON");
    std::string build_in, report_out, csv_out;
    int verify_samples = 0, verify_ncheck = 0;
    auto* ce_verify = ce->add_subcommand("verify", "run the verification battery");
    ce_verify->add_option("build", build_in, "build JSON")->required();
    ce_verify->add_option("--report", report_out, "verification report JSON");
    ce_verify->add_option("--csv", csv_out, "residual table CSV");
    ce_verify->add_option("--samples", verify_samples, "commutativity samples");
    ce_verify->add_option("--junctions", verify_ncheck, "junction count per side");

    // kopell
    int kflag = 0;
    double alpha_flag = 0.0;
    auto* kp = app.add_subcommand("kopell", "regularity threshold");
    kp->add_option("--k", kflag, "tower depth k >= 3");
    kp->add_option("--alpha", alpha_flag, "query the smallest admissible k for alpha");

    // tower
    auto* tw = app.add_subcommand("tower", "tower search and validation");
    std::string tower_spec, tower_out, tower_in;
    auto* tw_find = tw->add_subcommand("find", "search for a tower");
    tw_find->add_option("spec", tower_spec, "group spec JSON")->required();
    tw_find->add_option("--out", tower_out, "tower JSON output");
    auto* tw_verify = tw->add_subcommand("verify", "validate a tower file");
    tw_verify->add_option("tower", tower_in, "tower JSON")->required();

    // measure
    auto* ms = app.add_subcommand("measure", "invariant measure estimation and verification");
    std::string ms_spec, ms_out = "measure.json", ms_in, ms_csv;
    auto* ms_est = ms->add_subcommand("estimate", "estimate an invariant measure");
    ms_est->add_option("spec", ms_spec, "group spec JSON")->required();
    ms_est->add_option("--out", ms_out, "measure JSON output");
    auto* ms_verify = ms->add_subcommand("verify", "check invariance residuals of a measure file");
    ms_verify->add_option("measure", ms_in, "measure JSON")->required();
    ms_verify->add_option("spec", ms_spec, "group spec JSON")->required();
    ms_verify->add_option("--csv", ms_csv, "residual table CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) {
            std::optional<std::pair<double, double>> win;
            if (window_flag.size() == 2) win = std::make_pair(window_flag[0], window_flag[1]);
            return cmd_analyze(spec_path, out_dir, budget_words, win);
        }
        if (sw->parsed()) return cmd_sweep(sweep_spec, sweep_out, sweep_points);
        if (ce->parsed()) {
            if (ce_build->parsed()) return cmd_counterexample_build(stages, build_out);
            if (ce_verify->parsed())
                return cmd_counterexample_verify(build_in, report_out, csv_out, verify_samples,
                                                 verify_ncheck);
            std::cerr << "counterexample needs build or verify\n";
            return 1;
        }
        if (kp->parsed()) return cmd_kopell(kflag, alpha_flag);
        if (tw->parsed()) {
            if (tw_find->parsed()) return cmd_tower_find(tower_spec, tower_out);
            if (tw_verify->parsed()) return cmd_tower_verify(tower_in);
            std::cerr << "tower needs find or verify\n";
            return 1;
        }
        if (ms->parsed()) {
            if (ms_est->parsed()) return cmd_measure_estimate(ms_spec, ms_out);
            if (ms_verify->parsed()) return cmd_measure_verify(ms_in, ms_spec, ms_csv);
            std::cerr << "measure needs estimate or verify\n";
            return 1;
        }
    } catch (const Error& e) {
        std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
