// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT

#include "szbf/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "szbf/check.hpp"
#include "szbf/model.hpp"
#include "szbf/report.hpp"
#include "szbf/rng.hpp"
#include "szbf/simulate.hpp"
#include "szbf/stability.hpp"

namespace szbf {

namespace {

int conclusion_code(Conclusion c) {
    switch (c) {
        case Conclusion::CertifiedOnSamples: return 0;
        case Conclusion::Refuted: return 1;
        case Conclusion::Inconclusive: return 2;
    }
    return 2;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    f << text;
    if (!f.good()) throw std::runtime_error("failed while writing: " + path);
}

std::string json_text(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

std::string strip_extension(const std::string& path) {
    std::filesystem::path p(path);
    p.replace_extension();
    return p.string();
}

struct PlanArgs {
    std::string model;
    int grid = 101;
    long long samples = 0;
    std::uint64_t seed = 0;
    double tol = 1e-9;
    std::string out;
    std::string format = "json";
};

struct SimArgs {
    std::string model;
    long long paths = 1;
    double dt = 1e-3;
    double horizon = 1.0;
    std::vector<double> x0;
    std::uint64_t seed = 0;
    long long max_dump = 16;
    std::string out;
    std::string format;  // empty = both stats JSON and path CSV
};

struct StabilityArgs {
    PlanArgs plan;
    std::vector<double> dist{0.0, 0.05};
    std::vector<double> eps{0.1, 0.5};
    long long paths = 100;
    double dt = 1e-3;
    double horizon = 1.0;
};

SamplingPlan make_plan(const PlanArgs& a) {
    SamplingPlan plan;
    plan.grid_per_axis = a.grid;
    plan.random_samples = a.samples;
    plan.seed = a.seed;
    return plan;
}

void add_plan_flags(CLI::App* cmd, PlanArgs& a) {
    cmd->add_option("--model", a.model, "model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--grid", a.grid, "grid points per axis")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--samples", a.samples, "additional uniform random sample points")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", a.seed, "PRNG seed")->capture_default_str();
    cmd->add_option("--tol", a.tol, "tolerance scale for the condition checks")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", a.out, "output path (stdout when omitted)");
    cmd->add_option("--format", a.format, "output format")
        ->capture_default_str()
        ->check(CLI::IsMember({"json", "csv"}));
}

int run_check(const PlanArgs& a, bool sum_only, bool drift_only) {
    LoadedModel lm = load_model_file(a.model);
    SamplingPlan plan = make_plan(a);
    CheckOptions opts;
    opts.sum_only = sum_only;
    opts.tol_scale = a.tol;
    opts.keep_points = (a.format == "csv");
    VerificationReport rep = drift_only ? check_zbf_drift_only(lm.model, lm.barrier, plan, opts)
                                        : check_szbf(lm.model, lm.barrier, plan, opts);
    nlohmann::json doc = to_json(rep);
    doc["regularity"] =
        nlohmann::json{{"growth", to_json(estimate_growth_constant(lm.model, lm.barrier.domain,
                                                                   10000, plan.seed))},
                       {"lipschitz", to_json(estimate_lipschitz(lm.model, lm.barrier.domain,
                                                                10000, plan.seed))}};
    stamp_generated_at(doc);
    const std::string text = a.format == "csv" ? margins_csv(rep) : json_text(doc);
    if (a.out.empty())
        std::cout << text;
    else
        write_text(a.out, text);
    if (rep.conclusion == Conclusion::Inconclusive)
        std::cerr << "inconclusive: no decisive sample point (see report notes)\n";
    return conclusion_code(rep.conclusion);
}

int run_lemma1(const PlanArgs& a, bool sum_only) {
    LoadedModel lm = load_model_file(a.model);
    SamplingPlan plan = make_plan(a);
    CheckOptions opts;
    opts.sum_only = sum_only;
    opts.tol_scale = a.tol;
    opts.keep_points = (a.format == "csv");
    Lemma1Report rep = check_lemma1(lm.model, lm.barrier, plan, opts);
    nlohmann::json doc = to_json(rep);
    stamp_generated_at(doc);
    const std::string text = a.format == "csv" ? margins_csv(rep.szbf) : json_text(doc);
    if (a.out.empty())
        std::cout << text;
    else
        write_text(a.out, text);
    if (rep.conclusion == Conclusion::Inconclusive)
        std::cerr << "inconclusive: no decisive sample point (see report notes)\n";
    return conclusion_code(rep.conclusion);
}

InitialCondition make_init(const SimArgs& a, const LoadedModel& lm) {
    if (a.x0.empty()) return InitialCondition::uniform(lm.barrier.domain);
    if (static_cast<int>(a.x0.size()) != lm.model.n)
        throw std::runtime_error("--x0 needs exactly " + std::to_string(lm.model.n) +
                                 " components for this model");
    return InitialCondition::fixed(a.x0);
}

int run_simulate(const SimArgs& a, bool stats_only) {
    LoadedModel lm = load_model_file(a.model);
    InitialCondition init = make_init(a, lm);
    ExitStats stats =
        estimate_invariance(lm.model, lm.barrier.h, init, a.paths, a.dt, a.horizon, a.seed);
    nlohmann::json doc = to_json(stats);
    stamp_generated_at(doc);

    const bool want_json = a.format != "csv";
    const bool want_csv = !stats_only && a.format != "json";
    std::string csv;
    if (want_csv) {
        const long long n_dump = std::min(a.paths, a.max_dump);
        for (long long i = 0; i < n_dump; ++i) {
            PhiloxRng init_rng(a.seed, init_stream(static_cast<std::uint64_t>(i)));
            const Point x0 = init.draw(lm.barrier.h, init_rng);
            SamplePath path = simulate_path(lm.model, x0, a.dt, a.horizon, a.seed,
                                            static_cast<std::uint64_t>(i));
            csv += path_csv(path, lm.barrier.h);
        }
    }

    if (!a.out.empty()) {
        const std::string base = strip_extension(a.out);
        if (want_json) write_text(base + ".json", json_text(doc));
        if (want_csv) write_text(base + ".csv", csv);
        std::cout << stats.statement << "\n";
    } else {
        if (want_json) std::cout << json_text(doc);
        if (want_csv) std::cout << csv;
    }
    return 0;
}

int run_stability(const StabilityArgs& a) {
    LoadedModel lm = load_model_file(a.plan.model);
    SamplingPlan plan = make_plan(a.plan);
    CheckOptions opts;
    opts.tol_scale = a.plan.tol;
    LyapunovReport rep = check_lyapunov_conditions(lm.model, lm.barrier, plan, opts);
    nlohmann::json check_doc = to_json(rep);
    stamp_generated_at(check_doc);

    LyapunovProfile prof = estimate_stability_profile(lm.model, lm.barrier, a.dist, a.eps,
                                                      a.paths, a.dt, a.horizon, a.plan.seed);
    nlohmann::json prof_doc = to_json(prof);
    stamp_generated_at(prof_doc);

    if (!a.plan.out.empty()) {
        const std::string base = strip_extension(a.plan.out);
        write_text(base + ".json", json_text(check_doc));
        if (a.plan.format == "csv")
            write_text(base + "-profile.csv", profile_csv(prof));
        else
            write_text(base + "-profile.json", json_text(prof_doc));
        std::cout << to_string(rep.conclusion) << "\n";
    } else {
        std::cout << json_text(check_doc);
        if (a.plan.format == "csv")
            std::cout << profile_csv(prof);
        else
            std::cout << json_text(prof_doc);
    }
    if (rep.conclusion == Conclusion::Inconclusive)
        std::cerr << "inconclusive: no sampled point outside C (see report notes)\n";
    return conclusion_code(rep.conclusion);
}

int run_report(const std::vector<std::string>& files) {
    std::vector<nlohmann::json> docs;
    docs.reserve(files.size());
    for (const std::string& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + f);
        docs.push_back(nlohmann::json::parse(in));
    }
    std::cout << render_summary(docs);
    return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"stochastic zeroing barrier function toolkit"};
    app.set_version_flag("--version", std::string(kToolName) + " " + std::string(kToolVersion) +
                                          " (rng " + std::string(PhiloxRng::name) + ")");
    app.require_subcommand(1);

    PlanArgs check_args;
    bool check_sum_only = false;
    bool check_drift_only = false;
    CLI::App* check_cmd =
        app.add_subcommand("check", "verify the barrier conditions on sampled points");
    add_plan_flags(check_cmd, check_args);
    check_cmd->add_flag("--sum-only", check_sum_only,
                        "test only the summed noise coupling, not each channel");
    check_cmd->add_flag("--drift-only", check_drift_only,
                        "check the drift-only barrier condition, ignoring diffusion");

    PlanArgs lemma_args;
    bool lemma_sum_only = false;
    CLI::App* lemma_cmd = app.add_subcommand(
        "lemma1", "test the drift-only reduction hypotheses and cross-validate both checks");
    add_plan_flags(lemma_cmd, lemma_args);
    lemma_cmd->add_flag("--sum-only", lemma_sum_only,
                        "test only the summed noise coupling, not each channel");

    auto add_sim_flags = [](CLI::App* cmd, SimArgs& a, bool with_dump) {
        cmd->add_option("--model", a.model, "model file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--paths", a.paths, "number of independent paths")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        cmd->add_option("--dt", a.dt, "time step")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--horizon", a.horizon, "simulated time horizon")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        cmd->add_option("--x0", a.x0,
                        "fixed initial point x1,...,xn (default: uniform over the safe set)")
            ->delimiter(',');
        cmd->add_option("--seed", a.seed, "PRNG seed")->capture_default_str();
        cmd->add_option("--out", a.out, "output path (stdout when omitted)");
        if (with_dump) {
            cmd->add_option("--max-dump", a.max_dump, "number of paths written to the CSV dump")
                ->capture_default_str()
                ->check(CLI::NonNegativeNumber);
            cmd->add_option("--format", a.format,
                            "restrict output to one format (default: stats JSON and path CSV)")
                ->check(CLI::IsMember({"json", "csv"}));
        }
    };

    SimArgs sim_args;
    CLI::App* sim_cmd =
        app.add_subcommand("simulate", "sample paths with exit detection and statistics");
    add_sim_flags(sim_cmd, sim_args, true);

    SimArgs exit_args;
    CLI::App* exit_cmd =
        app.add_subcommand("exit-prob", "estimate the exit probability from the safe set");
    add_sim_flags(exit_cmd, exit_args, false);

    StabilityArgs stab_args;
    CLI::App* stab_cmd = app.add_subcommand(
        "stability", "Lyapunov-style decrease check plus an empirical escape profile");
    add_plan_flags(stab_cmd, stab_args.plan);
    stab_cmd->add_option("--dist", stab_args.dist,
                         "starting distances outside the safe-set boundary (0 = inside)")
        ->delimiter(',');
    stab_cmd->add_option("--eps", stab_args.eps, "escape thresholds for the profile")
        ->delimiter(',');
    stab_cmd->add_option("--paths", stab_args.paths, "paths per starting distance")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    stab_cmd->add_option("--dt", stab_args.dt, "time step")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    stab_cmd->add_option("--horizon", stab_args.horizon, "simulated time horizon")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    std::vector<std::string> report_files;
    CLI::App* report_cmd =
        app.add_subcommand("report", "render previously written JSON reports as text");
    report_cmd->add_option("files", report_files, "JSON report files")
        ->required()
        ->check(CLI::ExistingFile);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(std::move(args));
        if (check_cmd->parsed()) return run_check(check_args, check_sum_only, check_drift_only);
        if (lemma_cmd->parsed()) return run_lemma1(lemma_args, lemma_sum_only);
        if (sim_cmd->parsed()) return run_simulate(sim_args, false);
        if (exit_cmd->parsed()) return run_simulate(exit_args, true);
        if (stab_cmd->parsed()) return run_stability(stab_args);
        if (report_cmd->parsed()) return run_report(report_files);
        std::cerr << "error: no subcommand given\n";
        return 2;
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace szbf
