// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT

#include "szbf/report.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <ctime>
#include <limits>
#include <stdexcept>

#include "szbf/rng.hpp"

namespace szbf {

using nlohmann::json;

namespace {

json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

json point_json(const Point& p) {
    json a = json::array();
    for (double v : p) a.push_back(num(v));
    return a;
}

json tool_block() {
    return json{{"name", std::string(kToolName)},
                {"version", std::string(kToolVersion)},
                {"rng", std::string(PhiloxRng::name)}};
}

json opt_num(const std::optional<double>& v) {
    if (!v) return nullptr;
    return num(*v);
}

void append_fmt(std::string& out, const char* fmt, ...) __attribute__((format(printf, 2, 3)));
void append_fmt(std::string& out, const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    vsnprintf(buf, sizeof(buf), fmt, ap);
    va_end(ap);
    out += buf;
}

std::string full(double v) {
    char buf[40];
    snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string brief(double v) {
    char buf[40];
    snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string point_text(const Point& p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) s += ", ";
        s += brief(p[i]);
    }
    s += ")";
    return s;
}

}  // namespace

json to_json(const RegularityEstimate& est) {
    json j{{"kind", est.kind == RegularityEstimate::Kind::Growth ? "growth" : "lipschitz"},
           {"constant", num(est.constant)},
           {"samples", est.samples},
           {"witness_x", point_json(est.witness_x)},
           {"bound", "sampled lower bound on the true constant"}};
    if (!est.witness_y.empty()) j["witness_y"] = point_json(est.witness_y);
    return j;
}

json to_json(const ConditionResult& cond) {
    return json{{"name", cond.name},
                {"passed", cond.passed},
                {"min_margin", num(cond.min_margin)},
                {"worst_violation", num(cond.worst_violation)},
                {"witness", point_json(cond.witness)},
                {"witness_value", num(cond.witness_value)}};
}

json to_json(const SamplingPlan& plan) {
    return json{{"grid_per_axis", plan.grid_per_axis},
                {"random_samples", plan.random_samples},
                {"seed", plan.seed},
                {"restrict", to_string(plan.restrict_to)},
                {"shell_fraction", num(plan.shell_fraction)}};
}

json to_json(const VerificationReport& rep) {
    json conds = json::array();
    for (const ConditionResult& c : rep.conditions) conds.push_back(to_json(c));
    return json{{"schema_version", kSchemaVersion},
                {"kind", "check"},
                {"variant", rep.check},
                {"tool", tool_block()},
                {"model", rep.model_name},
                {"alpha", rep.alpha_desc},
                {"conclusion", to_string(rep.conclusion)},
                {"conditions", conds},
                {"points_checked", rep.points_checked},
                {"plan", to_json(rep.plan)},
                {"options", json{{"sum_only", rep.options.sum_only},
                                 {"tol_scale", num(rep.options.tol_scale)}}},
                {"notes", rep.notes}};
}

json to_json(const Lemma1Report& rep) {
    return json{{"schema_version", kSchemaVersion},
                {"kind", "lemma1"},
                {"tool", tool_block()},
                {"model", rep.model_name},
                {"second_order", to_json(rep.second_order)},
                {"coupling", to_json(rep.coupling)},
                {"hypotheses_hold", rep.hypotheses_hold},
                {"drift_only", to_json(rep.drift_only)},
                {"szbf", to_json(rep.szbf)},
                {"max_margin_gap", num(rep.max_margin_gap)},
                {"margins_agree", rep.margins_agree},
                {"conclusion", to_string(rep.conclusion)},
                {"points_checked", rep.points_checked},
                {"notes", rep.notes}};
}

json to_json(const ExitStats& stats) {
    return json{{"schema_version", kSchemaVersion},
                {"kind", "exit-stats"},
                {"tool", tool_block()},
                {"model", stats.model_name},
                {"n_paths", stats.n_paths},
                {"n_exited", stats.n_exited},
                {"n_exploded", stats.n_exploded},
                {"exit_probability", num(stats.exit_probability)},
                {"wilson95", json::array({num(stats.wilson_lo), num(stats.wilson_hi)})},
                {"exit_time", json{{"min", opt_num(stats.exit_time_min)},
                                   {"median", opt_num(stats.exit_time_median)},
                                   {"max", opt_num(stats.exit_time_max)}}},
                {"dt", num(stats.dt)},
                {"horizon", num(stats.horizon)},
                {"seed", stats.seed},
                {"statement", stats.statement}};
}

json to_json(const LyapunovReport& rep) {
    json conds = json::array();
    conds.push_back(to_json(rep.zero_on_c));
    conds.push_back(to_json(rep.positive_off_c));
    conds.push_back(to_json(rep.decrease));
    conds.push_back(to_json(rep.alpha_sign));
    return json{{"schema_version", kSchemaVersion},
                {"kind", "lyapunov-check"},
                {"tool", tool_block()},
                {"model", rep.model_name},
                {"alpha", rep.alpha_desc},
                {"conclusion", to_string(rep.conclusion)},
                {"conditions", conds},
                {"points_checked", rep.points_checked},
                {"points_off_c", rep.points_off_c},
                {"plan", to_json(rep.plan)},
                {"notes", rep.notes}};
}

json to_json(const LyapunovProfile& prof) {
    json matrix = json::array();
    for (const auto& row : prof.exceed_probability) {
        json r = json::array();
        for (double v : row) r.push_back(num(v));
        matrix.push_back(r);
    }
    json dists = json::array();
    for (double d : prof.init_dists) dists.push_back(num(d));
    json eps = json::array();
    for (double e : prof.eps) eps.push_back(num(e));
    json degen = json::array();
    for (auto f : prof.degenerate_gradient) degen.push_back(static_cast<bool>(f));
    return json{{"schema_version", kSchemaVersion},
                {"kind", "stability-profile"},
                {"tool", tool_block()},
                {"model", prof.model_name},
                {"init_dists", dists},
                {"eps", eps},
                {"exceed_probability", matrix},
                {"degenerate_gradient", degen},
                {"n_paths", prof.n_paths},
                {"dt", num(prof.dt)},
                {"horizon", num(prof.horizon)},
                {"seed", prof.seed},
                {"distance", "first-order surrogate max(0, -h)/|grad h|"}};
}

void stamp_generated_at(nlohmann::json& doc) {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    doc["generated_at"] = buf;
}

std::string margins_csv(const VerificationReport& rep) {
    std::string out;
    out += "# model: " + rep.model_name + "\n";
    out += "# check: " + rep.check + "\n";
    out += "# conclusion: " + to_string(rep.conclusion) + "\n";
    out += "# alpha: " + rep.alpha_desc + "\n";
    append_fmt(out, "# plan: grid %d, random %lld, seed %llu, restrict %s\n", rep.plan.grid_per_axis,
               rep.plan.random_samples, static_cast<unsigned long long>(rep.plan.seed),
               to_string(rep.plan.restrict_to).c_str());
    out += "# tol_scale: " + full(rep.options.tol_scale) + "\n";

    const std::size_t n = rep.points.empty() ? 0 : rep.points.front().x.size();
    const std::size_t m = rep.points.empty() ? 0 : rep.points.front().couplings.size();
    for (std::size_t i = 1; i <= n; ++i) append_fmt(out, "x%zu,", i);
    out += "h,margin,margin_tol";
    for (std::size_t k = 1; k <= m; ++k) append_fmt(out, ",coupling_%zu,coupling_tol_%zu", k, k);
    if (m > 0) out += ",coupling_sum,coupling_sum_tol";
    out += "\n";

    for (const PointRecord& r : rep.points) {
        for (double v : r.x) out += full(v) + ",";
        out += full(r.h) + "," + full(r.margin) + "," + full(r.margin_tol);
        for (std::size_t k = 0; k < r.couplings.size(); ++k)
            out += "," + full(r.couplings[k]) + "," + full(r.coupling_tols[k]);
        if (!r.couplings.empty())
            out += "," + full(r.coupling_sum) + "," + full(r.coupling_sum_tol);
        out += "\n";
    }
    return out;
}

std::string path_csv(const SamplePath& path, const Expr& h) {
    std::string out;
    out += "# model: " + path.model_name + "\n";
    append_fmt(out, "# seed: %llu\n", static_cast<unsigned long long>(path.seed));
    append_fmt(out, "# path_index: %llu\n", static_cast<unsigned long long>(path.path_index));
    out += "# dt: " + full(path.dt) + "\n";
    out += "# horizon: " + full(path.horizon) + "\n";
    append_fmt(out, "# exploded: %d\n", path.exploded ? 1 : 0);

    const std::size_t n = path.states.empty() ? 0 : path.states.front().size();
    out += "t";
    for (std::size_t i = 1; i <= n; ++i) append_fmt(out, ",x%zu", i);
    out += ",h\n";

    CompiledExpr hc(h);
    std::vector<double> stack;
    for (std::size_t j = 0; j < path.times.size(); ++j) {
        out += full(path.times[j]);
        for (double v : path.states[j]) out += "," + full(v);
        double hv;
        try {
            hv = hc.eval(path.states[j], stack);
        } catch (const EvalError&) {
            hv = std::numeric_limits<double>::quiet_NaN();
        }
        out += "," + full(hv) + "\n";
    }
    return out;
}

std::string profile_csv(const LyapunovProfile& prof) {
    std::string out;
    out += "# model: " + prof.model_name + "\n";
    append_fmt(out, "# n_paths: %lld\n", prof.n_paths);
    out += "# dt: " + full(prof.dt) + "\n";
    out += "# horizon: " + full(prof.horizon) + "\n";
    append_fmt(out, "# seed: %llu\n", static_cast<unsigned long long>(prof.seed));
    out += "# cell: P[sup distance surrogate > eps] over the horizon\n";

    out += "init_dist";
    for (double e : prof.eps) out += ",eps=" + brief(e);
    out += ",degenerate\n";
    for (std::size_t di = 0; di < prof.init_dists.size(); ++di) {
        out += full(prof.init_dists[di]);
        for (double v : prof.exceed_probability[di]) out += "," + full(v);
        append_fmt(out, ",%d\n", prof.degenerate_gradient[di] ? 1 : 0);
    }
    return out;
}

namespace {

double json_num(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::string witness_text(const json& cond) {
    Point p;
    for (const json& v : cond.at("witness")) p.push_back(json_num(v));
    return point_text(p);
}

// "condition (i): Lh + alpha(h) >= 0" -> "condition (i)"; names without a
// colon are used whole.
std::string condition_label(const std::string& name) {
    const std::size_t colon = name.find(':');
    return colon == std::string::npos ? name : name.substr(0, colon);
}

void render_condition(std::string& out, const json& cond, const std::string& indent) {
    const std::string name = cond.at("name").get<std::string>();
    const bool zero_form = name.find(" = 0") != std::string::npos;
    const bool passed = cond.at("passed").get<bool>();
    out += indent + condition_label(name) + ": ";
    if (passed) {
        if (zero_form)
            out += "PASS (max |value| " + brief(-json_num(cond.at("min_margin"))) + ")";
        else
            out += "PASS (min margin " + brief(json_num(cond.at("min_margin"))) + ")";
    } else {
        out += "FAIL (violation " + brief(json_num(cond.at("worst_violation"))) + " at " +
               witness_text(cond) + "; value " + brief(json_num(cond.at("witness_value"))) + ")";
    }
    out += "\n";
}

void render_regularity(std::string& out, const json& reg, const std::string& indent) {
    for (const char* key : {"growth", "lipschitz"}) {
        if (!reg.contains(key)) continue;
        const json& est = reg.at(key);
        out += indent + "Assumption 1 (" + std::string(key) + "): L >= " +
               brief(json_num(est.at("constant"))) + " (sampled lower bound, " +
               std::to_string(est.at("samples").get<long long>()) +
               (est.at("kind") == "lipschitz" ? " pairs)" : " samples)") + "\n";
    }
}

void render_check(std::string& out, const json& doc, const std::string& indent) {
    const std::string variant = doc.at("variant").get<std::string>();
    out += indent + (variant == "szbf" ? "SZBF check" : "drift-only ZBF check");
    out += " of model " + doc.at("model").get<std::string>() + "\n";
    out += indent + "  conclusion: " + doc.at("conclusion").get<std::string>() + "\n";
    for (const json& cond : doc.at("conditions")) render_condition(out, cond, indent + "  ");
    out += indent + "  alpha: " + doc.at("alpha").get<std::string>() + ", points checked: " +
           std::to_string(doc.at("points_checked").get<long long>()) + "\n";
    if (doc.contains("regularity")) render_regularity(out, doc.at("regularity"), indent + "  ");
}

void render_lemma1(std::string& out, const json& doc) {
    out += "Lemma 1 check of model " + doc.at("model").get<std::string>() + "\n";
    render_condition(out, doc.at("second_order"), "  ");
    render_condition(out, doc.at("coupling"), "  ");
    out += std::string("  hypotheses hold: ") +
           (doc.at("hypotheses_hold").get<bool>() ? "yes" : "no") + "\n";
    out += std::string("  margins agree: ") + (doc.at("margins_agree").get<bool>() ? "yes" : "no") +
           " (max gap " + brief(json_num(doc.at("max_margin_gap"))) + ")\n";
    out += "  conclusion: " + doc.at("conclusion").get<std::string>() + "\n";
    render_check(out, doc.at("drift_only"), "  ");
    render_check(out, doc.at("szbf"), "  ");
}

void render_exit_stats(std::string& out, const json& doc) {
    out += "Exit statistics for model " + doc.at("model").get<std::string>() + "\n";
    append_fmt(out, "  paths: %lld, exited: %lld, exploded: %lld\n",
               doc.at("n_paths").get<long long>(), doc.at("n_exited").get<long long>(),
               doc.at("n_exploded").get<long long>());
    out += "  exit probability: " + brief(json_num(doc.at("exit_probability"))) + " (95% CI [" +
           brief(json_num(doc.at("wilson95")[0])) + ", " + brief(json_num(doc.at("wilson95")[1])) +
           "])\n";
    const json& et = doc.at("exit_time");
    if (et.at("min").is_null()) {
        out += "  exit times: none observed\n";
    } else {
        out += "  exit time min/median/max: " + brief(json_num(et.at("min"))) + " / " +
               brief(json_num(et.at("median"))) + " / " + brief(json_num(et.at("max"))) + "\n";
    }
    out += "  dt: " + brief(json_num(doc.at("dt"))) + ", horizon: " +
           brief(json_num(doc.at("horizon"))) + ", seed: " +
           std::to_string(doc.at("seed").get<unsigned long long>()) + "\n";
    out += "  " + doc.at("statement").get<std::string>() + "\n";
}

void render_lyapunov(std::string& out, const json& doc) {
    out += "Stability (Lyapunov chain) check of model " + doc.at("model").get<std::string>() + "\n";
    out += "  conclusion: " + doc.at("conclusion").get<std::string>() + "\n";
    for (const json& cond : doc.at("conditions")) render_condition(out, cond, "  ");
    out += "  alpha: " + doc.at("alpha").get<std::string>() + ", points checked: " +
           std::to_string(doc.at("points_checked").get<long long>()) + " (" +
           std::to_string(doc.at("points_off_c").get<long long>()) + " outside C)\n";
}

void render_profile(std::string& out, const json& doc) {
    out += "Stability profile of model " + doc.at("model").get<std::string>() +
           " (P[sup distance surrogate > eps])\n";
    out += "  init_dist";
    for (const json& e : doc.at("eps")) out += "  eps=" + brief(json_num(e));
    out += "\n";
    const json& dists = doc.at("init_dists");
    const json& matrix = doc.at("exceed_probability");
    const json& degen = doc.at("degenerate_gradient");
    for (std::size_t di = 0; di < dists.size(); ++di) {
        out += "  " + brief(json_num(dists[di]));
        for (const json& v : matrix[di]) out += "  " + brief(json_num(v));
        if (degen[di].get<bool>()) out += "  [degenerate gradient]";
        out += "\n";
    }
    append_fmt(out, "  n_paths: %lld, dt: %s, horizon: %s, seed: %llu\n",
               doc.at("n_paths").get<long long>(), brief(json_num(doc.at("dt"))).c_str(),
               brief(json_num(doc.at("horizon"))).c_str(),
               static_cast<unsigned long long>(doc.at("seed").get<unsigned long long>()));
}

}  // namespace

std::string render_summary(const std::vector<nlohmann::json>& docs) {
    if (docs.empty()) throw std::runtime_error("render_summary: no documents given");
    std::string out;
    for (const json& doc : docs) {
        if (!doc.contains("schema_version") || !doc.at("schema_version").is_number_integer() ||
            doc.at("schema_version").get<int>() != kSchemaVersion) {
            throw std::runtime_error("render_summary: schema_version mismatch (expected " +
                                     std::to_string(kSchemaVersion) + ")");
        }
        const std::string kind = doc.value("kind", "");
        if (!out.empty()) out += "\n";
        if (kind == "check")
            render_check(out, doc, "");
        else if (kind == "lemma1")
            render_lemma1(out, doc);
        else if (kind == "exit-stats")
            render_exit_stats(out, doc);
        else if (kind == "lyapunov-check")
            render_lyapunov(out, doc);
        else if (kind == "stability-profile")
            render_profile(out, doc);
        else
            throw std::runtime_error("render_summary: unknown document kind '" + kind + "'");
    }
    return out;
}

}  // namespace szbf
