// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
//
// Model file loading, sanity diagnostics, and sampled regularity bounds.

#include "szbf/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "szbf/rng.hpp"

namespace szbf {

ModelError::ModelError(const std::string& msg, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}

namespace {

struct Value {
    enum class Kind { String, Number, StringArray, NumberArray } kind;
    std::string str;
    double num = 0.0;
    std::vector<std::string> str_array;
    std::vector<double> num_array;
    std::size_t line = 0;
};

using Section = std::map<std::string, Value, std::less<>>;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Strip a trailing comment; '#' inside double quotes does not count.
std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        else if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

double parse_number_token(std::string_view tok, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ModelError("expected a number, got '" + std::string(tok) + "'", line);
    return v;
}

Value parse_value(std::string_view raw, std::size_t line) {
    Value v;
    v.line = line;
    raw = trim(raw);
    if (raw.empty()) throw ModelError("missing value", line);
    if (raw.front() == '"') {
        auto close = raw.find('"', 1);
        if (close == std::string_view::npos) throw ModelError("unterminated string", line);
        if (!trim(raw.substr(close + 1)).empty())
            throw ModelError("unexpected text after string value", line);
        v.kind = Value::Kind::String;
        v.str = std::string(raw.substr(1, close - 1));
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') throw ModelError("unterminated array", line);
        std::string_view body = raw.substr(1, raw.size() - 2);
        std::vector<std::string_view> elems;
        bool quoted = false;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= body.size(); ++i) {
            if (i == body.size() || (body[i] == ',' && !quoted)) {
                auto e = trim(body.substr(start, i - start));
                if (e.empty()) {
                    bool empty_array = i == body.size() && elems.empty() && trim(body).empty();
                    if (!empty_array) throw ModelError("empty array element", line);
                } else {
                    elems.push_back(e);
                }
                start = i + 1;
            } else if (body[i] == '"') {
                quoted = !quoted;
            }
        }
        if (quoted) throw ModelError("unterminated string in array", line);
        bool strings = !elems.empty() && elems.front().front() == '"';
        v.kind = strings ? Value::Kind::StringArray : Value::Kind::NumberArray;
        for (auto e : elems) {
            if (strings) {
                if (e.size() < 2 || e.front() != '"' || e.back() != '"')
                    throw ModelError("array mixes strings and numbers", line);
                v.str_array.emplace_back(e.substr(1, e.size() - 2));
            } else {
                v.num_array.push_back(parse_number_token(e, line));
            }
        }
        return v;
    }
    v.kind = Value::Kind::Number;
    v.num = parse_number_token(raw, line);
    return v;
}

// Split "k1 = v1, k2 = v2" on commas that sit outside quotes and brackets.
std::vector<std::string_view> split_pairs(std::string_view s) {
    std::vector<std::string_view> out;
    bool quoted = false;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || (s[i] == ',' && !quoted && depth == 0)) {
            auto piece = trim(s.substr(start, i - start));
            if (!piece.empty()) out.push_back(piece);
            start = i + 1;
        } else if (s[i] == '"') {
            quoted = !quoted;
        } else if (s[i] == '[' && !quoted) {
            ++depth;
        } else if (s[i] == ']' && !quoted) {
            --depth;
        }
    }
    return out;
}

class ModelText {
public:
    explicit ModelText(std::string_view text) {
        std::string current;
        std::size_t lineno = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            auto nl = text.find('\n', pos);
            if (nl == std::string_view::npos) nl = text.size();
            std::string_view line = trim(strip_comment(text.substr(pos, nl - pos)));
            ++lineno;
            pos = nl + 1;
            if (line.empty()) continue;
            if (line.front() == '[') {
                auto close = line.find(']');
                if (close == std::string_view::npos) throw ModelError("unterminated section header", lineno);
                current = std::string(trim(line.substr(1, close - 1)));
                if (current.empty()) throw ModelError("empty section name", lineno);
                line = trim(line.substr(close + 1));
                if (line.empty()) continue;
            }
            if (current.empty()) throw ModelError("key-value before any [section]", lineno);
            for (auto pair : split_pairs(line)) {
                auto eq = pair.find('=');
                if (eq == std::string_view::npos) throw ModelError("expected 'key = value'", lineno);
                std::string key(trim(pair.substr(0, eq)));
                if (key.empty()) throw ModelError("empty key", lineno);
                auto& section = sections_[current];
                if (section.count(key))
                    throw ModelError("duplicate key '" + key + "' in [" + current + "]", lineno);
                section.emplace(std::move(key), parse_value(pair.substr(eq + 1), lineno));
            }
        }
    }

    const Value* find(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        return &k->second;
    }

    const Value& require(const std::string& section, const std::string& key) const {
        const Value* v = find(section, key);
        if (!v) throw ModelError("missing required key '" + key + "' in [" + section + "]", 0);
        return *v;
    }

    // Typo safety: every parsed key must have been consumed by the loader.
    void check_known(const std::map<std::string, std::vector<std::string>>& known) const {
        for (const auto& [sname, section] : sections_) {
            auto it = known.find(sname);
            if (it == known.end()) throw ModelError("unknown section [" + sname + "]", section.begin()->second.line);
            for (const auto& [key, value] : section) {
                bool ok = false;
                for (const auto& k : it->second)
                    if (k == key) { ok = true; break; }
                if (!ok)
                    throw ModelError("unknown key '" + key + "' in [" + sname + "]", value.line);
            }
        }
    }

private:
    std::map<std::string, Section, std::less<>> sections_;
};

int require_int(const Value& v, const char* what) {
    if (v.kind != Value::Kind::Number || v.num != std::floor(v.num) || v.num < 0 || v.num > 1e9)
        throw ModelError(std::string(what) + " must be a non-negative integer", v.line);
    return static_cast<int>(v.num);
}

Expr parse_entry_expr(const std::string& text, int dim, std::size_t line, const std::string& what) {
    try {
        return parse_expr(text, dim);
    } catch (const ParseError& e) {
        throw ModelError(what + ": " + e.what(), line);
    }
}

std::vector<Expr> require_expr_array(const Value& v, int n, int dim, const std::string& what) {
    if (v.kind != Value::Kind::StringArray)
        throw ModelError(what + " must be an array of quoted expressions", v.line);
    if (static_cast<int>(v.str_array.size()) != n)
        throw ModelError(what + " has " + std::to_string(v.str_array.size()) +
                             " entries but the model declares n = " + std::to_string(n),
                         v.line);
    std::vector<Expr> out;
    out.reserve(v.str_array.size());
    for (std::size_t i = 0; i < v.str_array.size(); ++i)
        out.push_back(parse_entry_expr(v.str_array[i], dim, v.line,
                                       what + "[" + std::to_string(i + 1) + "]"));
    return out;
}

Point require_num_array(const Value& v, int n, const std::string& what) {
    if (v.kind != Value::Kind::NumberArray || static_cast<int>(v.num_array.size()) != n)
        throw ModelError(what + " must be an array of " + std::to_string(n) + " numbers", v.line);
    return v.num_array;
}

}  // namespace

LoadedModel load_model(std::string_view text, std::string_view default_name) {
    ModelText t(text);

    SdeModel model;
    model.n = require_int(t.require("model", "n"), "n");
    model.m = require_int(t.require("model", "m"), "m");
    if (model.n < 1) throw ModelError("n must be at least 1", t.require("model", "n").line);

    if (const Value* name = t.find("model", "name")) {
        if (name->kind != Value::Kind::String) throw ModelError("name must be a quoted string", name->line);
        model.name = name->str;
    } else {
        model.name = std::string(default_name);
    }

    std::map<std::string, std::vector<std::string>> known = {
        {"model", {"name", "n", "m"}},
        {"drift", {"b"}},
        {"diffusion", {}},
        {"barrier", {"h"}},
        {"alpha", {"kind", "c", "expr"}},
        {"domain", {"box_min", "box_max", "g"}},
    };
    for (int k = 1; k <= model.m; ++k) known["diffusion"].push_back("sigma" + std::to_string(k));

    model.drift = require_expr_array(t.require("drift", "b"), model.n, model.n, "b");
    for (int k = 1; k <= model.m; ++k) {
        std::string key = "sigma" + std::to_string(k);
        model.diffusion.push_back(require_expr_array(t.require("diffusion", key), model.n, model.n, key));
    }

    const Value& hv = t.require("barrier", "h");
    if (hv.kind != Value::Kind::String) throw ModelError("h must be a quoted expression", hv.line);
    Expr h = parse_entry_expr(hv.str, model.n, hv.line, "h");

    AlphaSpec alpha;
    if (const Value* kind = t.find("alpha", "kind")) {
        if (kind->kind != Value::Kind::String) throw ModelError("alpha kind must be a string", kind->line);
        if (kind->str == "linear") alpha.kind = AlphaSpec::Kind::Linear;
        else if (kind->str == "cubic") alpha.kind = AlphaSpec::Kind::Cubic;
        else if (kind->str == "custom") alpha.kind = AlphaSpec::Kind::Custom;
        else throw ModelError("alpha kind must be linear, cubic, or custom", kind->line);
    }
    if (const Value* c = t.find("alpha", "c")) {
        if (c->kind != Value::Kind::Number) throw ModelError("alpha c must be a number", c->line);
        alpha.c = c->num;
    }
    if (const Value* ae = t.find("alpha", "expr")) {
        if (ae->kind != Value::Kind::String) throw ModelError("alpha expr must be a quoted expression", ae->line);
        alpha.expr = parse_entry_expr(ae->str, 1, ae->line, "alpha expr");
    }
    if (alpha.kind == AlphaSpec::Kind::Custom && !alpha.expr)
        throw ModelError("alpha kind \"custom\" requires an expr", 0);

    Point lo(static_cast<std::size_t>(model.n), -1.0);
    Point hi(static_cast<std::size_t>(model.n), 1.0);
    if (const Value* bm = t.find("domain", "box_min")) lo = require_num_array(*bm, model.n, "box_min");
    if (const Value* bm = t.find("domain", "box_max")) hi = require_num_array(*bm, model.n, "box_max");
    std::optional<Expr> g;
    if (const Value* gv = t.find("domain", "g")) {
        if (gv->kind != Value::Kind::String) throw ModelError("g must be a quoted expression", gv->line);
        g = parse_entry_expr(gv->str, model.n, gv->line, "g");
    }

    t.check_known(known);

    Region domain = g ? Region::superlevel(std::move(*g), std::move(lo), std::move(hi))
                      : Region::box(std::move(lo), std::move(hi));
    return LoadedModel{std::move(model), BarrierSpec{std::move(h), std::move(alpha), std::move(domain)}};
}

LoadedModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file: " + path.string(), 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str(), path.stem().string());
}

// ---------------------------------------------------------------------------
// Diagnostics

std::vector<Diagnostic> validate(const SdeModel& model, const BarrierSpec& barrier, double tol) {
    std::vector<Diagnostic> out;
    const Point center = barrier.domain.center();
    auto check_center = [&](const Expr& e, const std::string& what) {
        try {
            e.eval(center);
        } catch (const EvalError& err) {
            out.push_back({Diagnostic::Severity::Error,
                           what + " cannot be evaluated at the domain center: " + err.what()});
        }
    };
    for (int i = 0; i < model.n; ++i)
        check_center(model.drift[static_cast<std::size_t>(i)], "b[" + std::to_string(i + 1) + "]");
    for (int k = 0; k < model.m; ++k)
        for (int i = 0; i < model.n; ++i)
            check_center(model.diffusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)],
                         "sigma" + std::to_string(k + 1) + "[" + std::to_string(i + 1) + "]");
    check_center(barrier.h, "h");

    const Point origin(static_cast<std::size_t>(model.n), 0.0);
    auto check_origin = [&](const std::vector<Expr>& field, const std::string& what) {
        for (int i = 0; i < model.n; ++i) {
            try {
                double v = field[static_cast<std::size_t>(i)].eval(origin);
                if (std::fabs(v) > tol) {
                    out.push_back({Diagnostic::Severity::Warn,
                                   what + " does not vanish at the origin (component " +
                                       std::to_string(i + 1) + " = " + std::to_string(v) + ")"});
                    return;
                }
            } catch (const EvalError&) {
                out.push_back({Diagnostic::Severity::Warn,
                               what + " cannot be evaluated at the origin"});
                return;
            }
        }
    };
    check_origin(model.drift, "drift");
    for (int k = 0; k < model.m; ++k)
        check_origin(model.diffusion[static_cast<std::size_t>(k)], "sigma" + std::to_string(k + 1));
    return out;
}

// ---------------------------------------------------------------------------
// Sampling and regularity estimates

Point sample_point(const Region& domain, PhiloxRng& rng, const Expr* predicate_h) {
    const Point& lo = domain.lo();
    const Point& hi = domain.hi();
    Point x(lo.size());
    for (int attempt = 0; attempt < 100000; ++attempt) {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform01();
        if (domain.membership() && domain.membership()->eval(x) < 0.0) continue;
        if (predicate_h && predicate_h->eval(x) < 0.0) continue;
        return x;
    }
    throw std::runtime_error("sample_point: rejection sampling found no admissible point in 1e5 tries");
}

namespace {

double norm(const Point& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

Point eval_field(const std::vector<Expr>& field, const Point& x) {
    Point out(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) out[i] = field[i].eval(x);
    return out;
}

}  // namespace

RegularityEstimate estimate_growth_constant(const SdeModel& model, const Region& domain,
                                            long long samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("estimate_growth_constant: samples must be >= 1");
    PhiloxRng rng(seed, 0);
    RegularityEstimate est{RegularityEstimate::Kind::Growth, -1.0, samples, {}, {}};
    for (long long s = 0; s < samples; ++s) {
        Point x = sample_point(domain, rng);
        double num = 0.0;
        for (const Expr& bi : model.drift) {
            double v = bi.eval(x);
            num += v * v;
        }
        for (const auto& col : model.diffusion)
            for (const Expr& si : col) {
                double v = si.eval(x);
                num += v * v;
            }
        double n2 = norm(x);
        double ratio = num / (1.0 + n2 * n2);
        if (ratio > est.constant) {
            est.constant = ratio;
            est.witness_x = x;
        }
    }
    return est;
}

RegularityEstimate estimate_lipschitz(const SdeModel& model, const Region& domain, long long pairs,
                                      std::uint64_t seed) {
    if (pairs < 1) throw std::invalid_argument("estimate_lipschitz: pairs must be >= 1");
    PhiloxRng rng(seed, 0);
    RegularityEstimate est{RegularityEstimate::Kind::Lipschitz, 0.0, pairs, {}, {}};
    for (long long s = 0; s < pairs; ++s) {
        Point x = sample_point(domain, rng);
        Point y = sample_point(domain, rng);
        Point d(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
        double dist = norm(d);
        if (dist < 1e-12) continue;
        Point bx = eval_field(model.drift, x);
        Point by = eval_field(model.drift, y);
        for (std::size_t i = 0; i < bx.size(); ++i) bx[i] -= by[i];
        double num = norm(bx);
        for (const auto& col : model.diffusion) {
            Point sx = eval_field(col, x);
            Point sy = eval_field(col, y);
            for (std::size_t i = 0; i < sx.size(); ++i) sx[i] -= sy[i];
            num += norm(sx);
        }
        double ratio = num / dist;
        if (ratio > est.constant) {
            est.constant = ratio;
            est.witness_x = x;
            est.witness_y = y;
        }
    }
    return est;
}

}  // namespace szbf
