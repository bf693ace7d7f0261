// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "szbf/expr.hpp"
#include "szbf/region.hpp"

namespace szbf {

/// dx_t = b(x_t) dt + sum_k sigma_k(x_t) dw_t^k with n state variables and
/// m independent Wiener channels. diffusion[k-1][i-1] is component i of
/// channel k's coefficient vector.
struct SdeModel {
    std::string name;
    int n = 0;
    int m = 0;
    std::vector<Expr> drift;
    std::vector<std::vector<Expr>> diffusion;
};

/// Comparison function for the barrier inequality. Linear is alpha(r) = c*r,
/// cubic is alpha(r) = c*r^3; custom supplies alpha as an expression in x1
/// and is validated by make_alpha before use.
struct AlphaSpec {
    enum class Kind { Linear, Cubic, Custom };
    Kind kind = Kind::Linear;
    double c = 1.0;
    std::optional<Expr> expr;
};

/// Barrier h with its comparison function and the bounded domain D on which
/// conditions are checked. The safe set is C = {x : h(x) >= 0}.
struct BarrierSpec {
    Expr h;
    AlphaSpec alpha;
    Region domain;

    bool in_safe_set(const Point& x) const { return h.eval(x) >= 0.0; }
};

struct LoadedModel {
    SdeModel model;
    BarrierSpec barrier;
};

/// Thrown on malformed model files; line() is 1-based (0 when no line applies).
class ModelError : public std::runtime_error {
public:
    ModelError(const std::string& msg, std::size_t line);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Parse the sectioned key-value model format ([model], [drift],
/// [diffusion], [barrier], and optional [alpha], [domain]). Missing
/// optional sections get the documented defaults: alpha linear with c = 1,
/// domain box [-1, 1]^n, name = default_name.
LoadedModel load_model(std::string_view text, std::string_view default_name);

/// load_model on a file's contents; the default name is the file stem.
LoadedModel load_model_file(const std::filesystem::path& path);

struct Diagnostic {
    enum class Severity { Warn, Error };
    Severity severity;
    std::string message;
};

/// Sanity diagnostics: ERROR when drift/diffusion/barrier cannot be
/// evaluated at the domain center, WARN when drift or diffusion do not
/// vanish at the origin (|value| > tol), i.e. the origin is not an
/// equilibrium of the noise-free flow.
std::vector<Diagnostic> validate(const SdeModel& model, const BarrierSpec& barrier,
                                 double tol = 1e-12);

/// Sampled lower bound for a regularity constant, with the witnessing
/// point(s). For Growth, the constant bounds
/// (|b(x)|^2 + sum_k |sigma_k(x)|^2) / (1 + |x|^2) from below over the
/// sampled points; for Lipschitz it bounds
/// (|b(x)-b(y)| + sum_k |sigma_k(x)-sigma_k(y)|) / |x-y| over sampled
/// pairs. Estimates never decrease as samples are added (sampling is a
/// deterministic prefix sequence for a fixed seed).
struct RegularityEstimate {
    enum class Kind { Growth, Lipschitz };
    Kind kind;
    double constant = 0.0;
    long long samples = 0;
    Point witness_x, witness_y;  // witness_y only for Lipschitz
};

RegularityEstimate estimate_growth_constant(const SdeModel& model, const Region& domain,
                                            long long samples, std::uint64_t seed);

RegularityEstimate estimate_lipschitz(const SdeModel& model, const Region& domain,
                                      long long pairs, std::uint64_t seed);

/// Uniform draw from domain (rejection against the membership expression,
/// then optionally against predicate_h >= 0 when it is non-null). Used by
/// the estimators above and by simulation initial-condition sampling.
Point sample_point(const Region& domain, class PhiloxRng& rng, const Expr* predicate_h = nullptr);

}  // namespace szbf
