// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "szbf/generator.hpp"
#include "szbf/model.hpp"

namespace szbf {

/// Extended class-K comparison function: strictly increasing with
/// alpha(0) = 0, defined on an interval around 0 wide enough to cover the
/// range of h. Built by make_alpha, which rejects specs that fail either
/// property on a sampled grid.
class ClassKeFn {
public:
    double operator()(double r) const;
    const AlphaSpec& spec() const noexcept { return spec_; }
    std::string describe() const;

private:
    friend ClassKeFn make_alpha(const AlphaSpec&, double, double);
    explicit ClassKeFn(AlphaSpec spec) : spec_(std::move(spec)) {}
    AlphaSpec spec_;
};

/// Validates and wraps an AlphaSpec. Linear/cubic require c > 0. Custom
/// expressions are checked on a 512-point grid over [r_lo, r_hi]:
/// alpha(0) must be 0 to within 1e-15 and values must be strictly
/// increasing; violations throw std::invalid_argument naming a witness
/// interval. Checks re-run automatically over the actual h-range inside
/// check_szbf / check_zbf_drift_only.
ClassKeFn make_alpha(const AlphaSpec& spec, double r_lo = -1.0, double r_hi = 1.0);

/// Where condition checks sample the domain: a regular grid (grid_per_axis
/// points per axis) plus uniform random points, optionally restricted to
/// D minus C = {h < 0} or to a shell |h| <= shell_fraction * range(h).
struct SamplingPlan {
    enum class Restrict { Domain, DMinusC, BoundaryShell };
    int grid_per_axis = 101;
    long long random_samples = 0;
    std::uint64_t seed = 0;
    Restrict restrict_to = Restrict::Domain;
    double shell_fraction = 0.05;
};

std::string to_string(SamplingPlan::Restrict r);

/// Deterministic point set for a plan: grid in row-major order (x1
/// slowest), then random points, membership-filtered, then the h
/// restriction. The same (domain, plan, h) always yields the same points.
std::vector<Point> enumerate_points(const Region& domain, const SamplingPlan& plan, const Expr& h);

struct CheckOptions {
    bool sum_only = false;      // check only the summed coupling, not per channel
    double tol_scale = 1e-9;    // scale factor for the scale-aware tolerances
    bool keep_points = true;    // retain per-point records (needed for CSV)
};

/// Everything recorded at one sampled point. margin is the inequality
/// slack (>= -tol passes); couplings are grad h . sigma_k per channel.
struct PointRecord {
    Point x;
    double h = 0.0;
    double margin = 0.0;
    double margin_tol = 0.0;
    std::vector<double> couplings;
    std::vector<double> coupling_tols;
    double coupling_sum = 0.0;
    double coupling_sum_tol = 0.0;
};

struct ConditionResult {
    std::string name;
    bool passed = true;
    double min_margin = std::numeric_limits<double>::infinity();
    double worst_violation = 0.0;  // largest tolerance-adjusted violation
    Point witness;                 // point of the worst margin / violation
    double witness_value = 0.0;    // fresh re-evaluation at the witness
};

enum class Conclusion { CertifiedOnSamples, Refuted, Inconclusive };
std::string to_string(Conclusion c);

struct VerificationReport {
    std::string check;  // "szbf" or "zbf-drift-only"
    std::string model_name;
    std::string alpha_desc;
    Conclusion conclusion = Conclusion::Inconclusive;
    std::vector<ConditionResult> conditions;
    long long points_checked = 0;
    SamplingPlan plan;
    CheckOptions options;
    std::vector<PointRecord> points;  // empty when options.keep_points is false
    std::vector<std::string> notes;
};

/// Definition check on sampled points of D: condition (i)
/// Lh(x) >= -alpha(h(x)) and condition (ii) grad h . sigma_k(x) = 0, both
/// with scale-aware tolerances
///   tol_i  = tol_scale * (1 + |Lh| + |alpha(h)|)
///   tol_ii = tol_scale * (1 + |grad h| * |sigma_k|).
/// Condition (ii) is checked per channel and in summed form; per-channel
/// failures are decisive unless options.sum_only is set, and both verdicts
/// are always reported. A refuted report carries a witness whose violation
/// was reproduced by a fresh evaluation. "Certified" always means
/// certified-on-samples: no claim is made between sample points.
VerificationReport check_szbf(const SdeModel& model, const BarrierSpec& barrier,
                              const SamplingPlan& plan, const CheckOptions& options = {});

/// Drift-only barrier check: grad h . b(x) >= -alpha(h(x)) on sampled
/// points, ignoring diffusion entirely. Sound for the SDE only when the
/// second-order and coupling terms vanish (see check_lemma1).
VerificationReport check_zbf_drift_only(const SdeModel& model, const BarrierSpec& barrier,
                                        const SamplingPlan& plan, const CheckOptions& options = {});

/// Reduction hypotheses and their consequence, all on the same samples:
/// (i) the second-order generator term vanishes, (ii) every coupling
/// vanishes. When both hold, the drift-only and full checks coincide;
/// max_margin_gap records the largest observed difference between the two
/// margins as a cross-validation.
struct Lemma1Report {
    std::string model_name;
    ConditionResult second_order;  // hypothesis (i)
    ConditionResult coupling;      // hypothesis (ii)
    bool hypotheses_hold = false;
    VerificationReport drift_only;
    VerificationReport szbf;
    double max_margin_gap = 0.0;
    bool margins_agree = false;    // gap <= 1e-12 * (1 + |margin|) everywhere
    Conclusion conclusion = Conclusion::Inconclusive;
    long long points_checked = 0;
    std::vector<std::string> notes;
};

Lemma1Report check_lemma1(const SdeModel& model, const BarrierSpec& barrier,
                          const SamplingPlan& plan, const CheckOptions& options = {});

}  // namespace szbf
