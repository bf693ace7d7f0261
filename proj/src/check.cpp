// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
//
// Sampled certification: barrier condition checks with scale-aware
// tolerances, witness re-verification, and the drift-only reduction.

#include "szbf/check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>

#include "szbf/rng.hpp"

namespace szbf {

double ClassKeFn::operator()(double r) const {
    switch (spec_.kind) {
        case AlphaSpec::Kind::Linear: return spec_.c * r;
        case AlphaSpec::Kind::Cubic: return spec_.c * r * r * r;
        case AlphaSpec::Kind::Custom: return spec_.expr->eval(std::span<const double>(&r, 1));
    }
    return 0.0;
}

std::string ClassKeFn::describe() const {
    char buf[64];
    switch (spec_.kind) {
        case AlphaSpec::Kind::Linear:
            std::snprintf(buf, sizeof buf, "linear (c = %g)", spec_.c);
            return buf;
        case AlphaSpec::Kind::Cubic:
            std::snprintf(buf, sizeof buf, "cubic (c = %g)", spec_.c);
            return buf;
        case AlphaSpec::Kind::Custom:
            return "custom: " + spec_.expr->str();
    }
    return "?";
}

namespace {

void validate_custom_alpha(const Expr& e, double r_lo, double r_hi) {
    if (!(r_lo < 0.0 && r_hi > 0.0)) {
        r_lo = std::min(r_lo, -1e-6);
        r_hi = std::max(r_hi, 1e-6);
    }
    double zero = 0.0;
    double at_zero = e.eval(std::span<const double>(&zero, 1));
    if (std::fabs(at_zero) > 1e-15)
        throw std::invalid_argument("alpha: alpha(0) = " + std::to_string(at_zero) +
                                    ", must vanish at 0");
    const int grid = 512;
    double prev_r = r_lo;
    double prev_v = e.eval(std::span<const double>(&prev_r, 1));
    for (int i = 1; i <= grid; ++i) {
        double r = r_lo + (r_hi - r_lo) * static_cast<double>(i) / grid;
        double v = e.eval(std::span<const double>(&r, 1));
        if (!(v > prev_v)) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "alpha: not strictly increasing on [%g, %g]: alpha(%g) = %g, "
                          "alpha(%g) = %g",
                          r_lo, r_hi, prev_r, prev_v, r, v);
            throw std::invalid_argument(buf);
        }
        prev_r = r;
        prev_v = v;
    }
}

}  // namespace

ClassKeFn make_alpha(const AlphaSpec& spec, double r_lo, double r_hi) {
    switch (spec.kind) {
        case AlphaSpec::Kind::Linear:
        case AlphaSpec::Kind::Cubic:
            if (!(spec.c > 0.0))
                throw std::invalid_argument("alpha: c must be positive, got " +
                                            std::to_string(spec.c));
            break;
        case AlphaSpec::Kind::Custom:
            if (!spec.expr) throw std::invalid_argument("alpha: custom kind without an expression");
            if (spec.expr->max_variable() > 1)
                throw std::invalid_argument("alpha: custom expression must use only x1");
            validate_custom_alpha(*spec.expr, r_lo, r_hi);
            break;
    }
    return ClassKeFn(spec);
}

std::string to_string(SamplingPlan::Restrict r) {
    switch (r) {
        case SamplingPlan::Restrict::Domain: return "domain";
        case SamplingPlan::Restrict::DMinusC: return "d-minus-c";
        case SamplingPlan::Restrict::BoundaryShell: return "boundary-shell";
    }
    return "?";
}

std::string to_string(Conclusion c) {
    switch (c) {
        case Conclusion::CertifiedOnSamples: return "certified-on-samples";
        case Conclusion::Refuted: return "refuted";
        case Conclusion::Inconclusive: return "inconclusive";
    }
    return "?";
}

std::vector<Point> enumerate_points(const Region& domain, const SamplingPlan& plan, const Expr& h) {
    if (plan.grid_per_axis < 0 || plan.random_samples < 0)
        throw std::invalid_argument("sampling plan: negative sizes");
    const int n = domain.dim();
    std::vector<Point> pts;

    if (plan.grid_per_axis > 0) {
        double total = 1.0;
        for (int i = 0; i < n; ++i) total *= static_cast<double>(plan.grid_per_axis);
        if (total > 2e7)
            throw std::invalid_argument("sampling plan: grid of " + std::to_string(total) +
                                        " points is too large; lower grid_per_axis");
        const long long count = static_cast<long long>(total);
        const Point& lo = domain.lo();
        const Point& hi = domain.hi();
        Point x(static_cast<std::size_t>(n));
        for (long long idx = 0; idx < count; ++idx) {
            long long rem = idx;
            // Row-major: x1 varies slowest, xn fastest.
            for (int i = n - 1; i >= 0; --i) {
                long long g = rem % plan.grid_per_axis;
                rem /= plan.grid_per_axis;
                x[static_cast<std::size_t>(i)] =
                    plan.grid_per_axis == 1
                        ? 0.5 * (lo[static_cast<std::size_t>(i)] + hi[static_cast<std::size_t>(i)])
                        : lo[static_cast<std::size_t>(i)] +
                              (hi[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]) *
                                  static_cast<double>(g) /
                                  static_cast<double>(plan.grid_per_axis - 1);
            }
            if (!domain.membership() || domain.membership()->eval(x) >= 0.0) pts.push_back(x);
        }
    }

    if (plan.random_samples > 0) {
        PhiloxRng rng(plan.seed, 0);
        for (long long s = 0; s < plan.random_samples; ++s) pts.push_back(sample_point(domain, rng));
    }

    switch (plan.restrict_to) {
        case SamplingPlan::Restrict::Domain:
            break;
        case SamplingPlan::Restrict::DMinusC: {
            std::vector<Point> kept;
            for (auto& p : pts)
                if (h.eval(p) < 0.0) kept.push_back(std::move(p));
            pts = std::move(kept);
            break;
        }
        case SamplingPlan::Restrict::BoundaryShell: {
            double h_min = std::numeric_limits<double>::infinity();
            double h_max = -std::numeric_limits<double>::infinity();
            std::vector<double> hv(pts.size());
            for (std::size_t i = 0; i < pts.size(); ++i) {
                hv[i] = h.eval(pts[i]);
                h_min = std::min(h_min, hv[i]);
                h_max = std::max(h_max, hv[i]);
            }
            const double width = plan.shell_fraction * (h_max - h_min);
            std::vector<Point> kept;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (std::fabs(hv[i]) <= width) kept.push_back(std::move(pts[i]));
            pts = std::move(kept);
            break;
        }
    }
    return pts;
}

namespace {

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Running worst case for an inequality "margin >= -tol": tracks the
// smallest margin and, separately, the largest tolerance-adjusted
// violation (tolerances differ per point).
struct WorstCase {
    double min_margin = std::numeric_limits<double>::infinity();
    Point min_margin_at;
    double worst_violation = 0.0;
    Point violation_at;
    bool violated = false;

    void observe(const Point& x, double margin, double tol) {
        if (margin < min_margin) {
            min_margin = margin;
            min_margin_at = x;
        }
        if (margin < -tol) {
            double excess = -margin - tol;
            if (!violated || excess > worst_violation) {
                worst_violation = excess;
                violation_at = x;
            }
            violated = true;
        }
    }
};

ConditionResult finish(const std::string& name, const WorstCase& w) {
    ConditionResult r;
    r.name = name;
    r.passed = !w.violated;
    r.min_margin = w.min_margin;
    r.worst_violation = w.worst_violation;
    r.witness = w.violated ? w.violation_at : w.min_margin_at;
    return r;
}

// Running worst case for a zero test "|value| <= tol".
struct WorstZero {
    double max_abs = 0.0;
    Point max_at;
    double worst_excess = 0.0;
    Point excess_at;
    bool violated = false;

    void observe(const Point& x, double value, double tol) {
        double a = std::fabs(value);
        if (a > max_abs) {
            max_abs = a;
            max_at = x;
        }
        if (a > tol) {
            if (!violated || a - tol > worst_excess) {
                worst_excess = a - tol;
                excess_at = x;
            }
            violated = true;
        }
    }

    Point witness(const Point& fallback) const {
        if (violated) return excess_at;
        return max_at.empty() ? fallback : max_at;
    }
};

}  // namespace

namespace {

struct CommonScan {
    std::vector<Point> pts;
    bool safe_set_sampled = false;  // some point has h >= 0
};

CommonScan scan_points(const SdeModel& model, const BarrierSpec& barrier, const SamplingPlan& plan) {
    (void)model;
    CommonScan s;
    s.pts = enumerate_points(barrier.domain, plan, barrier.h);
    for (const Point& p : s.pts)
        if (barrier.h.eval(p) >= 0.0) {
            s.safe_set_sampled = true;
            break;
        }
    return s;
}

ClassKeFn alpha_for(const BarrierSpec& barrier, const std::vector<Point>& pts) {
    if (barrier.alpha.kind != AlphaSpec::Kind::Custom || pts.empty())
        return make_alpha(barrier.alpha);
    double h_min = std::numeric_limits<double>::infinity();
    double h_max = -std::numeric_limits<double>::infinity();
    for (const Point& p : pts) {
        double v = barrier.h.eval(p);
        h_min = std::min(h_min, v);
        h_max = std::max(h_max, v);
    }
    return make_alpha(barrier.alpha, h_min, h_max);
}

}  // namespace

VerificationReport check_szbf(const SdeModel& model, const BarrierSpec& barrier,
                              const SamplingPlan& plan, const CheckOptions& options) {
    VerificationReport rep;
    rep.check = "szbf";
    rep.model_name = model.name;
    rep.plan = plan;
    rep.options = options;

    CommonScan scan = scan_points(model, barrier, plan);
    rep.points_checked = static_cast<long long>(scan.pts.size());
    if (scan.pts.empty()) {
        rep.notes.push_back("no sampled points satisfied the plan; nothing was checked");
        return rep;
    }
    if (plan.restrict_to == SamplingPlan::Restrict::Domain && !scan.safe_set_sampled)
        rep.notes.push_back("no sampled point lies in C = {h >= 0}; the safe set may be empty in D");

    ClassKeFn alpha = alpha_for(barrier, scan.pts);
    rep.alpha_desc = alpha.describe();
    Generator gen(model, barrier.h);

    WorstCase w_margin;
    std::vector<WorstZero> w_chan(static_cast<std::size_t>(model.m));
    WorstZero w_sum;
    if (options.keep_points) rep.points.reserve(scan.pts.size());

    for (const Point& x : scan.pts) {
        ItoDecomposition dec = gen.decompose(x);
        const double hx = barrier.h.eval(x);
        const double ax = alpha(hx);
        const double margin = dec.drift_term + ax;
        const double tol_i =
            options.tol_scale * (1.0 + std::fabs(dec.drift_term) + std::fabs(ax));
        w_margin.observe(x, margin, tol_i);

        std::vector<double> g = gen.grad_at(x);
        const double gnorm = vec_norm(g);
        PointRecord rec;
        double sum = 0.0, sum_scale = 0.0;
        std::vector<double> ctols(static_cast<std::size_t>(model.m));
        for (int k = 0; k < model.m; ++k) {
            std::vector<double> sk(static_cast<std::size_t>(model.n));
            for (int i = 0; i < model.n; ++i)
                sk[static_cast<std::size_t>(i)] =
                    model.diffusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)].eval(x);
            const double snorm = vec_norm(sk);
            const double tol_ii = options.tol_scale * (1.0 + gnorm * snorm);
            ctols[static_cast<std::size_t>(k)] = tol_ii;
            sum += dec.noise_coeffs[static_cast<std::size_t>(k)];
            sum_scale += snorm;
            if (!options.sum_only)
                w_chan[static_cast<std::size_t>(k)].observe(
                    x, dec.noise_coeffs[static_cast<std::size_t>(k)], tol_ii);
        }
        const double sum_tol = options.tol_scale * (1.0 + gnorm * sum_scale);
        w_sum.observe(x, sum, sum_tol);

        if (options.keep_points) {
            rec.x = x;
            rec.h = hx;
            rec.margin = margin;
            rec.margin_tol = tol_i;
            rec.couplings = dec.noise_coeffs;
            rec.coupling_tols = std::move(ctols);
            rec.coupling_sum = sum;
            rec.coupling_sum_tol = sum_tol;
            rep.points.push_back(std::move(rec));
        }
    }

    ConditionResult cond_i = finish("condition (i): Lh + alpha(h) >= 0", w_margin);
    // Fresh re-evaluation at the witness, independent of the scan loop.
    cond_i.witness_value =
        Generator(model, barrier.h).apply(cond_i.witness) + alpha(barrier.h.eval(cond_i.witness));
    rep.conditions.push_back(cond_i);

    bool coupling_violated = false;
    if (!options.sum_only) {
        for (int k = 0; k < model.m; ++k) {
            const WorstZero& w = w_chan[static_cast<std::size_t>(k)];
            ConditionResult c;
            c.name = "condition (ii): grad h . sigma_" + std::to_string(k + 1) + " = 0";
            c.passed = !w.violated;
            c.min_margin = -w.max_abs;
            c.worst_violation = w.worst_excess;
            c.witness = w.witness(scan.pts.front());
            c.witness_value = Generator(model, barrier.h).coupling(c.witness, k + 1);
            coupling_violated = coupling_violated || w.violated;
            rep.conditions.push_back(std::move(c));
        }
    }
    {
        ConditionResult c;
        c.name = "condition (ii, sum): sum_k grad h . sigma_k = 0";
        c.passed = !w_sum.violated;
        c.min_margin = -w_sum.max_abs;
        c.worst_violation = w_sum.worst_excess;
        c.witness = w_sum.witness(scan.pts.front());
        {
            ItoDecomposition dec = Generator(model, barrier.h).decompose(c.witness);
            double s = 0.0;
            for (double v : dec.noise_coeffs) s += v;
            c.witness_value = s;
        }
        if (options.sum_only) coupling_violated = coupling_violated || w_sum.violated;
        rep.conditions.push_back(std::move(c));
    }

    if (w_margin.violated || coupling_violated) rep.conclusion = Conclusion::Refuted;
    else rep.conclusion = Conclusion::CertifiedOnSamples;
    rep.notes.push_back("sampled certificate: conditions verified at " +
                        std::to_string(rep.points_checked) +
                        " points only; no claim between samples");
    return rep;
}

VerificationReport check_zbf_drift_only(const SdeModel& model, const BarrierSpec& barrier,
                                        const SamplingPlan& plan, const CheckOptions& options) {
    VerificationReport rep;
    rep.check = "zbf-drift-only";
    rep.model_name = model.name;
    rep.plan = plan;
    rep.options = options;

    CommonScan scan = scan_points(model, barrier, plan);
    rep.points_checked = static_cast<long long>(scan.pts.size());
    if (scan.pts.empty()) {
        rep.notes.push_back("no sampled points satisfied the plan; nothing was checked");
        return rep;
    }
    if (plan.restrict_to == SamplingPlan::Restrict::Domain && !scan.safe_set_sampled)
        rep.notes.push_back("no sampled point lies in C = {h >= 0}; the safe set may be empty in D");

    ClassKeFn alpha = alpha_for(barrier, scan.pts);
    rep.alpha_desc = alpha.describe();
    Generator gen(model, barrier.h);

    WorstCase w_margin;
    if (options.keep_points) rep.points.reserve(scan.pts.size());
    for (const Point& x : scan.pts) {
        const double first = gen.first_order_term(x);
        const double hx = barrier.h.eval(x);
        const double ax = alpha(hx);
        const double margin = first + ax;
        const double tol = options.tol_scale * (1.0 + std::fabs(first) + std::fabs(ax));
        w_margin.observe(x, margin, tol);
        if (options.keep_points) {
            PointRecord rec;
            rec.x = x;
            rec.h = hx;
            rec.margin = margin;
            rec.margin_tol = tol;
            rep.points.push_back(std::move(rec));
        }
    }

    ConditionResult cond = finish("condition (i): grad h . b + alpha(h) >= 0", w_margin);
    cond.witness_value = Generator(model, barrier.h).first_order_term(cond.witness) +
                         alpha(barrier.h.eval(cond.witness));
    rep.conditions.push_back(cond);
    rep.conclusion = w_margin.violated ? Conclusion::Refuted : Conclusion::CertifiedOnSamples;
    rep.notes.push_back(
        "drift-only check ignores diffusion; sound for the SDE only when the second-order "
        "and coupling terms vanish");
    return rep;
}

Lemma1Report check_lemma1(const SdeModel& model, const BarrierSpec& barrier,
                          const SamplingPlan& plan, const CheckOptions& options) {
    Lemma1Report rep;
    rep.model_name = model.name;

    std::vector<Point> pts = enumerate_points(barrier.domain, plan, barrier.h);
    rep.points_checked = static_cast<long long>(pts.size());
    Generator gen(model, barrier.h);

    WorstZero w_second, w_coupling;
    for (const Point& x : pts) {
        const double second = gen.second_order_term(x);
        const double tol2 = options.tol_scale * (1.0 + gen.second_order_scale(x));
        w_second.observe(x, second, tol2);

        std::vector<double> g = gen.grad_at(x);
        const double gnorm = vec_norm(g);
        for (int k = 1; k <= model.m; ++k) {
            std::vector<double> sk(static_cast<std::size_t>(model.n));
            for (int i = 0; i < model.n; ++i)
                sk[static_cast<std::size_t>(i)] =
                    model.diffusion[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(i)].eval(x);
            const double tol = options.tol_scale * (1.0 + gnorm * vec_norm(sk));
            w_coupling.observe(x, gen.coupling(x, k), tol);
        }
    }

    rep.second_order.name = "reduction hypothesis (i): second-order term = 0";
    rep.second_order.passed = !w_second.violated && !pts.empty();
    rep.second_order.min_margin = -w_second.max_abs;
    rep.second_order.worst_violation = w_second.worst_excess;
    if (!pts.empty()) {
        rep.second_order.witness = w_second.witness(pts.front());
        rep.second_order.witness_value =
            Generator(model, barrier.h).second_order_term(rep.second_order.witness);
    }

    rep.coupling.name = "reduction hypothesis (ii): grad h . sigma_k = 0 for every k";
    rep.coupling.passed = !w_coupling.violated && !pts.empty();
    rep.coupling.min_margin = -w_coupling.max_abs;
    rep.coupling.worst_violation = w_coupling.worst_excess;
    if (!pts.empty() && model.m > 0) {
        rep.coupling.witness = w_coupling.witness(pts.front());
        double worst = 0.0;
        for (int k = 1; k <= model.m; ++k) {
            double v = Generator(model, barrier.h).coupling(rep.coupling.witness, k);
            if (std::fabs(v) > std::fabs(worst)) worst = v;
        }
        rep.coupling.witness_value = worst;
    }

    rep.hypotheses_hold = rep.second_order.passed && rep.coupling.passed;

    CheckOptions sub = options;
    sub.keep_points = true;  // the margin comparison below needs the records
    rep.drift_only = check_zbf_drift_only(model, barrier, plan, sub);
    rep.szbf = check_szbf(model, barrier, plan, sub);
    rep.conclusion = rep.szbf.conclusion;

    // Margins must coincide point-for-point when the reduction applies.
    double gap = 0.0;
    bool agree = rep.drift_only.points.size() == rep.szbf.points.size();
    for (std::size_t i = 0; agree && i < rep.szbf.points.size(); ++i) {
        double d = std::fabs(rep.szbf.points[i].margin - rep.drift_only.points[i].margin);
        gap = std::max(gap, d);
        if (d > 1e-12 * (1.0 + std::fabs(rep.szbf.points[i].margin))) agree = false;
    }
    rep.max_margin_gap = gap;
    rep.margins_agree = agree;
    if (rep.hypotheses_hold && !agree)
        rep.notes.push_back("reduction hypotheses hold but margins disagree; "
                            "this indicates an internal inconsistency");
    if (!options.keep_points) {
        rep.drift_only.points.clear();
        rep.drift_only.options.keep_points = false;
        rep.szbf.points.clear();
        rep.szbf.options.keep_points = false;
    }
    if (pts.empty()) {
        rep.notes.push_back("no sampled points; hypotheses are vacuous and nothing was checked");
        rep.conclusion = Conclusion::Inconclusive;
    } else if (rep.hypotheses_hold) {
        rep.notes.push_back("h(x_t) has no martingale part on the samples: the drift-only "
                            "verdict carries over to the SDE");
    } else {
        rep.notes.push_back("reduction hypotheses fail on the samples: the drift-only verdict "
                            "does not transfer; rely on the full check");
    }
    return rep;
}

}  // namespace szbf
