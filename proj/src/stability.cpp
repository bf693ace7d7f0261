// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT

#include "szbf/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "szbf/generator.hpp"
#include "szbf/rng.hpp"
#include "szbf/simulate.hpp"

namespace szbf {

double lyapunov_value(const Expr& h, const Point& x) { return std::max(0.0, -h.eval(x)); }

double apply_generator_lyapunov(const SdeModel& model, const Expr& h, const Point& x) {
    if (h.eval(x) > 0.0) return 0.0;
    return -apply_generator(model, h, x);
}

namespace {

struct Track {
    double min_margin = std::numeric_limits<double>::infinity();
    Point min_at;
    double worst_violation = 0.0;
    Point violation_at;
    bool violated = false;

    void observe(double margin, double tol, const Point& x) {
        if (margin < min_margin) {
            min_margin = margin;
            min_at = x;
        }
        if (margin < -tol && (!violated || -margin - tol > worst_violation)) {
            worst_violation = -margin - tol;
            violation_at = x;
            violated = true;
        }
    }

    void fill(ConditionResult& out) const {
        out.passed = !violated;
        out.min_margin = min_margin;
        out.worst_violation = worst_violation;
        out.witness = violated ? violation_at : min_at;
    }
};

}  // namespace

LyapunovReport check_lyapunov_conditions(const SdeModel& model, const BarrierSpec& barrier,
                                         const SamplingPlan& plan, const CheckOptions& options) {
    LyapunovReport rep;
    rep.model_name = model.name;
    rep.plan = plan;

    SamplingPlan whole = plan;
    whole.restrict_to = SamplingPlan::Restrict::Domain;
    std::vector<Point> pts = enumerate_points(barrier.domain, whole, barrier.h);
    rep.points_checked = static_cast<long long>(pts.size());

    ClassKeFn alpha = make_alpha(barrier.alpha);
    rep.alpha_desc = alpha.describe();
    rep.zero_on_c.name = "V_C = 0 on C";
    rep.positive_off_c.name = "V_C > 0 on D minus C";
    rep.decrease.name = "LV_C <= alpha(h) on D minus C";
    rep.alpha_sign.name = "alpha(h) <= 0 on D minus C";

    Generator gen(model, barrier.h);
    Track zero, positive, decrease, sign;
    long long off_c = 0;
    for (const Point& x : pts) {
        const double hx = barrier.h.eval(x);
        const double v = std::max(0.0, -hx);
        if (hx >= 0.0) {
            zero.observe(-v, 0.0, x);  // exact: V_C must vanish on C
            continue;
        }
        ++off_c;
        // Strict positivity off C; treat v == 0 as a violation.
        positive.observe(v > 0.0 ? v : -1.0, 0.0, x);
        const double lh = gen.apply(x);
        const double ax = alpha(hx);
        const double tol = options.tol_scale * (1.0 + std::fabs(lh) + std::fabs(ax));
        decrease.observe(ax - (-lh), tol, x);
        sign.observe(-ax, options.tol_scale * (1.0 + std::fabs(ax)), x);
    }
    rep.points_off_c = off_c;

    zero.fill(rep.zero_on_c);
    positive.fill(rep.positive_off_c);
    decrease.fill(rep.decrease);
    sign.fill(rep.alpha_sign);
    rep.zero_on_c.witness_value =
        rep.zero_on_c.witness.empty() ? 0.0 : lyapunov_value(barrier.h, rep.zero_on_c.witness);
    rep.positive_off_c.witness_value = rep.positive_off_c.witness.empty()
                                           ? 0.0
                                           : lyapunov_value(barrier.h, rep.positive_off_c.witness);
    if (!rep.decrease.witness.empty())
        rep.decrease.witness_value = alpha(barrier.h.eval(rep.decrease.witness)) -
                                     apply_generator_lyapunov(model, barrier.h, rep.decrease.witness);
    if (!rep.alpha_sign.witness.empty())
        rep.alpha_sign.witness_value = -alpha(barrier.h.eval(rep.alpha_sign.witness));

    if (off_c == 0) {
        rep.conclusion = Conclusion::Inconclusive;
        rep.notes.push_back("no sampled point of D lies outside C; the decrease chain was never "
                            "exercised (is C strictly contained in D?)");
        return rep;
    }
    const bool ok = rep.zero_on_c.passed && rep.positive_off_c.passed && rep.decrease.passed &&
                    rep.alpha_sign.passed;
    rep.conclusion = ok ? Conclusion::CertifiedOnSamples : Conclusion::Refuted;
    rep.notes.push_back("V_C = max(0, -h) vanishes on C by construction, so the decrease chain "
                        "constrains behaviour outside the safe set only");
    return rep;
}

namespace {

// Newton projection of a random domain point onto {h = 0}. Retries from
// fresh samples when the iteration stalls or leaves the domain.
bool project_to_boundary(const Expr& h, const std::vector<Expr>& grad, const Region& domain,
                         PhiloxRng& rng, Point& out, bool& degenerate) {
    const int dim = domain.dim();
    for (int attempt = 0; attempt < 64; ++attempt) {
        Point x = sample_point(domain, rng);
        bool ok = false;
        for (int it = 0; it < 80; ++it) {
            const double hx = h.eval(x);
            if (std::fabs(hx) <= 1e-10) {
                ok = true;
                break;
            }
            double g2 = 0.0;
            Point g(static_cast<std::size_t>(dim));
            for (int i = 0; i < dim; ++i) {
                g[static_cast<std::size_t>(i)] = grad[static_cast<std::size_t>(i)].eval(x);
                g2 += g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)];
            }
            if (g2 < 1e-24) {
                degenerate = true;
                break;
            }
            for (int i = 0; i < dim; ++i)
                x[static_cast<std::size_t>(i)] -= hx * g[static_cast<std::size_t>(i)] / g2;
        }
        if (ok && domain.contains(x)) {
            out = x;
            return true;
        }
    }
    return false;
}

}  // namespace

LyapunovProfile estimate_stability_profile(const SdeModel& model, const BarrierSpec& barrier,
                                           std::vector<double> init_dists, std::vector<double> eps,
                                           long long n_paths, double dt, double horizon,
                                           std::uint64_t seed) {
    if (n_paths < 1) throw std::invalid_argument("estimate_stability_profile: n_paths must be >= 1");
    if (init_dists.empty() || eps.empty())
        throw std::invalid_argument("estimate_stability_profile: need at least one distance and epsilon");
    for (double d : init_dists)
        if (!(d >= 0.0)) throw std::invalid_argument("estimate_stability_profile: distances must be >= 0");
    for (double e : eps)
        if (!(e > 0.0)) throw std::invalid_argument("estimate_stability_profile: epsilons must be > 0");
    if (!std::is_sorted(init_dists.begin(), init_dists.end()) ||
        !std::is_sorted(eps.begin(), eps.end()))
        throw std::invalid_argument("estimate_stability_profile: distances and epsilons must be nondecreasing");

    const long long steps = step_count(horizon, dt);
    const Expr& h = barrier.h;
    std::vector<Expr> grad = gradient(h, model.n);

    LyapunovProfile prof;
    prof.init_dists = init_dists;
    prof.eps = eps;
    prof.n_paths = n_paths;
    prof.dt = dt;
    prof.horizon = horizon;
    prof.seed = seed;
    prof.model_name = model.name;
    prof.exceed_probability.assign(init_dists.size(), std::vector<double>(eps.size(), 0.0));
    prof.degenerate_gradient.assign(init_dists.size(), 0);

    CompiledExpr hc(h);
    std::vector<CompiledExpr> gradc;
    gradc.reserve(grad.size());
    for (const Expr& g : grad) gradc.emplace_back(g);

    for (std::size_t di = 0; di < init_dists.size(); ++di) {
        const double dist = init_dists[di];
        EulerMaruyama em(model);
        std::vector<double> stack;
        bool row_degenerate = false;
        std::vector<long long> exceed_counts(eps.size(), 0);

        for (long long p = 0; p < n_paths; ++p) {
            const std::uint64_t global = static_cast<std::uint64_t>(di) *
                                             static_cast<std::uint64_t>(n_paths) +
                                         static_cast<std::uint64_t>(p);
            PhiloxRng init_rng(seed, init_stream(global));
            Point x;
            if (dist == 0.0) {
                x = sample_point(barrier.domain, init_rng, &h);
            } else {
                Point xb;
                bool degenerate = false;
                if (!project_to_boundary(h, grad, barrier.domain, init_rng, xb, degenerate)) {
                    prof.degenerate_gradient[di] = 1;
                    throw std::runtime_error(
                        "estimate_stability_profile: could not project onto the boundary of C; "
                        "is {h = 0} inside the domain?");
                }
                double g2 = 0.0;
                Point g(xb.size());
                for (std::size_t i = 0; i < xb.size(); ++i) {
                    g[i] = grad[i].eval(xb);
                    g2 += g[i] * g[i];
                }
                if (g2 < 1e-24) {
                    row_degenerate = true;
                    continue;
                }
                // h decreases fastest along -grad h: step outward off C.
                const double gn = std::sqrt(g2);
                x = xb;
                for (std::size_t i = 0; i < x.size(); ++i) x[i] -= dist * g[i] / gn;
            }

            PhiloxRng rng(seed, increment_stream(global));
            double sup_dist = 0.0;
            bool exploded = false;
            auto surrogate = [&](const Point& q) -> double {
                const double hq = hc.eval(q, stack);
                if (hq >= 0.0) return 0.0;
                double n2 = 0.0;
                for (std::size_t i = 0; i < q.size(); ++i) {
                    const double gi = gradc[i].eval(q, stack);
                    n2 += gi * gi;
                }
                if (n2 < 1e-24) {
                    row_degenerate = true;
                    return -hq;  // raw barrier deficit as a fallback
                }
                return -hq / std::sqrt(n2);
            };
            try {
                sup_dist = surrogate(x);
                for (long long j = 1; j <= steps; ++j) {
                    if (!em.step(x, dt, rng)) {
                        exploded = true;
                        break;
                    }
                    sup_dist = std::max(sup_dist, surrogate(x));
                }
            } catch (const EvalError&) {
                exploded = true;
            }
            for (std::size_t ei = 0; ei < eps.size(); ++ei)
                if (exploded || sup_dist > eps[ei]) ++exceed_counts[ei];
        }
        for (std::size_t ei = 0; ei < eps.size(); ++ei)
            prof.exceed_probability[di][ei] =
                static_cast<double>(exceed_counts[ei]) / static_cast<double>(n_paths);
        prof.degenerate_gradient[di] = row_degenerate ? 1 : 0;
    }
    return prof;
}

}  // namespace szbf
