// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT

#include "szbf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <utility>

namespace szbf {

EulerMaruyama::EulerMaruyama(const SdeModel& model) : n_(model.n), m_(model.m) {
    if (static_cast<int>(model.drift.size()) != n_ ||
        static_cast<int>(model.diffusion.size()) != m_)
        throw std::invalid_argument("EulerMaruyama: model field sizes disagree with n/m");
    for (const Expr& b : model.drift) drift_.emplace_back(b);
    for (const auto& col : model.diffusion) {
        if (static_cast<int>(col.size()) != n_)
            throw std::invalid_argument("EulerMaruyama: diffusion channel has wrong dimension");
        for (const Expr& s : col) diffusion_.emplace_back(s);
    }
    bvals_.resize(static_cast<std::size_t>(n_));
    svals_.resize(static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_));
    dw_.resize(static_cast<std::size_t>(m_));
    next_.resize(static_cast<std::size_t>(n_));
}

bool EulerMaruyama::step(Point& x, double dt, PhiloxRng& rng) {
    // Increments first, in channel order: the draw sequence of a path then
    // depends only on (seed, stream, step), not on where evaluation fails.
    const double sqrt_dt = std::sqrt(dt);
    for (int k = 0; k < m_; ++k) dw_[static_cast<std::size_t>(k)] = sqrt_dt * rng.normal();
    try {
        for (int i = 0; i < n_; ++i)
            bvals_[static_cast<std::size_t>(i)] = drift_[static_cast<std::size_t>(i)].eval(x, stack_);
        for (std::size_t f = 0; f < diffusion_.size(); ++f) svals_[f] = diffusion_[f].eval(x, stack_);
    } catch (const EvalError&) {
        return false;
    }
    for (int i = 0; i < n_; ++i) {
        double v = x[static_cast<std::size_t>(i)] + bvals_[static_cast<std::size_t>(i)] * dt;
        for (int k = 0; k < m_; ++k)
            v += svals_[static_cast<std::size_t>(k * n_ + i)] * dw_[static_cast<std::size_t>(k)];
        if (!std::isfinite(v)) return false;
        next_[static_cast<std::size_t>(i)] = v;
    }
    std::copy(next_.begin(), next_.end(), x.begin());
    return true;
}

long long step_count(double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon > 0.0))
        throw std::invalid_argument("step_count: dt and horizon must be positive");
    long long steps = static_cast<long long>(std::ceil(horizon / dt - 1e-9));
    return std::max<long long>(steps, 1);
}

SamplePath simulate_path(const SdeModel& model, const Point& x0, double dt, double horizon,
                         std::uint64_t seed, std::uint64_t path_index) {
    if (static_cast<int>(x0.size()) != model.n)
        throw std::invalid_argument("simulate_path: x0 has dimension " + std::to_string(x0.size()) +
                                    " but the model has n = " + std::to_string(model.n));
    const long long steps = step_count(horizon, dt);
    EulerMaruyama em(model);
    PhiloxRng rng(seed, increment_stream(path_index));

    SamplePath path;
    path.dt = dt;
    path.horizon = horizon;
    path.seed = seed;
    path.path_index = path_index;
    path.model_name = model.name;
    path.times.reserve(static_cast<std::size_t>(steps) + 1);
    path.states.reserve(static_cast<std::size_t>(steps) + 1);
    Point x = x0;
    path.times.push_back(0.0);
    path.states.push_back(x);
    for (long long j = 1; j <= steps; ++j) {
        if (!em.step(x, dt, rng)) {
            path.exploded = true;
            break;
        }
        path.times.push_back(static_cast<double>(j) * dt);
        path.states.push_back(x);
    }
    return path;
}

std::optional<ExitEvent> exit_time(const SamplePath& path, const Expr& h) {
    if (path.states.empty()) return std::nullopt;
    double h_prev = h.eval(path.states.front());
    if (h_prev < 0.0) return ExitEvent{path.times.front(), 0, path.states.front()};
    for (std::size_t j = 1; j < path.states.size(); ++j) {
        double h_cur = h.eval(path.states[j]);
        if (h_cur < 0.0) {
            ExitEvent e;
            e.time = interpolate_crossing(path.times[j - 1], h_prev, path.times[j], h_cur);
            e.step_index = j;
            e.state = path.states[j];
            return e;
        }
        h_prev = h_cur;
    }
    return std::nullopt;
}

InitialCondition InitialCondition::fixed(Point x0) {
    InitialCondition ic;
    ic.x0_ = std::move(x0);
    return ic;
}

InitialCondition InitialCondition::uniform(Region within) {
    InitialCondition ic;
    ic.within_ = std::move(within);
    return ic;
}

Point InitialCondition::draw(const Expr& h, PhiloxRng& rng) const {
    if (x0_) return *x0_;
    return sample_point(*within_, rng, &h);
}

std::pair<double, double> wilson_interval(long long k, long long n, double z) {
    if (n <= 0) throw std::invalid_argument("wilson_interval: n must be positive");
    const double p = static_cast<double>(k) / static_cast<double>(n);
    const double z2 = z * z;
    const double denom = 1.0 + z2 / static_cast<double>(n);
    const double center = p + z2 / (2.0 * static_cast<double>(n));
    const double half =
        z * std::sqrt(p * (1.0 - p) / static_cast<double>(n) +
                      z2 / (4.0 * static_cast<double>(n) * static_cast<double>(n)));
    double lo = (center - half) / denom;
    double hi = (center + half) / denom;
    return {std::max(lo, 0.0), std::min(hi, 1.0)};
}

namespace {

// Runs fn(ctx, i) for i in [0, count), one context per worker thread, and
// keeps results in index order so reductions are deterministic regardless
// of scheduling.
template <typename T, typename MakeCtx, typename Fn>
std::vector<T> run_indexed(long long count, MakeCtx make_ctx, Fn fn) {
    std::vector<T> out(static_cast<std::size_t>(count));
    unsigned workers = std::max(std::thread::hardware_concurrency(), 1u);
    workers = std::min(workers, 8u);
    if (workers <= 1 || count < 4) {
        auto ctx = make_ctx();
        for (long long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(ctx, i);
        return out;
    }
    const long long chunk = (count + workers - 1) / workers;
    std::vector<std::future<void>> futures;
    for (unsigned w = 0; w < workers; ++w) {
        const long long lo = static_cast<long long>(w) * chunk;
        const long long hi = std::min(lo + chunk, count);
        if (lo >= hi) break;
        futures.push_back(std::async(std::launch::async, [&, lo, hi] {
            auto ctx = make_ctx();
            for (long long i = lo; i < hi; ++i) out[static_cast<std::size_t>(i)] = fn(ctx, i);
        }));
    }
    for (auto& f : futures) f.get();
    return out;
}

}  // namespace

std::vector<PathExit> exit_outcomes(const SdeModel& model, const Expr& h,
                                    const InitialCondition& init, long long n_paths, double dt,
                                    double horizon, std::uint64_t seed) {
    if (n_paths < 1) throw std::invalid_argument("exit_outcomes: n_paths must be >= 1");
    const long long steps = step_count(horizon, dt);
    if (init.fixed_point()) {
        const Point& x0 = *init.fixed_point();
        if (static_cast<int>(x0.size()) != model.n)
            throw std::invalid_argument("exit_outcomes: x0 dimension mismatch");
        if (h.eval(x0) < 0.0)
            throw std::invalid_argument("exit_outcomes: initial point lies outside C = {h >= 0}");
    }
    CompiledExpr hc(h);

    struct Worker {
        EulerMaruyama em;
        std::vector<double> stack;
    };
    auto make_worker = [&] { return Worker{EulerMaruyama(model), {}}; };

    auto one_path = [&](Worker& w, long long i) -> PathExit {
        PathExit r;
        PhiloxRng init_rng(seed, init_stream(static_cast<std::uint64_t>(i)));
        Point x = init.draw(h, init_rng);
        PhiloxRng rng(seed, increment_stream(static_cast<std::uint64_t>(i)));
        double h_prev = hc.eval(x, w.stack);
        for (long long j = 1; j <= steps; ++j) {
            if (!w.em.step(x, dt, rng)) {
                r.exited = true;
                r.exploded = true;
                r.time = static_cast<double>(j) * dt;
                return r;
            }
            double h_cur;
            try {
                h_cur = hc.eval(x, w.stack);
            } catch (const EvalError&) {
                r.exited = true;
                r.exploded = true;
                r.time = static_cast<double>(j) * dt;
                return r;
            }
            if (h_cur < 0.0) {
                r.exited = true;
                r.time = interpolate_crossing(static_cast<double>(j - 1) * dt, h_prev,
                                              static_cast<double>(j) * dt, h_cur);
                return r;
            }
            h_prev = h_cur;
        }
        return r;
    };

    return run_indexed<PathExit>(n_paths, make_worker, one_path);
}

ExitStats estimate_invariance(const SdeModel& model, const Expr& h, const InitialCondition& init,
                              long long n_paths, double dt, double horizon, std::uint64_t seed) {
    std::vector<PathExit> outcomes = exit_outcomes(model, h, init, n_paths, dt, horizon, seed);

    ExitStats stats;
    stats.n_paths = n_paths;
    stats.dt = dt;
    stats.horizon = horizon;
    stats.seed = seed;
    stats.model_name = model.name;
    std::vector<double> times;
    for (const PathExit& r : outcomes) {
        if (r.exited) {
            ++stats.n_exited;
            times.push_back(r.time);
        }
        if (r.exploded) ++stats.n_exploded;
    }
    stats.exit_probability = static_cast<double>(stats.n_exited) / static_cast<double>(n_paths);
    std::tie(stats.wilson_lo, stats.wilson_hi) = wilson_interval(stats.n_exited, n_paths);
    if (!times.empty()) {
        std::sort(times.begin(), times.end());
        stats.exit_time_min = times.front();
        stats.exit_time_max = times.back();
        std::size_t mid = times.size() / 2;
        stats.exit_time_median =
            times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    }
    char buf[256];
    if (stats.n_exited == 0) {
        std::snprintf(buf, sizeof buf,
                      "no exit from C observed over horizon %g with %lld paths "
                      "(finite-horizon evidence, not a proof of invariance)",
                      horizon, static_cast<long long>(n_paths));
    } else {
        std::snprintf(buf, sizeof buf,
                      "%lld of %lld paths left C before horizon %g (%lld by explosion); "
                      "finite-horizon estimate, 95%% CI [%.3g, %.3g]",
                      stats.n_exited, static_cast<long long>(n_paths), horizon, stats.n_exploded,
                      stats.wilson_lo, stats.wilson_hi);
    }
    stats.statement = buf;
    return stats;
}

}  // namespace szbf
