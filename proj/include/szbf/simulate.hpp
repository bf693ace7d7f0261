// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "szbf/model.hpp"
#include "szbf/rng.hpp"

namespace szbf {

/// Euler-Maruyama stepping engine: x <- x + b(x) dt + sum_k sigma_k(x) dW_k
/// with dW_k = sqrt(dt) * N(0,1), the m normals drawn in channel order.
/// Field expressions are compiled once; the engine carries evaluation
/// scratch, so use one instance per thread.
class EulerMaruyama {
public:
    explicit EulerMaruyama(const SdeModel& model);

    /// One step in place. Returns false when a field evaluation failed or
    /// the update left the finite range (explosion); x is left at the last
    /// finite state.
    bool step(Point& x, double dt, PhiloxRng& rng);

    int n() const noexcept { return n_; }
    int m() const noexcept { return m_; }

private:
    int n_, m_;
    std::vector<CompiledExpr> drift_;
    std::vector<CompiledExpr> diffusion_;  // channel-major: [k*n + i]
    std::vector<double> stack_, bvals_, svals_, dw_, next_;
};

/// Streams for path i: increments on 2*i, initial-condition sampling on
/// 2*i + 1. Exposed so tests can replay the exact increments of a path.
inline std::uint64_t increment_stream(std::uint64_t path_index) { return 2 * path_index; }
inline std::uint64_t init_stream(std::uint64_t path_index) { return 2 * path_index + 1; }

/// Number of steps covering [0, horizon] at resolution dt.
long long step_count(double horizon, double dt);

struct SamplePath {
    std::vector<double> times;   // j * dt
    std::vector<Point> states;   // states[j] at times[j]
    bool exploded = false;       // truncated at the last finite state
    double dt = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    std::string model_name;
};

/// One path from x0. Bit-for-bit reproducible from
/// (model, x0, dt, horizon, seed, path_index).
SamplePath simulate_path(const SdeModel& model, const Point& x0, double dt, double horizon,
                         std::uint64_t seed, std::uint64_t path_index = 0);

struct ExitEvent {
    double time = 0.0;        // linear interpolation of h between samples
    std::size_t step_index = 0;  // first recorded index with h < 0
    Point state;              // recorded state at step_index
};

/// First time h goes negative along the recorded path, with the crossing
/// time interpolated linearly in h between the bracketing sample instants.
/// No crossing (including paths that explode before one) returns nullopt.
std::optional<ExitEvent> exit_time(const SamplePath& path, const Expr& h);

/// t where the segment (t0,h0)-(t1,h1) crosses zero, h0 >= 0 > h1.
inline double interpolate_crossing(double t0, double h0, double t1, double h1) {
    return t0 + (t1 - t0) * (h0 / (h0 - h1));
}

/// Initial condition for path ensembles: a fixed point, or uniform
/// rejection sampling from a region intersected with {h >= 0}.
class InitialCondition {
public:
    static InitialCondition fixed(Point x0);
    static InitialCondition uniform(Region within);

    Point draw(const Expr& h, PhiloxRng& rng) const;
    const std::optional<Point>& fixed_point() const noexcept { return x0_; }

private:
    InitialCondition() = default;
    std::optional<Point> x0_;
    std::optional<Region> within_;
};

struct ExitStats {
    long long n_paths = 0;
    long long n_exited = 0;    // h-crossings plus explosions
    long long n_exploded = 0;
    double exit_probability = 0.0;
    double wilson_lo = 0.0;    // 95% Wilson interval for the exit probability
    double wilson_hi = 0.0;
    std::optional<double> exit_time_min, exit_time_median, exit_time_max;
    double dt = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::string model_name;
    std::string statement;     // plain-language finite-horizon summary
};

/// Wilson score interval for k successes in n trials (z defaults to the
/// two-sided 95% point).
std::pair<double, double> wilson_interval(long long k, long long n,
                                          double z = 1.959963984540054);

/// Runs n_paths independent paths and reports how often and when h went
/// negative. Initial points must satisfy h(x0) >= 0. Explosions count as
/// exits at the failing step and are tallied separately. The returned
/// statement says "no exit observed over horizon ..." rather than claiming
/// invariance: this is finite-horizon evidence, not a proof.
ExitStats estimate_invariance(const SdeModel& model, const Expr& h, const InitialCondition& init,
                              long long n_paths, double dt, double horizon, std::uint64_t seed);

/// Per-path exit outcomes backing ExitStats, in path-index order. Used
/// where the individual times matter (acceptance checks, stability).
struct PathExit {
    bool exited = false;
    bool exploded = false;
    double time = 0.0;
};

std::vector<PathExit> exit_outcomes(const SdeModel& model, const Expr& h,
                                    const InitialCondition& init, long long n_paths, double dt,
                                    double horizon, std::uint64_t seed);

}  // namespace szbf
