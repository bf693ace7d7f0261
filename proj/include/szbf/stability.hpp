// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "szbf/check.hpp"
#include "szbf/model.hpp"

namespace szbf {

/// The barrier-induced Lyapunov candidate V_C = max(0, -h): zero on the
/// safe set C, positive outside, inheriting h's smoothness away from the
/// boundary.
double lyapunov_value(const Expr& h, const Point& x);

/// L applied to V_C: 0 in the interior of C (where V_C vanishes
/// identically), -Lh on D minus C. Boundary points (h = 0) are evaluated
/// on the D-minus-C branch.
double apply_generator_lyapunov(const SdeModel& model, const Expr& h, const Point& x);

/// Sampled verdict on the Lyapunov structure of V_C over the plan's
/// points in D:
///   - V_C = 0 at sampled points of C (exact; no tolerance),
///   - V_C > 0 at sampled points of D minus C (exact),
///   - LV_C = -Lh <= alpha(h) <= 0 on D minus C, each inequality with the
///     scale-aware tolerance.
/// If the plan yields no point outside C the result is inconclusive: the
/// decrease chain was never exercised.
struct LyapunovReport {
    std::string model_name;
    std::string alpha_desc;
    ConditionResult zero_on_c;       // V_C = 0 on C
    ConditionResult positive_off_c;  // V_C > 0 on D minus C
    ConditionResult decrease;        // -Lh <= alpha(h) on D minus C
    ConditionResult alpha_sign;      // alpha(h) <= 0 on D minus C
    Conclusion conclusion = Conclusion::Inconclusive;
    long long points_checked = 0;
    long long points_off_c = 0;
    SamplingPlan plan;
    std::vector<std::string> notes;
};

LyapunovReport check_lyapunov_conditions(const SdeModel& model, const BarrierSpec& barrier,
                                         const SamplingPlan& plan, const CheckOptions& options = {});

/// Empirical escape profile: paths start at prescribed distances outside
/// the safe-set boundary (distance 0 starts inside C) and the table
/// records, for each (distance, epsilon) cell, the fraction of paths whose
/// sampled distance surrogate max(0, -h)/|grad h| ever exceeded epsilon
/// before the horizon. Rows are starting distances, columns epsilons;
/// along a row the probabilities are nonincreasing in epsilon by
/// construction (same paths, nested events). degenerate_gradient flags
/// rows where |grad h| fell below 1e-12 at a queried point, making the
/// surrogate unreliable for every cell of that row.
struct LyapunovProfile {
    std::vector<double> init_dists;
    std::vector<double> eps;
    std::vector<std::vector<double>> exceed_probability;  // [dist][eps]
    std::vector<std::uint8_t> degenerate_gradient;        // per dist row
    long long n_paths = 0;
    double dt = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::string model_name;
};

/// Start points: distance 0 samples uniformly from C; positive distances
/// project a random domain point onto {h = 0} by Newton iteration and
/// offset along the outward normal -grad h/|grad h|. Distances must be
/// nonnegative and epsilons positive, both nondecreasing; explosions count
/// as exceeding every epsilon.
LyapunovProfile estimate_stability_profile(const SdeModel& model, const BarrierSpec& barrier,
                                           std::vector<double> init_dists, std::vector<double> eps,
                                           long long n_paths, double dt, double horizon,
                                           std::uint64_t seed);

}  // namespace szbf
