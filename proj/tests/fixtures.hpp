// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

// Models used across the tests, built through the expression factory API so
// they do not depend on the text parser. Closed-form facts (all elementary
// calculus on the definitions below):
//
//   m2: b = (-x1 - x2, x1 - x2), sigma = (-x2, x1), h = 1 - |x|^2
//       grad h . b = 2|x|^2, second-order term = -|x|^2, so Lh = |x|^2 and
//       Lh + h = 1 at every point; grad h . sigma = 0 identically.
//   m3: m2 with b = (x1, x2): Lh = -2|x|^2 - |x|^2 = -3|x|^2 and the
//       condition (i) slack is 1 - 4|x|^2. The squared radius satisfies
//       d|x|^2 = 3|x|^2 dt, so from |x| = 0.9 the exit from the unit disk
//       happens at t* = ln(1/0.81)/3.
//   ou: b = -x1, sigma = 0.5, h = x1^2: Lh = -2x1^2 + 0.25.
//   lemma1: b = (0, 1), sigma = (1, 0), h = x2 on D = {x2 >= -0.5}: both
//       the Hessian term and the coupling vanish identically.
//   gbm: dx = mu x dt + s x dw with exact solution
//       x_t = x0 exp((mu - s^2/2) t + s W_t).

#include "szbf/model.hpp"

namespace fixtures {

using szbf::AlphaSpec;
using szbf::BarrierSpec;
using szbf::Expr;
using szbf::LoadedModel;
using szbf::Point;
using szbf::Region;
using szbf::SdeModel;

inline Expr x(int i) { return Expr::variable(i); }
inline Expr num(double v) { return Expr::number(v); }

inline Expr disk_barrier() { return num(1.0) - x(1) * x(1) - x(2) * x(2); }

inline LoadedModel m2(double box = 1.3) {
    SdeModel model;
    model.name = "m2";
    model.n = 2;
    model.m = 1;
    model.drift = {-x(1) - x(2), x(1) - x(2)};
    model.diffusion = {{-x(2), x(1)}};
    BarrierSpec barrier{disk_barrier(), AlphaSpec{}, Region::box({-box, -box}, {box, box})};
    return {std::move(model), std::move(barrier)};
}

inline LoadedModel m3(double box = 1.3) {
    LoadedModel lm = m2(box);
    lm.model.name = "m3";
    lm.model.drift = {x(1), x(2)};
    return lm;
}

// m3 without its noise channel: the radius recursion is deterministic.
inline LoadedModel m3_noise_free(double box = 1.3) {
    LoadedModel lm = m3(box);
    lm.model.m = 0;
    lm.model.diffusion.clear();
    return lm;
}

inline LoadedModel ou() {
    SdeModel model;
    model.name = "ou";
    model.n = 1;
    model.m = 1;
    model.drift = {-x(1)};
    model.diffusion = {{num(0.5)}};
    BarrierSpec barrier{x(1) * x(1), AlphaSpec{}, Region::box({-2.0}, {2.0})};
    return {std::move(model), std::move(barrier)};
}

// ou with the bounded barrier 1 - x1^2: the coupling -x1 is nonzero away
// from the origin, so the full check refutes on condition (ii).
inline LoadedModel ou_disk() {
    LoadedModel lm = ou();
    lm.barrier.h = num(1.0) - x(1) * x(1);
    return lm;
}

inline LoadedModel lemma1_fixture() {
    SdeModel model;
    model.name = "lemma1";
    model.n = 2;
    model.m = 1;
    model.drift = {num(0.0), num(1.0)};
    model.diffusion = {{num(1.0), num(0.0)}};
    BarrierSpec barrier{x(2), AlphaSpec{},
                        Region::superlevel(x(2) + num(0.5), {-1.0, -1.0}, {1.0, 1.0})};
    return {std::move(model), std::move(barrier)};
}

inline LoadedModel gbm(double mu = 0.5, double s = 0.3) {
    SdeModel model;
    model.name = "gbm";
    model.n = 1;
    model.m = 1;
    model.drift = {num(mu) * x(1)};
    model.diffusion = {{num(s) * x(1)}};
    BarrierSpec barrier{x(1), AlphaSpec{}, Region::box({0.0}, {3.0})};
    return {std::move(model), std::move(barrier)};
}

// Noise-free linear contraction in one dimension.
inline LoadedModel linear_1d() {
    SdeModel model;
    model.name = "linear";
    model.n = 1;
    model.m = 0;
    model.drift = {-x(1)};
    BarrierSpec barrier{num(4.0) - x(1) * x(1), AlphaSpec{}, Region::box({-3.0}, {3.0})};
    return {std::move(model), std::move(barrier)};
}

}  // namespace fixtures
