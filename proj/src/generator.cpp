// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT

#include "szbf/generator.hpp"

#include <cmath>
#include <stdexcept>

#include "szbf/simulate.hpp"

namespace szbf {

Generator::Generator(const SdeModel& model, Expr h)
    : n_(model.n), m_(model.m), h_(std::move(h)), drift_(model.drift), diffusion_(model.diffusion) {
    if (static_cast<int>(drift_.size()) != n_ || static_cast<int>(diffusion_.size()) != m_)
        throw std::invalid_argument("Generator: model field sizes disagree with n/m");
    if (h_.max_variable() > n_)
        throw std::invalid_argument("Generator: h uses x" + std::to_string(h_.max_variable()) +
                                    " but the model has n = " + std::to_string(n_));
    grad_ = gradient(h_, n_);
    hess_.reserve(static_cast<std::size_t>(n_) * (static_cast<std::size_t>(n_) + 1) / 2);
    for (int i = 1; i <= n_; ++i)
        for (int j = i; j <= n_; ++j) hess_.push_back(grad_[static_cast<std::size_t>(i - 1)].diff(j));
}

double Generator::hess_at(const Point& x, int i, int j) const {
    // Upper-triangle index for 0-based i <= j.
    std::size_t base = static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) -
                       static_cast<std::size_t>(i) * (static_cast<std::size_t>(i) + 1) / 2;
    return hess_[base + static_cast<std::size_t>(j)].eval(x);
}

std::vector<double> Generator::grad_at(const Point& x) const {
    std::vector<double> g(grad_.size());
    for (std::size_t i = 0; i < grad_.size(); ++i) g[i] = grad_[i].eval(x);
    return g;
}

double Generator::first_order_term(const Point& x) const {
    double acc = 0.0;
    for (int i = 0; i < n_; ++i)
        acc += drift_[static_cast<std::size_t>(i)].eval(x) * grad_[static_cast<std::size_t>(i)].eval(x);
    return acc;
}

double Generator::second_order_term(const Point& x) const {
    double acc = 0.0;
    std::vector<double> s(static_cast<std::size_t>(n_));
    for (int k = 0; k < m_; ++k) {
        for (int i = 0; i < n_; ++i)
            s[static_cast<std::size_t>(i)] =
                diffusion_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)].eval(x);
        for (int i = 0; i < n_; ++i) {
            acc += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)] * hess_at(x, i, i);
            for (int j = i + 1; j < n_; ++j)
                acc += 2.0 * s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(j)] *
                       hess_at(x, i, j);
        }
    }
    return 0.5 * acc;
}

double Generator::second_order_scale(const Point& x) const {
    double acc = 0.0;
    std::vector<double> s(static_cast<std::size_t>(n_));
    for (int k = 0; k < m_; ++k) {
        for (int i = 0; i < n_; ++i)
            s[static_cast<std::size_t>(i)] =
                std::fabs(diffusion_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)].eval(x));
        for (int i = 0; i < n_; ++i) {
            acc += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)] *
                   std::fabs(hess_at(x, i, i));
            for (int j = i + 1; j < n_; ++j)
                acc += 2.0 * s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(j)] *
                       std::fabs(hess_at(x, i, j));
        }
    }
    return 0.5 * acc;
}

ItoDecomposition Generator::decompose(const Point& x) const {
    ItoDecomposition out;
    std::vector<double> g = grad_at(x);
    double first = 0.0;
    for (int i = 0; i < n_; ++i)
        first += drift_[static_cast<std::size_t>(i)].eval(x) * g[static_cast<std::size_t>(i)];
    out.drift_term = first + second_order_term(x);
    out.noise_coeffs.resize(static_cast<std::size_t>(m_));
    for (int k = 0; k < m_; ++k) {
        double c = 0.0;
        for (int i = 0; i < n_; ++i)
            c += g[static_cast<std::size_t>(i)] *
                 diffusion_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)].eval(x);
        out.noise_coeffs[static_cast<std::size_t>(k)] = c;
    }
    return out;
}

double Generator::coupling(const Point& x, int channel) const {
    if (channel < 1 || channel > m_)
        throw std::invalid_argument("coupling: channel must be in 1.." + std::to_string(m_));
    double c = 0.0;
    for (int i = 0; i < n_; ++i)
        c += grad_[static_cast<std::size_t>(i)].eval(x) *
             diffusion_[static_cast<std::size_t>(channel - 1)][static_cast<std::size_t>(i)].eval(x);
    return c;
}

double apply_generator(const SdeModel& model, const Expr& h, const Point& x) {
    return Generator(model, h).apply(x);
}

double diffusion_coupling(const SdeModel& model, const Expr& h, const Point& x, int channel) {
    return Generator(model, h).coupling(x, channel);
}

ItoDecomposition ito_decomposition(const SdeModel& model, const Expr& h, const Point& x) {
    return Generator(model, h).decompose(x);
}

McGeneratorEstimate estimate_generator_mc(const SdeModel& model, const Expr& h, const Point& x,
                                          double t, long long n_paths, double dt,
                                          std::uint64_t seed) {
    if (n_paths < 2) throw std::invalid_argument("estimate_generator_mc: need n_paths >= 2");
    if (!(t > 0.0) || !(dt > 0.0) || dt > t)
        throw std::invalid_argument("estimate_generator_mc: need 0 < dt <= t");
    const long long steps = step_count(t, dt);
    const double h0 = h.eval(x);
    CompiledExpr hc(h);
    EulerMaruyama em(model);
    std::vector<double> stack;

    // (sum, sum of squares) of h(x_t) over paths; serial and in path order.
    double sum = 0.0, sumsq = 0.0;
    long long exploded = 0;
    Point state(x.size());
    for (long long i = 0; i < n_paths; ++i) {
        PhiloxRng rng(seed, increment_stream(static_cast<std::uint64_t>(i)));
        state = x;
        bool ok = true;
        for (long long j = 0; j < steps; ++j) {
            if (!em.step(state, dt, rng)) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            ++exploded;
            continue;
        }
        double v = hc.eval(state, stack);
        sum += v;
        sumsq += v * v;
    }
    if (exploded > 0)
        throw std::runtime_error("estimate_generator_mc: " + std::to_string(exploded) +
                                 " of " + std::to_string(n_paths) +
                                 " paths exploded; the estimate is meaningless here");
    const double n = static_cast<double>(n_paths);
    const double mean = sum / n;
    const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0));
    McGeneratorEstimate est;
    est.value = (mean - h0) / t;
    est.std_error = std::sqrt(var / n) / t;
    est.t = t;
    est.dt = dt;
    est.n_paths = n_paths;
    return est;
}

}  // namespace szbf
