// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <vector>

#include "szbf/model.hpp"

namespace szbf {

/// Drift and noise coefficients of dh(x_t): drift_term is Lh(x) and
/// noise_coeffs[k-1] is the coefficient of dw^k, i.e. grad h . sigma_k.
struct ItoDecomposition {
    double drift_term = 0.0;
    std::vector<double> noise_coeffs;
};

/// The generator L of an SDE applied to a scalar observable h:
///
///   Lh = sum_i b^i dh/dx^i
///      + 1/2 sum_k sum_{i,j} sigma_k^i sigma_k^j d^2h/dx^i dx^j,
///
/// assembled from symbolic derivatives of h (differentiated once at
/// construction). Lh is the time derivative of E[h(x_t)] started at x, so
/// it is what the barrier inequality constrains. Instances are immutable
/// and safe to share across threads.
class Generator {
public:
    Generator(const SdeModel& model, Expr h);

    /// Lh at x.
    double apply(const Point& x) const { return decompose(x).drift_term; }

    /// Lh together with all channel couplings, evaluating the shared
    /// derivatives once.
    ItoDecomposition decompose(const Point& x) const;

    /// grad h . sigma_k at x (channel is 1-based like the sigma<k> keys).
    double coupling(const Point& x, int channel) const;

    /// First-order piece grad h . b alone; this is the whole of Lh exactly
    /// when the second-order piece vanishes (Lemma-style reduction), and is
    /// what the drift-only ZBF check uses.
    double first_order_term(const Point& x) const;

    /// Second-order piece 1/2 sum_k sigma_k^T (grad^2 h) sigma_k alone.
    double second_order_term(const Point& x) const;

    /// Scale of the second-order piece (sum of absolute term magnitudes),
    /// used for scale-aware zero tests.
    double second_order_scale(const Point& x) const;

    std::vector<double> grad_at(const Point& x) const;

    const Expr& h() const noexcept { return h_; }
    const std::vector<Expr>& grad() const noexcept { return grad_; }
    int n() const noexcept { return n_; }
    int m() const noexcept { return m_; }

private:
    double hess_at(const Point& x, int i, int j) const;  // 0-based, i <= j

    int n_, m_;
    Expr h_;
    std::vector<Expr> grad_;
    std::vector<Expr> hess_;  // upper triangle, row-major
    std::vector<Expr> drift_;
    std::vector<std::vector<Expr>> diffusion_;
};

/// One-shot conveniences (each constructs a Generator; prefer the class
/// when evaluating at many points).
double apply_generator(const SdeModel& model, const Expr& h, const Point& x);
double diffusion_coupling(const SdeModel& model, const Expr& h, const Point& x, int channel);
ItoDecomposition ito_decomposition(const SdeModel& model, const Expr& h, const Point& x);

/// Monte Carlo check of the limit that defines Lh: simulates n_paths
/// Euler-Maruyama paths from x to time t and returns
/// (mean h(x_t) - h(x)) / t with its standard error. Agreement with
/// apply_generator is up to 3 standard errors plus an O(t) bias.
struct McGeneratorEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double t = 0.0;
    double dt = 0.0;
    long long n_paths = 0;
};

McGeneratorEstimate estimate_generator_mc(const SdeModel& model, const Expr& h, const Point& x,
                                          double t, long long n_paths, double dt,
                                          std::uint64_t seed);

}  // namespace szbf
