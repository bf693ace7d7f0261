// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "szbf/stability.hpp"

using szbf::Conclusion;
using szbf::Point;
using szbf::Region;
using szbf::SamplingPlan;

TEST_SUITE("stability") {

TEST_CASE("the barrier-induced candidate is zero on C and -h outside") {
    auto m2 = fixtures::m2();
    CHECK(szbf::lyapunov_value(m2.barrier.h, {0.5, 0.0}) == 0.0);
    CHECK(szbf::lyapunov_value(m2.barrier.h, {1.0, 0.0}) == 0.0);  // boundary
    CHECK(szbf::lyapunov_value(m2.barrier.h, {1.2, 0.0}) == doctest::Approx(0.44));

    // h = -|x|^2 gives the classical quadratic Lyapunov function.
    const auto x1 = szbf::Expr::variable(1), x2 = szbf::Expr::variable(2);
    const szbf::Expr h = -(x1 * x1 + x2 * x2);
    CHECK(szbf::lyapunov_value(h, {0.3, -0.4}) == doctest::Approx(0.25));
    szbf::SdeModel contract;
    contract.name = "contract";
    contract.n = 2;
    contract.m = 0;
    contract.drift = {-x1, -x2};
    CHECK(szbf::apply_generator_lyapunov(contract, h, {0.3, -0.4}) ==
          doctest::Approx(-0.5));  // -Lh = -2|x|^2
}

TEST_CASE("the generator acts piecewise: zero inside C, -Lh outside") {
    auto m2 = fixtures::m2();
    CHECK(szbf::apply_generator_lyapunov(m2.model, m2.barrier.h, {0.5, 0.0}) == 0.0);
    CHECK(szbf::apply_generator_lyapunov(m2.model, m2.barrier.h, {1.1, 0.0}) ==
          doctest::Approx(-1.21));
    // h = 0 exactly is evaluated on the outside branch.
    CHECK(szbf::apply_generator_lyapunov(m2.model, m2.barrier.h, {1.0, 0.0}) ==
          doctest::Approx(-1.0));

    auto m3 = fixtures::m3();
    CHECK(szbf::apply_generator_lyapunov(m3.model, m3.barrier.h, {1.1, 0.0}) ==
          doctest::Approx(3.63));  // growth outside C
}

TEST_CASE("lyapunov conditions certify the contracting model") {
    auto m2 = fixtures::m2();
    auto rep = szbf::check_lyapunov_conditions(m2.model, m2.barrier, SamplingPlan{});
    CHECK(rep.conclusion == Conclusion::CertifiedOnSamples);
    CHECK(rep.model_name == "m2");
    CHECK(rep.points_checked == 101 * 101);
    CHECK(rep.points_off_c > 0);
    CHECK(rep.points_off_c < rep.points_checked);

    CHECK(rep.zero_on_c.passed);
    CHECK(rep.zero_on_c.min_margin == 0.0);  // V_C vanishes identically on C
    CHECK(rep.positive_off_c.passed);
    CHECK(rep.positive_off_c.min_margin > 0.0);
    // alpha(h) - (-Lh) = (1 - |x|^2) + |x|^2 = 1 outside C.
    CHECK(rep.decrease.passed);
    CHECK(rep.decrease.min_margin == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.alpha_sign.passed);
    REQUIRE(!rep.notes.empty());
    CHECK(rep.notes.front().find("vanishes on C by construction") != std::string::npos);
}

TEST_CASE("lyapunov conditions refute the expanding model") {
    auto m3 = fixtures::m3();
    auto rep = szbf::check_lyapunov_conditions(m3.model, m3.barrier, SamplingPlan{});
    CHECK(rep.conclusion == Conclusion::Refuted);
    CHECK(rep.zero_on_c.passed);
    CHECK(rep.positive_off_c.passed);
    CHECK(!rep.decrease.passed);  // -Lh = 3|x|^2 > alpha(h) outside C
    CHECK(rep.decrease.witness_value ==
          doctest::Approx(1.0 - 4.0 * 3.38).epsilon(1e-9));  // at a box corner
    CHECK(rep.alpha_sign.passed);  // alpha(h) = h < 0 off C does hold
}

TEST_CASE("the full domain is always enumerated, whatever the plan says") {
    auto m2 = fixtures::m2();
    SamplingPlan plan;
    plan.restrict_to = SamplingPlan::Restrict::DMinusC;
    auto rep = szbf::check_lyapunov_conditions(m2.model, m2.barrier, plan);
    CHECK(rep.points_checked == 101 * 101);  // not only the h < 0 points
    CHECK(rep.zero_on_c.min_margin == 0.0);  // C really was sampled
    CHECK(rep.conclusion == Conclusion::CertifiedOnSamples);
}

TEST_CASE("a domain inside C leaves the decrease chain unexercised") {
    auto m2 = fixtures::m2(0.5);
    auto rep = szbf::check_lyapunov_conditions(m2.model, m2.barrier, SamplingPlan{});
    CHECK(rep.points_off_c == 0);
    CHECK(rep.conclusion == Conclusion::Inconclusive);
    REQUIRE(!rep.notes.empty());
    CHECK(rep.notes.front().find("never exercised") != std::string::npos);
}

TEST_CASE("escape profile is zero for the contracting model") {
    auto m2 = fixtures::m2();
    auto prof = szbf::estimate_stability_profile(m2.model, m2.barrier, {0.0, 0.05}, {0.1, 0.5},
                                                 40, 1e-3, 1.0, 0);
    REQUIRE(prof.exceed_probability.size() == 2);
    REQUIRE(prof.exceed_probability[0].size() == 2);
    for (const auto& row : prof.exceed_probability)
        for (double p : row) CHECK(p == 0.0);
    CHECK(prof.degenerate_gradient == std::vector<std::uint8_t>{0, 0});
    CHECK(prof.n_paths == 40);
    CHECK(prof.model_name == "m2");

    auto again = szbf::estimate_stability_profile(m2.model, m2.barrier, {0.0, 0.05}, {0.1, 0.5},
                                                  40, 1e-3, 1.0, 0);
    CHECK(again.exceed_probability == prof.exceed_probability);
}

TEST_CASE("escape probabilities are nonincreasing in epsilon") {
    auto m3 = fixtures::m3();
    auto prof = szbf::estimate_stability_profile(m3.model, m3.barrier, {0.0}, {0.05, 0.2}, 30,
                                                 1e-3, 0.2, 1);
    const auto& row = prof.exceed_probability[0];
    CHECK(row[0] > 0.0);  // the outward flow does escape
    CHECK(row[0] <= 1.0);
    CHECK(row[0] >= row[1]);  // nested events
    CHECK(prof.degenerate_gradient[0] == 0);
}

TEST_CASE("a vanishing gradient flags the row and falls back to the raw deficit") {
    // dx = -x dt with dt = 1 maps any x to exactly 0, where h = x1^2 - 0.5
    // is negative and grad h vanishes.
    const auto x1 = szbf::Expr::variable(1);
    szbf::SdeModel model;
    model.name = "collapse";
    model.n = 1;
    model.m = 0;
    model.drift = {-x1};
    szbf::BarrierSpec barrier{x1 * x1 - szbf::Expr::number(0.5), {},
                              Region::box({-1.0}, {1.0})};
    auto prof = szbf::estimate_stability_profile(model, barrier, {0.1}, {0.3, 10.0}, 3, 1.0,
                                                 2.0, 0);
    CHECK(prof.degenerate_gradient[0] == 1);
    CHECK(prof.exceed_probability[0][0] == 1.0);  // deficit 0.5 > 0.3
    CHECK(prof.exceed_probability[0][1] == 0.0);  // but not > 10
}

TEST_CASE("profiles reject unusable parameters and unreachable boundaries") {
    auto m2 = fixtures::m2();
    using szbf::estimate_stability_profile;
    CHECK_THROWS_AS(estimate_stability_profile(m2.model, m2.barrier, {}, {0.1}, 10, 1e-3, 1.0, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_stability_profile(m2.model, m2.barrier, {0.0}, {}, 10, 1e-3, 1.0, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        estimate_stability_profile(m2.model, m2.barrier, {-0.1}, {0.1}, 10, 1e-3, 1.0, 0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        estimate_stability_profile(m2.model, m2.barrier, {0.0}, {0.0}, 10, 1e-3, 1.0, 0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        estimate_stability_profile(m2.model, m2.barrier, {0.1, 0.05}, {0.1}, 10, 1e-3, 1.0, 0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        estimate_stability_profile(m2.model, m2.barrier, {0.0}, {0.5, 0.1}, 10, 1e-3, 1.0, 0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        estimate_stability_profile(m2.model, m2.barrier, {0.0}, {0.1}, 0, 1e-3, 1.0, 0),
        std::invalid_argument);

    // h > 0 on the whole domain: there is no boundary to project onto.
    szbf::BarrierSpec nowhere{szbf::Expr::number(1.0) +
                                  szbf::Expr::variable(1) * szbf::Expr::variable(1),
                              {}, Region::box({-1.0, -1.0}, {1.0, 1.0})};
    CHECK_THROWS_AS(
        estimate_stability_profile(m2.model, nowhere, {0.1}, {0.1}, 2, 1e-3, 0.1, 0),
        std::runtime_error);
}

}  // TEST_SUITE
