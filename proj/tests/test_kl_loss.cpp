#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <gpn/geometry.hpp>
#include <gpn/kl_loss.hpp>
#include <gpn/rng.hpp>

#include "support/oracles.hpp"
#include "support/testutil.hpp"

namespace {

using gpn::Ellipse;

constexpr double kPi = std::numbers::pi;

// Component-wise gradient comparison: |got - want| within
// max(abs_tol, rel_tol * |want|).
void expect_gradient_near(const gpn::ParamGradient& got,
                          const gpn::ParamGradient& want, double abs_tol,
                          double rel_tol) {
    const auto check = [&](double g, double w, const char* name) {
        EXPECT_LE(std::abs(g - w), std::max(abs_tol, rel_tol * std::abs(w)))
            << name << ": got " << g << " want " << w;
    };
    check(got.d_mu_x, want.d_mu_x, "d_mu_x");
    check(got.d_mu_y, want.d_mu_y, "d_mu_y");
    check(got.d_sigma_l, want.d_sigma_l, "d_sigma_l");
    check(got.d_sigma_s, want.d_sigma_s, "d_sigma_s");
    check(got.d_theta, want.d_theta, "d_theta");
}

TEST(KlDivergence, SelfDivergenceIsZero) {
    gpn::Rng rng(201);
    for (int i = 0; i < 100; ++i) {
        const Ellipse e = testutil::random_ellipse(rng);
        EXPECT_NEAR(gpn::kl_divergence(e, e), 0.0, 1e-12);
    }
}

TEST(KlDivergence, UnitCenterShiftOnWidthTwo) {
    // Hand expansion: 1/2 (1 + 1 + (dx/sigma_l)^2 + 0 + 0 - 2) = 1/8.
    const Ellipse t(0, 0, 2, 1, 0);
    const Ellipse p(1, 0, 2, 1, 0);
    EXPECT_NEAR(gpn::kl_divergence(t, p), 0.125, 1e-12);
    const oracle::MeanSe mc = oracle::mc_kl(t, p, 1000000, 2024);
    EXPECT_NEAR(mc.mean, 0.125, 5e-3);
}

TEST(KlDivergence, QuarterTurnOfTwoToOneEllipse) {
    // Trace becomes 4 + 1/4; KL = 1/2 (4.25 - 2) = 1.125.
    const Ellipse t(0, 0, 2, 1, 0);
    const Ellipse p(0, 0, 2, 1, kPi / 2);
    EXPECT_NEAR(gpn::kl_divergence(t, p), 1.125, 1e-12);
    const oracle::MeanSe mc = oracle::mc_kl(t, p, 1000000, 2025);
    EXPECT_NEAR(mc.mean, 1.125, 5e-3);
}

TEST(KlDivergence, AgreesWithSamplingEstimateOnRandomPairs) {
    gpn::Rng rng(202);
    int tested = 0;
    while (tested < 20) {
        const auto [t, p] = testutil::random_pair(rng);
        const double kl = gpn::kl_divergence(t, p);
        if (kl >= 5.0) continue;  // heavy tails make the estimator noisy
        ++tested;
        const oracle::MeanSe mc =
            oracle::mc_kl(t, p, 200000, 3000 + tested);
        EXPECT_NEAR(mc.mean, kl, std::max(3.0 * mc.se, 1e-4))
            << "pair " << tested;
    }
}

TEST(KlDivergence, NonNegativeOnRandomPairs) {
    gpn::Rng rng(203);
    for (int i = 0; i < 10000; ++i) {
        const auto [t, p] = testutil::random_pair(rng);
        EXPECT_GE(gpn::kl_divergence(t, p), -1e-12);
    }
}

TEST(KlDivergence, ZeroExactlyWhenGaussiansCoincide) {
    gpn::Rng rng(204);
    for (int i = 0; i < 500; ++i) {
        const auto [t, p] = testutil::random_pair(rng);
        const double kl = gpn::kl_divergence(t, p);
        const gpn::Gaussian2D gt = gpn::ellipse_to_gaussian(t);
        const gpn::Gaussian2D gp = gpn::ellipse_to_gaussian(p);
        const double scale =
            std::max({gt.sxx, gt.syy, gp.sxx, gp.syy, 1.0});
        const double gauss_diff = std::max(
            {std::abs(gt.sxx - gp.sxx), std::abs(gt.sxy - gp.sxy),
             std::abs(gt.syy - gp.syy), std::abs(gt.mu.x - gp.mu.x),
             std::abs(gt.mu.y - gp.mu.y)});
        if (kl < 1e-10) {
            EXPECT_LT(gauss_diff, 1e-8 * scale);
        }
        if (gauss_diff > 1e-4 * scale) {
            EXPECT_GT(kl, 1e-10);
        }
    }
    // The flip image is the same Gaussian, so its KL must vanish.
    for (int i = 0; i < 200; ++i) {
        const Ellipse e = testutil::random_ellipse(rng);
        EXPECT_LT(gpn::kl_divergence(e, testutil::flipped(e)), 1e-10);
        EXPECT_LT(gpn::kl_divergence(testutil::flipped(e), e), 1e-10);
    }
}

TEST(KlDivergence, InvariantUnderRigidMotion) {
    gpn::Rng rng(205);
    for (int i = 0; i < 1000; ++i) {
        const auto [t, p] = testutil::random_pair(rng);
        const double phi = rng.uniform(-kPi, kPi);
        const double tx = rng.uniform(-20.0, 20.0);
        const double ty = rng.uniform(-20.0, 20.0);
        const double before = gpn::kl_divergence(t, p);
        const double after =
            gpn::kl_divergence(testutil::rigid_motion(t, phi, tx, ty),
                               testutil::rigid_motion(p, phi, tx, ty));
        EXPECT_NEAR(after, before, 1e-9);
    }
}

TEST(KlDivergence, InvariantUnderFlipOfEitherArgument) {
    gpn::Rng rng(206);
    for (int i = 0; i < 1000; ++i) {
        const auto [t, p] = testutil::random_pair(rng);
        const double base = gpn::kl_divergence(t, p);
        EXPECT_NEAR(gpn::kl_divergence(testutil::flipped(t), p), base, 1e-9);
        EXPECT_NEAR(gpn::kl_divergence(t, testutil::flipped(p)), base, 1e-9);
    }
}

TEST(KlDivergence, AsymmetricBetweenNestedCircles) {
    const Ellipse small(0, 0, 1, 1, 0);
    const Ellipse big(0, 0, 2, 2, 0);
    const double forward = gpn::kl_divergence(small, big);
    const double backward = gpn::kl_divergence(big, small);
    EXPECT_NEAR(forward, 0.25 + std::log(4.0) - 1.0, 1e-12);
    EXPECT_NEAR(backward, 3.0 - std::log(4.0), 1e-12);
    EXPECT_GT(backward - forward, 0.9);
}

TEST(KlDivergence, RotationOfCirclesCostsNothing) {
    gpn::Rng rng(207);
    for (int i = 0; i < 200; ++i) {
        const double r = rng.log_uniform(0.5, 5.0);
        const double th1 = rng.uniform(-kPi / 2, kPi / 2);
        const double th2 = rng.uniform(-kPi / 2, kPi / 2);
        EXPECT_NEAR(gpn::kl_divergence(Ellipse(1, 2, r, r, th1),
                                       Ellipse(1, 2, r, r, th2)),
                    0.0, 1e-10);
    }
}

TEST(KlDivergence, MatchesAxisAlignedFormOnAxisAlignedPairs) {
    gpn::Rng rng(208);
    for (int i = 0; i < 1000; ++i) {
        const Ellipse t = testutil::random_axis_aligned(rng);
        const Ellipse p = testutil::random_axis_aligned(rng);
        EXPECT_NEAR(gpn::kl_divergence(t, p),
                    gpn::kl_divergence_axis_aligned(t, p), 1e-10);
    }
}

TEST(KlTerms, TraceTermDependsOnlyOnAngleDifference) {
    gpn::Rng rng(209);
    for (int i = 0; i < 300; ++i) {
        const auto [t, p] = testutil::random_pair(rng);
        const double d = rng.uniform(-1.0, 1.0);
        const Ellipse t2(t.mu_x, t.mu_y, t.sigma_l, t.sigma_s, t.theta + d);
        const Ellipse p2(p.mu_x, p.mu_y, p.sigma_l, p.sigma_s, p.theta + d);
        EXPECT_NEAR(gpn::kl_trace_term(t2, p2), gpn::kl_trace_term(t, p),
                    1e-9);
    }
}

TEST(KlTerms, SumReconstructsDivergence) {
    gpn::Rng rng(210);
    for (int i = 0; i < 300; ++i) {
        const auto [t, p] = testutil::random_pair(rng);
        const double sum = 0.5 * (gpn::kl_trace_term(t, p) +
                                  gpn::kl_mahalanobis_term(t, p) +
                                  gpn::kl_log_det_term(t, p) - 2.0);
        EXPECT_EQ(sum, gpn::kl_divergence(t, p));
    }
}

TEST(KlAxisAligned, ClosedFormValues) {
    const Ellipse t(0, 0, 2, 1, 0);
    EXPECT_EQ(gpn::kl_divergence_axis_aligned(t, t), 0.0);
    EXPECT_NEAR(
        gpn::kl_divergence_axis_aligned(t, Ellipse(1, 0, 2, 1, 0)), 0.125,
        1e-12);
    // Circles radius 1 -> 2: 1/2 (1/4 + 1/4 + ln 4 + ln 4 - 2).
    EXPECT_NEAR(gpn::kl_divergence_axis_aligned(Ellipse(0, 0, 1, 1, 0),
                                                Ellipse(0, 0, 2, 2, 0)),
                0.25 + std::log(4.0) - 1.0, 1e-12);
    const oracle::MeanSe mc = oracle::mc_kl(
        Ellipse(0, 0, 1, 1, 0), Ellipse(0, 0, 2, 2, 0), 1000000, 2026);
    EXPECT_NEAR(mc.mean, 0.25 + std::log(4.0) - 1.0, 5e-3);
}

TEST(KlAxisAligned, RejectsRotatedInputs) {
    const Ellipse flat(0, 0, 2, 1, 0);
    const Ellipse tilted(0, 0, 2, 1, 0.3);
    EXPECT_THROW(gpn::kl_divergence_axis_aligned(tilted, flat),
                 gpn::invalid_input);
    EXPECT_THROW(gpn::kl_divergence_axis_aligned(flat, tilted),
                 gpn::invalid_input);
}

TEST(KlGradient, VanishesAtTheTarget) {
    gpn::Rng rng(211);
    for (int i = 0; i < 200; ++i) {
        const Ellipse e = testutil::random_ellipse(rng);
        const gpn::ParamGradient g = gpn::kl_gradient(e, e);
        EXPECT_NEAR(g.d_mu_x, 0.0, 1e-9);
        EXPECT_NEAR(g.d_mu_y, 0.0, 1e-9);
        EXPECT_NEAR(g.d_sigma_l, 0.0, 1e-9);
        EXPECT_NEAR(g.d_sigma_s, 0.0, 1e-9);
        EXPECT_NEAR(g.d_theta, 0.0, 1e-9);
    }
}

TEST(KlGradient, CenterComponentClosedForm) {
    // d/d mu_x of the offset term: dx / sigma_l^2 = 1/4.
    const gpn::ParamGradient g =
        gpn::kl_gradient(Ellipse(0, 0, 2, 1, 0), Ellipse(1, 0, 2, 1, 0));
    EXPECT_NEAR(g.d_mu_x, 0.25, 1e-12);
    EXPECT_NEAR(g.d_mu_y, 0.0, 1e-12);
}

TEST(KlGradient, AngleComponentNonzeroForDiagonalOffset) {
    // At theta = 0 on both sides the angle gradient reduces to
    // (1/sigma_l^2 - 1/sigma_s^2) dx dy: zero only when the center offset
    // is axis-parallel or the proposal is circular. Here it is -8/9.
    const gpn::ParamGradient g =
        gpn::kl_gradient(Ellipse(1, 1, 1, 1, 0), Ellipse(0, 0, 3, 1, 0));
    EXPECT_NEAR(g.d_theta, -8.0 / 9.0, 1e-12);
    // And exactly zero when the offset has no y component.
    const gpn::ParamGradient g0 =
        gpn::kl_gradient(Ellipse(1, 0, 1, 1, 0), Ellipse(0, 0, 3, 1, 0));
    EXPECT_EQ(g0.d_theta, 0.0);
}

TEST(KlGradient, MatchesFiniteDifferencesOnRandomPairs) {
    gpn::Rng rng(212);
    for (int i = 0; i < 1000; ++i) {
        const auto [t, p] = testutil::random_pair(rng);
        expect_gradient_near(gpn::kl_gradient(t, p),
                             oracle::fd_kl_gradient(t, p), 1e-5, 1e-4);
    }
}

TEST(SmoothedL1, BranchValuesAndContinuity) {
    EXPECT_EQ(gpn::smoothed_l1(3.0, 3.0), 0.0);
    EXPECT_NEAR(gpn::smoothed_l1(0.5, 0.0), 0.125, 1e-15);
    EXPECT_NEAR(gpn::smoothed_l1(3.0, 0.0), 2.5, 1e-15);
    // The two branches agree at the transition point.
    EXPECT_NEAR(gpn::smoothed_l1(1.0 - 1e-9, 0.0),
                gpn::smoothed_l1(1.0 + 1e-9, 0.0), 1e-8);
    EXPECT_THROW(gpn::smoothed_l1(std::nan(""), 0.0), gpn::invalid_input);
}

TEST(SmoothedL1, DerivativeMatchesFiniteDifferences) {
    gpn::Rng rng(213);
    for (int i = 0; i < 500; ++i) {
        const double x = rng.uniform(-4.0, 4.0);
        const double h = 1e-6;
        const double fd =
            (gpn::smoothed_l1(x + h, 0.0) - gpn::smoothed_l1(x - h, 0.0)) /
            (2 * h);
        EXPECT_NEAR(gpn::smoothed_l1_derivative(x, 0.0), fd, 1e-5);
    }
    EXPECT_EQ(gpn::smoothed_l1_derivative(7.0, 0.0), 1.0);
    EXPECT_EQ(gpn::smoothed_l1_derivative(-7.0, 0.0), -1.0);
}

TEST(RegressionLoss, SumsTheFiveComponents) {
    const gpn::EncodedEllipse a{0.1, -0.2, 0.3, 0.0, 1.5};
    EXPECT_EQ(gpn::rpn_regression_loss(a, a), 0.0);
    gpn::EncodedEllipse b = a;
    b.ty += 0.5;
    EXPECT_NEAR(gpn::rpn_regression_loss(b, a), 0.125, 1e-15);
    gpn::EncodedEllipse c = a;
    c.t_tan += 3.0;
    EXPECT_NEAR(gpn::rpn_regression_loss(c, a), 2.5, 1e-15);
    gpn::EncodedEllipse d = a;
    d.tx += 0.5;
    d.tw -= 3.0;
    EXPECT_NEAR(gpn::rpn_regression_loss(d, a), 2.625, 1e-15);
}

}  // namespace
