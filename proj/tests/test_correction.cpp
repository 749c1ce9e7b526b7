#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pairscreen/correction.hpp"
#include "pairscreen/harness.hpp"

using namespace pairscreen;

namespace {

ParticipantRecord rec(std::size_t id, double x1, double x2, int k, CaseClass c) {
    return {id, x1, x2, k, c == CaseClass::screen_detected || c == CaseClass::interval, c};
}

// Weighted empirical mixture computed point by point.
struct Mixture {
    double m1 = 0, m2 = 0, v1 = 0, v2 = 0, c = 0;
};

Mixture weighted_mixture(const std::vector<ScorePair>& a, const std::vector<ScorePair>& b,
                         double lambda) {
    std::vector<std::pair<ScorePair, double>> pts;
    for (const auto& p : a) pts.push_back({p, lambda / a.size()});
    for (const auto& p : b) pts.push_back({p, (1 - lambda) / b.size()});
    Mixture m;
    for (const auto& [p, w] : pts) {
        m.m1 += w * p.x1;
        m.m2 += w * p.x2;
    }
    for (const auto& [p, w] : pts) {
        m.v1 += w * (p.x1 - m.m1) * (p.x1 - m.m1);
        m.v2 += w * (p.x2 - m.m2) * (p.x2 - m.m2);
        m.c += w * (p.x1 - m.m1) * (p.x2 - m.m2);
    }
    return m;
}

}  // namespace

TEST(Quadrants, RectsAgreeWithClassification) {
    const Thresholds th{0.5, -0.25};
    EXPECT_EQ(quadrant_of({0.5, -0.25}, th), 1);
    EXPECT_EQ(quadrant_of({0.5, -0.3}, th), 2);
    EXPECT_EQ(quadrant_of({0.4, -0.25}, th), 3);
    EXPECT_EQ(quadrant_of({0.4, -0.3}, th), 4);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    for (int i = 0; i < 1000; ++i) {
        const ScorePair p{z(rng), z(rng)};
        const int q = quadrant_of(p, th);
        for (int l = 1; l <= 4; ++l) EXPECT_EQ(quadrant_rect(l, th).contains(p), l == q);
    }
}

TEST(Partition, SplitsObservedCases) {
    TrialDataset d;
    d.thresholds = {1.0, 1.0};
    d.records = {rec(0, 2.0, 2.0, 1, CaseClass::screen_detected),
                 rec(1, 2.0, 0.0, 1, CaseClass::screen_detected),
                 rec(2, 0.0, 1.0, 1, CaseClass::screen_detected),
                 rec(3, 0.0, 0.0, 1, CaseClass::interval),
                 rec(4, 0.5, 0.5, 1, CaseClass::interval),
                 rec(5, -1.0, 0.0, 1, CaseClass::missed),
                 rec(6, 3.0, 3.0, 0, CaseClass::non_case)};
    const auto p = partition_cases(d);
    EXPECT_EQ(p.set_a.size(), 3u);
    EXPECT_EQ(p.set_b.size(), 2u);
    EXPECT_EQ(p.quadrant(1).size(), 1u);
    EXPECT_EQ(p.quadrant(2).size(), 1u);
    EXPECT_EQ(p.quadrant(3).size(), 1u);
    EXPECT_EQ(p.quadrant(4).size(), 2u);
    EXPECT_EQ(p.observed_cases().size(), 5u);

    const auto s = partition_cases(summarize(d));
    EXPECT_EQ(s.set_a.size(), 3u);
    EXPECT_EQ(s.set_b.size(), 2u);

    TrialDataset none;
    none.records = {rec(0, 0, 0, 0, CaseClass::non_case)};
    EXPECT_THROW(partition_cases(none), CorrectionUnavailable);
}

TEST(SampleStats, TwoPointsAndClamp) {
    const std::vector<ScorePair> pts{{0.0, 0.0}, {2.0, 2.0}};
    const auto s = quadrant_sample_stats(pts);
    ASSERT_TRUE(s);
    EXPECT_DOUBLE_EQ(s->mean1, 1.0);
    EXPECT_DOUBLE_EQ(s->mean2, 1.0);
    EXPECT_NEAR(s->sd1, std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s->corr, 1.0, 1e-15);
    EXPECT_FALSE(s->degenerate);
    EXPECT_NEAR(s->start_params().rho(), 1.0 - 1e-6, 1e-15);

    EXPECT_FALSE(quadrant_sample_stats(std::span<const ScorePair>(pts.data(), 1)));
    const std::vector<ScorePair> flat{{1.0, 0.0}, {1.0, 2.0}};
    const auto f = quadrant_sample_stats(flat);
    ASSERT_TRUE(f);
    EXPECT_TRUE(f->degenerate);
    EXPECT_EQ(f->corr, 0.0);
}

TEST(NathMle, PlaneFitIsClosedFormMle) {
    std::mt19937_64 rng(11);
    const BivNormParams truth(1.0, -0.5, 2.0, 0.5, 0.6);
    const auto pts = oracle::draw(truth, 300, rng);
    const auto m = oracle::moments(pts);
    const auto fit = nath_mle(pts, Rect::plane(), BivNormParams::standard());
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.params.mu1(), m.m1, 1e-6);
    EXPECT_NEAR(fit.params.mu2(), m.m2, 1e-6);
    EXPECT_NEAR(fit.params.var1(), m.v1, 1e-6);
    EXPECT_NEAR(fit.params.var2(), m.v2, 1e-6);
    EXPECT_NEAR(fit.params.rho(), m.c / std::sqrt(m.v1 * m.v2), 1e-6);
}

TEST(NathMle, RecoversTruncatedParameters) {
    std::mt19937_64 rng(12);
    const BivNormParams truth(1.0, 0.8, 1.0, 1.5, 0.3);
    const Rect q1{0.5, kInf, 0.2, kInf};
    const auto pts = oracle::draw_truncated(truth, q1, 20000, rng);
    const auto start = quadrant_sample_stats(pts)->start_params();
    const auto fit = nath_mle(pts, q1, start);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.params.mu1(), 1.0, 0.1);
    EXPECT_NEAR(fit.params.mu2(), 0.8, 0.1);
    EXPECT_NEAR(fit.params.var1(), 1.0, 0.12);
    EXPECT_NEAR(fit.params.var2(), 1.5, 0.18);
    EXPECT_NEAR(fit.params.rho(), 0.3, 0.08);
}

TEST(NathMle, TraceIsMonotoneAndFitIsLocalMaximum) {
    std::mt19937_64 rng(13);
    const BivNormParams truth(0.0, 0.0, 1.0, 1.0, 0.5);
    const Rect q2{-0.3, kInf, -kInf, 0.4};
    const auto pts = oracle::draw_truncated(truth, q2, 800, rng);
    NathOptions opts;
    opts.record_trace = true;
    const auto fit = nath_mle(pts, q2, quadrant_sample_stats(pts)->start_params(), opts);
    ASSERT_FALSE(fit.trace.empty());
    for (std::size_t i = 1; i < fit.trace.size(); ++i) EXPECT_GE(fit.trace[i], fit.trace[i - 1]);
    EXPECT_NEAR(fit.truncated_loglik, truncated_bvn_loglik(fit.params, pts, q2), 1e-8);
    if (!fit.converged) GTEST_SKIP() << "fit escaped; optimality check not applicable";

    // Oracle likelihood from density and quadrature; nudging any parameter lowers it.
    auto ll = [&](const BivNormParams& p) {
        double s = -static_cast<double>(pts.size()) * std::log(oracle::rect_prob(p, q2));
        for (const auto& x : pts) s += oracle::log_density(p, x.x1, x.x2);
        return s;
    };
    const auto& p = fit.params;
    const double best = ll(p);
    const double h = 1e-3;
    for (double sgn : {-1.0, 1.0}) {
        EXPECT_LE(ll({p.mu1() + sgn * h, p.mu2(), p.var1(), p.var2(), p.rho()}), best + 1e-9);
        EXPECT_LE(ll({p.mu1(), p.mu2() + sgn * h, p.var1(), p.var2(), p.rho()}), best + 1e-9);
        EXPECT_LE(ll({p.mu1(), p.mu2(), p.var1() * (1 + sgn * h), p.var2(), p.rho()}), best + 1e-9);
        EXPECT_LE(ll({p.mu1(), p.mu2(), p.var1(), p.var2() * (1 + sgn * h), p.rho()}), best + 1e-9);
        EXPECT_LE(ll({p.mu1(), p.mu2(), p.var1(), p.var2(), p.rho() + sgn * h}), best + 1e-9);
    }
}

TEST(NathMle, MomentsOverloadMatchesPoints) {
    std::mt19937_64 rng(14);
    const BivNormParams truth(0.0, 0.0, 1.0, 1.0, 0.2);
    const Rect q4{-kInf, 0.5, -kInf, 0.5};
    const auto pts = oracle::draw_truncated(truth, q4, 400, rng);
    const auto start = quadrant_sample_stats(pts)->start_params();
    const auto a = nath_mle(pts, q4, start);
    const auto b = nath_mle(ScoreMoments(pts), q4, start);
    EXPECT_NEAR(a.truncated_loglik, b.truncated_loglik, 1e-8);
    EXPECT_NEAR(a.params.mu1(), b.params.mu1(), 1e-5);
}

TEST(NathMle, RejectsBadInput) {
    const std::vector<ScorePair> one{{1.0, 1.0}};
    EXPECT_THROW(nath_mle(one, Rect::plane(), BivNormParams::standard()), std::invalid_argument);
    const std::vector<ScorePair> outside{{1.0, 1.0}, {-1.0, -1.0}};
    EXPECT_THROW(nath_mle(outside, {0.0, kInf, 0.0, kInf}, BivNormParams::standard()),
                 std::invalid_argument);
}

TEST(SelectBestFit, LargestFullLikelihoodPreferringConverged) {
    std::mt19937_64 rng(15);
    const BivNormParams truth(1.0, 1.0, 1.0, 1.0, 0.3);
    const auto obs = oracle::draw(truth, 200, rng);
    std::vector<QuadrantFit> fits(3);
    fits[0].params = BivNormParams(0.0, 0.0, 1.0, 1.0, 0.0);
    fits[1].params = truth;
    fits[2].params = BivNormParams(1.0, 1.0, 1.1, 0.9, 0.3);
    for (int i = 0; i < 3; ++i) {
        fits[i].quadrant = i + 1;
        fits[i].converged = true;
    }
    double best = -kInf;
    std::size_t expected = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        double s = 0.0;
        for (const auto& x : obs) s += oracle::log_density(fits[i].params, x.x1, x.x2);
        if (s > best) best = s, expected = i;
    }
    EXPECT_EQ(select_best_fit(fits, obs), expected);
    EXPECT_NEAR(fits[expected].full_loglik, best, 1e-8);

    fits[expected].converged = false;
    EXPECT_NE(select_best_fit(fits, obs), expected);

    std::vector<QuadrantFit> empty;
    EXPECT_THROW(select_best_fit(empty, obs), CorrectionUnavailable);
}

TEST(LambdaHat, ComplementOfLowerOrthant) {
    EXPECT_NEAR(lambda_hat(BivNormParams(1.0, 2.0, 4.0, 9.0, 0.0), 1.0, 2.0), 0.75, 1e-14);
    const BivNormParams p(0.3, -0.2, 1.7, 0.6, 0.45);
    const double expected =
        1.0 - oracle::bvn_cdf((1.2 - 0.3) / std::sqrt(1.7), (0.1 + 0.2) / std::sqrt(0.6), 0.45);
    EXPECT_NEAR(lambda_hat(p, 1.2, 0.1), expected, 1e-9);
}

TEST(WeightedCorrection, MatchesWeightedMixture) {
    std::mt19937_64 rng(16);
    const auto a = oracle::draw(BivNormParams(2.0, 1.5, 1.0, 0.8, 0.4), 57, rng);
    const auto b = oracle::draw(BivNormParams(-0.5, -1.0, 0.3, 0.4, -0.2), 23, rng);
    const double lambda = 0.62;
    const auto m = weighted_mixture(a, b, lambda);
    const auto out = weighted_correction(ScoreMoments(a), ScoreMoments(b),
                                         BivNormParams::standard(), lambda);
    ASSERT_TRUE(out.weighting_applied);
    EXPECT_NEAR(out.weighted.mu1(), m.m1, 1e-10);
    EXPECT_NEAR(out.weighted.mu2(), m.m2, 1e-10);
    EXPECT_NEAR(out.weighted.var1(), m.v1, 1e-10);
    EXPECT_NEAR(out.weighted.var2(), m.v2, 1e-10);
    EXPECT_NEAR(out.weighted.rho(), m.c / std::sqrt(m.v1 * m.v2), 1e-10);

    // Second-moment components give the same variances.
    const auto w = weighted_moments(ScoreMoments(a), ScoreMoments(b), lambda);
    EXPECT_NEAR(w.g1 + w.h1 - m.m1 * m.m1, m.v1, 1e-10);
    EXPECT_NEAR(w.g2 + w.h2 - m.m2 * m.m2, m.v2, 1e-10);
    EXPECT_NEAR(w.p + w.q - m.m1 * m.m2, m.c, 1e-10);
}

TEST(WeightedCorrection, FallsBackOnSmallSets) {
    const std::vector<ScorePair> a{{2.0, 2.0}, {3.0, 1.0}, {2.5, 3.0}};
    const BivNormParams nath(1.0, 1.0, 1.0, 1.0, 0.1);
    for (std::size_t nb : {0u, 1u}) {
        std::vector<ScorePair> b(nb, ScorePair{0.0, 0.1});
        const auto out = weighted_correction(ScoreMoments(a), ScoreMoments(b), nath, 0.8);
        EXPECT_FALSE(out.weighting_applied);
        EXPECT_EQ(out.weighted.mu1(), nath.mu1());
        EXPECT_FALSE(out.warnings.empty());
    }
    const std::vector<ScorePair> b{{0.0, 0.1}, {0.2, -0.3}};
    EXPECT_TRUE(weighted_correction(ScoreMoments(a), ScoreMoments(b), nath, 0.8).weighting_applied);
    EXPECT_FALSE(weighted_correction(ScoreMoments(b), ScoreMoments(std::span<const ScorePair>(a.data(), 1)), nath, 0.8)
                     .weighting_applied);
}

TEST(CorrectCaseDistribution, NoIntervalCasesUsesNathFit) {
    ScenarioConfig c;
    c.n = 20000;
    c.prevalence = 0.1;
    c.signs_rate = 0.0;
    c.noncase_params = BivNormParams::standard(0.3);
    c.case_params = case_params_for_aucs(0.78, 0.78, c.noncase_params, 1.0, 1.0, 0.3);
    c.thresholds = Thresholds{0.3, 0.5};
    Engine rng = make_stream(17);
    const auto out = correct_case_distribution(draw_trial(c, rng));
    EXPECT_FALSE(out.weighting_applied);
    EXPECT_EQ(out.weighted.mu1(), out.nath.mu1());
    EXPECT_GE(out.selected_quadrant, 1);
    EXPECT_LE(out.selected_quadrant, 3);
}

TEST(CorrectCaseDistribution, ReducesBiasOnLargeTrial) {
    ScenarioConfig c;
    c.n = 200000;
    c.prevalence = 0.24;
    c.signs_rate = 0.1;
    c.noncase_params = BivNormParams::standard(0.3);
    c.case_params = case_params_for_aucs(0.78, 0.78, c.noncase_params, 1.0, 1.0, 0.3);
    c.thresholds = AscertainmentTargets{0.15, 0.8};
    Engine rng = make_stream(18);
    const auto s = summarize(draw_trial(c, rng));
    const auto out = correct_case_distribution(s);
    ASSERT_TRUE(out.weighting_applied);
    EXPECT_GT(out.lambda_hat, 0.0);
    EXPECT_LT(out.lambda_hat, 1.0);
    const auto obs = s.observed_cases();
    const double mu1 = c.case_params.mu1();
    const double mu2 = c.case_params.mu2();
    EXPECT_LT(std::abs(out.weighted.mu1() - mu1), std::abs(obs.mean1() - mu1));
    EXPECT_LT(std::abs(out.weighted.mu2() - mu2), std::abs(obs.mean2() - mu2));
}
