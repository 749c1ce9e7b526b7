#include "pairscreen/roc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pairscreen {

namespace {

// Derivatives of AUC = Phi(a / sqrt(1 + b^2)) with respect to a and b.
struct AucGradient {
    double f = 0.0;
    double g = 0.0;
};

AucGradient auc_gradient(double a, double b) {
    const double s = 1.0 + b * b;
    const double dens = std_normal_pdf(a / std::sqrt(s));
    return {dens / std::sqrt(s), -dens * a * b / std::pow(s, 1.5)};
}

struct BinormalIndex {
    double a = 0.0;
    double b = 1.0;
};

BinormalIndex binormal_index(const TestParams& t) {
    const double sd_case = std::sqrt(t.cases.var);
    return {(t.cases.mean - t.non_cases.mean) / sd_case, std::sqrt(t.non_cases.var) / sd_case};
}

void check_variance(const NormalParams& p) {
    if (!(p.var > 0.0)) throw std::invalid_argument("binormal model needs positive variances");
}

}  // namespace

double binormal_auc(const NormalParams& cases, const NormalParams& non_cases) {
    check_variance(cases);
    check_variance(non_cases);
    return std_normal_cdf((cases.mean - non_cases.mean) / std::sqrt(cases.var + non_cases.var));
}

RocPoint binormal_roc_point(const NormalParams& cases, const NormalParams& non_cases,
                            double threshold) {
    check_variance(cases);
    check_variance(non_cases);
    return {1.0 - std_normal_cdf((threshold - non_cases.mean) / std::sqrt(non_cases.var)),
            1.0 - std_normal_cdf((threshold - cases.mean) / std::sqrt(cases.var))};
}

std::vector<RocPoint> binormal_roc_curve(const NormalParams& cases, const NormalParams& non_cases,
                                         std::size_t points) {
    if (points < 2) throw std::invalid_argument("ROC curve needs at least 2 points");
    const double pooled = std::sqrt(0.5 * (cases.var + non_cases.var));
    const double mid = 0.5 * (cases.mean + non_cases.mean);
    const double span = 6.0 * pooled + 0.5 * std::abs(cases.mean - non_cases.mean);
    std::vector<RocPoint> curve;
    curve.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double t = mid + span - 2.0 * span * static_cast<double>(i) /
                                          static_cast<double>(points - 1);
        curve.push_back(binormal_roc_point(cases, non_cases, t));
    }
    return curve;
}

VarDiffResult var_diff_auc(const TestParams& test1, const TestParams& test2, double rho_non_cases,
                           double rho_cases, std::size_t n_cases, std::size_t n_non_cases) {
    if (n_cases < 2 || n_non_cases < 2) {
        throw std::invalid_argument("var_diff_auc: need at least 2 cases and 2 non-cases");
    }
    if (std::abs(rho_cases) > 1.0 || std::abs(rho_non_cases) > 1.0) {
        throw std::invalid_argument("var_diff_auc: correlations must lie in [-1, 1]");
    }
    for (const auto* t : {&test1, &test2}) {
        check_variance(t->cases);
        check_variance(t->non_cases);
    }
    const double n1 = static_cast<double>(n_cases);
    const double n0 = static_cast<double>(n_non_cases);
    const auto [a1, b1] = binormal_index(test1);
    const auto [a2, b2] = binormal_index(test2);
    const double r1 = rho_cases;
    const double r0 = rho_non_cases;

    auto var_a = [&](double a, double b) { return (a * a + 2.0) / (2.0 * n1) + b * b / n0; };
    auto var_b = [&](double b) { return b * b * (1.0 / (2.0 * n0) + 1.0 / (2.0 * n1)); };
    auto cov_ab = [&](double a, double b) { return a * b / (2.0 * n1); };

    const double cov_a1a2 = r1 / n1 + r0 * b1 * b2 / n0 + a1 * a2 * r1 * r1 / (2.0 * n1);
    const double cov_b1b2 = b1 * b2 * (r0 * r0 / (2.0 * n0) + r1 * r1 / (2.0 * n1));
    const double cov_a1b2 = a1 * b2 * r1 * r1 / (2.0 * n1);
    const double cov_a2b1 = a2 * b1 * r1 * r1 / (2.0 * n1);

    const auto d1 = auc_gradient(a1, b1);
    const auto d2 = auc_gradient(a2, b2);

    VarDiffResult out;
    out.var_auc1 = d1.f * d1.f * var_a(a1, b1) + d1.g * d1.g * var_b(b1) +
                   2.0 * d1.f * d1.g * cov_ab(a1, b1);
    out.var_auc2 = d2.f * d2.f * var_a(a2, b2) + d2.g * d2.g * var_b(b2) +
                   2.0 * d2.f * d2.g * cov_ab(a2, b2);
    out.cov_auc = d1.f * d2.f * cov_a1a2 + d1.f * d2.g * cov_a1b2 + d1.g * d2.f * cov_a2b1 +
                  d1.g * d2.g * cov_b1b2;
    const double raw = out.var_auc1 + out.var_auc2 - 2.0 * out.cov_auc;
    out.clamped = raw < 0.0;
    out.var_diff = std::max(raw, 0.0);
    return out;
}

std::string to_string(FavoredTest f) {
    switch (f) {
        case FavoredTest::test1: return "test1";
        case FavoredTest::test2: return "test2";
        case FavoredTest::none: return "none";
    }
    return "none";
}

DifferenceTest difference_test(double diff, double var_diff, double alpha) {
    if (!(var_diff > 0.0)) throw std::domain_error("difference test unavailable: zero variance");
    DifferenceTest t;
    t.z = diff / std::sqrt(var_diff);
    t.p_value = std::min(1.0, 2.0 * std_normal_cdf(-std::abs(t.z)));
    t.reject = t.p_value < alpha;
    if (t.reject) t.favored = diff > 0.0 ? FavoredTest::test1 : FavoredTest::test2;
    return t;
}

std::string to_string(AnalysisKind k) {
    switch (k) {
        case AnalysisKind::truth: return "true";
        case AnalysisKind::observed: return "observed";
        case AnalysisKind::corrected: return "corrected";
    }
    return "true";
}

AnalysisResult analyze_moments(AnalysisKind kind, const ScoreMoments& cases,
                               const ScoreMoments& non_cases,
                               const std::optional<BivNormParams>& case_params,
                               std::size_t n_cases, double alpha) {
    if (non_cases.count() < 2) throw std::domain_error("fewer than 2 non-cases");
    if (!case_params && cases.count() < 2) throw std::domain_error("fewer than 2 cases");

    AnalysisResult r;
    r.kind = kind;
    double rho_cases = 0.0;
    if (case_params) {
        r.test1.cases = {case_params->mu1(), case_params->var1()};
        r.test2.cases = {case_params->mu2(), case_params->var2()};
        rho_cases = case_params->rho();
    } else {
        r.test1.cases = {cases.mean1(), cases.var1()};
        r.test2.cases = {cases.mean2(), cases.var2()};
        rho_cases = cases.corr();
    }
    r.test1.non_cases = {non_cases.mean1(), non_cases.var1()};
    r.test2.non_cases = {non_cases.mean2(), non_cases.var2()};
    r.n_cases_used = n_cases;
    r.n_noncases_used = non_cases.count();

    const auto positive = [](const TestParams& t) { return t.cases.var > 0.0 && t.non_cases.var > 0.0; };
    if (!positive(r.test1) || !positive(r.test2)) {
        r.test_available = false;
        r.warnings.push_back("zero score variance in a class; test unavailable");
        return r;
    }
    r.auc1 = binormal_auc(r.test1.cases, r.test1.non_cases);
    r.auc2 = binormal_auc(r.test2.cases, r.test2.non_cases);
    r.diff = r.auc1 - r.auc2;

    const auto v = var_diff_auc(r.test1, r.test2, non_cases.corr(), rho_cases,
                                std::max<std::size_t>(n_cases, 2), non_cases.count());
    r.var_diff = v.var_diff;
    if (v.clamped) r.warnings.push_back("negative variance of AUC difference clamped to 0");
    if (r.var_diff > 0.0) {
        const auto t = difference_test(r.diff, r.var_diff, alpha);
        r.z = t.z;
        r.p_value = t.p_value;
        r.reject = t.reject;
        r.favored = t.favored;
    } else {
        r.test_available = false;
        r.warnings.push_back("variance of AUC difference is 0; test unavailable");
    }
    return r;
}

AnalysisResult run_analysis(const TrialSummary& summary, AnalysisKind kind,
                            const AnalysisOptions& opts) {
    switch (kind) {
        case AnalysisKind::truth: {
            const auto cases = summary.true_cases();
            return analyze_moments(kind, cases, summary.true_non_cases(), std::nullopt,
                                   cases.count(), opts.alpha);
        }
        case AnalysisKind::observed: {
            const auto cases = summary.observed_cases();
            return analyze_moments(kind, cases, summary.observed_non_cases(), std::nullopt,
                                   cases.count(), opts.alpha);
        }
        case AnalysisKind::corrected: break;
    }

    const auto cases = summary.observed_cases();
    const auto non_cases = summary.observed_non_cases();
    CorrectedParams correction;
    try {
        correction = correct_case_distribution(summary);
    } catch (const CorrectionUnavailable& e) {
        auto r = analyze_moments(AnalysisKind::corrected, cases, non_cases, std::nullopt,
                                 cases.count(), opts.alpha);
        r.degraded = true;
        r.warnings.insert(r.warnings.begin(),
                          std::string("correction unavailable (") + e.what() +
                              "); reporting the observed analysis");
        return r;
    }
    std::size_t n_cases = cases.count();
    if (opts.corrected_count == CorrectedCaseCount::inflated && correction.lambda_hat > 0.0) {
        const double inflated =
            std::round(static_cast<double>(summary.screen_points.size()) / correction.lambda_hat);
        n_cases = std::max(n_cases, static_cast<std::size_t>(inflated));
    }
    auto r = analyze_moments(AnalysisKind::corrected, cases, non_cases, correction.weighted,
                             n_cases, opts.alpha);
    r.warnings.insert(r.warnings.begin(), correction.warnings.begin(), correction.warnings.end());
    r.correction = std::move(correction);
    return r;
}

AnalysisResult run_analysis(const TrialDataset& data, AnalysisKind kind,
                            const AnalysisOptions& opts) {
    return run_analysis(summarize(data), kind, opts);
}

}  // namespace pairscreen
