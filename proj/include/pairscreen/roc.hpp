#pragma once

// Binormal ROC analysis and the paired test of equal AUCs.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pairscreen/correction.hpp"
#include "pairscreen/trial.hpp"

namespace pairscreen {

struct NormalParams {
    double mean = 0.0;
    double var = 1.0;
};

/// Case and non-case score distribution of one test.
struct TestParams {
    NormalParams cases;
    NormalParams non_cases;
};

double binormal_auc(const NormalParams& cases, const NormalParams& non_cases);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

RocPoint binormal_roc_point(const NormalParams& cases, const NormalParams& non_cases,
                            double threshold);

/// Curve sampled at `points` thresholds spanning +-6 pooled SDs around the
/// midpoint of the two means, ordered from high to low threshold.
std::vector<RocPoint> binormal_roc_curve(const NormalParams& cases, const NormalParams& non_cases,
                                         std::size_t points = 512);

struct VarDiffResult {
    double var_diff = 0.0;
    double var_auc1 = 0.0;
    double var_auc2 = 0.0;
    double cov_auc = 0.0;
    /// Raw value was negative and has been clamped to 0.
    bool clamped = false;
};

/// Delta-method variance of AUC1 - AUC2 for the paired binormal model with
/// method-of-moments estimates. rho_cases / rho_non_cases are the between-test
/// correlations within each class. Requires counts >= 2.
VarDiffResult var_diff_auc(const TestParams& test1, const TestParams& test2, double rho_non_cases,
                           double rho_cases, std::size_t n_cases, std::size_t n_non_cases);

enum class FavoredTest { none, test1, test2 };
std::string to_string(FavoredTest f);

struct DifferenceTest {
    double z = 0.0;
    double p_value = 1.0;
    bool reject = false;
    FavoredTest favored = FavoredTest::none;
};

/// Two-sided z test. Throws std::domain_error when var_diff <= 0.
DifferenceTest difference_test(double diff, double var_diff, double alpha);

enum class AnalysisKind { truth, observed, corrected };
std::string to_string(AnalysisKind k);

/// Which case count enters the corrected analysis' variance.
enum class CorrectedCaseCount { observed, inflated };

struct AnalysisOptions {
    double alpha = 0.05;
    CorrectedCaseCount corrected_count = CorrectedCaseCount::observed;
};

struct AnalysisResult {
    AnalysisKind kind = AnalysisKind::truth;
    double auc1 = 0.5;
    double auc2 = 0.5;
    double diff = 0.0;
    double var_diff = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    bool reject = false;
    FavoredTest favored = FavoredTest::none;
    std::size_t n_cases_used = 0;
    std::size_t n_noncases_used = 0;
    /// Case / non-case parameters that produced the AUCs (for ROC rendering).
    TestParams test1;
    TestParams test2;
    /// The test could not be carried out (var_diff == 0 or too few points).
    bool test_available = true;
    /// Corrected analysis fell back to the observed analysis.
    bool degraded = false;
    std::optional<CorrectedParams> correction;
    std::vector<std::string> warnings;
};

/// Runs one analysis. Throws std::domain_error when a class has < 2 members for
/// the chosen labels (true or observed).
AnalysisResult run_analysis(const TrialSummary& summary, AnalysisKind kind,
                            const AnalysisOptions& opts = {});
AnalysisResult run_analysis(const TrialDataset& data, AnalysisKind kind,
                            const AnalysisOptions& opts = {});

/// Analysis from explicit case/non-case moments. case_params replaces the case
/// moments when given (corrected analysis).
AnalysisResult analyze_moments(AnalysisKind kind, const ScoreMoments& cases,
                               const ScoreMoments& non_cases,
                               const std::optional<BivNormParams>& case_params,
                               std::size_t n_cases, double alpha);

}  // namespace pairscreen
