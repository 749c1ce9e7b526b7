#pragma once

// Bias correction of the case score distribution for paired screening trials.
//
// Observed cases are split into set A (at least one score at or above its
// threshold, always observed) and set B (interval cases, both scores below).
// A truncated bivariate normal MLE is fit within each threshold quadrant, the
// fit with the best untruncated likelihood on all observed cases is kept, and
// its implied P(A) weights the set A / set B moments into corrected case
// parameters.

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairscreen/gauss.hpp"
#include "pairscreen/moments.hpp"
#include "pairscreen/trial.hpp"

namespace pairscreen {

class CorrectionUnavailable : public std::runtime_error {
public:
    explicit CorrectionUnavailable(const std::string& what) : std::runtime_error(what) {}
};

/// Quadrant l in 1..4: Q1 both >=, Q2 x1 >= & x2 <, Q3 x1 < & x2 >=, Q4 both <.
Rect quadrant_rect(int quadrant, const Thresholds& th);
int quadrant_of(const ScorePair& p, const Thresholds& th);

struct CasePartition {
    Thresholds thresholds;
    std::vector<ScorePair> set_a;
    std::vector<ScorePair> set_b;
    std::array<std::vector<ScorePair>, 4> quadrants;

    const std::vector<ScorePair>& quadrant(int l) const { return quadrants.at(l - 1); }
    std::vector<ScorePair> observed_cases() const;
};

/// Throws CorrectionUnavailable when there are no observed cases.
CasePartition partition_cases(const TrialDataset& data);
CasePartition partition_cases(const TrialSummary& summary);

struct SampleStats {
    double mean1 = 0.0;
    double mean2 = 0.0;
    double sd1 = 0.0;
    double sd2 = 0.0;
    double corr = 0.0;
    /// An SD is zero; corr is reported as 0 and the stats cannot seed a fit.
    bool degenerate = false;

    /// Start values for the truncated MLE, |rho| clamped to 1 - 1e-6.
    BivNormParams start_params() const;
};

/// Sample means, SDs (n - 1) and Pearson correlation; nullopt for < 2 points.
std::optional<SampleStats> quadrant_sample_stats(std::span<const ScorePair> points);
std::optional<SampleStats> quadrant_sample_stats(const ScoreMoments& m);

struct NathOptions {
    double rel_tol = 1e-8;
    int max_iter = 500;
    bool record_trace = false;
};

struct QuadrantFit {
    int quadrant = 0;
    BivNormParams params;
    double truncated_loglik = 0.0;
    double full_loglik = 0.0;
    bool converged = false;
    std::size_t n_points = 0;
    int iterations = 0;
    /// Truncated log-likelihood after every accepted step (record_trace only).
    std::vector<double> trace;
};

/// Maximizes the truncated bivariate normal likelihood over (mu1, mu2, log sd1,
/// log sd2, atanh rho) with BFGS. rect must be an orthant (plane, half-plane
/// or quadrant). Throws std::invalid_argument on < 2 points or points outside
/// rect; DegenerateRegionError when the start puts no mass on rect.
QuadrantFit nath_mle(std::span<const ScorePair> points, const Rect& rect,
                     const BivNormParams& start, const NathOptions& opts = {});
QuadrantFit nath_mle(const ScoreMoments& moments, const Rect& rect, const BivNormParams& start,
                     const NathOptions& opts = {});

/// Index of the fit with the largest full log-likelihood on the observed cases,
/// preferring converged fits; ties go to the lowest quadrant id. Fills
/// full_loglik on every fit. Throws CorrectionUnavailable on an empty list.
std::size_t select_best_fit(std::span<QuadrantFit> fits, const ScoreMoments& observed_cases);
std::size_t select_best_fit(std::span<QuadrantFit> fits,
                            std::span<const ScorePair> observed_cases);

/// Estimated P(A) = 1 - Phi2 of the standardized thresholds.
double lambda_hat(const BivNormParams& nath, double a1, double a2);

struct WeightedMoments {
    double g1 = 0.0;
    double g2 = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double p = 0.0;
    double q = 0.0;
};

/// Mixture second-moment components from set A / set B moments (population
/// variances and covariances).
WeightedMoments weighted_moments(const ScoreMoments& set_a, const ScoreMoments& set_b,
                                 double lambda);

struct CorrectedParams {
    double lambda_hat = 1.0;
    BivNormParams nath;
    BivNormParams weighted;
    bool weighting_applied = false;
    int selected_quadrant = 0;
    std::vector<QuadrantFit> fits;
    std::vector<std::string> warnings;
};

/// Combines set A and set B moments with weight lambda. Falls back to the Nath
/// estimates when either set has < 2 points or a weighted variance is not
/// positive.
CorrectedParams weighted_correction(const CasePartition& partition, const BivNormParams& nath,
                                    double lambda);
CorrectedParams weighted_correction(const ScoreMoments& set_a, const ScoreMoments& set_b,
                                    const BivNormParams& nath, double lambda);

/// Full pipeline. Throws CorrectionUnavailable when no quadrant can be fit.
CorrectedParams correct_case_distribution(const TrialDataset& data);
CorrectedParams correct_case_distribution(const TrialSummary& summary);
CorrectedParams correct_case_distribution(const CasePartition& partition);

}  // namespace pairscreen
