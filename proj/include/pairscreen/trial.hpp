#pragma once

// Paired screening trial generator: participants are screened by two tests,
// anyone above either threshold gets the gold standard, and the rest enter
// follow-up where true cases show signs with probability signs_rate.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pairscreen/gauss.hpp"
#include "pairscreen/moments.hpp"
#include "pairscreen/rng.hpp"

namespace pairscreen {

enum class CaseClass { non_case, screen_detected, interval, missed };

std::string to_string(CaseClass c);
CaseClass case_class_from_string(const std::string& s);

struct Thresholds {
    double a1 = 0.0;
    double a2 = 0.0;
};

/// Targets for percent ascertainment, as fractions in (0, 1).
struct AscertainmentTargets {
    double t1 = 0.5;
    double t2 = 0.5;
};

/// How ascertainment targets are turned into thresholds.
///  - observed_cases: expected share of observed cases above a_j equals t_j
///    (the denominator is the observed case count, including interval cases).
///  - marginal: P(X_j1 >= a_j) = t_j under the true case distribution.
enum class Calibration { observed_cases, marginal };

std::string to_string(Calibration c);

/// Zero-inflation rates for one class: P(test 1 zeroed), P(test 2 zeroed),
/// P(both zeroed). Missing q means the midpoint of the admissible interval.
struct ZeroRates {
    double p1 = 0.0;
    double p2 = 0.0;
    std::optional<double> q;

    double resolved_q() const;
    void validate() const;
};

struct GaussianScores {};
struct ZeroWeighting {
    ZeroRates noncase;
    ZeroRates cases;
};
struct Binning {
    double width_multiplier = 1.0;
};

using ScoreTransform = std::variant<GaussianScores, ZeroWeighting, Binning>;

std::string describe(const ScoreTransform& t);

using ThresholdSpec = std::variant<Thresholds, AscertainmentTargets>;

struct ScenarioConfig {
    std::size_t n = 50000;
    double prevalence = 0.01;
    double signs_rate = 0.1;
    BivNormParams case_params;
    BivNormParams noncase_params;
    ThresholdSpec thresholds = AscertainmentTargets{};
    Calibration calibration = Calibration::marginal;
    /// Signs rate assumed when calibrating observed-case ascertainment; unset
    /// means signs_rate. Fixing it keeps thresholds constant across a signs sweep.
    std::optional<double> calibration_signs_rate;
    ScoreTransform transform = GaussianScores{};
    std::size_t reps = 1000;
    std::uint64_t seed = 20240101;
    double alpha = 0.05;

    /// Throws std::invalid_argument on the first violated constraint.
    void validate() const;
    Thresholds resolve_thresholds() const;
};

struct ParticipantRecord {
    std::size_t id = 0;
    double x1 = 0.0;
    double x2 = 0.0;
    int true_status = 0;
    int observed_status = 0;
    CaseClass case_class = CaseClass::non_case;
};

struct TrialCounts {
    std::size_t participants = 0;
    std::size_t true_cases = 0;
    std::size_t observed_cases = 0;
    std::size_t screen_detected = 0;
    std::size_t interval_cases = 0;
    std::size_t missed = 0;
    std::size_t non_cases = 0;
};

struct TrialDataset {
    std::vector<ParticipantRecord> records;
    Thresholds thresholds;

    TrialCounts counts() const;
};

struct ObservedStatus {
    int observed = 0;
    CaseClass case_class = CaseClass::non_case;
};

ObservedStatus assign_observed_status(double x1, double x2, int true_k, double a1, double a2,
                                      bool signs);

/// Marginal calibration: a_j = mu_j + sd_j * quantile(1 - t_j).
Thresholds calibrate_thresholds(const BivNormParams& case_params,
                                const AscertainmentTargets& targets);

/// Solves for thresholds whose expected percent ascertainment (true cases above
/// a_j over expected observed cases) equals t_j. Throws std::invalid_argument
/// when no solution exists.
Thresholds calibrate_thresholds_observed(const BivNormParams& case_params,
                                         const AscertainmentTargets& targets, double signs_rate);

/// Expected fraction of true cases that are observed for the given thresholds.
double expected_observed_fraction(const BivNormParams& case_params, const Thresholds& th,
                                  double signs_rate);

/// 100 * #(true cases with x_j >= a_j) / #(observed cases); j in {1, 2}.
/// Throws std::domain_error when there are no observed cases.
double percent_ascertainment(const TrialDataset& data, int test);

/// Replaces scores by zero according to correlated Bernoulli indicators. Only
/// scores are changed; statuses must be assigned afterwards.
TrialDataset apply_zero_weighting(TrialDataset data, const ZeroWeighting& rates, Engine& rng);

/// Rounds scores to the midpoint of bins of width multiplier * var_j (edges at 0).
TrialDataset apply_binning(TrialDataset data, double width_multiplier,
                           const BivNormParams& case_params);

/// Draws scores and true status, applies the configured transform, then assigns
/// observed status. Thresholds are resolved from the config.
TrialDataset draw_trial(const ScenarioConfig& config, Engine& rng);
TrialDataset draw_trial(const ScenarioConfig& config, const Thresholds& thresholds, Engine& rng);

/// Everything the analyses need from one trial: per-group sufficient statistics
/// plus the observed case points (for the quadrant fits).
struct TrialSummary {
    Thresholds thresholds;
    ScoreMoments non_cases;
    ScoreMoments missed;
    ScoreMoments screen_detected;
    ScoreMoments interval;
    std::vector<ScorePair> screen_points;
    std::vector<ScorePair> interval_points;
    std::size_t cases_above1 = 0;
    std::size_t cases_above2 = 0;

    ScoreMoments true_cases() const;
    ScoreMoments true_non_cases() const { return non_cases; }
    ScoreMoments observed_cases() const;
    ScoreMoments observed_non_cases() const;
    std::size_t observed_case_count() const { return screen_points.size() + interval_points.size(); }
    std::optional<double> percent_ascertainment(int test) const;
};

TrialSummary summarize(const TrialDataset& data);

/// Summary-only draw. For Gaussian scores the non-case sufficient statistics are
/// sampled exactly (mean ~ normal, scatter ~ Wishart) instead of drawing every
/// non-case; other transforms fall back to draw_trial + summarize.
TrialSummary draw_trial_summary(const ScenarioConfig& config, const Thresholds& thresholds,
                                Engine& rng);

/// Samples (mean, scatter) of n iid draws from params.
ScoreMoments sample_moments(const BivNormParams& params, std::size_t n, Engine& rng);

/// CSV export with header id,x1,x2,true_status,observed_status,case_class.
void write_participant_csv(std::ostream& out, const TrialDataset& data);

}  // namespace pairscreen
