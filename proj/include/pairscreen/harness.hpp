#pragma once

// Replication engine: runs a scenario many times and aggregates Type I error,
// power and decision-error fractions for the true, observed and corrected
// analyses.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pairscreen/roc.hpp"
#include "pairscreen/trial.hpp"

namespace pairscreen {

/// Case mean giving the requested binormal AUC against the non-case distribution.
double auc_to_case_mean(double target_auc, const NormalParams& non_cases, double case_var);

/// Builds case parameters with per-test AUC targets against the non-case
/// parameters.
BivNormParams case_params_for_aucs(double auc1, double auc2, const BivNormParams& non_cases,
                                   double case_var1, double case_var2, double rho_cases);

/// Oral-cancer demonstration: n = 50,000, prevalence 0.01, signs rate 0.1,
/// ascertainment 0.0001 / 0.97, AUCs 0.77 / 0.71 (both 0.77 under the null),
/// uncorrelated tests, thresholds calibrated on observed cases.
ScenarioConfig demo_scenario(bool null_hypothesis = false);

struct AnalysisMetrics {
    double rejection_rate = 0.0;
    /// Absent under the null.
    std::optional<double> crf;
    std::optional<double> wrf;
    double mean_auc1 = 0.0;
    double mean_auc2 = 0.0;
    double mean_diff = 0.0;
    double mc_se = 0.0;
    std::size_t degradations = 0;
};

struct ScenarioMetrics {
    std::string id;
    ScenarioConfig config;
    Thresholds thresholds;
    double true_auc1 = 0.5;
    double true_auc2 = 0.5;
    std::size_t reps_completed = 0;
    std::array<AnalysisMetrics, 3> analyses;  // indexed by AnalysisKind
    std::optional<double> mean_percent_ascertainment1;
    std::optional<double> mean_percent_ascertainment2;
    std::size_t corrections_unavailable = 0;
    std::size_t weighting_fallbacks = 0;

    bool null_holds() const;
    const AnalysisMetrics& operator[](AnalysisKind k) const {
        return analyses[static_cast<std::size_t>(k)];
    }
};

enum class NonCaseSampling {
    /// Exact sampling of non-case sufficient statistics (Gaussian scores only).
    sufficient_statistics,
    /// Draw every participant.
    full,
};

struct HarnessOptions {
    unsigned workers = 1;
    NonCaseSampling non_case_sampling = NonCaseSampling::sufficient_statistics;
    CorrectedCaseCount corrected_count = CorrectedCaseCount::observed;
};

/// Deterministic for a given config.seed regardless of worker count.
ScenarioMetrics run_scenario(const ScenarioConfig& config, const HarnessOptions& opts = {},
                             std::string id = "scenario");

/// Swept factors; an empty list keeps the base value.
struct FactorGrid {
    ScenarioConfig base;
    std::vector<double> prevalence;
    std::vector<double> signs_rate;
    std::vector<AscertainmentTargets> ascertainment;
    /// (rho_non_cases, rho_cases) pairs.
    std::vector<std::pair<double, double>> correlations;
    std::vector<ScoreTransform> transforms;
    std::string name = "cell";

    std::size_t size() const;
    /// Cells in stable order (prevalence outermost, transform innermost), each
    /// with its own seed derived from (base.seed, cell index).
    std::vector<ScenarioConfig> cells() const;
    std::string cell_id(std::size_t index) const;
};

std::vector<ScenarioMetrics> run_grid(const FactorGrid& grid, const HarnessOptions& opts = {});

/// One row per (scenario, analysis).
void write_metrics_csv(std::ostream& out, const std::vector<ScenarioMetrics>& metrics);
/// One row per scenario with the three analyses side by side.
void write_summary_csv(std::ostream& out, const std::vector<ScenarioMetrics>& metrics);

inline constexpr const char* kMetricsHeader =
    "scenario_id,prevalence,signs_rate,ascert1,ascert2,rho0,rho1,transform,analysis,reps,"
    "rejection_rate,crf,wrf,mean_auc1,mean_auc2,mean_diff,mc_se,degradations";

std::string format_number(double v);

}  // namespace pairscreen
