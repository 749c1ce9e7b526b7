#pragma once

// JSON run configuration: a base scenario, optional factor sweeps and output
// settings. Unknown keys are rejected.

#include <optional>
#include <stdexcept>
#include <string>

#include "pairscreen/harness.hpp"

namespace pairscreen {

/// Invalid configuration. The message names the offending field
/// (e.g. "scenario.prevalence") or the line/column of a syntax error.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    FactorGrid grid;
    std::string output_dir = ".";
    std::optional<unsigned> workers;
    bool charts = true;
    NonCaseSampling non_case_sampling = NonCaseSampling::sufficient_statistics;
    CorrectedCaseCount corrected_count = CorrectedCaseCount::observed;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace pairscreen
