#pragma once

// Participant CSV ingest and analysis report output.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairscreen/roc.hpp"
#include "pairscreen/trial.hpp"

namespace pairscreen {

/// Malformed participant data; line() is the 1-based line of the first bad row
/// (0 for file-level problems such as a missing column).
class DataError : public std::runtime_error {
public:
    DataError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct ParticipantData {
    TrialDataset dataset;
    /// The file carried a true_status column.
    bool has_true_status = false;
};

/// Reads columns id, x1, x2, observed_status (required) and true_status
/// (optional); other columns are ignored. Case classes are derived from the
/// thresholds: an observed case below both is an interval case, any other
/// observed case was screen-detected.
ParticipantData read_participant_csv(std::istream& in, const Thresholds& thresholds);

/// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_field(const std::string& s);

/// Analyses to report for the data: observed and corrected, plus true when the
/// file had true status.
std::vector<AnalysisKind> available_analyses(const ParticipantData& data);

inline constexpr const char* kReportHeader =
    "analysis,auc1,auc2,diff,var_diff,z,p_value,reject,favored_test,n_cases,n_non_cases,"
    "degraded,warnings";

void write_analysis_report(std::ostream& out, const std::vector<AnalysisResult>& results);

}  // namespace pairscreen
