#include "pairscreen/dataio.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>

#include "pairscreen/harness.hpp"

namespace pairscreen {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
    T v{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
    return v;
}

int parse_status(const std::string& s, std::size_t line, const char* column) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw DataError(line, std::string(column) + " must be 0 or 1, got \"" + s + "\"");
}

}  // namespace

DataError::DataError(std::size_t line, const std::string& what)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

ParticipantData read_participant_csv(std::istream& in, const Thresholds& thresholds) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(0, "empty file: missing header");
    const auto header = split_csv_line(line);
    enum Col { id, x1, x2, observed, truth };
    constexpr std::array<const char*, 5> names{"id", "x1", "x2", "observed_status", "true_status"};
    std::array<std::optional<std::size_t>, 5> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = trim(header[i]);
        for (std::size_t k = 0; k < names.size(); ++k) {
            if (name == names[k]) {
                if (col[k]) throw DataError(1, "duplicate column " + name);
                col[k] = i;
            }
        }
    }
    for (std::size_t k = 0; k < truth; ++k) {
        if (!col[k]) throw DataError(1, std::string("missing required column ") + names[k]);
    }

    ParticipantData data;
    data.has_true_status = col[truth].has_value();
    data.dataset.thresholds = thresholds;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        auto field = [&](Col c) -> std::string {
            if (*col[c] >= fields.size()) {
                throw DataError(line_no, std::string("missing field ") + names[c]);
            }
            return trim(fields[*col[c]]);
        };
        ParticipantRecord r;
        const auto idv = parse_number<std::size_t>(field(id));
        if (!idv) throw DataError(line_no, "id is not a non-negative integer");
        r.id = *idv;
        for (auto [c, dst] : {std::pair{x1, &r.x1}, std::pair{x2, &r.x2}}) {
            const auto v = parse_number<double>(field(c));
            if (!v || !std::isfinite(*v)) {
                throw DataError(line_no, std::string(names[c]) + " is not a finite number");
            }
            *dst = *v;
        }
        r.observed_status = parse_status(field(observed), line_no, names[observed]);
        r.true_status = data.has_true_status ? parse_status(field(truth), line_no, names[truth])
                                             : r.observed_status;
        const bool above = r.x1 >= thresholds.a1 || r.x2 >= thresholds.a2;
        if (r.observed_status == 1) {
            if (data.has_true_status && r.true_status == 0) {
                throw DataError(line_no, "observed case with true_status 0");
            }
            r.case_class = above ? CaseClass::screen_detected : CaseClass::interval;
        } else if (r.true_status == 1) {
            if (above) {
                throw DataError(line_no,
                                "true case above a threshold must be observed (check --a1/--a2)");
            }
            r.case_class = CaseClass::missed;
        } else {
            r.case_class = CaseClass::non_case;
        }
        data.dataset.records.push_back(r);
    }
    if (data.dataset.records.empty()) throw DataError(0, "no participant rows");
    return data;
}

std::vector<AnalysisKind> available_analyses(const ParticipantData& data) {
    std::vector<AnalysisKind> kinds;
    if (data.has_true_status) kinds.push_back(AnalysisKind::truth);
    kinds.push_back(AnalysisKind::observed);
    kinds.push_back(AnalysisKind::corrected);
    return kinds;
}

void write_analysis_report(std::ostream& out, const std::vector<AnalysisResult>& results) {
    out << kReportHeader << '\n';
    for (const auto& r : results) {
        std::string warnings;
        for (const auto& w : r.warnings) warnings += (warnings.empty() ? "" : "; ") + w;
        out << to_string(r.kind) << ',' << format_number(r.auc1) << ',' << format_number(r.auc2)
            << ',' << format_number(r.diff) << ',' << format_number(r.var_diff) << ','
            << format_number(r.z) << ',' << format_number(r.p_value) << ',' << (r.reject ? 1 : 0)
            << ',' << to_string(r.favored) << ',' << r.n_cases_used << ',' << r.n_noncases_used
            << ',' << (r.degraded ? 1 : 0) << ',' << csv_field(warnings) << '\n';
    }
}

}  // namespace pairscreen
