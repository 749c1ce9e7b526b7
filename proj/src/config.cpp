#include "pairscreen/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace pairscreen {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string at_index(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path.empty() ? "(root)" : path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known) fail(join(path, item.key()), "unknown key");
    }
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double probability(const json& j, const std::string& path) {
    const double v = number(j, path);
    if (!(v >= 0.0 && v <= 1.0)) fail(path, "must lie in [0, 1]");
    return v;
}

double open_fraction(const json& j, const std::string& path) {
    const double v = number(j, path);
    if (!(v > 0.0 && v < 1.0)) fail(path, "must lie in (0, 1)");
    return v;
}

double correlation(const json& j, const std::string& path) {
    const double v = number(j, path);
    if (!(v > -1.0 && v < 1.0)) fail(path, "must lie in (-1, 1)");
    return v;
}

double positive(const json& j, const std::string& path) {
    const double v = number(j, path);
    if (!(v > 0.0)) fail(path, "must be positive");
    return v;
}

std::uint64_t count(const json& j, const std::string& path, bool allow_zero = false) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
        fail(path, "expected a non-negative integer");
    }
    const auto v = j.get<std::uint64_t>();
    if (v == 0 && !allow_zero) fail(path, "must be positive");
    return v;
}

template <class F>
std::array<double, 2> pair_of(const json& j, const std::string& path, F&& element) {
    if (!j.is_array() || j.size() != 2) fail(path, "expected an array of 2 numbers");
    return {element(j[0], at_index(path, 0)), element(j[1], at_index(path, 1))};
}

ZeroRates zero_rates(const json& j, const std::string& path) {
    require_object(j, path);
    reject_unknown(j, path, {"p1", "p2", "q"});
    ZeroRates z;
    if (!j.contains("p1") || !j.contains("p2")) fail(path, "p1 and p2 are required");
    z.p1 = probability(j["p1"], join(path, "p1"));
    z.p2 = probability(j["p2"], join(path, "p2"));
    if (j.contains("q")) z.q = probability(j["q"], join(path, "q"));
    try {
        z.validate();
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    return z;
}

ScoreTransform transform(const json& j, const std::string& path) {
    if (j.is_string()) {
        if (j.get<std::string>() == "gaussian") return GaussianScores{};
        fail(path, "only \"gaussian\" may be given as a string");
    }
    require_object(j, path);
    if (!j.contains("kind") || !j["kind"].is_string()) fail(join(path, "kind"), "required string");
    const auto kind = j["kind"].get<std::string>();
    if (kind == "gaussian") {
        reject_unknown(j, path, {"kind"});
        return GaussianScores{};
    }
    if (kind == "zero_weighted") {
        reject_unknown(j, path, {"kind", "non_cases", "cases"});
        if (!j.contains("non_cases") || !j.contains("cases")) {
            fail(path, "zero_weighted needs non_cases and cases");
        }
        return ZeroWeighting{zero_rates(j["non_cases"], join(path, "non_cases")),
                             zero_rates(j["cases"], join(path, "cases"))};
    }
    if (kind == "binned") {
        reject_unknown(j, path, {"kind", "width_multiplier"});
        if (!j.contains("width_multiplier")) fail(path, "binned needs width_multiplier");
        return Binning{positive(j["width_multiplier"], join(path, "width_multiplier"))};
    }
    fail(join(path, "kind"), "unknown transform \"" + kind + "\"");
}

Calibration calibration(const json& j, const std::string& path) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "observed_cases") return Calibration::observed_cases;
        if (s == "marginal") return Calibration::marginal;
    }
    fail(path, "expected \"observed_cases\" or \"marginal\"");
}

ScenarioConfig scenario(const json& j, const std::string& path) {
    require_object(j, path);
    reject_unknown(j, path,
                   {"n", "prevalence", "signs_rate", "auc", "case_mean", "case_var",
                    "noncase_mean", "noncase_var", "rho_cases", "rho_non_cases",
                    "ascertainment", "thresholds", "calibration", "calibration_signs_rate",
                    "transform", "alpha"});
    ScenarioConfig c;
    auto get = [&](const char* key) -> const json* {
        return j.contains(key) ? &j[key] : nullptr;
    };
    if (auto* v = get("n")) c.n = count(*v, join(path, "n"));
    if (auto* v = get("prevalence")) c.prevalence = probability(*v, join(path, "prevalence"));
    if (auto* v = get("signs_rate")) c.signs_rate = probability(*v, join(path, "signs_rate"));
    if (auto* v = get("alpha")) c.alpha = open_fraction(*v, join(path, "alpha"));

    std::array<double, 2> nc_mean{0.0, 0.0};
    std::array<double, 2> nc_var{1.0, 1.0};
    std::array<double, 2> case_var{1.0, 1.0};
    double rho0 = 0.3;
    double rho1 = 0.3;
    auto any_number = [](const json& e, const std::string& p) { return number(e, p); };
    auto pos = [](const json& e, const std::string& p) { return positive(e, p); };
    if (auto* v = get("noncase_mean")) nc_mean = pair_of(*v, join(path, "noncase_mean"), any_number);
    if (auto* v = get("noncase_var")) nc_var = pair_of(*v, join(path, "noncase_var"), pos);
    if (auto* v = get("case_var")) case_var = pair_of(*v, join(path, "case_var"), pos);
    if (auto* v = get("rho_non_cases")) rho0 = correlation(*v, join(path, "rho_non_cases"));
    if (auto* v = get("rho_cases")) rho1 = correlation(*v, join(path, "rho_cases"));
    c.noncase_params = BivNormParams(nc_mean[0], nc_mean[1], nc_var[0], nc_var[1], rho0);

    const json* auc = get("auc");
    const json* mean = get("case_mean");
    if (auc && mean) fail(path, "give either auc or case_mean, not both");
    if (mean) {
        const auto m = pair_of(*mean, join(path, "case_mean"), any_number);
        c.case_params = BivNormParams(m[0], m[1], case_var[0], case_var[1], rho1);
    } else {
        std::array<double, 2> a{0.78, 0.78};
        if (auc) a = pair_of(*auc, join(path, "auc"), open_fraction);
        c.case_params = case_params_for_aucs(a[0], a[1], c.noncase_params, case_var[0],
                                             case_var[1], rho1);
    }

    const json* asc = get("ascertainment");
    const json* th = get("thresholds");
    if (asc && th) fail(path, "give either ascertainment or thresholds, not both");
    if (th) {
        const auto t = pair_of(*th, join(path, "thresholds"), any_number);
        c.thresholds = Thresholds{t[0], t[1]};
    } else if (asc) {
        const auto t = pair_of(*asc, join(path, "ascertainment"), open_fraction);
        c.thresholds = AscertainmentTargets{t[0], t[1]};
    }
    if (auto* v = get("calibration")) c.calibration = calibration(*v, join(path, "calibration"));
    if (auto* v = get("calibration_signs_rate")) {
        c.calibration_signs_rate = probability(*v, join(path, "calibration_signs_rate"));
    }
    if (auto* v = get("transform")) c.transform = transform(*v, join(path, "transform"));
    return c;
}

template <class T, class F>
std::vector<T> list(const json& j, const std::string& path, F&& element) {
    if (!j.is_array()) fail(path, "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(element(j[i], at_index(path, i)));
    return out;
}

void sweep(const json& j, const std::string& path, FactorGrid& grid) {
    require_object(j, path);
    reject_unknown(j, path,
                   {"prevalence", "signs_rate", "ascertainment", "correlations", "transforms"});
    if (j.contains("prevalence")) {
        grid.prevalence = list<double>(j["prevalence"], join(path, "prevalence"), probability);
    }
    if (j.contains("signs_rate")) {
        grid.signs_rate = list<double>(j["signs_rate"], join(path, "signs_rate"), probability);
    }
    if (j.contains("ascertainment")) {
        grid.ascertainment = list<AscertainmentTargets>(
            j["ascertainment"], join(path, "ascertainment"), [](const json& e, const std::string& p) {
                const auto t = pair_of(e, p, open_fraction);
                return AscertainmentTargets{t[0], t[1]};
            });
    }
    if (j.contains("correlations")) {
        grid.correlations = list<std::pair<double, double>>(
            j["correlations"], join(path, "correlations"), [](const json& e, const std::string& p) {
                const auto r = pair_of(e, p, correlation);
                return std::pair{r[0], r[1]};
            });
    }
    if (j.contains("transforms")) {
        grid.transforms = list<ScoreTransform>(j["transforms"], join(path, "transforms"), transform);
    }
}

std::string line_column(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("syntax error at " + line_column(json_text, e.byte) + ": " + e.what());
    }
    require_object(j, "");
    reject_unknown(j, "", {"name", "output_dir", "workers", "charts", "seed", "reps",
                           "non_case_sampling", "corrected_count", "scenario", "sweep"});
    RunConfig rc;
    rc.grid.base = j.contains("scenario") ? scenario(j["scenario"], "scenario") : ScenarioConfig{};
    if (j.contains("name")) {
        if (!j["name"].is_string() || j["name"].get<std::string>().empty()) {
            fail("name", "expected a non-empty string");
        }
        rc.grid.name = j["name"].get<std::string>();
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) fail("output_dir", "expected a string");
        rc.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("workers")) rc.workers = static_cast<unsigned>(count(j["workers"], "workers"));
    if (j.contains("charts")) {
        if (!j["charts"].is_boolean()) fail("charts", "expected true or false");
        rc.charts = j["charts"].get<bool>();
    }
    if (j.contains("seed")) rc.grid.base.seed = count(j["seed"], "seed", true);
    if (j.contains("reps")) rc.grid.base.reps = count(j["reps"], "reps");
    if (j.contains("non_case_sampling")) {
        const auto& v = j["non_case_sampling"];
        if (v == "sufficient_statistics") {
            rc.non_case_sampling = NonCaseSampling::sufficient_statistics;
        } else if (v == "full") {
            rc.non_case_sampling = NonCaseSampling::full;
        } else {
            fail("non_case_sampling", "expected \"sufficient_statistics\" or \"full\"");
        }
    }
    if (j.contains("corrected_count")) {
        const auto& v = j["corrected_count"];
        if (v == "observed") {
            rc.corrected_count = CorrectedCaseCount::observed;
        } else if (v == "inflated") {
            rc.corrected_count = CorrectedCaseCount::inflated;
        } else {
            fail("corrected_count", "expected \"observed\" or \"inflated\"");
        }
    }
    if (j.contains("sweep")) sweep(j["sweep"], "sweep", rc.grid);

    try {
        rc.grid.base.validate();
    } catch (const std::invalid_argument& e) {
        fail("scenario", e.what());
    }
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_run_config(text.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace pairscreen
