#include "pairscreen/trial.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace pairscreen {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    }
}

ScorePair draw_pair(const BivNormParams& p, boost::random::normal_distribution<double>& normal,
                    Engine& rng) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double r = p.rho();
    return {p.mu1() + p.sd1() * z1, p.mu2() + p.sd2() * (r * z1 + std::sqrt(1.0 - r * r) * z2)};
}

std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

}  // namespace

std::string to_string(CaseClass c) {
    switch (c) {
        case CaseClass::non_case: return "non_case";
        case CaseClass::screen_detected: return "screen_detected";
        case CaseClass::interval: return "interval";
        case CaseClass::missed: return "missed";
    }
    return "non_case";
}

CaseClass case_class_from_string(const std::string& s) {
    if (s == "non_case") return CaseClass::non_case;
    if (s == "screen_detected") return CaseClass::screen_detected;
    if (s == "interval") return CaseClass::interval;
    if (s == "missed") return CaseClass::missed;
    throw std::invalid_argument("unknown case class '" + s + "'");
}

std::string to_string(Calibration c) {
    return c == Calibration::marginal ? "marginal" : "observed_cases";
}

double ZeroRates::resolved_q() const {
    if (q) return *q;
    return 0.5 * (std::max(0.0, p1 + p2 - 1.0) + std::min(p1, p2));
}

void ZeroRates::validate() const {
    check_probability(p1, "zero rate p1");
    check_probability(p2, "zero rate p2");
    const double qq = resolved_q();
    const double lo = std::max(0.0, p1 + p2 - 1.0);
    const double hi = std::min(p1, p2);
    if (qq < lo - 1e-12 || qq > hi + 1e-12) {
        throw std::invalid_argument("zero rate q outside the Frechet bounds for (p1, p2)");
    }
}

// Labels round away representation noise such as 0.6 + 0.6 - 1.
static std::string label_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string describe(const ScoreTransform& t) {
    return std::visit(overloaded{
                          [](const GaussianScores&) { return std::string("gaussian"); },
                          [](const ZeroWeighting& z) {
                              return "zero_weighted(" + label_number(z.noncase.p1) + ";" +
                                     label_number(z.noncase.p2) + ";" +
                                     label_number(z.noncase.resolved_q()) + ";" +
                                     label_number(z.cases.p1) + ";" + label_number(z.cases.p2) +
                                     ";" + label_number(z.cases.resolved_q()) + ")";
                          },
                          [](const Binning& b) {
                              return "binned(" + label_number(b.width_multiplier) + ")";
                          },
                      },
                      t);
}

void ScenarioConfig::validate() const {
    if (n == 0) throw std::invalid_argument("n must be positive");
    check_probability(prevalence, "prevalence");
    check_probability(signs_rate, "signs_rate");
    if (calibration_signs_rate) check_probability(*calibration_signs_rate, "calibration_signs_rate");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (reps == 0) throw std::invalid_argument("reps must be positive");
    if (const auto* t = std::get_if<AscertainmentTargets>(&thresholds)) {
        if (!(t->t1 > 0.0 && t->t1 < 1.0) || !(t->t2 > 0.0 && t->t2 < 1.0)) {
            throw std::invalid_argument("ascertainment targets must lie in (0, 1)");
        }
    }
    if (const auto* z = std::get_if<ZeroWeighting>(&transform)) {
        z->noncase.validate();
        z->cases.validate();
    }
    if (const auto* b = std::get_if<Binning>(&transform)) {
        if (!(b->width_multiplier > 0.0)) {
            throw std::invalid_argument("bin width multiplier must be positive");
        }
    }
}

Thresholds ScenarioConfig::resolve_thresholds() const {
    if (const auto* th = std::get_if<Thresholds>(&thresholds)) return *th;
    const auto& targets = std::get<AscertainmentTargets>(thresholds);
    if (calibration == Calibration::marginal) return calibrate_thresholds(case_params, targets);
    return calibrate_thresholds_observed(case_params, targets,
                                         calibration_signs_rate.value_or(signs_rate));
}

TrialCounts TrialDataset::counts() const {
    TrialCounts c;
    c.participants = records.size();
    for (const auto& r : records) {
        c.true_cases += r.true_status == 1;
        c.observed_cases += r.observed_status == 1;
        switch (r.case_class) {
            case CaseClass::non_case: ++c.non_cases; break;
            case CaseClass::screen_detected: ++c.screen_detected; break;
            case CaseClass::interval: ++c.interval_cases; break;
            case CaseClass::missed: ++c.missed; break;
        }
    }
    return c;
}

ObservedStatus assign_observed_status(double x1, double x2, int true_k, double a1, double a2,
                                      bool signs) {
    if (true_k != 1) return {0, CaseClass::non_case};
    if (x1 >= a1 || x2 >= a2) return {1, CaseClass::screen_detected};
    if (signs) return {1, CaseClass::interval};
    return {0, CaseClass::missed};
}

Thresholds calibrate_thresholds(const BivNormParams& case_params,
                                const AscertainmentTargets& targets) {
    return {case_params.mu1() + case_params.sd1() * std_normal_quantile(1.0 - targets.t1),
            case_params.mu2() + case_params.sd2() * std_normal_quantile(1.0 - targets.t2)};
}

double expected_observed_fraction(const BivNormParams& case_params, const Thresholds& th,
                                  double signs_rate) {
    const double h1 = (th.a1 - case_params.mu1()) / case_params.sd1();
    const double h2 = (th.a2 - case_params.mu2()) / case_params.sd2();
    const double below_both = bvn_cdf(h1, h2, case_params.rho());
    return (1.0 - below_both) + signs_rate * below_both;
}

Thresholds calibrate_thresholds_observed(const BivNormParams& case_params,
                                         const AscertainmentTargets& targets, double signs_rate) {
    // For a candidate observed fraction s, the marginal tail of test j must be
    // t_j * s. The residual g(s) = observed(s) - s is positive near 0 when
    // signs_rate > 0 and non-positive at s = 1; bisect on it.
    auto thresholds_for = [&](double s) {
        return calibrate_thresholds(case_params, {targets.t1 * s, targets.t2 * s});
    };
    auto residual = [&](double s) {
        return expected_observed_fraction(case_params, thresholds_for(s), signs_rate) - s;
    };
    double lo = 1e-9;
    double hi = 1.0;
    if (!(residual(lo) > 0.0)) {
        throw std::invalid_argument(
            "ascertainment targets are not attainable for this signs rate (targets summing "
            "below 100% need signs_rate > 0)");
    }
    if (residual(hi) >= 0.0) return thresholds_for(hi);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    return thresholds_for(0.5 * (lo + hi));
}

double percent_ascertainment(const TrialDataset& data, int test) {
    if (test != 1 && test != 2) throw std::invalid_argument("test index must be 1 or 2");
    std::size_t above = 0;
    std::size_t observed = 0;
    for (const auto& r : data.records) {
        observed += r.observed_status == 1;
        if (r.true_status == 1) {
            above += test == 1 ? r.x1 >= data.thresholds.a1 : r.x2 >= data.thresholds.a2;
        }
    }
    if (observed == 0) {
        throw std::domain_error("percent ascertainment undefined: no observed cases");
    }
    return 100.0 * static_cast<double>(above) / static_cast<double>(observed);
}

TrialDataset apply_zero_weighting(TrialDataset data, const ZeroWeighting& rates, Engine& rng) {
    rates.noncase.validate();
    rates.cases.validate();
    boost::random::uniform_01<double> unif;
    for (auto& r : data.records) {
        const ZeroRates& z = r.true_status == 1 ? rates.cases : rates.noncase;
        const double q = z.resolved_q();
        // Cells: (1,1) q, (1,0) p1 - q, (0,1) p2 - q, (0,0) rest.
        const double u = unif(rng);
        bool zero1 = false;
        bool zero2 = false;
        if (u < q) {
            zero1 = zero2 = true;
        } else if (u < z.p1) {
            zero1 = true;
        } else if (u < z.p1 + z.p2 - q) {
            zero2 = true;
        }
        if (zero1) r.x1 = 0.0;
        if (zero2) r.x2 = 0.0;
    }
    return data;
}

TrialDataset apply_binning(TrialDataset data, double width_multiplier,
                           const BivNormParams& case_params) {
    if (!(width_multiplier > 0.0)) {
        throw std::invalid_argument("bin width multiplier must be positive");
    }
    const double w1 = width_multiplier * case_params.var1();
    const double w2 = width_multiplier * case_params.var2();
    for (auto& r : data.records) {
        r.x1 = (std::floor(r.x1 / w1) + 0.5) * w1;
        r.x2 = (std::floor(r.x2 / w2) + 0.5) * w2;
    }
    return data;
}

TrialDataset draw_trial(const ScenarioConfig& config, Engine& rng) {
    return draw_trial(config, config.resolve_thresholds(), rng);
}

TrialDataset draw_trial(const ScenarioConfig& config, const Thresholds& thresholds, Engine& rng) {
    boost::random::binomial_distribution<long long> binom(static_cast<long long>(config.n), config.prevalence);
    boost::random::normal_distribution<double> normal;
    boost::random::uniform_01<double> unif;

    const auto cases = static_cast<std::size_t>(binom(rng));
    TrialDataset data;
    data.thresholds = thresholds;
    data.records.reserve(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        const bool is_case = i < cases;
        const auto p = draw_pair(is_case ? config.case_params : config.noncase_params, normal, rng);
        data.records.push_back({i, p.x1, p.x2, is_case ? 1 : 0, 0, CaseClass::non_case});
    }

    if (const auto* z = std::get_if<ZeroWeighting>(&config.transform)) {
        data = apply_zero_weighting(std::move(data), *z, rng);
    } else if (const auto* b = std::get_if<Binning>(&config.transform)) {
        data = apply_binning(std::move(data), b->width_multiplier, config.case_params);
    }

    for (auto& r : data.records) {
        bool signs = false;
        if (r.true_status == 1 && r.x1 < thresholds.a1 && r.x2 < thresholds.a2) {
            signs = unif(rng) < config.signs_rate;
        }
        const auto s =
            assign_observed_status(r.x1, r.x2, r.true_status, thresholds.a1, thresholds.a2, signs);
        r.observed_status = s.observed;
        r.case_class = s.case_class;
    }
    return data;
}

ScoreMoments TrialSummary::true_cases() const {
    return merged(merged(screen_detected, interval), missed);
}

ScoreMoments TrialSummary::observed_cases() const { return merged(screen_detected, interval); }

ScoreMoments TrialSummary::observed_non_cases() const { return merged(non_cases, missed); }

std::optional<double> TrialSummary::percent_ascertainment(int test) const {
    const std::size_t observed = observed_case_count();
    if (observed == 0) return std::nullopt;
    const std::size_t above = test == 1 ? cases_above1 : cases_above2;
    return 100.0 * static_cast<double>(above) / static_cast<double>(observed);
}

TrialSummary summarize(const TrialDataset& data) {
    TrialSummary s;
    s.thresholds = data.thresholds;
    for (const auto& r : data.records) {
        if (r.true_status == 1) {
            s.cases_above1 += r.x1 >= data.thresholds.a1;
            s.cases_above2 += r.x2 >= data.thresholds.a2;
        }
        switch (r.case_class) {
            case CaseClass::non_case: s.non_cases.add(r.x1, r.x2); break;
            case CaseClass::missed: s.missed.add(r.x1, r.x2); break;
            case CaseClass::screen_detected:
                s.screen_detected.add(r.x1, r.x2);
                s.screen_points.push_back({r.x1, r.x2});
                break;
            case CaseClass::interval:
                s.interval.add(r.x1, r.x2);
                s.interval_points.push_back({r.x1, r.x2});
                break;
        }
    }
    return s;
}

ScoreMoments sample_moments(const BivNormParams& params, std::size_t n, Engine& rng) {
    if (n == 0) return {};
    boost::random::normal_distribution<double> normal;
    const double nn = static_cast<double>(n);
    const double s1 = params.sd1();
    const double s2 = params.sd2();
    const double r = params.rho();
    const double c = std::sqrt(1.0 - r * r);

    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double mean1 = params.mu1() + s1 * z1 / std::sqrt(nn);
    const double mean2 = params.mu2() + s2 * (r * z1 + c * z2) / std::sqrt(nn);

    // Scatter of standardized draws ~ Wishart(n - 1, I), via Bartlett for
    // df >= 2 and explicit outer products otherwise.
    const std::size_t df = n - 1;
    double w11 = 0.0;
    double w22 = 0.0;
    double w12 = 0.0;
    if (df >= 2) {
        boost::random::chi_squared_distribution<double> chi1(static_cast<double>(df));
        boost::random::chi_squared_distribution<double> chi2(static_cast<double>(df - 1));
        const double c1sq = chi1(rng);
        const double c2sq = chi2(rng);
        const double z = normal(rng);
        w11 = c1sq;
        w12 = std::sqrt(c1sq) * z;
        w22 = z * z + c2sq;
    } else if (df == 1) {
        const double u1 = normal(rng);
        const double u2 = normal(rng);
        w11 = u1 * u1;
        w12 = u1 * u2;
        w22 = u2 * u2;
    }
    // Map through the Cholesky factor L = [[s1, 0], [s2 r, s2 c]].
    const double l11 = s1;
    const double l21 = s2 * r;
    const double l22 = s2 * c;
    const double scatter11 = l11 * l11 * w11;
    const double scatter12 = l11 * (l21 * w11 + l22 * w12);
    const double scatter22 = l21 * l21 * w11 + 2.0 * l21 * l22 * w12 + l22 * l22 * w22;
    return ScoreMoments::from_summary(n, mean1, mean2, scatter11, scatter22, scatter12);
}

TrialSummary draw_trial_summary(const ScenarioConfig& config, const Thresholds& thresholds,
                                Engine& rng) {
    if (!std::holds_alternative<GaussianScores>(config.transform)) {
        return summarize(draw_trial(config, thresholds, rng));
    }
    boost::random::binomial_distribution<long long> binom(static_cast<long long>(config.n), config.prevalence);
    boost::random::normal_distribution<double> normal;
    boost::random::uniform_01<double> unif;

    const auto cases = static_cast<std::size_t>(binom(rng));
    TrialSummary s;
    s.thresholds = thresholds;
    for (std::size_t i = 0; i < cases; ++i) {
        const auto p = draw_pair(config.case_params, normal, rng);
        s.cases_above1 += p.x1 >= thresholds.a1;
        s.cases_above2 += p.x2 >= thresholds.a2;
        bool signs = false;
        if (p.x1 < thresholds.a1 && p.x2 < thresholds.a2) signs = unif(rng) < config.signs_rate;
        switch (assign_observed_status(p.x1, p.x2, 1, thresholds.a1, thresholds.a2, signs)
                    .case_class) {
            case CaseClass::screen_detected:
                s.screen_detected.add(p);
                s.screen_points.push_back(p);
                break;
            case CaseClass::interval:
                s.interval.add(p);
                s.interval_points.push_back(p);
                break;
            case CaseClass::missed: s.missed.add(p); break;
            case CaseClass::non_case: break;
        }
    }
    s.non_cases = sample_moments(config.noncase_params, config.n - cases, rng);
    return s;
}

void write_participant_csv(std::ostream& out, const TrialDataset& data) {
    out << "id,x1,x2,true_status,observed_status,case_class\n";
    for (const auto& r : data.records) {
        out << r.id << ',' << format_double(r.x1) << ',' << format_double(r.x2) << ','
            << r.true_status << ',' << r.observed_status << ',' << to_string(r.case_class) << '\n';
    }
}

}  // namespace pairscreen
