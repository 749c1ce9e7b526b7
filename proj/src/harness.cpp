#include "pairscreen/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <thread>

namespace pairscreen {

namespace {

struct AnalysisOutcome {
    bool available = false;
    bool reject = false;
    FavoredTest favored = FavoredTest::none;
    bool degraded = false;
    double auc1 = 0.0;
    double auc2 = 0.0;
};

struct RepOutcome {
    std::array<AnalysisOutcome, 3> analyses;
    std::optional<double> pct1;
    std::optional<double> pct2;
    bool correction_unavailable = false;
    bool weighting_fallback = false;
};

RepOutcome run_replication(const ScenarioConfig& config, const Thresholds& thresholds,
                           const HarnessOptions& opts, std::size_t rep) {
    Engine rng = make_stream(config.seed, rep);
    const TrialSummary summary =
        opts.non_case_sampling == NonCaseSampling::full
            ? summarize(draw_trial(config, thresholds, rng))
            : draw_trial_summary(config, thresholds, rng);

    RepOutcome out;
    out.pct1 = summary.percent_ascertainment(1);
    out.pct2 = summary.percent_ascertainment(2);
    const AnalysisOptions aopts{config.alpha, opts.corrected_count};
    for (auto kind : {AnalysisKind::truth, AnalysisKind::observed, AnalysisKind::corrected}) {
        auto& o = out.analyses[static_cast<std::size_t>(kind)];
        try {
            const auto r = run_analysis(summary, kind, aopts);
            o.available = r.test_available;
            o.reject = r.reject;
            o.favored = r.favored;
            o.degraded = r.degraded || !r.test_available;
            o.auc1 = r.auc1;
            o.auc2 = r.auc2;
            if (kind == AnalysisKind::corrected) {
                out.correction_unavailable = r.degraded;
                out.weighting_fallback = r.correction && !r.correction->weighting_applied;
            }
        } catch (const std::domain_error&) {
            o.degraded = true;
            if (kind == AnalysisKind::corrected) out.correction_unavailable = true;
        }
    }
    return out;
}

std::string optional_number(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string();
}

void write_descriptor(std::ostream& out, const ScenarioMetrics& m) {
    const auto& c = m.config;
    std::string a1;
    std::string a2;
    if (const auto* t = std::get_if<AscertainmentTargets>(&c.thresholds)) {
        a1 = format_number(t->t1);
        a2 = format_number(t->t2);
    }
    out << m.id << ',' << format_number(c.prevalence) << ',' << format_number(c.signs_rate) << ','
        << a1 << ',' << a2 << ',' << format_number(c.noncase_params.rho()) << ','
        << format_number(c.case_params.rho()) << ',' << describe(c.transform);
}

}  // namespace

std::string format_number(double v) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

double auc_to_case_mean(double target_auc, const NormalParams& non_cases, double case_var) {
    if (!(target_auc > 0.0 && target_auc < 1.0)) {
        throw std::domain_error("target AUC must lie in (0, 1)");
    }
    return non_cases.mean + std_normal_quantile(target_auc) * std::sqrt(case_var + non_cases.var);
}

BivNormParams case_params_for_aucs(double auc1, double auc2, const BivNormParams& non_cases,
                                   double case_var1, double case_var2, double rho_cases) {
    return {auc_to_case_mean(auc1, {non_cases.mu1(), non_cases.var1()}, case_var1),
            auc_to_case_mean(auc2, {non_cases.mu2(), non_cases.var2()}, case_var2), case_var1,
            case_var2, rho_cases};
}

ScenarioConfig demo_scenario(bool null_hypothesis) {
    ScenarioConfig c;
    c.n = 50000;
    c.prevalence = 0.01;
    c.signs_rate = 0.1;
    c.noncase_params = BivNormParams(0.0, 0.0, 1.0, 1.0, 0.0);
    c.case_params = case_params_for_aucs(0.77, null_hypothesis ? 0.77 : 0.71, c.noncase_params,
                                         1.0, 1.0, 0.0);
    c.thresholds = AscertainmentTargets{0.0001, 0.97};
    c.calibration = Calibration::observed_cases;
    c.reps = 10000;
    c.seed = 1;
    return c;
}

bool ScenarioMetrics::null_holds() const { return std::abs(true_auc1 - true_auc2) < 1e-9; }

ScenarioMetrics run_scenario(const ScenarioConfig& config, const HarnessOptions& opts,
                             std::string id) {
    config.validate();
    ScenarioMetrics m;
    m.id = std::move(id);
    m.config = config;
    m.thresholds = config.resolve_thresholds();
    m.true_auc1 = binormal_auc({config.case_params.mu1(), config.case_params.var1()},
                               {config.noncase_params.mu1(), config.noncase_params.var1()});
    m.true_auc2 = binormal_auc({config.case_params.mu2(), config.case_params.var2()},
                               {config.noncase_params.mu2(), config.noncase_params.var2()});

    std::vector<RepOutcome> outcomes(config.reps);
    const unsigned workers = std::max(1u, std::min<unsigned>(opts.workers,
                                                             static_cast<unsigned>(config.reps)));
    if (workers == 1) {
        for (std::size_t r = 0; r < config.reps; ++r) {
            outcomes[r] = run_replication(config, m.thresholds, opts, r);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < config.reps; r = next++) {
                    outcomes[r] = run_replication(config, m.thresholds, opts, r);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    // Aggregate in replication order so sums are schedule-independent.
    const bool null = m.null_holds();
    const FavoredTest better = m.true_auc1 > m.true_auc2 ? FavoredTest::test1 : FavoredTest::test2;
    const double reps = static_cast<double>(config.reps);
    double pct1 = 0.0;
    double pct2 = 0.0;
    std::size_t n_pct = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        AnalysisMetrics& am = m.analyses[k];
        std::size_t rejects = 0;
        std::size_t correct = 0;
        std::size_t wrong = 0;
        std::size_t available = 0;
        double sum1 = 0.0;
        double sum2 = 0.0;
        double sumd = 0.0;
        for (const auto& o : outcomes) {
            const auto& a = o.analyses[k];
            am.degradations += a.degraded;
            if (!a.available) continue;
            ++available;
            sum1 += a.auc1;
            sum2 += a.auc2;
            sumd += a.auc1 - a.auc2;
            if (a.reject) {
                ++rejects;
                (a.favored == better ? correct : wrong) += 1;
            }
        }
        am.rejection_rate = static_cast<double>(rejects) / reps;
        am.mc_se = std::sqrt(am.rejection_rate * (1.0 - am.rejection_rate) / reps);
        if (!null) {
            am.crf = static_cast<double>(correct) / reps;
            am.wrf = static_cast<double>(wrong) / reps;
        }
        if (available > 0) {
            const double na = static_cast<double>(available);
            am.mean_auc1 = sum1 / na;
            am.mean_auc2 = sum2 / na;
            am.mean_diff = sumd / na;
        }
    }
    for (const auto& o : outcomes) {
        m.corrections_unavailable += o.correction_unavailable;
        m.weighting_fallbacks += o.weighting_fallback;
        if (o.pct1 && o.pct2) {
            pct1 += *o.pct1;
            pct2 += *o.pct2;
            ++n_pct;
        }
    }
    if (n_pct > 0) {
        m.mean_percent_ascertainment1 = pct1 / static_cast<double>(n_pct);
        m.mean_percent_ascertainment2 = pct2 / static_cast<double>(n_pct);
    }
    m.reps_completed = config.reps;
    return m;
}

std::size_t FactorGrid::size() const {
    auto len = [](std::size_t n) { return std::max<std::size_t>(n, 1); };
    return len(prevalence.size()) * len(signs_rate.size()) * len(ascertainment.size()) *
           len(correlations.size()) * len(transforms.size());
}

std::vector<ScenarioConfig> FactorGrid::cells() const {
    auto or_base = []<class T>(const std::vector<T>& v, const T& base) {
        return v.empty() ? std::vector<T>{base} : v;
    };
    const auto prev = or_base(prevalence, base.prevalence);
    const auto signs = or_base(signs_rate, base.signs_rate);
    std::vector<std::optional<AscertainmentTargets>> asc;
    if (ascertainment.empty()) {
        asc.push_back(std::nullopt);
    } else {
        asc.assign(ascertainment.begin(), ascertainment.end());
    }
    const auto corr = or_base(correlations, std::pair{base.noncase_params.rho(),
                                                      base.case_params.rho()});
    const auto trans = or_base(transforms, base.transform);

    std::vector<ScenarioConfig> out;
    out.reserve(size());
    for (double p : prev) {
        for (double s : signs) {
            for (const auto& a : asc) {
                for (const auto& [r0, r1] : corr) {
                    for (const auto& t : trans) {
                        ScenarioConfig c = base;
                        c.prevalence = p;
                        c.signs_rate = s;
                        if (a) c.thresholds = *a;
                        const auto& nc = base.noncase_params;
                        const auto& cp = base.case_params;
                        c.noncase_params = {nc.mu1(), nc.mu2(), nc.var1(), nc.var2(), r0};
                        c.case_params = {cp.mu1(), cp.mu2(), cp.var1(), cp.var2(), r1};
                        c.transform = t;
                        c.seed = derive_seed(base.seed, out.size());
                        out.push_back(std::move(c));
                    }
                }
            }
        }
    }
    return out;
}

std::string FactorGrid::cell_id(std::size_t index) const {
    std::string num = std::to_string(index);
    if (num.size() < 3) num.insert(0, 3 - num.size(), '0');
    return name + "-" + num;
}

std::vector<ScenarioMetrics> run_grid(const FactorGrid& grid, const HarnessOptions& opts) {
    const auto cells = grid.cells();
    std::vector<ScenarioMetrics> out;
    out.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out.push_back(run_scenario(cells[i], opts, grid.cell_id(i)));
    }
    return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<ScenarioMetrics>& metrics) {
    out << kMetricsHeader << '\n';
    for (const auto& m : metrics) {
        for (auto kind : {AnalysisKind::truth, AnalysisKind::observed, AnalysisKind::corrected}) {
            const auto& a = m[kind];
            write_descriptor(out, m);
            out << ',' << to_string(kind) << ',' << m.reps_completed << ','
                << format_number(a.rejection_rate) << ',' << optional_number(a.crf) << ','
                << optional_number(a.wrf) << ',' << format_number(a.mean_auc1) << ','
                << format_number(a.mean_auc2) << ',' << format_number(a.mean_diff) << ','
                << format_number(a.mc_se) << ',' << a.degradations << '\n';
        }
    }
}

void write_summary_csv(std::ostream& out, const std::vector<ScenarioMetrics>& metrics) {
    out << "scenario_id,prevalence,signs_rate,ascert1,ascert2,rho0,rho1,transform,a1,a2,"
           "true_auc1,true_auc2,reps,realized_ascert1,realized_ascert2,"
           "true_rejection,observed_rejection,corrected_rejection,"
           "true_crf,observed_crf,corrected_crf,true_wrf,observed_wrf,corrected_wrf,"
           "weighting_fallbacks,corrections_unavailable\n";
    for (const auto& m : metrics) {
        write_descriptor(out, m);
        out << ',' << format_number(m.thresholds.a1) << ',' << format_number(m.thresholds.a2)
            << ',' << format_number(m.true_auc1) << ',' << format_number(m.true_auc2) << ','
            << m.reps_completed << ',' << optional_number(m.mean_percent_ascertainment1) << ','
            << optional_number(m.mean_percent_ascertainment2);
        for (const auto& a : m.analyses) out << ',' << format_number(a.rejection_rate);
        for (const auto& a : m.analyses) out << ',' << optional_number(a.crf);
        for (const auto& a : m.analyses) out << ',' << optional_number(a.wrf);
        out << ',' << m.weighting_fallbacks << ',' << m.corrections_unavailable << '\n';
    }
}

}  // namespace pairscreen
