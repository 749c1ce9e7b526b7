// Acceptance checks. Prints one PASS/FAIL line per criterion (details are
// indented above it) and exits nonzero when any criterion fails.
//
//   acceptance --mode ci     2,000 replications for the Table 2 grid
//   acceptance --mode full   10,000 replications

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "pairscreen/config.hpp"
#include "pairscreen/correction.hpp"
#include "pairscreen/harness.hpp"

namespace fs = std::filesystem;
using namespace pairscreen;

namespace {

struct Mode {
    std::string name;
    std::size_t table2_reps;
    double tol_true;
    double tol_observed;
    double tol_no_bias;
    std::size_t zero_reps;
    std::size_t binned_reps;
};

const Mode kCi{"ci", 2000, 0.04, 0.07, 0.04, 500, 100};
const Mode kFull{"full", 10000, 0.02, 0.05, 0.02, 2000, 2000};

// Printed values at 1.00 only need to exceed this.
constexpr double kSaturated = 0.95;
constexpr double kCorrectedTol = 0.10;
// Demonstration targets: value and half-width.
constexpr double kDemoDiff = 0.06;
constexpr double kDemoTrueTol = 0.01;
constexpr double kDemoObservedTol = 0.02;
constexpr double kDemoCorrectedTol = 0.02;
constexpr double kDemoTypeI = 0.03;
constexpr double kDemoTypeITol = 0.03;
constexpr double kDemoWrf = 0.86;
constexpr double kDemoWrfTol = 0.05;
constexpr double kDemoCrf = 0.58;
constexpr double kDemoCrfTol = 0.07;
// Trend checks: observed low end 0.06 +- 0.03, high end above 0.95, corrected
// within [0, 0.11]; a step counts as a decrease only beyond 2 MC SEs.
constexpr double kTrendLow = 0.06;
constexpr double kTrendLowTol = 0.03;
constexpr double kTrendHigh = 0.95;
constexpr double kCorrectedCeiling = 0.11;
constexpr double kStepSes = 2.0;
// Property suite.
constexpr int kNathSets = 20;
constexpr std::size_t kNathPoints = 5000;
constexpr int kBootstrap = 100;
constexpr double kNathSes = 3.0;
constexpr double kPlaneTol = 1e-6;
constexpr double kVarRelTol = 0.10;
constexpr int kVarReps = 5000;
constexpr double kAucMcTol = 0.002;
constexpr int kAucMcDraws = 1000000;
constexpr double kBvnTol = 1e-7;
constexpr double kMixtureTol = 1e-10;
constexpr double kRobustSes = 3.0;

struct Outcome {
    bool pass = true;
    std::string title;
};

void detail(const std::string& s) { std::cout << "    " << s << '\n'; }

std::string fmt(double v, int digits = 3) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string config_path(const std::string& name) {
    return std::string(PAIRSCREEN_SOURCE_DIR) + "/configs/" + name + ".json";
}

// Binomial variance of a rate estimated from reps replications.
double rate_var(double p, std::size_t reps) { return p * (1.0 - p) / static_cast<double>(reps); }

// ---------------------------------------------------------------- Table 2

struct PaperRow {
    double prevalence, t1, t2, truth, observed, corrected;
    bool biased;
};

const std::vector<PaperRow> kTable2 = {
    {0.01, .15, .50, .01, .89, .36, true},  {0.01, .15, .80, .02, .95, .25, true},
    {0.01, .50, .80, .01, .23, .12, true},  {0.14, .15, .50, .02, 1.0, .82, true},
    {0.14, .15, .80, .02, 1.0, .60, true},  {0.14, .50, .80, .02, 1.0, .20, true},
    {0.24, .15, .50, .02, 1.0, .95, true},  {0.24, .15, .80, .02, 1.0, .91, true},
    {0.24, .50, .80, .02, 1.0, .40, true},  {0.01, .15, .15, .01, .02, .23, false},
    {0.01, .50, .50, .01, .02, .12, false}, {0.01, .80, .80, .02, .02, .18, false},
    {0.14, .15, .15, .02, .02, .26, false}, {0.14, .50, .50, .02, .02, .14, false},
    {0.14, .80, .80, .02, .02, .03, false}, {0.24, .15, .15, .02, .02, .26, false},
    {0.24, .50, .50, .02, .02, .14, false}, {0.24, .80, .80, .02, .02, .04, false},
};

const PaperRow& paper_row(const ScenarioConfig& c) {
    const auto& t = std::get<AscertainmentTargets>(c.thresholds);
    for (const auto& r : kTable2) {
        if (r.prevalence == c.prevalence && r.t1 == t.t1 && r.t2 == t.t2) return r;
    }
    throw std::logic_error("cell not in Table 2");
}

std::vector<ScenarioMetrics> run_table2(const Mode& mode, const HarnessOptions& opts) {
    auto rc = load_run_config(config_path("table2"));
    rc.grid.base.reps = mode.table2_reps;
    const auto cells = rc.grid.cells();
    std::vector<ScenarioMetrics> out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out.push_back(run_scenario(cells[i], opts, rc.grid.cell_id(i)));
    }
    return out;
}

Outcome criterion1(const Mode& mode, const std::vector<ScenarioMetrics>& t2) {
    Outcome o;
    o.title = "Table 2 true and observed Type I (" + std::to_string(mode.table2_reps) +
              " reps; true +-" + fmt(mode.tol_true, 2) + ", observed +-" +
              fmt(mode.tol_observed, 2) + ", no-bias +-" + fmt(mode.tol_no_bias, 2) +
              ", 1.00 rows > " + fmt(kSaturated, 2) + ")";
    detail("prev  ascert  true (paper)    observed (paper)");
    for (const auto& m : t2) {
        const auto& p = paper_row(m.config);
        const double tr = m[AnalysisKind::truth].rejection_rate;
        const double ob = m[AnalysisKind::observed].rejection_rate;
        const bool ok_true = std::abs(tr - p.truth) <= mode.tol_true;
        bool ok_obs = false;
        if (!p.biased) {
            ok_obs = std::abs(ob - p.observed) <= mode.tol_no_bias;
        } else if (p.observed == 1.0) {
            ok_obs = ob > kSaturated;
        } else {
            ok_obs = std::abs(ob - p.observed) <= mode.tol_observed;
        }
        o.pass = o.pass && ok_true && ok_obs;
        detail(fmt(p.prevalence, 2) + "  " + fmt(p.t1 * 100, 0) + "/" + fmt(p.t2 * 100, 0) +
               "  " + fmt(tr) + " (" + fmt(p.truth, 2) + ")" + (ok_true ? "  " : "! ") + "  " +
               fmt(ob) + " (" + fmt(p.observed, 2) + ")" + (ok_obs ? "" : " !"));
    }
    return o;
}

Outcome criterion2(const Mode& mode, const std::vector<ScenarioMetrics>& t2) {
    Outcome o;
    o.title = "Table 2 corrected Type I (+-" + fmt(kCorrectedTol, 2) +
              " of paper; closer to 0.05 than observed in biased rows; " +
              std::to_string(mode.table2_reps) + " reps)";
    detail("prev  ascert  corrected (paper)  observed  closer");
    for (const auto& m : t2) {
        const auto& p = paper_row(m.config);
        const double co = m[AnalysisKind::corrected].rejection_rate;
        const double ob = m[AnalysisKind::observed].rejection_rate;
        const bool ok_val = std::abs(co - p.corrected) <= kCorrectedTol;
        const bool closer = !p.biased || std::abs(co - 0.05) < std::abs(ob - 0.05);
        o.pass = o.pass && ok_val && closer;
        detail(fmt(p.prevalence, 2) + "  " + fmt(p.t1 * 100, 0) + "/" + fmt(p.t2 * 100, 0) +
               "  " + fmt(co) + " (" + fmt(p.corrected, 2) + ")" + (ok_val ? "  " : "! ") + "   " +
               fmt(ob) + "   " + (p.biased ? (closer ? "yes" : "no !") : "-"));
    }
    return o;
}

// ---------------------------------------------------------------- demo

Outcome criterion3(const HarnessOptions& opts) {
    Outcome o;
    o.title = "Demonstration: mean dAUC true/observed/corrected, corrected Type I, observed "
              "WRF, corrected CRF (10000 reps)";
    ScenarioConfig alt = demo_scenario(false);
    ScenarioConfig null = demo_scenario(true);
    alt.seed = derive_seed(1, 1);
    null.seed = derive_seed(1, 2);
    alt.reps = null.reps = 10000;
    const auto h = run_scenario(alt, opts, "demo-alternative");
    const auto n = run_scenario(null, opts, "demo-null");
    auto check = [&](const std::string& what, double value, double target, double tol) {
        const bool ok = std::abs(value - target) <= tol;
        o.pass = o.pass && ok;
        detail(what + " = " + fmt(value) + "  target " + fmt(target, 2) + " +- " + fmt(tol, 2) +
               (ok ? "" : "  !"));
    };
    check("mean true dAUC", h[AnalysisKind::truth].mean_diff, kDemoDiff, kDemoTrueTol);
    check("mean observed dAUC", h[AnalysisKind::observed].mean_diff, -kDemoDiff, kDemoObservedTol);
    check("mean corrected dAUC", h[AnalysisKind::corrected].mean_diff, kDemoDiff, kDemoCorrectedTol);
    check("corrected Type I", n[AnalysisKind::corrected].rejection_rate, kDemoTypeI, kDemoTypeITol);
    check("observed WRF", h[AnalysisKind::observed].wrf.value_or(-1), kDemoWrf, kDemoWrfTol);
    check("corrected CRF", h[AnalysisKind::corrected].crf.value_or(-1), kDemoCrf, kDemoCrfTol);
    detail("(observed Type I = " + fmt(n[AnalysisKind::observed].rejection_rate) +
           ", paper 0.06; not a pinned target)");
    return o;
}

// ---------------------------------------------------------------- trends

Outcome criterion4(const HarnessOptions& opts) {
    Outcome o;
    o.title = "Extreme-bias trends: observed Type I rises with prevalence over [0.06+-0.03, "
              "0.95+], corrected Type I in [0, 0.11], corrected CRF nondecreasing in signs rate";
    const auto prc = load_run_config(config_path("prevalence_null"));
    const auto prev = run_grid(prc.grid, opts);
    const std::size_t reps = prc.grid.base.reps;
    detail("prevalence  observed  corrected");
    bool rising = true;
    bool bounded = true;
    for (std::size_t i = 0; i < prev.size(); ++i) {
        const double ob = prev[i][AnalysisKind::observed].rejection_rate;
        const double co = prev[i][AnalysisKind::corrected].rejection_rate;
        if (i > 0) {
            const double before = prev[i - 1][AnalysisKind::observed].rejection_rate;
            const double se = std::sqrt(rate_var(ob, reps) + rate_var(before, reps));
            if (ob < before - kStepSes * se) rising = false;
        }
        if (co < 0.0 || co > kCorrectedCeiling) bounded = false;
        detail(fmt(prev[i].config.prevalence, 2) + "        " + fmt(ob) + "     " + fmt(co));
    }
    const double low = prev.front()[AnalysisKind::observed].rejection_rate;
    const double high = prev.back()[AnalysisKind::observed].rejection_rate;
    const bool low_ok = std::abs(low - kTrendLow) <= kTrendLowTol;
    const bool high_ok = high > kTrendHigh;
    detail(std::string("observed nondecreasing: ") + (rising ? "yes" : "no !") +
           "; low end " + fmt(low) + (low_ok ? "" : " !") + "; high end " + fmt(high) +
           (high_ok ? "" : " !"));
    detail(std::string("corrected within [0, ") + fmt(kCorrectedCeiling, 2) + "]: " +
           (bounded ? "yes" : "no !"));

    const auto src = load_run_config(config_path("signs_alternative"));
    const auto signs = run_grid(src.grid, opts);
    const std::size_t sreps = src.grid.base.reps;
    bool monotone = true;
    std::map<double, std::vector<const ScenarioMetrics*>> lines;
    for (const auto& m : signs) lines[m.config.prevalence].push_back(&m);
    for (auto& [p, line] : lines) {
        std::sort(line.begin(), line.end(), [](auto* a, auto* b) {
            return a->config.signs_rate < b->config.signs_rate;
        });
        std::string row = "prevalence " + fmt(p, 2) + " corrected CRF by signs rate:";
        bool line_ok = true;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const double crf = line[i]->operator[](AnalysisKind::corrected).crf.value_or(0);
            row += " " + fmt(crf);
            if (i > 0) {
                const double before = line[i - 1]->operator[](AnalysisKind::corrected).crf.value_or(0);
                const double se = std::sqrt(rate_var(crf, sreps) + rate_var(before, sreps));
                if (crf < before - kStepSes * se) line_ok = false;
            }
        }
        monotone = monotone && line_ok;
        detail(row + (line_ok ? "" : "  !"));
    }
    o.pass = rising && low_ok && high_ok && bounded && monotone;
    return o;
}

// ---------------------------------------------------------------- properties

bool nath_recovery() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int ok_sets = 0;
    double plane_err = 0.0;
    for (int s = 0; s < kNathSets; ++s) {
        const BivNormParams truth(2 * u(rng) - 1, 2 * u(rng) - 1, 0.5 + 1.5 * u(rng),
                                  0.5 + 1.5 * u(rng), 1.2 * u(rng) - 0.6);
        const int quadrant = 1 + static_cast<int>(4 * u(rng)) % 4;
        const Thresholds th{truth.mu1() + (u(rng) - 0.5) * truth.sd1(),
                            truth.mu2() + (u(rng) - 0.5) * truth.sd2()};
        const Rect rect = quadrant_rect(quadrant, th);
        const auto pts = oracle::draw_truncated(truth, rect, kNathPoints, rng);
        auto fit_of = [&](const std::vector<ScorePair>& x) {
            return nath_mle(x, rect, quadrant_sample_stats(x)->start_params()).params;
        };
        auto as_vec = [](const BivNormParams& p) {
            return std::array<double, 5>{p.mu1(), p.mu2(), p.var1(), p.var2(), p.rho()};
        };
        const auto est = as_vec(fit_of(pts));
        std::array<double, 5> sum{}, sq{};
        std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
        std::vector<ScorePair> boot(pts.size());
        for (int b = 0; b < kBootstrap; ++b) {
            for (auto& x : boot) x = pts[pick(rng)];
            const auto v = as_vec(fit_of(boot));
            for (int k = 0; k < 5; ++k) {
                sum[k] += v[k];
                sq[k] += v[k] * v[k];
            }
        }
        const auto tv = as_vec(truth);
        bool set_ok = true;
        double worst = 0.0;
        for (int k = 0; k < 5; ++k) {
            const double mean = sum[k] / kBootstrap;
            const double se = std::sqrt(std::max(sq[k] / kBootstrap - mean * mean, 0.0) *
                                        kBootstrap / (kBootstrap - 1.0));
            const double zs = std::abs(est[k] - tv[k]) / se;
            worst = std::max(worst, zs);
            if (!(zs <= kNathSes)) set_ok = false;
        }
        ok_sets += set_ok;
        if (!set_ok) {
            detail("  set " + std::to_string(s) + " (quadrant " + std::to_string(quadrant) +
                   "): worst error " + fmt(worst, 2) + " bootstrap SEs !");
        }

        // Untruncated fit against the closed-form MLE.
        const auto full = oracle::draw(truth, 500, rng);
        const auto m = oracle::moments(full);
        const auto pf = as_vec(nath_mle(full, Rect::plane(), BivNormParams::standard()).params);
        const std::array<double, 5> closed{m.m1, m.m2, m.v1, m.v2, m.c / std::sqrt(m.v1 * m.v2)};
        for (int k = 0; k < 5; ++k) plane_err = std::max(plane_err, std::abs(pf[k] - closed[k]));
    }
    const bool plane_ok = plane_err <= kPlaneTol;
    detail("Nath recovery: " + std::to_string(ok_sets) + "/" + std::to_string(kNathSets) +
           " sets within " + fmt(kNathSes, 0) + " bootstrap SEs; plane fit max error " +
           sci(plane_err) + (plane_ok ? "" : " !"));
    return ok_sets == kNathSets && plane_ok;
}

bool variance_vs_monte_carlo() {
    struct Set {
        BivNormParams cases, non_cases;
        std::size_t n1, n0;
    };
    const std::vector<Set> sets = {
        {BivNormParams(1.09, 0.91, 1.0, 1.0, 0.3), BivNormParams(0, 0, 1, 1, 0.3), 200, 2000},
        {BivNormParams(1.09, 1.09, 1.0, 1.0, 0.6), BivNormParams(0, 0, 1, 1, 0.5), 100, 1000},
        {BivNormParams(1.5, 0.8, 2.0, 0.7, 0.0), BivNormParams(0, 0.2, 1, 1.3, 0.0), 150, 1500},
        {BivNormParams(0.6, 1.2, 0.8, 1.5, -0.3), BivNormParams(0, 0, 1.2, 1, 0.2), 300, 900},
        {BivNormParams(2.0, 1.8, 1.0, 1.0, 0.8), BivNormParams(0, 0, 1, 1, 0.8), 80, 4000},
    };
    std::mt19937_64 rng(202);
    bool all = true;
    std::string row = "Obuchowski-McClish / Monte Carlo variance ratios:";
    for (const auto& s : sets) {
        std::vector<double> d;
        d.reserve(kVarReps);
        for (int r = 0; r < kVarReps; ++r) {
            const auto mc = oracle::moments(oracle::draw(s.cases, s.n1, rng));
            const auto mn = oracle::moments(oracle::draw(s.non_cases, s.n0, rng));
            const double k1 = s.n1 / (s.n1 - 1.0);
            const double k0 = s.n0 / (s.n0 - 1.0);
            d.push_back(oracle::Phi((mc.m1 - mn.m1) / std::sqrt(k1 * mc.v1 + k0 * mn.v1)) -
                        oracle::Phi((mc.m2 - mn.m2) / std::sqrt(k1 * mc.v2 + k0 * mn.v2)));
        }
        double mean = 0, var = 0;
        for (double v : d) mean += v / d.size();
        for (double v : d) var += (v - mean) * (v - mean) / (d.size() - 1);
        const TestParams t1{{s.cases.mu1(), s.cases.var1()}, {s.non_cases.mu1(), s.non_cases.var1()}};
        const TestParams t2{{s.cases.mu2(), s.cases.var2()}, {s.non_cases.mu2(), s.non_cases.var2()}};
        const double model =
            var_diff_auc(t1, t2, s.non_cases.rho(), s.cases.rho(), s.n1, s.n0).var_diff;
        const double ratio = model / var;
        const bool ok = std::abs(ratio - 1.0) <= kVarRelTol;
        all = all && ok;
        row += " " + fmt(ratio) + (ok ? "" : "!");
    }
    detail(row);
    return all;
}

bool auc_vs_monte_carlo() {
    std::mt19937_64 rng(303);
    std::normal_distribution<double> z;
    bool all = true;
    std::string row = "binormal AUC minus Monte Carlo:";
    for (const auto& [c, nc] : {std::pair<NormalParams, NormalParams>{{1.09, 1.0}, {0.0, 1.0}},
                                {{0.5, 2.0}, {0.0, 0.5}},
                                {{-0.3, 1.0}, {0.2, 1.5}}}) {
        int wins = 0;
        for (int i = 0; i < kAucMcDraws; ++i) {
            wins += c.mean + std::sqrt(c.var) * z(rng) > nc.mean + std::sqrt(nc.var) * z(rng);
        }
        const double err = binormal_auc(c, nc) - static_cast<double>(wins) / kAucMcDraws;
        all = all && std::abs(err) <= kAucMcTol;
        row += " " + fmt(err, 5);
    }
    detail(row);
    return all;
}

bool bvn_vs_oracles() {
    double worst = 0.0;
    for (double rho = -0.99; rho < 0.995; rho += 0.01) {
        worst = std::max(worst,
                         std::abs(bvn_cdf(0, 0, rho) - (0.25 + std::asin(rho) / (2 * M_PI))));
    }
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> x(-4.0, 4.0);
    std::uniform_real_distribution<double> r(-0.99, 0.99);
    for (int i = 0; i < 500; ++i) {
        const double a = x(rng), b = x(rng), rho = r(rng);
        worst = std::max(worst, std::abs(bvn_cdf(a, b, rho) - oracle::bvn_cdf(a, b, rho)));
    }
    detail("bvn_cdf max abs error vs arcsine identity and quadrature: " + sci(worst));
    return worst <= kBvnTol;
}

bool mixture_oracle() {
    std::mt19937_64 rng(505);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
        const auto a = oracle::draw(BivNormParams(2.0, 1.0 + s * 0.1, 1.0, 0.8, 0.4), 40 + s, rng);
        const auto b = oracle::draw(BivNormParams(-0.5, -1.0, 0.3, 0.4, -0.2), 7 + s, rng);
        const double lambda = 0.05 + 0.09 * s;
        double m1 = 0, m2 = 0, v1 = 0, v2 = 0, c = 0;
        auto each = [&](auto&& f) {
            for (const auto& p : a) f(p, lambda / a.size());
            for (const auto& p : b) f(p, (1 - lambda) / b.size());
        };
        each([&](const ScorePair& p, double w) { m1 += w * p.x1; m2 += w * p.x2; });
        each([&](const ScorePair& p, double w) {
            v1 += w * (p.x1 - m1) * (p.x1 - m1);
            v2 += w * (p.x2 - m2) * (p.x2 - m2);
            c += w * (p.x1 - m1) * (p.x2 - m2);
        });
        const auto out =
            weighted_correction(ScoreMoments(a), ScoreMoments(b), BivNormParams::standard(), lambda);
        const auto& w = out.weighted;
        for (double e : {w.mu1() - m1, w.mu2() - m2, w.var1() - v1, w.var2() - v2,
                         w.rho() - c / std::sqrt(v1 * v2)}) {
            worst = std::max(worst, std::abs(e));
        }
    }
    detail("weighted mixture max abs error: " + sci(worst));
    return worst <= kMixtureTol;
}

Outcome criterion5() {
    Outcome o;
    o.title = "Property suite: Nath recovery and plane MLE, variance vs Monte Carlo, AUC vs "
              "Monte Carlo, bvn_cdf accuracy, weighted mixture";
    const bool a = nath_recovery();
    const bool b = variance_vs_monte_carlo();
    const bool c = auc_vs_monte_carlo();
    const bool d = bvn_vs_oracles();
    const bool e = mixture_oracle();
    o.pass = a && b && c && d && e;
    return o;
}

// ---------------------------------------------------------------- robustness

Outcome criterion6(const Mode& mode, const HarnessOptions& base) {
    Outcome o;
    o.title = "Robustness modes run end to end; zero-weighted corrected Type I <= observed "
              "(3 SE)";
    auto zero = load_run_config(config_path("robustness_zero"));
    zero.grid.base.reps = std::min(zero.grid.base.reps, mode.zero_reps);
    HarnessOptions zopts = base;
    zopts.non_case_sampling = zero.non_case_sampling;
    const auto zm = run_grid(zero.grid, zopts);
    const std::size_t zr = zero.grid.base.reps;
    for (const auto& m : zm) {
        const auto* z = std::get_if<ZeroWeighting>(&m.config.transform);
        const double ob = m[AnalysisKind::observed].rejection_rate;
        const double co = m[AnalysisKind::corrected].rejection_rate;
        std::string line = describe(m.config.transform) + ": observed " + fmt(ob) +
                           ", corrected " + fmt(co);
        const bool in_scope = z && z->noncase.p1 <= 0.30 && z->noncase.p2 <= 0.30 &&
                              z->cases.p1 <= 0.01 && z->cases.p2 <= 0.01;
        if (m.reps_completed != zr) o.pass = false;
        if (in_scope) {
            const double se = std::sqrt(rate_var(ob, zr) + rate_var(co, zr));
            const bool ok = co <= ob + kRobustSes * se;
            o.pass = o.pass && ok;
            line += ok ? "  (checked)" : "  (checked) !";
        }
        detail(line);
    }

    auto binned = load_run_config(config_path("robustness_binned"));
    binned.grid.base.reps = std::min(binned.grid.base.reps, mode.binned_reps);
    HarnessOptions bopts = base;
    bopts.non_case_sampling = binned.non_case_sampling;
    const auto bm = run_grid(binned.grid, bopts);
    std::size_t complete = 0;
    for (const auto& m : bm) {
        bool ok = m.reps_completed == binned.grid.base.reps;
        for (const auto& a : m.analyses) ok = ok && a.rejection_rate >= 0 && a.rejection_rate <= 1;
        complete += ok;
    }
    detail("binned: " + std::to_string(complete) + "/" + std::to_string(bm.size()) +
           " cells complete (" + std::to_string(binned.grid.base.reps) + " reps each)");
    o.pass = o.pass && complete == bm.size();
    return o;
}

// ---------------------------------------------------------------- determinism

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion7() {
    Outcome o;
    o.title = "Determinism: simulate with workers 1 and 3 gives byte-identical CSVs";
    const fs::path root = fs::temp_directory_path() / "pairscreen_acceptance_det";
    fs::remove_all(root);
    auto run = [&](unsigned workers, const std::string& sub) {
        const std::string cmd = std::string("\"") + PAIRSCREEN_CLI + "\" simulate \"" +
                                config_path("table2") + "\" --reps 40 --no-charts --workers " +
                                std::to_string(workers) + " --out \"" + (root / sub).string() +
                                "\" > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    const bool ran = run(1, "a") && run(3, "b") && run(3, "c");
    bool same = ran;
    for (const char* f : {"table2_metrics.csv", "table2_summary.csv"}) {
        const auto a = slurp(root / "a" / f);
        same = same && !a.empty() && a == slurp(root / "b" / f) && a == slurp(root / "c" / f);
    }
    detail(std::string("three runs (workers 1, 3, 3): ") + (ran ? "completed" : "failed !") +
           ", files " + (same ? "identical" : "differ !"));
    fs::remove_all(root);
    o.pass = same;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string mode_name = "ci";
    std::set<int> only;
    unsigned workers = 0;
    app.add_option("--mode", mode_name, "ci (2000 reps) or full (10000 reps)")
        ->check(CLI::IsMember({"ci", "full"}));
    app.add_option("--only", only, "Run only these criteria");
    app.add_option("--workers", workers, "Worker threads (default: $PAIRSCREEN_WORKERS or all cores)");
    CLI11_PARSE(app, argc, argv);

    const Mode& mode = mode_name == "full" ? kFull : kCi;
    HarnessOptions opts;
    if (workers == 0) {
        const char* env = std::getenv("PAIRSCREEN_WORKERS");
        workers = env ? static_cast<unsigned>(std::max(1L, std::atol(env)))
                      : std::max(1u, std::thread::hardware_concurrency());
    }
    opts.workers = workers;
    std::cout << "acceptance mode " << mode.name << ", " << workers << " worker(s)\n";

    auto wanted = [&](int k) { return only.empty() || only.count(k) > 0; };
    std::vector<ScenarioMetrics> t2;
    if (wanted(1) || wanted(2)) t2 = run_table2(mode, opts);

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, [&] { return criterion1(mode, t2); }},
        {2, [&] { return criterion2(mode, t2); }},
        {3, [&] { return criterion3(opts); }},
        {4, [&] { return criterion4(opts); }},
        {5, [&] { return criterion5(); }},
        {6, [&] { return criterion6(mode, opts); }},
        {7, [&] { return criterion7(); }},
    };
    int failures = 0;
    for (const auto& [k, run] : criteria) {
        if (!wanted(k)) continue;
        const auto o = run();
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << k << ": " << o.title << '\n'
                  << std::flush;
    }
    return failures == 0 ? 0 : 1;
}
