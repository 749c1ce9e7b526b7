// pairscreen: simulate paired screening trials, analyze participant data and
// run the oral-cancer demonstration.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 correction unavailable (analyze only; the report is still written).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "pairscreen/charts.hpp"
#include "pairscreen/config.hpp"
#include "pairscreen/dataio.hpp"

namespace fs = std::filesystem;
using namespace pairscreen;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kCorrectionUnavailable = 4;

unsigned default_workers() {
    if (const char* env = std::getenv("PAIRSCREEN_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid PAIRSCREEN_WORKERS=" << env << '\n';
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

template <class F>
void write_with(const fs::path& path, F&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    writer(out);
}

fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    bool no_charts = false;
};

int cmd_simulate(const SimulateArgs& a) {
    RunConfig rc;
    try {
        rc = load_run_config(a.config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    if (a.seed) rc.grid.base.seed = *a.seed;
    if (a.reps) rc.grid.base.reps = *a.reps;
    if (a.out) rc.output_dir = *a.out;
    HarnessOptions opts;
    opts.workers = a.workers.value_or(rc.workers.value_or(default_workers()));
    opts.non_case_sampling = rc.non_case_sampling;
    opts.corrected_count = rc.corrected_count;

    const auto cells = rc.grid.cells();
    std::vector<ScenarioMetrics> metrics;
    metrics.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        try {
            metrics.push_back(run_scenario(cells[i], opts, rc.grid.cell_id(i)));
        } catch (const std::invalid_argument& e) {
            std::cerr << "config error: cell " << rc.grid.cell_id(i) << ": " << e.what() << '\n';
            return kConfigError;
        }
        std::cerr << "  " << metrics.back().id << " done\n";
    }

    const auto dir = prepare_dir(rc.output_dir);
    const auto metrics_path = dir / (rc.grid.name + "_metrics.csv");
    write_with(metrics_path, [&](std::ostream& o) { write_metrics_csv(o, metrics); });
    write_with(dir / (rc.grid.name + "_summary.csv"),
               [&](std::ostream& o) { write_summary_csv(o, metrics); });
    std::size_t charts = 0;
    if (rc.charts && !a.no_charts) {
        for (const auto& c : grid_charts(rc.grid, metrics)) {
            write_file(dir / (c.stem + ".svg"), c.svg);
            ++charts;
        }
    }
    std::cout << "wrote " << metrics.size() << " scenarios to " << metrics_path.string();
    if (charts) std::cout << " (+" << charts << " charts)";
    std::cout << '\n';
    return kOk;
}

struct AnalyzeArgs {
    std::string data;
    double a1 = 0.0;
    double a2 = 0.0;
    double alpha = 0.05;
    std::string out = ".";
    std::string name = "analysis";
    std::string corrected_count = "observed";
};

int cmd_analyze(const AnalyzeArgs& a) {
    ParticipantData data;
    try {
        std::ifstream in(a.data);
        if (!in) throw DataError(0, "cannot open " + a.data);
        data = read_participant_csv(in, {a.a1, a.a2});
    } catch (const DataError& e) {
        std::cerr << "data error: " << a.data << ": " << e.what() << '\n';
        return kDataError;
    }
    const auto counts = data.dataset.counts();
    if (counts.observed_cases == 0) {
        std::cerr << "data error: no observed cases\n";
        return kDataError;
    }

    AnalysisOptions opts;
    opts.alpha = a.alpha;
    opts.corrected_count = a.corrected_count == "inflated" ? CorrectedCaseCount::inflated
                                                           : CorrectedCaseCount::observed;
    const auto summary = summarize(data.dataset);
    std::vector<AnalysisResult> results;
    bool degraded = false;
    for (auto kind : available_analyses(data)) {
        try {
            results.push_back(run_analysis(summary, kind, opts));
            degraded = degraded || results.back().degraded;
        } catch (const std::domain_error& e) {
            std::cerr << "data error: " << to_string(kind) << " analysis: " << e.what() << '\n';
            return kDataError;
        }
    }

    const auto dir = prepare_dir(a.out);
    write_with(dir / (a.name + "_report.csv"),
               [&](std::ostream& o) { write_analysis_report(o, results); });
    write_file(dir / (a.name + "_roc.svg"), render_svg(roc_chart(results, "ROC curves: " + a.data)));
    write_analysis_report(std::cout, results);
    for (const auto& r : results) {
        for (const auto& w : r.warnings) std::cerr << "warning (" << to_string(r.kind) << "): " << w << '\n';
    }
    return degraded ? kCorrectionUnavailable : kOk;
}

struct DemoArgs {
    std::string out = "demo";
    std::uint64_t seed = 1;
    std::size_t reps = 10000;
    std::optional<unsigned> workers;
    bool skip_validation = false;
};

int cmd_demo(const DemoArgs& a) {
    const auto dir = prepare_dir(a.out);
    ScenarioConfig alt = demo_scenario(false);
    ScenarioConfig null = demo_scenario(true);
    alt.seed = derive_seed(a.seed, 1);
    null.seed = derive_seed(a.seed, 2);
    alt.reps = null.reps = a.reps;

    Engine rng = make_stream(a.seed);
    const auto data = draw_trial(alt, rng);
    write_with(dir / "demo_participants.csv", [&](std::ostream& o) { write_participant_csv(o, data); });
    const auto summary = summarize(data);
    std::vector<AnalysisResult> results;
    for (auto kind : {AnalysisKind::truth, AnalysisKind::observed, AnalysisKind::corrected}) {
        results.push_back(run_analysis(summary, kind, {alt.alpha}));
    }
    write_with(dir / "demo_report.csv", [&](std::ostream& o) { write_analysis_report(o, results); });
    write_file(dir / "demo_roc.svg",
               render_svg(roc_chart(results, "Hypothetical oral cancer screening trial")));
    std::cout << "thresholds a1=" << format_number(data.thresholds.a1)
              << " a2=" << format_number(data.thresholds.a2) << '\n';
    for (const auto& r : results) {
        std::cout << to_string(r.kind) << ": AUC1=" << format_number(r.auc1)
                  << " AUC2=" << format_number(r.auc2) << " diff=" << format_number(r.diff)
                  << " p=" << format_number(r.p_value) << '\n';
    }

    if (a.skip_validation) return kOk;
    HarnessOptions opts;
    opts.workers = a.workers.value_or(default_workers());
    std::vector<ScenarioMetrics> m{run_scenario(null, opts, "demo-null"),
                                   run_scenario(alt, opts, "demo-alternative")};
    write_with(dir / "demo_validation.csv", [&](std::ostream& o) { write_summary_csv(o, m); });
    write_with(dir / "demo_metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, m); });
    std::cout << "validation over " << a.reps << " replications:\n";
    for (auto kind : {AnalysisKind::truth, AnalysisKind::observed, AnalysisKind::corrected}) {
        const auto& n = m[0][kind];
        const auto& h = m[1][kind];
        std::cout << "  " << to_string(kind) << ": type I=" << format_number(n.rejection_rate)
                  << " CRF=" << format_number(h.crf.value_or(0.0))
                  << " WRF=" << format_number(h.wrf.value_or(0.0))
                  << " mean diff=" << format_number(h.mean_diff) << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Paired screening trial simulation and bias-corrected ROC comparison"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Run the scenario grid described by a JSON config");
    s->add_option("config", sim.config, "JSON run configuration")->required();
    s->add_option("--seed", sim.seed, "Master seed (overrides the config)");
    s->add_option("--reps", sim.reps, "Replications per cell")->check(CLI::PositiveNumber);
    s->add_option("--workers", sim.workers, "Worker threads (default: $PAIRSCREEN_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
    s->add_option("--out", sim.out, "Output directory (overrides the config)");
    s->add_flag("--no-charts", sim.no_charts, "Skip SVG charts");

    AnalyzeArgs an;
    auto* z = app.add_subcommand("analyze", "Analyze a participant CSV");
    z->add_option("data", an.data, "CSV with id,x1,x2,observed_status[,true_status]")->required();
    z->add_option("--a1", an.a1, "Test 1 threshold")->required();
    z->add_option("--a2", an.a2, "Test 2 threshold")->required();
    z->add_option("--alpha", an.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    z->add_option("--out", an.out, "Output directory");
    z->add_option("--name", an.name, "Output file prefix");
    z->add_option("--corrected-count", an.corrected_count,
                  "Case count for the corrected variance")
        ->check(CLI::IsMember({"observed", "inflated"}));

    DemoArgs demo;
    auto* d = app.add_subcommand("demo", "Oral cancer screening demonstration");
    d->add_option("--out", demo.out, "Output directory");
    d->add_option("--seed", demo.seed, "Seed");
    d->add_option("--reps", demo.reps, "Validation replications")->check(CLI::PositiveNumber);
    d->add_option("--workers", demo.workers, "Worker threads")->check(CLI::PositiveNumber);
    d->add_flag("--no-validation", demo.skip_validation, "Skip the validation simulation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*s) return cmd_simulate(sim);
        if (*z) return cmd_analyze(an);
        return cmd_demo(demo);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
