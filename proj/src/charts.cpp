#include "pairscreen/charts.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>

namespace pairscreen {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string label(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    if (!(span > 0.0)) return {lo};
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
        out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    }
    return out;
}

constexpr std::array<const char*, 3> kAnalysisColors{"#2ca02c", "#d62728", "#1f77b4"};

}  // namespace

std::string render_svg(const Chart& c) {
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    const double xspan = c.x_max > c.x_min ? c.x_max - c.x_min : 1.0;
    const double yspan = c.y_max > c.y_min ? c.y_max - c.y_min : 1.0;
    auto sx = [&](double x) { return kLeft + (x - c.x_min) / xspan * pw; };
    auto sy = [&](double y) { return kTop + ph - (y - c.y_min) / yspan * ph; };

    std::ostringstream o;
    o.precision(6);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(c.title) << "</text>\n";

    // Axes, grid and tick labels.
    o << "<g stroke=\"#ddd\">\n";
    std::vector<std::pair<double, std::string>> xt;
    if (!c.x_categories.empty()) {
        for (std::size_t i = 0; i < c.x_categories.size(); ++i) {
            xt.emplace_back(static_cast<double>(i), c.x_categories[i]);
        }
    } else {
        for (double t : ticks(c.x_min, c.x_max)) xt.emplace_back(t, label(t));
    }
    const auto yt = ticks(c.y_min, c.y_max);
    for (const auto& [x, _] : xt) {
        o << "<line x1=\"" << sx(x) << "\" y1=\"" << kTop << "\" x2=\"" << sx(x) << "\" y2=\""
          << kTop + ph << "\"/>\n";
    }
    for (double y : yt) {
        o << "<line x1=\"" << kLeft << "\" y1=\"" << sy(y) << "\" x2=\"" << kLeft + pw
          << "\" y2=\"" << sy(y) << "\"/>\n";
    }
    o << "</g>\n";
    o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (const auto& [x, text] : xt) {
        o << "<text x=\"" << sx(x) << "\" y=\"" << kTop + ph + 16
          << "\" text-anchor=\"middle\">" << escape(text) << "</text>\n";
    }
    for (double y : yt) {
        o << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">"
          << label(y) << "</text>\n";
    }
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\">" << escape(c.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << kTop + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(c.y_label) << "</text>\n";

    if (c.diagonal) {
        o << "<line x1=\"" << sx(c.x_min) << "\" y1=\"" << sy(c.y_min) << "\" x2=\"" << sx(c.x_max)
          << "\" y2=\"" << sy(c.y_max) << "\" stroke=\"#999\" stroke-dasharray=\"2,3\"/>\n";
    }

    for (std::size_t k = 0; k < c.series.size(); ++k) {
        const auto& s = c.series[k];
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
        if (!s.dash.empty()) o << " stroke-dasharray=\"" << s.dash << '"';
        o << " points=\"";
        const std::size_t n = std::min(s.x.size(), s.y.size());
        for (std::size_t i = 0; i < n; ++i) o << (i ? " " : "") << sx(s.x[i]) << ',' << sy(s.y[i]);
        o << "\"/>\n";
        if (s.markers) {
            for (std::size_t i = 0; i < n; ++i) {
                o << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i])
                  << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
            }
        }
        const double ly = kTop + 10 + 18 * static_cast<double>(k);
        const double lx = kLeft + pw + 12;
        o << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 24 << "\" y2=\"" << ly
          << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
        if (!s.dash.empty()) o << " stroke-dasharray=\"" << s.dash << '"';
        o << "/>\n<text x=\"" << lx + 30 << "\" y=\"" << ly + 4 << "\">" << escape(s.label)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

Chart roc_chart(const std::vector<AnalysisResult>& results, const std::string& title) {
    Chart c;
    c.title = title;
    c.x_label = "1 - specificity";
    c.y_label = "Sensitivity";
    c.diagonal = true;
    for (const auto& r : results) {
        const auto color = kAnalysisColors[static_cast<std::size_t>(r.kind)];
        for (int t = 1; t <= 2; ++t) {
            const auto& p = t == 1 ? r.test1 : r.test2;
            if (!(p.cases.var > 0.0 && p.non_cases.var > 0.0)) continue;
            ChartSeries s;
            s.label = to_string(r.kind) + " test " + std::to_string(t) + " (" +
                      label(t == 1 ? r.auc1 : r.auc2) + ")";
            s.color = color;
            if (t == 2) s.dash = "6,4";
            s.x.push_back(0.0);
            s.y.push_back(0.0);
            for (const auto& pt : binormal_roc_curve(p.cases, p.non_cases)) {
                s.x.push_back(pt.fpr);
                s.y.push_back(pt.tpr);
            }
            s.x.push_back(1.0);
            s.y.push_back(1.0);
            c.series.push_back(std::move(s));
        }
    }
    return c;
}

std::vector<NamedChart> grid_charts(const FactorGrid& grid,
                                    const std::vector<ScenarioMetrics>& metrics) {
    auto pct = [](double t) { return label(100.0 * t); };
    struct Factor {
        std::string name;
        std::vector<std::string> labels;
    };
    std::vector<Factor> factors(5);
    factors[0].name = "Disease prevalence";
    for (double v : grid.prevalence) factors[0].labels.push_back(label(v));
    factors[1].name = "Rate of signs and symptoms";
    for (double v : grid.signs_rate) factors[1].labels.push_back(label(v));
    factors[2].name = "Percent ascertainment (test 1 / test 2)";
    for (const auto& a : grid.ascertainment) factors[2].labels.push_back(pct(a.t1) + "/" + pct(a.t2));
    factors[3].name = "Correlation (non-cases / cases)";
    for (const auto& [r0, r1] : grid.correlations) {
        factors[3].labels.push_back(label(r0) + "/" + label(r1));
    }
    factors[4].name = "Score transform";
    for (const auto& t : grid.transforms) factors[4].labels.push_back(describe(t));

    std::array<std::size_t, 5> len{};
    for (std::size_t f = 0; f < 5; ++f) len[f] = std::max<std::size_t>(factors[f].labels.size(), 1);
    const auto xf = std::find_if(factors.begin(), factors.end(),
                                 [](const Factor& f) { return f.labels.size() > 1; });
    if (xf == factors.end() || metrics.size() != grid.size()) return {};
    const auto xi = static_cast<std::size_t>(xf - factors.begin());

    // Decompose the flat cell index (prevalence outermost, transform innermost).
    auto digits = [&](std::size_t idx) {
        std::array<std::size_t, 5> d{};
        for (std::size_t f = 5; f-- > 0;) {
            d[f] = idx % len[f];
            idx /= len[f];
        }
        return d;
    };
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::array<std::size_t, 5>> group_keys;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        auto key = digits(i);
        key[xi] = 0;
        auto it = std::find(group_keys.begin(), group_keys.end(), key);
        if (it == group_keys.end()) {
            group_keys.push_back(key);
            groups.emplace_back();
            it = group_keys.end() - 1;
        }
        groups[static_cast<std::size_t>(it - group_keys.begin())].push_back(i);
    }

    struct Metric {
        const char* stem;
        const char* title;
        std::function<std::optional<double>(const AnalysisMetrics&)> get;
    };
    const std::array<Metric, 3> kinds{{
        {"rejection", "Rejection rate", [](const AnalysisMetrics& a) -> std::optional<double> {
             return a.rejection_rate;
         }},
        {"crf", "Correct rejection fraction", [](const AnalysisMetrics& a) { return a.crf; }},
        {"wrf", "Wrong rejection fraction", [](const AnalysisMetrics& a) { return a.wrf; }},
    }};

    std::vector<NamedChart> out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::string context;
        for (std::size_t f = 0; f < 5; ++f) {
            if (f == xi || factors[f].labels.size() < 2) continue;
            context += (context.empty() ? "" : ", ") + factors[f].name + " " +
                       factors[f].labels[group_keys[g][f]];
        }
        const bool null = std::all_of(groups[g].begin(), groups[g].end(),
                                      [&](std::size_t i) { return metrics[i].null_holds(); });
        for (const auto& m : kinds) {
            Chart c;
            c.title = std::string(m.title) + (context.empty() ? "" : " (" + context + ")");
            if (std::string(m.stem) == "rejection") c.y_label = null ? "Type I error" : "Power";
            else c.y_label = m.title;
            c.x_label = factors[xi].name;
            c.x_categories = factors[xi].labels;
            c.x_max = static_cast<double>(c.x_categories.size() - 1);
            if (c.x_max == 0.0) c.x_max = 1.0;
            for (auto kind : {AnalysisKind::truth, AnalysisKind::observed, AnalysisKind::corrected}) {
                ChartSeries s;
                s.label = to_string(kind);
                s.color = kAnalysisColors[static_cast<std::size_t>(kind)];
                s.markers = true;
                for (std::size_t i : groups[g]) {
                    const auto v = m.get(metrics[i][kind]);
                    if (!v) continue;
                    s.x.push_back(static_cast<double>(digits(i)[xi]));
                    s.y.push_back(*v);
                }
                if (!s.x.empty()) c.series.push_back(std::move(s));
            }
            if (c.series.empty()) continue;
            out.push_back({grid.name + "_" + m.stem + "_" + std::to_string(g), render_svg(c)});
        }
    }
    return out;
}

}  // namespace pairscreen
