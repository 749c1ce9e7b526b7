#include "pairscreen/correction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace pairscreen {

namespace {

using Vec5 = std::array<double, 5>;
using Mat5 = std::array<std::array<double, 5>, 5>;

// Search box in standardized coordinates (start means at 0, start SDs at 1).
constexpr double kMeanBound = 50.0;
constexpr double kLogSdBound = 7.0;
constexpr double kAtanhRhoBound = 7.3;
constexpr double kStartRhoClamp = 1.0 - 1e-6;
// Iterates past these limits are running off along an unbounded ridge of the
// truncated likelihood (typical for small corner samples); give up early.
constexpr double kEscapeMean = 20.0;
constexpr double kEscapeLogSd = 4.0;
// Gradient of the per-point objective in standardized coordinates.
constexpr double kGradTol = 1e-8;

enum class AxisKind { free, upper, lower };

struct Axis {
    AxisKind kind = AxisKind::free;
    double bound = 0.0;
};

Axis make_axis(double lo, double hi) {
    const bool lo_inf = std::isinf(lo);
    const bool hi_inf = std::isinf(hi);
    if (lo_inf && hi_inf) return {};
    if (lo_inf) return {AxisKind::upper, hi};
    return {AxisKind::lower, lo};
}

// Negative mean log-likelihood of a truncated bivariate normal, in standardized
// data coordinates, as a function of (mu1, mu2, log sd1, log sd2, atanh rho).
class TruncatedObjective {
public:
    TruncatedObjective(const ScoreMoments& m, Axis ax1, Axis ax2)
        : n_(static_cast<double>(m.count())),
          mean1_(m.mean1()),
          mean2_(m.mean2()),
          s11_(m.scatter11()),
          s22_(m.scatter22()),
          s12_(m.scatter12()),
          ax1_(ax1),
          ax2_(ax2) {}

    static bool in_box(const Vec5& th) {
        return std::abs(th[0]) <= kMeanBound && std::abs(th[1]) <= kMeanBound &&
               std::abs(th[2]) <= kLogSdBound && std::abs(th[3]) <= kLogSdBound &&
               std::abs(th[4]) <= kAtanhRhoBound;
    }

    /// Returns +inf when the truncation region has no usable mass.
    double operator()(const Vec5& th, Vec5& grad) const {
        const double sd1 = std::exp(th[2]);
        const double sd2 = std::exp(th[3]);
        const double rho = std::tanh(th[4]);
        const double u = 1.0 - rho * rho;
        const double d1 = mean1_ - th[0];
        const double d2 = mean2_ - th[1];
        const double a = (s11_ + n_ * d1 * d1) / (sd1 * sd1);
        const double b = (s22_ + n_ * d2 * d2) / (sd2 * sd2);
        const double c = (s12_ + n_ * d1 * d2) / (sd1 * sd2);

        double ll = -n_ * (std::log(2.0 * std::numbers::pi) + th[2] + th[3] + 0.5 * std::log(u)) -
                    (a - 2.0 * rho * c + b) / (2.0 * u);
        Vec5 g{};
        g[0] = (n_ * d1 / (sd1 * sd1) - rho * n_ * d2 / (sd1 * sd2)) / u;
        g[1] = (n_ * d2 / (sd2 * sd2) - rho * n_ * d1 / (sd1 * sd2)) / u;
        g[2] = -n_ + (a - rho * c) / u;
        g[3] = -n_ + (b - rho * c) / u;
        const double drho = n_ * rho / u + c / u - rho * (a + b - 2.0 * rho * c) / (u * u);
        g[4] = drho * u;

        // Normalizer: P(rect) as an orthant probability in reflected coordinates.
        const bool f1 = ax1_.kind == AxisKind::free;
        const bool f2 = ax2_.kind == AxisKind::free;
        if (!f1 || !f2) {
            const double sg1 = ax1_.kind == AxisKind::lower ? -1.0 : 1.0;
            const double sg2 = ax2_.kind == AxisKind::lower ? -1.0 : 1.0;
            const double h1 = f1 ? 0.0 : sg1 * (ax1_.bound - th[0]) / sd1;
            const double h2 = f2 ? 0.0 : sg2 * (ax2_.bound - th[1]) / sd2;
            double prob = 0.0;
            double dp_dh1 = 0.0;
            double dp_dh2 = 0.0;
            double dp_dr = 0.0;
            if (f1) {
                prob = std_normal_cdf(h2);
                dp_dh2 = std_normal_pdf(h2);
            } else if (f2) {
                prob = std_normal_cdf(h1);
                dp_dh1 = std_normal_pdf(h1);
            } else {
                const double r = sg1 * sg2 * rho;
                const double sr = std::sqrt(1.0 - r * r);
                prob = bvn_cdf(h1, h2, r);
                dp_dh1 = std_normal_pdf(h1) * std_normal_cdf((h2 - r * h1) / sr);
                dp_dh2 = std_normal_pdf(h2) * std_normal_cdf((h1 - r * h2) / sr);
                dp_dr = bvn_std_pdf(h1, h2, r);
            }
            if (!(prob > 1e-300) || !std::isfinite(prob)) return kInf;
            ll -= n_ * std::log(prob);
            const double k = n_ / prob;
            g[0] -= k * dp_dh1 * (-sg1 / sd1);
            g[2] -= k * dp_dh1 * (-h1);
            g[1] -= k * dp_dh2 * (-sg2 / sd2);
            g[3] -= k * dp_dh2 * (-h2);
            g[4] -= k * dp_dr * sg1 * sg2 * u;
        }
        if (!std::isfinite(ll)) return kInf;
        for (std::size_t i = 0; i < 5; ++i) grad[i] = -g[i] / n_;
        return -ll / n_;
    }

private:
    double n_;
    double mean1_;
    double mean2_;
    double s11_;
    double s22_;
    double s12_;
    Axis ax1_;
    Axis ax2_;
};

double dot(const Vec5& a, const Vec5& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) s += a[i] * b[i];
    return s;
}

double max_abs(const Vec5& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

Mat5 identity() {
    Mat5 m{};
    for (std::size_t i = 0; i < 5; ++i) m[i][i] = 1.0;
    return m;
}

Vec5 times(const Mat5& m, const Vec5& v) {
    Vec5 r{};
    for (std::size_t i = 0; i < 5; ++i) r[i] = dot(m[i], v);
    return r;
}

// Inverse-Hessian BFGS update.
void bfgs_update(Mat5& h, const Vec5& s, const Vec5& y) {
    const double sy = dot(s, y);
    const Vec5 hy = times(h, y);
    const double yhy = dot(y, hy);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            h[i][j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
        }
    }
}

ScoreMoments standardize(const ScoreMoments& m, const BivNormParams& start) {
    const double s1 = start.sd1();
    const double s2 = start.sd2();
    return ScoreMoments::from_summary(m.count(), (m.mean1() - start.mu1()) / s1,
                                      (m.mean2() - start.mu2()) / s2, m.scatter11() / (s1 * s1),
                                      m.scatter22() / (s2 * s2), m.scatter12() / (s1 * s2));
}

}  // namespace

Rect quadrant_rect(int quadrant, const Thresholds& th) {
    switch (quadrant) {
        case 1: return {th.a1, kInf, th.a2, kInf};
        case 2: return {th.a1, kInf, -kInf, th.a2};
        case 3: return {-kInf, th.a1, th.a2, kInf};
        case 4: return {-kInf, th.a1, -kInf, th.a2};
        default: throw std::invalid_argument("quadrant must be in 1..4");
    }
}

int quadrant_of(const ScorePair& p, const Thresholds& th) {
    const bool above1 = p.x1 >= th.a1;
    const bool above2 = p.x2 >= th.a2;
    if (above1 && above2) return 1;
    if (above1) return 2;
    if (above2) return 3;
    return 4;
}

std::vector<ScorePair> CasePartition::observed_cases() const {
    std::vector<ScorePair> all = set_a;
    all.insert(all.end(), set_b.begin(), set_b.end());
    return all;
}

namespace {

CasePartition make_partition(const Thresholds& th, std::vector<ScorePair> set_a,
                             std::vector<ScorePair> set_b) {
    if (set_a.empty() && set_b.empty()) throw CorrectionUnavailable("no observed cases");
    CasePartition part;
    part.thresholds = th;
    for (const auto& p : set_a) {
        const int q = quadrant_of(p, th);
        if (q == 4) {
            throw std::invalid_argument("screen-detected case below both thresholds");
        }
        part.quadrants[q - 1].push_back(p);
    }
    for (const auto& p : set_b) {
        if (quadrant_of(p, th) != 4) {
            throw std::invalid_argument("interval case at or above a threshold");
        }
    }
    part.quadrants[3] = set_b;
    part.set_a = std::move(set_a);
    part.set_b = std::move(set_b);
    return part;
}

}  // namespace

CasePartition partition_cases(const TrialDataset& data) {
    std::vector<ScorePair> set_a;
    std::vector<ScorePair> set_b;
    for (const auto& r : data.records) {
        if (r.case_class == CaseClass::screen_detected) set_a.push_back({r.x1, r.x2});
        if (r.case_class == CaseClass::interval) set_b.push_back({r.x1, r.x2});
    }
    return make_partition(data.thresholds, std::move(set_a), std::move(set_b));
}

CasePartition partition_cases(const TrialSummary& summary) {
    return make_partition(summary.thresholds, summary.screen_points, summary.interval_points);
}

BivNormParams SampleStats::start_params() const {
    if (degenerate) throw std::invalid_argument("degenerate sample statistics");
    return {mean1, mean2, sd1 * sd1, sd2 * sd2,
            std::clamp(corr, -kStartRhoClamp, kStartRhoClamp)};
}

std::optional<SampleStats> quadrant_sample_stats(const ScoreMoments& m) {
    if (m.count() < 2) return std::nullopt;
    SampleStats s;
    s.mean1 = m.mean1();
    s.mean2 = m.mean2();
    s.sd1 = std::sqrt(m.var1());
    s.sd2 = std::sqrt(m.var2());
    s.degenerate = !(s.sd1 > 0.0) || !(s.sd2 > 0.0);
    s.corr = s.degenerate ? 0.0 : std::clamp(m.corr(), -1.0, 1.0);
    return s;
}

std::optional<SampleStats> quadrant_sample_stats(std::span<const ScorePair> points) {
    return quadrant_sample_stats(ScoreMoments(points));
}

QuadrantFit nath_mle(std::span<const ScorePair> points, const Rect& rect,
                     const BivNormParams& start, const NathOptions& opts) {
    for (const auto& p : points) {
        if (!rect.contains(p)) throw std::invalid_argument("nath_mle: point outside region");
    }
    return nath_mle(ScoreMoments(points), rect, start, opts);
}

QuadrantFit nath_mle(const ScoreMoments& moments, const Rect& rect, const BivNormParams& start,
                     const NathOptions& opts) {
    if (moments.count() < 2) throw std::invalid_argument("nath_mle: need at least 2 points");
    if (!rect.is_orthant()) throw std::invalid_argument("nath_mle: region must be an orthant");

    const double s1 = start.sd1();
    const double s2 = start.sd2();
    const Rect std_rect{(rect.lo1 - start.mu1()) / s1, (rect.hi1 - start.mu1()) / s1,
                        (rect.lo2 - start.mu2()) / s2, (rect.hi2 - start.mu2()) / s2};
    const TruncatedObjective objective(standardize(moments, start),
                                       make_axis(std_rect.lo1, std_rect.hi1),
                                       make_axis(std_rect.lo2, std_rect.hi2));
    const double n = static_cast<double>(moments.count());
    const double log_jacobian = n * (std::log(s1) + std::log(s2));
    auto to_loglik = [&](double f) { return -n * f - log_jacobian; };

    Vec5 theta{0.0, 0.0, 0.0, 0.0, std::atanh(start.rho())};
    Vec5 grad{};
    double f = objective(theta, grad);
    if (!std::isfinite(f)) {
        throw DegenerateRegionError("nath_mle: start values put no mass on the region");
    }

    QuadrantFit fit;
    fit.n_points = moments.count();
    if (opts.record_trace) fit.trace.push_back(to_loglik(f));

    Mat5 hinv = identity();
    bool fresh = true;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        if (max_abs(grad) < 1e-10) {
            fit.converged = true;
            break;
        }
        Vec5 dir = times(hinv, grad);
        for (double& d : dir) d = -d;
        double slope = dot(grad, dir);
        if (!(slope < 0.0)) {
            hinv = identity();
            fresh = true;
            dir = grad;
            for (double& d : dir) d = -d;
            slope = dot(grad, dir);
        }
        double step = std::min(1.0, 2.0 / std::max(max_abs(dir), 1e-300));

        Vec5 next{};
        Vec5 next_grad{};
        double next_f = kInf;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            for (std::size_t i = 0; i < 5; ++i) next[i] = theta[i] + step * dir[i];
            if (!TruncatedObjective::in_box(next)) continue;
            next_f = objective(next, next_grad);
            if (next_f <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!fresh) {
                hinv = identity();
                fresh = true;
                continue;
            }
            // No descent along the gradient within the box: stationary to
            // working precision, or pinned at the box boundary.
            fit.converged = max_abs(grad) < 1e-5;
            break;
        }

        Vec5 s{};
        Vec5 y{};
        for (std::size_t i = 0; i < 5; ++i) {
            s[i] = next[i] - theta[i];
            y[i] = next_grad[i] - grad[i];
        }
        if (dot(s, y) > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            bfgs_update(hinv, s, y);
            fresh = false;
        }

        const double ll_old = to_loglik(f);
        const double ll_new = to_loglik(next_f);
        theta = next;
        grad = next_grad;
        f = next_f;
        if (opts.record_trace) fit.trace.push_back(ll_new);
        if (std::abs(theta[0]) > kEscapeMean || std::abs(theta[1]) > kEscapeMean ||
            std::abs(theta[2]) > kEscapeLogSd || std::abs(theta[3]) > kEscapeLogSd) {
            ++iter;
            break;
        }
        if (std::abs(ll_new - ll_old) < opts.rel_tol * std::max(std::abs(ll_old), 1.0) &&
            max_abs(grad) < kGradTol) {
            fit.converged = true;
            ++iter;
            break;
        }
    }

    fit.iterations = iter;
    fit.params = BivNormParams(start.mu1() + s1 * theta[0], start.mu2() + s2 * theta[1],
                               std::pow(s1 * std::exp(theta[2]), 2),
                               std::pow(s2 * std::exp(theta[3]), 2), std::tanh(theta[4]));
    fit.truncated_loglik = to_loglik(f);
    return fit;
}

std::size_t select_best_fit(std::span<QuadrantFit> fits, const ScoreMoments& observed_cases) {
    if (fits.empty()) throw CorrectionUnavailable("no eligible quadrant fit");
    const bool any_converged =
        std::any_of(fits.begin(), fits.end(), [](const QuadrantFit& f) { return f.converged; });
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        fits[i].full_loglik = full_bvn_loglik(fits[i].params, observed_cases);
        if (any_converged && !fits[i].converged) continue;
        if (!best || fits[i].full_loglik > fits[*best].full_loglik ||
            (fits[i].full_loglik == fits[*best].full_loglik &&
             fits[i].quadrant < fits[*best].quadrant)) {
            best = i;
        }
    }
    return *best;
}

std::size_t select_best_fit(std::span<QuadrantFit> fits,
                            std::span<const ScorePair> observed_cases) {
    return select_best_fit(fits, ScoreMoments(observed_cases));
}

double lambda_hat(const BivNormParams& nath, double a1, double a2) {
    const double h1 = (a1 - nath.mu1()) / nath.sd1();
    const double h2 = (a2 - nath.mu2()) / nath.sd2();
    return std::clamp(1.0 - bvn_cdf(h1, h2, nath.rho()), 0.0, 1.0);
}

WeightedMoments weighted_moments(const ScoreMoments& set_a, const ScoreMoments& set_b,
                                 double lambda) {
    const double la = lambda;
    const double lb = 1.0 - lambda;
    WeightedMoments w;
    w.g1 = la * (set_a.mean1() * set_a.mean1() + set_a.var1(0));
    w.g2 = la * (set_a.mean2() * set_a.mean2() + set_a.var2(0));
    w.h1 = lb * (set_b.mean1() * set_b.mean1() + set_b.var1(0));
    w.h2 = lb * (set_b.mean2() * set_b.mean2() + set_b.var2(0));
    w.p = la * (set_a.mean1() * set_a.mean2() + set_a.cov(0));
    w.q = lb * (set_b.mean1() * set_b.mean2() + set_b.cov(0));
    return w;
}

CorrectedParams weighted_correction(const ScoreMoments& set_a, const ScoreMoments& set_b,
                                    const BivNormParams& nath, double lambda) {
    CorrectedParams out;
    out.lambda_hat = lambda;
    out.nath = nath;
    out.weighted = nath;
    if (set_a.count() < 2 || set_b.count() < 2) {
        out.warnings.push_back(
            "weighting skipped: set A or set B has fewer than 2 cases; using Nath estimates");
        return out;
    }
    const double la = lambda;
    const double lb = 1.0 - lambda;
    const double mu1 = la * set_a.mean1() + lb * set_b.mean1();
    const double mu2 = la * set_a.mean2() + lb * set_b.mean2();
    // Mixture variance G + H - mu^2, written as within + between parts.
    const double dm1 = set_a.mean1() - set_b.mean1();
    const double dm2 = set_a.mean2() - set_b.mean2();
    const double var1 = la * set_a.var1(0) + lb * set_b.var1(0) + la * lb * dm1 * dm1;
    const double var2 = la * set_a.var2(0) + lb * set_b.var2(0) + la * lb * dm2 * dm2;
    const double cov = la * set_a.cov(0) + lb * set_b.cov(0) + la * lb * dm1 * dm2;
    if (!(var1 > 0.0) || !(var2 > 0.0)) {
        out.warnings.push_back("weighted variance not positive; using Nath estimates");
        return out;
    }
    double rho = cov / std::sqrt(var1 * var2);
    constexpr double kRhoClamp = 1.0 - 1e-9;
    if (std::abs(rho) > kRhoClamp) {
        out.warnings.push_back("weighted correlation clamped into (-1, 1)");
        rho = std::clamp(rho, -kRhoClamp, kRhoClamp);
    }
    out.weighted = BivNormParams(mu1, mu2, var1, var2, rho);
    out.weighting_applied = true;
    return out;
}

CorrectedParams weighted_correction(const CasePartition& partition, const BivNormParams& nath,
                                    double lambda) {
    return weighted_correction(ScoreMoments(partition.set_a), ScoreMoments(partition.set_b), nath,
                               lambda);
}

CorrectedParams correct_case_distribution(const CasePartition& partition) {
    std::vector<std::string> warnings;
    const std::size_t observed = partition.set_a.size() + partition.set_b.size();
    if (observed < 500) {
        warnings.push_back("small sample: fewer than 500 observed cases (" +
                           std::to_string(observed) + ")");
    }
    if (partition.set_b.size() < 5) {
        warnings.push_back("small sample: fewer than 5 interval cases (" +
                           std::to_string(partition.set_b.size()) + ")");
    }

    std::vector<QuadrantFit> fits;
    for (int l = 1; l <= 4; ++l) {
        const auto& pts = partition.quadrant(l);
        const auto stats = quadrant_sample_stats(pts);
        if (!stats) continue;
        if (stats->degenerate) {
            warnings.push_back("quadrant " + std::to_string(l) +
                               " skipped: zero sample variance in start values");
            continue;
        }
        try {
            auto fit =
                nath_mle(ScoreMoments(pts), quadrant_rect(l, partition.thresholds),
                         stats->start_params());
            fit.quadrant = l;
            fits.push_back(std::move(fit));
        } catch (const DegenerateRegionError&) {
            warnings.push_back("quadrant " + std::to_string(l) + " skipped: degenerate region");
        }
    }
    if (fits.empty()) {
        throw CorrectionUnavailable("no quadrant has two or more usable observed cases");
    }

    const ScoreMoments set_a(partition.set_a);
    const ScoreMoments set_b(partition.set_b);
    const std::size_t best = select_best_fit(fits, merged(set_a, set_b));
    if (!fits[best].converged) {
        warnings.push_back("no quadrant fit converged; using best-effort fit from quadrant " +
                           std::to_string(fits[best].quadrant));
    }
    const BivNormParams nath = fits[best].params;
    const double lambda = lambda_hat(nath, partition.thresholds.a1, partition.thresholds.a2);

    CorrectedParams out = weighted_correction(set_a, set_b, nath, lambda);
    out.selected_quadrant = fits[best].quadrant;
    out.fits = std::move(fits);
    warnings.insert(warnings.end(), out.warnings.begin(), out.warnings.end());
    out.warnings = std::move(warnings);
    return out;
}

CorrectedParams correct_case_distribution(const TrialDataset& data) {
    return correct_case_distribution(partition_cases(data));
}

CorrectedParams correct_case_distribution(const TrialSummary& summary) {
    return correct_case_distribution(partition_cases(summary));
}

}  // namespace pairscreen
