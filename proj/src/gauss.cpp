#include "pairscreen/gauss.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace pairscreen {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gauss-Legendre abscissae/weights on [-1, 1] (positive half), orders 6, 12, 20.
constexpr std::array<double, 3> kW6 = {0.1713244923791705, 0.3607615730481384,
                                       0.4679139345726904};
constexpr std::array<double, 3> kX6 = {0.9324695142031522, 0.6612093864662647,
                                       0.2386191860831970};
constexpr std::array<double, 6> kW12 = {0.04717533638651177, 0.1069393259953183,
                                        0.1600783285433464,  0.2031674267230659,
                                        0.2334925365383547,  0.2491470458134029};
constexpr std::array<double, 6> kX12 = {0.9815606342467191, 0.9041172563704750,
                                        0.7699026741943050, 0.5873179542866171,
                                        0.3678314989981802, 0.1252334085114692};
constexpr std::array<double, 10> kW20 = {
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
    0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
    0.1491729864726037,  0.1527533871307259};
constexpr std::array<double, 10> kX20 = {
    0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
    0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
    0.2277858511416451, 0.07652652113349733};

// P(X > h, Y > k) for standard bivariate normal (Drezner-Wesolowsky / Genz).
double bvn_upper(double h, double k, double r) {
    std::span<const double> w;
    std::span<const double> x;
    if (std::abs(r) < 0.3) {
        w = kW6;
        x = kX6;
    } else if (std::abs(r) < 0.75) {
        w = kW12;
        x = kX12;
    } else {
        w = kW20;
        x = kX20;
    }

    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r) / 2.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (double sign : {-1.0, 1.0}) {
                const double sn = std::sin(asr * (1.0 + sign * x[i]));
                bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        bvn = bvn * asr / kTwoPi + std_normal_cdf(-h) * std_normal_cdf(-k);
    } else {
        if (r < 0.0) {
            k = -k;
            hk = -hk;
        }
        if (std::abs(r) < 1.0) {
            const double as = 1.0 - r * r;
            double a = std::sqrt(as);
            const double bs = (h - k) * (h - k);
            const double c = (4.0 - hk) / 8.0;
            const double d = (12.0 - hk) / 80.0;
            double asr = -(bs / as + hk) / 2.0;
            if (asr > -100.0) {
                bvn = a * std::exp(asr) *
                      (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
            }
            if (hk > -100.0) {
                const double b = std::sqrt(bs);
                const double sp = std::sqrt(kTwoPi) * std_normal_cdf(-b / a);
                bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            double sum = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                for (double sign : {-1.0, 1.0}) {
                    const double xs = std::pow(a * (1.0 + sign * x[i]), 2);
                    const double asr_i = -(bs / xs + hk) / 2.0;
                    if (asr_i <= -100.0) continue;
                    const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    const double rs = std::sqrt(1.0 - xs);
                    const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
                    sum += w[i] * std::exp(asr_i) * (sp - ep);
                }
            }
            bvn = (a * sum - bvn) / kTwoPi;
        }
        if (r > 0.0) {
            bvn += std_normal_cdf(-std::max(h, k));
        } else if (h >= k) {
            bvn = -bvn;
        } else {
            const double band = h < 0.0 ? std_normal_cdf(k) - std_normal_cdf(h)
                                         : std_normal_cdf(-h) - std_normal_cdf(-k);
            bvn = band - bvn;
        }
    }
    return std::clamp(bvn, 0.0, 1.0);
}

// Orthant probability with at most one finite bound per axis, computed without
// cancellation by reflecting lower bounds.
double orthant_prob(double h1, bool upper1, bool inf1, double h2, bool upper2, bool inf2,
                    double rho) {
    if (inf1 && inf2) return 1.0;
    if (inf1) return std_normal_cdf(upper2 ? h2 : -h2);
    if (inf2) return std_normal_cdf(upper1 ? h1 : -h1);
    const double s1 = upper1 ? 1.0 : -1.0;
    const double s2 = upper2 ? 1.0 : -1.0;
    return bvn_cdf(s1 * h1, s2 * h2, s1 * s2 * rho);
}

}  // namespace

BivNormParams::BivNormParams(double mu1, double mu2, double var1, double var2, double rho)
    : mu1_(mu1), mu2_(mu2), var1_(var1), var2_(var2), rho_(rho) {
    if (!(var1 > 0.0) || !(var2 > 0.0) || !std::isfinite(var1) || !std::isfinite(var2)) {
        throw std::invalid_argument("BivNormParams: variances must be positive and finite");
    }
    if (!(std::abs(rho) < 1.0)) {
        throw std::invalid_argument("BivNormParams: |rho| must be < 1");
    }
    if (!std::isfinite(mu1) || !std::isfinite(mu2)) {
        throw std::invalid_argument("BivNormParams: means must be finite");
    }
}

double BivNormParams::sd1() const { return std::sqrt(var1_); }
double BivNormParams::sd2() const { return std::sqrt(var2_); }

bool Rect::is_orthant() const {
    const bool axis1 = std::isinf(lo1) || std::isinf(hi1);
    const bool axis2 = std::isinf(lo2) || std::isinf(hi2);
    return axis1 && axis2;
}

double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

double std_normal_cdf(double x) {
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("std_normal_quantile: p must lie in (0, 1)");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double bvn_cdf(double x, double y, double rho) {
    if (!(std::abs(rho) < 1.0)) {
        throw std::domain_error("bvn_cdf: |rho| must be < 1");
    }
    if (x == -kInf || y == -kInf) return 0.0;
    if (x == kInf) return std_normal_cdf(y);
    if (y == kInf) return std_normal_cdf(x);
    return bvn_upper(-x, -y, rho);
}

double bvn_std_pdf(double x, double y, double rho) {
    const double u = 1.0 - rho * rho;
    return std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * u)) / (kTwoPi * std::sqrt(u));
}

double rect_log_prob(const BivNormParams& params, const Rect& rect) {
    if (!(rect.lo1 < rect.hi1) || !(rect.lo2 < rect.hi2)) {
        throw std::invalid_argument("rect_log_prob: empty rectangle");
    }
    const double s1 = params.sd1();
    const double s2 = params.sd2();
    const double l1 = (rect.lo1 - params.mu1()) / s1;
    const double u1 = (rect.hi1 - params.mu1()) / s1;
    const double l2 = (rect.lo2 - params.mu2()) / s2;
    const double u2 = (rect.hi2 - params.mu2()) / s2;

    double prob = 0.0;
    if (rect.is_orthant()) {
        const bool inf1 = std::isinf(l1) && std::isinf(u1);
        const bool inf2 = std::isinf(l2) && std::isinf(u2);
        const bool upper1 = std::isinf(l1);
        const bool upper2 = std::isinf(l2);
        prob = orthant_prob(upper1 ? u1 : l1, upper1, inf1, upper2 ? u2 : l2, upper2, inf2,
                            params.rho());
    } else {
        const double r = params.rho();
        prob = bvn_cdf(u1, u2, r) - bvn_cdf(l1, u2, r) - bvn_cdf(u1, l2, r) + bvn_cdf(l1, l2, r);
    }
    if (!(prob > 0.0)) {
        throw DegenerateRegionError("rect_log_prob: region has zero probability mass");
    }
    return std::log(std::min(prob, 1.0));
}

double bvn_log_density(const BivNormParams& params, double x1, double x2) {
    const double z1 = (x1 - params.mu1()) / params.sd1();
    const double z2 = (x2 - params.mu2()) / params.sd2();
    const double r = params.rho();
    const double u = 1.0 - r * r;
    return -std::log(kTwoPi * params.sd1() * params.sd2() * std::sqrt(u)) -
           (z1 * z1 - 2.0 * r * z1 * z2 + z2 * z2) / (2.0 * u);
}

double full_bvn_loglik(const BivNormParams& params, std::span<const ScorePair> data) {
    if (data.empty()) throw std::invalid_argument("full_bvn_loglik: empty data");
    double sum = 0.0;
    for (const auto& p : data) sum += bvn_log_density(params, p.x1, p.x2);
    return sum;
}

double truncated_bvn_loglik(const BivNormParams& params, std::span<const ScorePair> data,
                            const Rect& rect) {
    if (data.empty()) throw std::invalid_argument("truncated_bvn_loglik: empty data");
    for (const auto& p : data) {
        if (!rect.contains(p)) {
            throw std::invalid_argument("truncated_bvn_loglik: point outside truncation region");
        }
    }
    const double full = full_bvn_loglik(params, data);
    if (std::isinf(rect.lo1) && std::isinf(rect.hi1) && std::isinf(rect.lo2) &&
        std::isinf(rect.hi2)) {
        return full;
    }
    return full - static_cast<double>(data.size()) * rect_log_prob(params, rect);
}

}  // namespace pairscreen
