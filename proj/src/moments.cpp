#include "pairscreen/moments.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pairscreen {

ScoreMoments::ScoreMoments(std::span<const ScorePair> points) {
    for (const auto& p : points) add(p);
}

void ScoreMoments::add(double x1, double x2) {
    ++n_;
    const double n = static_cast<double>(n_);
    const double d1 = x1 - mean1_;
    const double d2 = x2 - mean2_;
    mean1_ += d1 / n;
    mean2_ += d2 / n;
    m11_ += d1 * (x1 - mean1_);
    m22_ += d2 * (x2 - mean2_);
    m12_ += d1 * (x2 - mean2_);
}

void ScoreMoments::merge(const ScoreMoments& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double n = na + nb;
    const double d1 = other.mean1_ - mean1_;
    const double d2 = other.mean2_ - mean2_;
    m11_ += other.m11_ + d1 * d1 * na * nb / n;
    m22_ += other.m22_ + d2 * d2 * na * nb / n;
    m12_ += other.m12_ + d1 * d2 * na * nb / n;
    mean1_ += d1 * nb / n;
    mean2_ += d2 * nb / n;
    n_ += other.n_;
}

ScoreMoments ScoreMoments::from_summary(std::size_t n, double mean1, double mean2,
                                        double scatter11, double scatter22, double scatter12) {
    ScoreMoments m;
    m.n_ = n;
    m.mean1_ = mean1;
    m.mean2_ = mean2;
    m.m11_ = scatter11;
    m.m22_ = scatter22;
    m.m12_ = scatter12;
    return m;
}

double ScoreMoments::var1(int ddof) const {
    if (n_ <= static_cast<std::size_t>(ddof)) throw std::domain_error("var1: too few points");
    return m11_ / static_cast<double>(n_ - ddof);
}

double ScoreMoments::var2(int ddof) const {
    if (n_ <= static_cast<std::size_t>(ddof)) throw std::domain_error("var2: too few points");
    return m22_ / static_cast<double>(n_ - ddof);
}

double ScoreMoments::cov(int ddof) const {
    if (n_ <= static_cast<std::size_t>(ddof)) throw std::domain_error("cov: too few points");
    return m12_ / static_cast<double>(n_ - ddof);
}

double ScoreMoments::corr() const {
    if (!(m11_ > 0.0) || !(m22_ > 0.0)) return 0.0;
    return m12_ / std::sqrt(m11_ * m22_);
}

double full_bvn_loglik(const BivNormParams& params, const ScoreMoments& m) {
    if (m.count() == 0) throw std::invalid_argument("full_bvn_loglik: empty data");
    const double n = static_cast<double>(m.count());
    const double s1 = params.sd1();
    const double s2 = params.sd2();
    const double r = params.rho();
    const double u = 1.0 - r * r;
    const double d1 = m.mean1() - params.mu1();
    const double d2 = m.mean2() - params.mu2();
    const double a = (m.scatter11() + n * d1 * d1) / (s1 * s1);
    const double b = (m.scatter22() + n * d2 * d2) / (s2 * s2);
    const double c = (m.scatter12() + n * d1 * d2) / (s1 * s2);
    return -n * std::log(2.0 * std::numbers::pi * s1 * s2 * std::sqrt(u)) -
           (a - 2.0 * r * c + b) / (2.0 * u);
}

}  // namespace pairscreen
