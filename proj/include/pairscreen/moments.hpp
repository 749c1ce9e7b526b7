#pragma once

#include <cstddef>
#include <span>

#include "pairscreen/gauss.hpp"

namespace pairscreen {

/// Streaming bivariate moments (Welford updates, Chan merges). Holds the
/// sufficient statistics of a bivariate normal sample.
class ScoreMoments {
public:
    ScoreMoments() = default;
    explicit ScoreMoments(std::span<const ScorePair> points);

    void add(double x1, double x2);
    void add(const ScorePair& p) { add(p.x1, p.x2); }
    void merge(const ScoreMoments& other);

    /// Builds moments directly from summary values (scatter = sums of centered
    /// squares/cross-products).
    static ScoreMoments from_summary(std::size_t n, double mean1, double mean2, double scatter11,
                                     double scatter22, double scatter12);

    std::size_t count() const { return n_; }
    double mean1() const { return mean1_; }
    double mean2() const { return mean2_; }
    double scatter11() const { return m11_; }
    double scatter22() const { return m22_; }
    double scatter12() const { return m12_; }

    /// Variance with denominator n - ddof.
    double var1(int ddof = 1) const;
    double var2(int ddof = 1) const;
    double cov(int ddof = 1) const;
    /// Pearson correlation; 0 when either variance is 0.
    double corr() const;

private:
    std::size_t n_ = 0;
    double mean1_ = 0.0;
    double mean2_ = 0.0;
    double m11_ = 0.0;
    double m22_ = 0.0;
    double m12_ = 0.0;
};

inline ScoreMoments merged(ScoreMoments a, const ScoreMoments& b) {
    a.merge(b);
    return a;
}

/// Full (untruncated) bivariate normal log-likelihood from sufficient statistics.
double full_bvn_loglik(const BivNormParams& params, const ScoreMoments& m);

}  // namespace pairscreen
