#pragma once

// Univariate and bivariate Gaussian kernels used throughout the library.

#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace pairscreen {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScorePair {
    double x1 = 0.0;
    double x2 = 0.0;
};

/// Parameters of one class-conditional bivariate normal score distribution.
/// Construction validates var1 > 0, var2 > 0 and |rho| < 1.
class BivNormParams {
public:
    BivNormParams() = default;
    BivNormParams(double mu1, double mu2, double var1, double var2, double rho);

    double mu1() const { return mu1_; }
    double mu2() const { return mu2_; }
    double var1() const { return var1_; }
    double var2() const { return var2_; }
    double sd1() const;
    double sd2() const;
    double rho() const { return rho_; }

    static BivNormParams standard(double rho = 0.0) { return {0.0, 0.0, 1.0, 1.0, rho}; }

    friend bool operator==(const BivNormParams&, const BivNormParams&) = default;

private:
    double mu1_ = 0.0;
    double mu2_ = 0.0;
    double var1_ = 1.0;
    double var2_ = 1.0;
    double rho_ = 0.0;
};

/// Axis-aligned rectangle [lo1, hi1) x [lo2, hi2); bounds may be +-kInf.
struct Rect {
    double lo1 = -kInf;
    double hi1 = kInf;
    double lo2 = -kInf;
    double hi2 = kInf;

    static Rect plane() { return {}; }
    bool contains(double x1, double x2) const {
        return x1 >= lo1 && x1 < hi1 && x2 >= lo2 && x2 < hi2;
    }
    bool contains(const ScorePair& p) const { return contains(p.x1, p.x2); }
    /// At most one finite bound per axis (plane, half-planes, quadrants).
    bool is_orthant() const;
};

/// Raised when a region carries no probability mass under the given parameters.
class DegenerateRegionError : public std::runtime_error {
public:
    explicit DegenerateRegionError(const std::string& what) : std::runtime_error(what) {}
};

double std_normal_pdf(double x);
double std_normal_cdf(double x);
/// Throws std::domain_error unless 0 < p < 1.
double std_normal_quantile(double p);

/// P(Z1 <= x, Z2 <= y) for standard bivariate normal with correlation rho.
/// Throws std::domain_error when |rho| >= 1.
double bvn_cdf(double x, double y, double rho);

/// Standard bivariate normal density.
double bvn_std_pdf(double x, double y, double rho);

/// log P(rect) under params. Throws DegenerateRegionError when the mass underflows.
double rect_log_prob(const BivNormParams& params, const Rect& rect);

double bvn_log_density(const BivNormParams& params, double x1, double x2);

double full_bvn_loglik(const BivNormParams& params, std::span<const ScorePair> data);

/// Log-likelihood of data under params truncated to rect. Every point must lie
/// inside rect (std::invalid_argument otherwise).
double truncated_bvn_loglik(const BivNormParams& params, std::span<const ScorePair> data,
                            const Rect& rect);

}  // namespace pairscreen
