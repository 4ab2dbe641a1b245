#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace quench {

// ---------------------------------------------------------------------------
// Deterministic special functions. Only IEEE basic operations are used, so the
// verdict path does not depend on the platform's libm.
// ---------------------------------------------------------------------------

/// e^x by Cody-Waite reduction and a degree-13 Taylor kernel; relative error < 4e-16.
double det_exp(double x);

/// Standard normal cdf (Hart's rational approximation in West's form);
/// absolute error below 1e-14 over the real line.
double normal_cdf(double x);

/// Inverse of normal_cdf by bracketed Newton iteration, for q in (0, 1).
double normal_quantile(double q);

/// Right-continuous empirical distribution function.
class Ecdf {
public:
    explicit Ecdf(std::vector<double> sample);

    double operator()(double x) const;
    /// Left limit F(x-).
    double left(double x) const;
    std::size_t size() const noexcept { return sorted_.size(); }
    const std::vector<double>& sorted() const noexcept { return sorted_; }

private:
    std::vector<double> sorted_;
};

/// One-sample Kolmogorov-Smirnov distance against a fully specified cdf.
double ks_stat(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Order-statistic quantile: the ceil(q*n)-th smallest value (1-based, clamped).
double empirical_quantile(std::span<const double> sample, double q);

/// Pearson correlation; 0 when either sample has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Sample mean with leave-one-out jackknife standard error.
MeanEstimate jackknife_mean(std::span<const double> values);

struct Thresholds {
    double ks = 0.0;
    double corr = 0.0;

    /// 1.5 x the asymptotic 5% Kolmogorov quantile, and 3.5/sqrt(reps) for correlations.
    static Thresholds defaults(std::size_t reps);
};

struct TestReport {
    double ks_re = 0.0;
    double ks_im = 0.0;
    double corr_re_im = 0.0;
    double threshold_ks = 0.0;
    double threshold_corr = 0.0;
    bool pass = false;
    std::vector<TestReport> components;
};

/// KS of Re and Im against Normal(0, sigma2/2) plus corr(Re, Im).
TestReport complex_normal_report(std::span<const std::complex<double>> sample, double sigma2,
                                 const Thresholds& thresholds);
TestReport complex_normal_report(std::span<const std::complex<double>> sample, double sigma2);

}  // namespace quench
