#include "quench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quench/errors.hpp"

namespace quench {

double det_exp(double x) {
    if (std::isnan(x)) return x;
    if (x > 709.78) return std::numeric_limits<double>::infinity();
    if (x < -745.2) return 0.0;
    constexpr double kLn2Hi = 6.93147180369123816490e-01;
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    constexpr double kInvLn2 = 1.44269504088896338700e+00;
    const double k = std::nearbyint(x * kInvLn2);
    const double r = (x - k * kLn2Hi) - k * kLn2Lo;
    // Horner form of sum_{i<=13} r^i / i!
    double p = 1.0 / 6227020800.0;
    constexpr double kInvFact[] = {1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0,
                                   1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,     1.0 / 120.0,
                                   1.0 / 24.0,        1.0 / 6.0,        0.5,             1.0,
                                   1.0};
    for (double c : kInvFact) p = p * r + c;
    return std::ldexp(p, static_cast<int>(k));
}

double normal_cdf(double x) {
    if (std::isnan(x)) return x;
    const double z = std::abs(x);
    double tail = 0.0;
    if (z <= 37.0) {
        const double e = det_exp(-z * z / 2.0);
        if (z < 7.07106781186547) {
            double num = 3.52624965998911e-02 * z + 0.700383064443688;
            num = num * z + 6.37396220353165;
            num = num * z + 33.912866078383;
            num = num * z + 112.079291497871;
            num = num * z + 221.213596169931;
            num = num * z + 220.206867912376;
            double den = 8.83883476483184e-02 * z + 1.75566716318264;
            den = den * z + 16.064177579207;
            den = den * z + 86.7807322029461;
            den = den * z + 296.564248779674;
            den = den * z + 637.333633378831;
            den = den * z + 793.826512519948;
            den = den * z + 440.413735824752;
            tail = e * num / den;
        } else {
            double b = z + 0.65;
            b = z + 4.0 / b;
            b = z + 3.0 / b;
            b = z + 2.0 / b;
            b = z + 1.0 / b;
            tail = e / b / 2.506628274631;
        }
    }
    return x > 0.0 ? 1.0 - tail : tail;
}

double normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) throw UsageError("normal quantile needs q in (0, 1)");
    double lo = -40.0, hi = 40.0, x = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double f = normal_cdf(x) - q;
        if (f == 0.0) return x;
        if (f > 0.0) hi = x; else lo = x;
        const double density = 0.3989422804014327 * det_exp(-0.5 * x * x);
        double next = density > 0.0 ? x - f / density : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
        x = next;
    }
    return x;
}

Ecdf::Ecdf(std::vector<double> sample) : sorted_(std::move(sample)) {
    if (sorted_.empty()) throw UsageError("empirical distribution of an empty sample");
    std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double Ecdf::left(double x) const {
    const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double ks_stat(std::span<const double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw UsageError("KS statistic of an empty sample");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t j = i;
        while (j < s.size() && s[j] == s[i]) ++j;
        const double f = cdf(s[i]);
        d = std::max({d, std::abs(static_cast<double>(j) / n - f), std::abs(static_cast<double>(i) / n - f)});
        i = j;
    }
    return d;
}

double empirical_quantile(std::span<const double> sample, double q) {
    if (sample.empty()) throw UsageError("quantile of an empty sample");
    std::vector<double> s(sample.begin(), sample.end());
    const double pos = std::ceil(q * static_cast<double>(s.size()));
    const std::size_t idx = static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(s.size()))) - 1;
    std::nth_element(s.begin(), s.begin() + static_cast<long>(idx), s.end());
    return s[idx];
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw UsageError("correlation needs two equal nonempty samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

MeanEstimate jackknife_mean(std::span<const double> values) {
    if (values.empty()) throw UsageError("mean of an empty sample");
    const std::size_t n = values.size();
    double total = 0.0;
    for (double v : values) total += v;
    const double mean = total / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) {
        const double loo = (total - v) / static_cast<double>(n - 1);
        ss += (loo - mean) * (loo - mean);
    }
    return {mean, std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss)};
}

Thresholds Thresholds::defaults(std::size_t reps) {
    const double root = std::sqrt(static_cast<double>(reps));
    return {1.5 * 1.358 / root, 3.5 / root};
}

TestReport complex_normal_report(std::span<const std::complex<double>> sample, double sigma2,
                                 const Thresholds& thresholds) {
    if (sample.empty()) throw UsageError("normal report of an empty sample");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DegenerateError("complex normal target needs sigma2 > 0");
    const double scale = std::sqrt(sigma2 / 2.0);
    std::vector<double> re(sample.size()), im(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        re[i] = sample[i].real() / scale;
        im[i] = sample[i].imag() / scale;
    }
    TestReport r;
    r.ks_re = ks_stat(re, normal_cdf);
    r.ks_im = ks_stat(im, normal_cdf);
    r.corr_re_im = pearson(re, im);
    r.threshold_ks = thresholds.ks;
    r.threshold_corr = thresholds.corr;
    r.pass = r.ks_re <= r.threshold_ks && r.ks_im <= r.threshold_ks && std::abs(r.corr_re_im) <= r.threshold_corr;
    return r;
}

TestReport complex_normal_report(std::span<const std::complex<double>> sample, double sigma2) {
    return complex_normal_report(sample, sigma2, Thresholds::defaults(sample.size()));
}

}  // namespace quench
