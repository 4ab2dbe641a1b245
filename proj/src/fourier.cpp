#include "quench/fourier.hpp"

#include <algorithm>
#include <cmath>

#include "quench/errors.hpp"
#include "quench/rotor.hpp"

namespace quench {

DftValue dft(std::span<const cplx> values, Frequency theta) {
    if (values.empty()) throw UsageError("dft of an empty trajectory");
    Rotor rot(theta.radians());
    CompensatedSum sum;
    for (const cplx& x : values) {
        sum.add(x * rot.value());
        rot.advance();
    }
    return {sum.value(), values.size(), theta};
}

std::vector<cplx> partial_dfts(std::span<const cplx> values, Frequency theta) {
    std::vector<cplx> out(values.size());
    Rotor rot(theta.radians());
    CompensatedSum sum;
    for (std::size_t k = 0; k < values.size(); ++k) {
        sum.add(values[k] * rot.value());
        out[k] = sum.value();
        rot.advance();
    }
    return out;
}

cplx fourier_average(std::span<const cplx> values, Frequency theta) {
    return dft(values, theta).value / static_cast<double>(values.size());
}

double periodogram(std::span<const cplx> values, Frequency theta) {
    return std::norm(dft(values, theta).value) / static_cast<double>(values.size());
}

PathSample path_values(std::span<const cplx> values, Frequency theta, std::span<const double> grid) {
    if (values.empty()) throw UsageError("path of an empty trajectory");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw UsageError("path grid must lie in [0, 1]");
        if (i > 0 && grid[i] < grid[i - 1]) throw UsageError("path grid must be nondecreasing");
    }
    const std::size_t n = values.size();
    const auto sums = partial_dfts(values, theta);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    PathSample out;
    out.times.assign(grid.begin(), grid.end());
    out.values.reserve(grid.size());
    for (double t : grid) {
        const auto idx = std::min(n, static_cast<std::size_t>(std::floor(static_cast<double>(n) * t)));
        out.values.push_back(idx == 0 ? cplx{0.0, 0.0} : sums[idx - 1] * scale);
    }
    return out;
}

TwoSidedSequence::TwoSidedSequence(std::size_t half_width, std::vector<cplx> values)
    : half_width_(half_width), values_(std::move(values)) {
    if (values_.size() != 2 * half_width_ + 1)
        throw UsageError("two-sided sequence needs exactly 2N+1 entries");
}

CesaroForms fejer_cesaro_forms(const TwoSidedSequence& c, Frequency theta, std::size_t n) {
    if (n == 0) throw UsageError("Cesaro order must be at least 1");
    if (n > c.half_width() + 1) throw UsageError("Cesaro order exceeds the available coefficients");
    const long order = static_cast<long>(n);
    std::vector<cplx> terms(2 * n - 1);  // c_k e^{ik theta}, k = -(n-1)..n-1
    for (long k = -(order - 1); k < order; ++k)
        terms[static_cast<std::size_t>(k + order - 1)] =
            c[k] * std::polar(1.0, std::fmod(static_cast<double>(k) * theta.radians(), kTwoPi));
    auto term = [&](long k) { return terms[static_cast<std::size_t>(k + order - 1)]; };

    CompensatedSum nested;
    for (long j = 0; j < order; ++j)
        for (long k = -j; k <= j; ++k) nested.add(term(k));
    CompensatedSum tri;
    for (long k = -(order - 1); k < order; ++k)
        tri.add((1.0 - static_cast<double>(std::labs(k)) / static_cast<double>(n)) * term(k));
    return {nested.value() / static_cast<double>(n), tri.value()};
}

cplx fejer_cesaro(const TwoSidedSequence& c, Frequency theta, std::size_t n) {
    const CesaroForms forms = fejer_cesaro_forms(c, theta, n);
    double scale = 1.0;
    for (const cplx& v : c.values()) scale = std::max(scale, std::abs(v));
    if (std::abs(forms.nested - forms.triangular) > 1e-12 * scale)
        throw PrecisionError("Cesaro forms disagree beyond 1e-12");
    return forms.triangular;
}

HuntYoungReport huntyoung_stat(std::span<const cplx> coeffs, std::span<const double> theta_grid,
                               std::size_t max_order) {
    if (theta_grid.empty()) throw UsageError("Hunt-Young grid must be nonempty");
    double rhs = 0.0;
    for (const cplx& a : coeffs) rhs += std::norm(a);
    if (!(rhs > 0.0)) throw DegenerateError("Hunt-Young statistic needs a nonzero coefficient sequence");

    std::vector<double> grid(theta_grid.begin(), theta_grid.end());
    for (double& t : grid) t = Frequency(t).radians();
    std::sort(grid.begin(), grid.end());

    std::vector<double> sup(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        Rotor rot(grid[g]);
        CompensatedSum s;
        double best = 0.0;
        for (std::size_t n = 1; n <= max_order; ++n) {
            if (n - 1 < coeffs.size()) s.add(coeffs[n - 1] * rot.value());
            rot.advance();
            best = std::max(best, std::norm(s.value()));
        }
        sup[g] = best;
    }

    // Periodic trapezoid on [0, 2pi): every grid point carries half of each adjacent gap.
    double lhs = 0.0;
    if (grid.size() == 1) {
        lhs = sup[0];
    } else {
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const std::size_t next = (g + 1) % grid.size();
            double gap = grid[next] - grid[g];
            if (next == 0) gap += kTwoPi;
            lhs += 0.5 * gap * (sup[g] + sup[next]);
        }
        lhs /= kTwoPi;
    }
    return {lhs, rhs, lhs / rhs, max_order};
}

}  // namespace quench
