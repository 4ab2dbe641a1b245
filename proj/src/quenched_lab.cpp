#include "quench/quenched_lab.hpp"

#include <cmath>

#include "quench/errors.hpp"
#include "quench/fourier.hpp"
#include "quench/spectral.hpp"

namespace quench {

const char* mode_name(SamplingMode m) { return m == SamplingMode::Quenched ? "quenched" : "annealed"; }
const char* centering_name(Centering c) { return c == Centering::Conditional ? "conditional" : "none"; }

namespace {

Thresholds thresholds_for(const LabOptions& opt, std::size_t reps) {
    return opt.thresholds ? *opt.thresholds : Thresholds::defaults(reps);
}

double target_sigma2(const ProcessModel& model, Frequency theta) {
    const double s2 = sigma2_quenched(model, theta);
    if (!(s2 > kDegenerateSigma2)) throw DegenerateError("limit variance sigma2(theta) is zero");
    return s2;
}

}  // namespace

CltRun run_clt(const ProcessModel& model, Frequency theta, std::size_t n, std::size_t reps, SamplingMode mode,
               Centering centering, const std::optional<FrozenPast>& past, const StreamFamily& streams,
               const LabOptions& opt) {
    if (n == 0 || reps == 0) throw UsageError("n and reps must be at least 1");
    if (mode == SamplingMode::Quenched && !past) throw UsageError("quenched mode needs a frozen past");
    const double sigma2 = target_sigma2(model, theta);

    CltRun run;
    run.sigma2 = sigma2;
    run.sample.meta = {opt.model_id, theta, n, reps, mode, centering, streams.seed()};
    run.sample.values.resize(reps);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    std::optional<cplx> fixed_center;
    if (mode == SamplingMode::Quenched && centering == Centering::Conditional)
        fixed_center = cond_exp_dft(model, *past, n, theta);

    parallel_for(reps, opt.exec, [&](std::size_t i) {
        Stream s = streams.at(i);
        const Trajectory traj = mode == SamplingMode::Quenched ? sample_quenched_path(model, *past, n, s)
                                                                : sample_path(model, n, s);
        cplx v = dft(traj, theta).value;
        if (centering == Centering::Conditional)
            v -= fixed_center ? *fixed_center : cond_exp_dft(model, *traj.past, n, theta);
        run.sample.values[i] = v * norm;
    });
    run.report = complex_normal_report(run.sample.values, sigma2, thresholds_for(opt, reps));
    return run;
}

LimitShift limit_shift(const ProcessModel& model, const FrozenPast& past, Frequency theta,
                       const std::vector<std::size_t>& n_list, double tolerance) {
    LimitShift out;
    if (n_list.empty()) return out;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] == 0) throw UsageError("n values must be at least 1");
        if (i > 0 && n_list[i] <= n_list[i - 1]) throw UsageError("n values must be strictly increasing");
    }
    const auto path = cond_exp_dft_path(model, past, n_list.back(), theta);
    out.n = n_list;
    for (std::size_t n : n_list) out.values.push_back(path[n - 1] / std::sqrt(static_cast<double>(n)));
    const std::size_t m = out.values.size();
    if (m >= 3) {
        const cplx a = out.values[m - 3], b = out.values[m - 2], c = out.values[m - 1];
        out.converged = std::abs(a - b) <= tolerance && std::abs(b - c) <= tolerance && std::abs(a - c) <= tolerance;
    }
    if (out.converged) out.limit = out.values.back();
    return out;
}

InvarianceRun run_invariance(const ProcessModel& model, const FrozenPast& past, Frequency theta, std::size_t n,
                          std::size_t reps, const std::vector<double>& times, const StreamFamily& streams,
                          const LabOptions& opt) {
    if (n == 0 || reps == 0) throw UsageError("n and reps must be at least 1");
    if (times.empty()) throw UsageError("time grid is empty");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0 && times[i] <= 1.0)) throw UsageError("times must lie in (0, 1]");
        if (i > 0 && times[i] <= times[i - 1]) throw UsageError("times must be strictly increasing");
    }
    const double sigma2 = target_sigma2(model, theta);
    const std::size_t d = times.size();
    std::vector<std::size_t> idx(d + 1, 0);
    for (std::size_t i = 0; i < d; ++i) {
        idx[i + 1] = static_cast<std::size_t>(std::floor(static_cast<double>(n) * times[i]));
        if (idx[i + 1] <= idx[i]) throw UsageError("time grid too fine for n: an increment is empty");
    }
    const std::vector<cplx> centering = cond_exp_dft_path(model, past, n, theta);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    // increments[c][rep]
    std::vector<std::vector<cplx>> increments(d, std::vector<cplx>(reps));
    parallel_for(reps, opt.exec, [&](std::size_t r) {
        Stream s = streams.at(r);
        const Trajectory traj = sample_quenched_path(model, past, n, s);
        const auto sums = partial_dfts(traj.values, theta);
        cplx prev = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const std::size_t k = idx[c + 1];
            const cplx w = (sums[k - 1] - centering[k - 1]) * norm;
            increments[c][r] = w - prev;
            prev = w;
        }
    });

    const Thresholds thr = thresholds_for(opt, reps);
    TestReport top;
    top.threshold_ks = thr.ks;
    top.threshold_corr = thr.corr;
    top.pass = true;
    std::vector<std::vector<double>> comps;
    for (std::size_t c = 0; c < d; ++c) {
        const double dt = static_cast<double>(idx[c + 1] - idx[c]) / static_cast<double>(n);
        TestReport sub = complex_normal_report(increments[c], sigma2 * dt, thr);
        top.ks_re = std::max(top.ks_re, sub.ks_re);
        top.ks_im = std::max(top.ks_im, sub.ks_im);
        top.pass = top.pass && sub.pass;
        top.components.push_back(sub);
        std::vector<double> re(reps), im(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            re[r] = increments[c][r].real();
            im[r] = increments[c][r].imag();
        }
        comps.push_back(std::move(re));
        comps.push_back(std::move(im));
    }
    for (std::size_t a = 0; a < comps.size(); ++a)
        for (std::size_t b = a + 1; b < comps.size(); ++b) {
            const double rho = pearson(comps[a], comps[b]);
            if (std::abs(rho) > std::abs(top.corr_re_im)) top.corr_re_im = rho;
        }
    top.pass = top.pass && std::abs(top.corr_re_im) <= thr.corr;
    return {std::move(top), std::move(idx), std::move(increments), sigma2};
}

AveragedRun averaged_frequency_run(const ProcessModel& model, const FrozenPast& past, std::size_t n,
                                   std::size_t reps, const StreamFamily& streams, const LabOptions& opt) {
    if (n == 0 || reps == 0) throw UsageError("n and reps must be at least 1");
    std::optional<DensityEvaluator> density;
    if (!model.cycle()) density.emplace(model);
    auto sigma2_at = [&](Frequency t) {
        if (density) return (*density)(t);
        return is_eigen_frequency(model, t) ? 0.0 : sigma2_quenched(model, t);
    };

    AveragedRun run;
    run.thetas.resize(reps);
    run.sigma2.resize(reps);
    std::vector<cplx> values(reps);
    std::vector<char> keep(reps, 0);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    parallel_for(reps, opt.exec, [&](std::size_t r) {
        Stream s = streams.at(r);
        const Frequency theta(kTwoPi * s.uniform());
        run.thetas[r] = theta.radians();
        const double s2 = sigma2_at(theta);
        run.sigma2[r] = s2;
        if (!(s2 > kAveragedDropFloor)) return;
        const Trajectory traj = sample_quenched_path(model, past, n, s);
        const cplx w = (dft(traj, theta).value - cond_exp_dft(model, past, n, theta)) * norm;
        values[r] = w / std::sqrt(s2 / 2.0);
        keep[r] = 1;
    });
    for (std::size_t r = 0; r < reps; ++r) {
        if (keep[r]) {
            run.kept.push_back(r);
            run.standardized.push_back(values[r]);
        } else
            ++run.dropped;
    }
    if (static_cast<double>(run.dropped) > 0.01 * static_cast<double>(reps))
        throw DegenerateError("more than 1% of sampled frequencies have sigma2 below 1e-8");
    run.report = complex_normal_report(run.standardized, 2.0,
                                       thresholds_for(opt, run.standardized.size()));
    return run;
}

}  // namespace quench
