#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

#include "ibo/common.hpp"
#include "ibo/gp.hpp"
#include "ibo/kernels.hpp"

namespace ibo {

/// Log-normal priors on the GP hyperparameters, expressed as normal priors on
/// the log-parameters.
struct HyperPriors {
    double log_lengthscale_mean = 0.0;
    double log_lengthscale_sd = 1.0;
    double log_amplitude_mean = 0.0;
    double log_amplitude_sd = 1.0;
    double log_noise_mean = std::log(1e-3);
    double log_noise_sd = 2.0;

    void validate() const {
        for (double sd : {log_lengthscale_sd, log_amplitude_sd, log_noise_sd})
            if (!(sd > 0.0) || !std::isfinite(sd))
                throw Error(Errc::invalid_argument, "prior standard deviations must be positive");
        for (double mu : {log_lengthscale_mean, log_amplitude_mean, log_noise_mean})
            if (!std::isfinite(mu))
                throw Error(Errc::invalid_argument, "prior means must be finite");
    }
};

struct McmcSettings {
    int burn_in = 50;
    int thinning = 3;
    double slice_width = 1.0;
    int max_step_out = 10;
};

struct HyperDraw {
    KernelSpec spec;
    double noise_var = 0.0;
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

/// One univariate slice-sampling update (step-out + shrinkage, Neal 2003) of
/// coordinate `i` of `theta` in place. `logf` must evaluate the full state.
inline void slice_update(Eigen::VectorXd& theta, int i,
                         const std::function<double(const Eigen::VectorXd&)>& logf, double width,
                         int max_step_out, RngStream& rng, double& cur_logf) {
    const double logy = cur_logf - (-std::log(1.0 - rng.uniform()));
    const double x0 = theta[i];
    double lo = x0 - width * rng.uniform();
    double hi = lo + width;

    Eigen::VectorXd probe = theta;
    int steps = max_step_out;
    while (steps-- > 0) {
        probe[i] = lo;
        if (logf(probe) <= logy) break;
        lo -= width;
    }
    steps = max_step_out;
    while (steps-- > 0) {
        probe[i] = hi;
        if (logf(probe) <= logy) break;
        hi += width;
    }

    for (int iter = 0; iter < 100; ++iter) {
        const double x1 = rng.uniform(lo, hi);
        probe[i] = x1;
        const double f1 = logf(probe);
        if (f1 > logy) {
            theta[i] = x1;
            cur_logf = f1;
            return;
        }
        if (x1 < x0) lo = x1;
        else hi = x1;
    }
    // shrinkage exhausted: keep the current point
}

/// Fast log marginal likelihood for hyperparameter proposals: Gram build and
/// Cholesky only, no GPModel construction.
struct LmlEvaluator {
    Eigen::MatrixXd X;      // n x d configuration coordinates
    Eigen::VectorXd tasks;  // n
    Eigen::VectorXd z;      // standardized fit target
    KernelKind kind;
    double task_exponent;

    static LmlEvaluator make(const std::vector<Observation>& data, KernelKind kind,
                             double task_exponent) {
        LmlEvaluator ev;
        ev.kind = kind;
        ev.task_exponent = task_exponent;
        const auto n = static_cast<Eigen::Index>(data.size());
        const auto d = static_cast<Eigen::Index>(data.front().x.coords.size());
        ev.X.resize(n, d);
        ev.tasks.resize(n);
        ev.z.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            ev.X.row(i) = data[i].x.coords.transpose();
            ev.tasks[i] = data[i].t.t;
            ev.z[i] = kind == KernelKind::cost ? std::log(data[i].cost) : data[i].y;
        }
        const double m = ev.z.mean();
        const double sd = stats::stddev(ev.z);
        ev.z = (ev.z.array() - m) / (sd > 1e-12 ? sd : 1.0);
        return ev;
    }

    double operator()(const Eigen::VectorXd& lengthscales, double amplitude,
                      double noise_var) const {
        static constexpr double sqrt5 = 2.23606797749978969640917366873;
        const Eigen::Index n = X.rows();
        Eigen::MatrixXd K(n, n);
        const double amp2 = amplitude * amplitude;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double r2 =
                    ((X.row(i) - X.row(j)).transpose().array() / lengthscales.array())
                        .square()
                        .sum();
                const double r = std::sqrt(r2);
                double v = amp2 * (1.0 + sqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-sqrt5 * r);
                if (kind == KernelKind::objective)
                    v *= std::pow(1.0 - tasks[i], task_exponent) *
                             std::pow(1.0 - tasks[j], task_exponent) +
                         1.0;
                else
                    v *= std::pow(tasks[i], task_exponent) * std::pow(tasks[j], task_exponent) +
                         1.0;
                K(i, j) = v;
            }
        }
        K.diagonal().array() += noise_var + 1e-10;
        Eigen::LLT<Eigen::MatrixXd> llt(K.selfadjointView<Eigen::Lower>());
        if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
        const Eigen::MatrixXd L = llt.matrixL();
        Eigen::VectorXd beta = L.triangularView<Eigen::Lower>().solve(z);
        return -0.5 * beta.squaredNorm() - L.diagonal().array().log().sum() -
               0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
    }
};

} // namespace detail

/// Draw kernel hyperparameters from the posterior LML + log prior by
/// univariate slice sampling on the log-parameters. The task exponent stays
/// fixed (nu = 2 objective, lambda = 1 cost). Deterministic given the stream.
inline std::vector<HyperDraw> sample_hyperparams_mcmc(const std::vector<Observation>& data,
                                                      KernelKind kind, const HyperPriors& priors,
                                                      int n_samples, RngStream& rng,
                                                      McmcSettings mcmc = {}) {
    priors.validate();
    if (data.empty()) throw Error(Errc::invalid_argument, "MCMC needs data");
    if (n_samples < 1) throw Error(Errc::invalid_argument, "n_samples must be >= 1");

    const double task_exponent = kind == KernelKind::objective ? 2.0 : 1.0;
    const auto ev = detail::LmlEvaluator::make(data, kind, task_exponent);
    const int d = static_cast<int>(ev.X.cols());
    const int n_params = d + 2;  // log lengthscales, log amplitude, log noise var

    const auto log_posterior = [&](const Eigen::VectorXd& theta) -> double {
        double lp = 0.0;
        for (int i = 0; i < d; ++i)
            lp += detail::log_normal_pdf(theta[i], priors.log_lengthscale_mean,
                                         priors.log_lengthscale_sd);
        lp += detail::log_normal_pdf(theta[d], priors.log_amplitude_mean, priors.log_amplitude_sd);
        lp += detail::log_normal_pdf(theta[d + 1], priors.log_noise_mean, priors.log_noise_sd);
        const Eigen::VectorXd ls = theta.head(d).array().exp();
        const double amp = std::exp(theta[d]);
        const double noise = std::exp(theta[d + 1]);
        if (!ls.allFinite() || !std::isfinite(amp) || !std::isfinite(noise))
            return -std::numeric_limits<double>::infinity();
        return lp + ev(ls, amp, noise);
    };

    Eigen::VectorXd theta(n_params);
    theta.head(d).setConstant(priors.log_lengthscale_mean);
    theta[d] = priors.log_amplitude_mean;
    theta[d + 1] = priors.log_noise_mean;
    double cur = log_posterior(theta);

    const auto sweep = [&]() {
        for (int i = 0; i < n_params; ++i)
            detail::slice_update(theta, i, log_posterior, mcmc.slice_width, mcmc.max_step_out, rng,
                                 cur);
    };

    for (int i = 0; i < mcmc.burn_in; ++i) sweep();

    std::vector<HyperDraw> draws;
    draws.reserve(static_cast<std::size_t>(n_samples));
    while (static_cast<int>(draws.size()) < n_samples) {
        for (int i = 0; i < mcmc.thinning; ++i) sweep();
        HyperDraw draw;
        Eigen::VectorXd ls = theta.head(d).array().exp();
        draw.spec = kind == KernelKind::objective
                        ? KernelSpec::objective(std::move(ls), std::exp(theta[d]), task_exponent)
                        : KernelSpec::cost(std::move(ls), std::exp(theta[d]), task_exponent);
        draw.noise_var = std::exp(theta[d + 1]);
        draws.push_back(std::move(draw));
    }
    return draws;
}

/// A set of GPs fitted to the same data under different hyperparameter draws.
struct GPEnsemble {
    std::vector<GPModel> members;

    void validate() const {
        if (members.empty()) throw Error(Errc::invalid_argument, "ensemble must be nonempty");
        const std::size_t n = members.front().data().size();
        for (const auto& m : members)
            if (m.data().size() != n)
                throw Error(Errc::invalid_argument, "ensemble members must share their data");
    }

    std::size_t size() const { return members.size(); }

    /// Ensemble-averaged posterior mean.
    double mean_prediction(const ConfigPoint& x, TaskValue t) const {
        double acc = 0.0;
        for (const auto& m : members) acc += m.posterior(x, t).mean;
        return acc / static_cast<double>(members.size());
    }
};

/// Fit an ensemble by MCMC marginalization: one chain, `n_members` retained
/// draws, one standardized GP fit per draw.
inline GPEnsemble fit_ensemble(const std::vector<Observation>& data, KernelKind kind,
                               const HyperPriors& priors, int n_members, RngStream& rng,
                               McmcSettings mcmc = {}) {
    const auto draws = sample_hyperparams_mcmc(data, kind, priors, n_members, rng, mcmc);
    GPEnsemble ens;
    ens.members.reserve(draws.size());
    FitOptions opts;
    opts.standardize = true;
    for (const auto& d : draws) ens.members.emplace_back(data, d.spec, d.noise_var, opts);
    return ens;
}

} // namespace ibo
