#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

#include "ibo/common.hpp"
#include "ibo/kernels.hpp"

namespace ibo {

struct PosteriorStats {
    double mean = 0.0;
    double var = 0.0;
};

/// Joint posterior over a fixed set of query points, with the triangular
/// solves cached so cross terms against further points stay cheap.
struct JointPosterior {
    Eigen::VectorXd mean;    // destandardized
    Eigen::MatrixXd cov;     // destandardized
    Eigen::MatrixXd vsolve;  // L^{-1} K(train, queries), standardized kernel space
    std::vector<ConfigPoint> points;
    double task = 1.0;
};

/// Cross statistics of one extra candidate against a cached JointPosterior.
struct CrossPosterior {
    double mean = 0.0;
    double var = 0.0;
    Eigen::VectorXd cov_with;  // covariance with each cached query point
};

struct FitOptions {
    /// Standardize the fit target (y for objective GPs, ln cost for cost GPs)
    /// to zero mean / unit variance; predictions are mapped back.
    bool standardize = false;
    double jitter_start = 1e-10;
    double jitter_max = 1e-6;
};

namespace detail {

/// Cholesky of M + jitter*I under the escalating jitter schedule.
/// Returns the factor and the jitter that succeeded.
inline std::pair<Eigen::MatrixXd, double> chol_with_jitter(const Eigen::MatrixXd& M,
                                                           double jitter_start, double jitter_max) {
    const Eigen::Index n = M.rows();
    double jitter = jitter_start;
    while (true) {
        Eigen::MatrixXd A = M;
        A.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() == Eigen::Success) return {Eigen::MatrixXd(llt.matrixL()), jitter};
        if (jitter > jitter_max)
            throw Error(Errc::numerical_failure,
                        "Cholesky failed for " + std::to_string(n) + "x" + std::to_string(n) +
                            " matrix after jitter escalation to " + std::to_string(jitter));
        jitter = (jitter == 0.0) ? jitter_start : jitter * 10.0;
    }
}

} // namespace detail

/// Exact multi-task GP regression with Gaussian noise (zero prior mean).
///
/// Objective-kind models fit the observed y; cost-kind models fit ln(cost).
/// Immutable after construction, safe for concurrent reads.
class GPModel {
public:
    GPModel(std::vector<Observation> data, KernelSpec spec, double noise_var,
            FitOptions opts = {})
        : data_(std::move(data)), spec_(std::move(spec)), noise_var_(noise_var), opts_(opts) {
        spec_.validate();
        if (data_.empty()) throw Error(Errc::invalid_argument, "gp_fit needs at least one observation");
        if (!(noise_var_ >= 0.0) || !std::isfinite(noise_var_))
            throw Error(Errc::invalid_argument, "noise variance must be finite and >= 0");

        const auto n = static_cast<Eigen::Index>(data_.size());
        target_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Observation& o = data_[static_cast<std::size_t>(i)];
            o.validate();
            if (spec_.kind == KernelKind::cost) {
                target_[i] = std::log(o.cost);
            } else {
                target_[i] = o.y;
            }
            if (!std::isfinite(target_[i]))
                throw Error(Errc::invalid_argument, "non-finite fit target at observation " +
                                                        std::to_string(i));
        }
        if (opts_.standardize) {
            shift_ = target_.mean();
            const double sd = stats::stddev(target_);
            scale_ = sd > 1e-12 ? sd : 1.0;
            target_ = (target_.array() - shift_) / scale_;
        }

        Eigen::MatrixXd K(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double v = kernel_value(spec_, data_[i].x, data_[i].t, data_[j].x, data_[j].t);
                K(i, j) = v;
                K(j, i) = v;
            }
        }
        K.diagonal().array() += noise_var_;
        std::tie(chol_, jitter_) = detail::chol_with_jitter(K, opts_.jitter_start, opts_.jitter_max);
        alpha_ = chol_.triangularView<Eigen::Lower>().solve(target_);
        chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
    }

    const KernelSpec& spec() const { return spec_; }
    double noise_var() const { return noise_var_; }
    double jitter() const { return jitter_; }
    const std::vector<Observation>& data() const { return data_; }
    const Eigen::MatrixXd& chol() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    const Eigen::VectorXd& fit_target() const { return target_; }
    double target_shift() const { return shift_; }
    double target_scale() const { return scale_; }
    /// Observation-noise variance in destandardized target units.
    double noise_var_destd() const { return noise_var_ * scale_ * scale_; }

    /// Posterior mean and variance at one query, variance clamped below at 1e-12.
    PosteriorStats posterior(const ConfigPoint& x, TaskValue t) const {
        const Eigen::VectorXd k = cross_kernel(x, t);
        Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
        const double prior = kernel_value(spec_, x, t, x, t);
        const double mean = shift_ + scale_ * k.dot(alpha_);
        double var = (prior - v.squaredNorm()) * scale_ * scale_;
        if (var < 1e-12) var = 1e-12;
        return {mean, var};
    }

    /// Joint posterior over several points sharing one task value.
    JointPosterior joint_posterior(const std::vector<ConfigPoint>& pts, TaskValue t) const {
        if (pts.empty()) throw Error(Errc::invalid_argument, "joint_posterior needs query points");
        const auto n = static_cast<Eigen::Index>(data_.size());
        const auto m = static_cast<Eigen::Index>(pts.size());
        Eigen::MatrixXd Kxq(n, m);
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                Kxq(i, j) = kernel_value(spec_, data_[i].x, data_[i].t, pts[j], t);
        Eigen::MatrixXd Kqq(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double v = kernel_value(spec_, pts[i], t, pts[j], t);
                Kqq(i, j) = v;
                Kqq(j, i) = v;
            }

        JointPosterior out;
        out.vsolve = chol_.triangularView<Eigen::Lower>().solve(Kxq);
        out.mean = (shift_ + (scale_ * (Kxq.transpose() * alpha_)).array()).matrix();
        out.cov = (Kqq - out.vsolve.transpose() * out.vsolve) * (scale_ * scale_);
        out.points = pts;
        out.task = t.t;
        return out;
    }

    /// Mean/variance of one extra candidate plus its posterior covariance with
    /// the points of a cached joint posterior.
    CrossPosterior cross_posterior(const JointPosterior& joint, const ConfigPoint& x,
                                   TaskValue t) const {
        const Eigen::VectorXd k = cross_kernel(x, t);
        const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
        CrossPosterior out;
        out.mean = shift_ + scale_ * k.dot(alpha_);
        out.var = (kernel_value(spec_, x, t, x, t) - v.squaredNorm()) * scale_ * scale_;
        if (out.var < 0.0) out.var = 0.0;
        const auto m = static_cast<Eigen::Index>(joint.points.size());
        out.cov_with.resize(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const double prior = kernel_value(spec_, joint.points[j], TaskValue{joint.task}, x, t);
            out.cov_with[j] = (prior - joint.vsolve.col(j).dot(v)) * scale_ * scale_;
        }
        return out;
    }

    /// Log marginal likelihood of the fitted (possibly standardized) target.
    double log_marginal_likelihood() const {
        const double n = static_cast<double>(data_.size());
        return -0.5 * target_.dot(alpha_) - chol_.diagonal().array().log().sum() -
               0.5 * n * std::log(2.0 * M_PI);
    }

private:
    Eigen::VectorXd cross_kernel(const ConfigPoint& x, TaskValue t) const {
        const auto n = static_cast<Eigen::Index>(data_.size());
        Eigen::VectorXd k(n);
        for (Eigen::Index i = 0; i < n; ++i)
            k[i] = kernel_value(spec_, data_[i].x, data_[i].t, x, t);
        return k;
    }

    std::vector<Observation> data_;
    KernelSpec spec_;
    double noise_var_;
    FitOptions opts_;
    double shift_ = 0.0;
    double scale_ = 1.0;
    double jitter_ = 0.0;
    Eigen::VectorXd target_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
};

inline GPModel gp_fit(std::vector<Observation> data, KernelSpec spec, double noise_var,
                      FitOptions opts = {}) {
    return GPModel(std::move(data), std::move(spec), noise_var, opts);
}

inline PosteriorStats gp_posterior(const GPModel& model, const ConfigPoint& x, TaskValue t) {
    return model.posterior(x, t);
}

inline double log_marginal_likelihood(const GPModel& model) {
    return model.log_marginal_likelihood();
}

} // namespace ibo
