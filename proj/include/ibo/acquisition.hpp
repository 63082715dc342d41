#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ibo/common.hpp"
#include "ibo/gp.hpp"
#include "ibo/mcmc.hpp"

namespace ibo {

/// Discretization support for the optimum-location distribution; all points
/// live at the target task t = 1.
struct RepresenterSet {
    std::vector<ConfigPoint> points;

    int count() const { return static_cast<int>(points.size()); }
};

/// Discrete probability that each representer point is the minimizer at the
/// target task.
struct PminEstimate {
    Eigen::VectorXd probs;

    void validate() const {
        if (probs.size() == 0) throw Error(Errc::invalid_argument, "empty p_min");
        if ((probs.array() < 0.0).any() || !probs.allFinite())
            throw Error(Errc::invalid_argument, "p_min entries must be finite and >= 0");
        if (std::abs(probs.sum() - 1.0) > 1e-12)
            throw Error(Errc::invalid_argument, "p_min must sum to 1");
    }
};

struct AcquisitionConfig {
    int n_representers = 50;
    int n_mc = 200;
    int n_fantasy = 10;
    int n_candidates = 500;
    /// Candidate task values; default is s_B in {2..6} mapped onto [0,1].
    std::vector<double> task_grid = {0.0, 0.25, 0.5, 0.75, 1.0};

    void validate() const {
        if (n_representers < 1 || n_mc < 1 || n_fantasy < 1 || n_candidates < 1)
            throw Error(Errc::invalid_argument, "acquisition counts must be >= 1");
        if (n_representers > n_candidates)
            throw Error(Errc::invalid_argument, "n_representers must not exceed n_candidates");
        if (task_grid.empty())
            throw Error(Errc::invalid_argument, "task grid must be nonempty");
        for (double t : task_grid) TaskValue{t}.validate();
    }
};

/// Shannon entropy -sum p ln p, with 0 ln 0 := 0.
inline double entropy(const PminEstimate& p) {
    p.validate();
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.probs.size(); ++i)
        if (p.probs[i] > 0.0) h -= p.probs[i] * std::log(p.probs[i]);
    return h;
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

/// Expected improvement below the incumbent value `eta` (minimization).
inline double expected_improvement(double mean, double var, double eta) {
    const double sd = std::sqrt(var > 0.0 ? var : 0.0);
    if (sd < 1e-15) return std::max(eta - mean, 0.0);
    const double z = (eta - mean) / sd;
    return (eta - mean) * normal_cdf(z) + sd * normal_pdf(z);
}

/// Sample `k` distinct indices with probability proportional to weights.
inline std::vector<std::size_t> sample_indices_weighted(Eigen::VectorXd weights, int k,
                                                        RngStream& rng) {
    if (k > weights.size())
        throw Error(Errc::invalid_argument, "cannot sample more indices than weights");
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const std::size_t idx = rng.sample_weighted(weights);
        out.push_back(idx);
        weights[static_cast<Eigen::Index>(idx)] = 0.0;
    }
    return out;
}

/// In-place rank-one Cholesky downdate: L L^T - u u^T. Returns false when the
/// downdated matrix is not positive definite.
inline bool chol_downdate(Eigen::MatrixXd& L, Eigen::VectorXd u) {
    const Eigen::Index n = L.rows();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double r2 = L(k, k) * L(k, k) - u[k] * u[k];
        if (!(r2 > 1e-300)) return false;
        const double r = std::sqrt(r2);
        const double c = r / L(k, k);
        const double s = u[k] / L(k, k);
        L(k, k) = r;
        for (Eigen::Index i = k + 1; i < n; ++i) {
            L(i, k) = (L(i, k) - s * u[i]) / c;
            u[i] = c * u[i] - s * L(i, k);
        }
    }
    return true;
}

/// Column-wise argmin frequencies of mean + L * Z.
inline Eigen::VectorXd argmin_frequencies(const Eigen::VectorXd& mean, const Eigen::MatrixXd& LZ) {
    const Eigen::Index r = LZ.rows();
    const Eigen::Index n = LZ.cols();
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(r);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index best = 0;
        double bestv = mean[0] + LZ(0, j);
        for (Eigen::Index i = 1; i < r; ++i) {
            const double v = mean[i] + LZ(i, j);
            if (v < bestv) {
                bestv = v;
                best = i;
            }
        }
        freq[best] += 1.0;
    }
    return freq / static_cast<double>(n);
}

inline PminEstimate smooth_and_normalize(const Eigen::VectorXd& freq, int n_mc) {
    const double a = 1.0 / (static_cast<double>(n_mc) * static_cast<double>(freq.size()));
    Eigen::VectorXd p = (freq.array() + a) / (1.0 + a * static_cast<double>(freq.size()));
    p /= p.sum();
    return PminEstimate{std::move(p)};
}

/// Per-ensemble-member state reused across candidate evaluations: the joint
/// representer posterior, its Cholesky factor, and a common block of standard
/// normals so current and fantasized p_min estimates share randomness.
struct EntropyContext {
    struct Member {
        JointPosterior joint;
        Eigen::MatrixXd chol;   // factor of joint.cov + jitter I
        Eigen::MatrixXd z;      // representers x n_mc common normals
        Eigen::MatrixXd lz;     // chol * z, cached
        Eigen::VectorXd freq;   // current argmin frequencies
        double noise_destd = 0.0;
    };

    std::vector<Member> members;
    int n_mc = 0;
    int n_fantasy = 0;
    double h_current = 0.0;

    static EntropyContext make(const GPEnsemble& ens, const RepresenterSet& reps,
                               const AcquisitionConfig& cfg, RngStream& rng) {
        ens.validate();
        if (reps.count() < 1) throw Error(Errc::invalid_argument, "need at least one representer");
        EntropyContext ctx;
        ctx.n_mc = cfg.n_mc;
        ctx.n_fantasy = cfg.n_fantasy;
        const int r = reps.count();
        Eigen::VectorXd freq_avg = Eigen::VectorXd::Zero(r);
        for (const GPModel& model : ens.members) {
            Member m;
            m.joint = model.joint_posterior(reps.points, TaskValue{1.0});
            m.chol = chol_with_jitter(m.joint.cov, 1e-10, 1e-6).first;
            m.z.resize(r, cfg.n_mc);
            for (Eigen::Index j = 0; j < m.z.cols(); ++j)
                for (Eigen::Index i = 0; i < m.z.rows(); ++i) m.z(i, j) = rng.normal();
            m.lz = m.chol.triangularView<Eigen::Lower>() * m.z;
            m.freq = argmin_frequencies(m.joint.mean, m.lz);
            m.noise_destd = model.noise_var_destd();
            freq_avg += m.freq;
            ctx.members.push_back(std::move(m));
        }
        freq_avg /= static_cast<double>(ens.members.size());
        ctx.h_current = entropy(smooth_and_normalize(freq_avg, cfg.n_mc));
        return ctx;
    }

    /// Expected entropy reduction of querying (x, t), fantasy draws from rng.
    double eer(const GPEnsemble& ens, const ConfigPoint& x, TaskValue t, RngStream& rng) const {
        const int r = static_cast<int>(members.front().freq.size());
        const int n_members = static_cast<int>(members.size());
        Eigen::MatrixXd fantasy_freq = Eigen::MatrixXd::Zero(r, n_fantasy);

        for (int mi = 0; mi < n_members; ++mi) {
            const Member& m = members[static_cast<std::size_t>(mi)];
            const GPModel& model = ens.members[static_cast<std::size_t>(mi)];
            const CrossPosterior cross = model.cross_posterior(m.joint, x, t);
            double s2 = cross.var + m.noise_destd;
            if (s2 < 1e-12) s2 = 1e-12;
            const double s = std::sqrt(s2);
            const Eigen::VectorXd u = cross.cov_with / s;

            Eigen::MatrixXd chol_down = m.chol;
            if (!chol_downdate(chol_down, u)) {
                Eigen::MatrixXd cov_down = m.joint.cov - u * u.transpose();
                chol_down = chol_with_jitter(cov_down, 1e-10, 1e-6).first;
            }
            const Eigen::MatrixXd lz = chol_down.triangularView<Eigen::Lower>() * m.z;

            for (int f = 0; f < n_fantasy; ++f) {
                const double zeta = rng.normal();
                const Eigen::VectorXd cond_mean = m.joint.mean + u * zeta;
                fantasy_freq.col(f) += argmin_frequencies(cond_mean, lz);
            }
        }

        double h_fantasy = 0.0;
        for (int f = 0; f < n_fantasy; ++f) {
            const Eigen::VectorXd freq = fantasy_freq.col(f) / static_cast<double>(n_members);
            h_fantasy += entropy(smooth_and_normalize(freq, n_mc));
        }
        h_fantasy /= static_cast<double>(n_fantasy);
        return h_current - h_fantasy;
    }
};

/// Ensemble-averaged predicted log cost at (x, t).
inline double predicted_log_cost(const GPEnsemble& cost_ens, const ConfigPoint& x, TaskValue t) {
    double acc = 0.0;
    for (const auto& m : cost_ens.members) acc += m.posterior(x, t).mean;
    return acc / static_cast<double>(cost_ens.members.size());
}

} // namespace detail

/// Draw representer points: uniform candidates re-weighted by their expected
/// improvement at the target task, sampled without replacement. The 1e-9
/// weight floor keeps every candidate reachable.
inline RepresenterSet select_representers(const GPEnsemble& ens, int dim,
                                          const AcquisitionConfig& cfg, RngStream& rng) {
    ens.validate();
    cfg.validate();
    if (dim < 1) throw Error(Errc::invalid_argument, "search space must have dimension >= 1");

    std::vector<ConfigPoint> candidates;
    candidates.reserve(static_cast<std::size_t>(cfg.n_candidates));
    for (int i = 0; i < cfg.n_candidates; ++i) {
        Eigen::VectorXd c(dim);
        for (int k = 0; k < dim; ++k) c[k] = rng.uniform();
        candidates.emplace_back(std::move(c));
    }

    Eigen::VectorXd weights = Eigen::VectorXd::Zero(cfg.n_candidates);
    for (const GPModel& model : ens.members) {
        double eta = std::numeric_limits<double>::infinity();
        for (const Observation& o : model.data())
            eta = std::min(eta, model.posterior(o.x, TaskValue{1.0}).mean);
        for (int i = 0; i < cfg.n_candidates; ++i) {
            const auto stats = model.posterior(candidates[static_cast<std::size_t>(i)], TaskValue{1.0});
            weights[i] += detail::expected_improvement(stats.mean, stats.var, eta);
        }
    }
    weights = (weights.array() / static_cast<double>(ens.members.size())).cwiseMax(0.0) + 1e-9;

    RepresenterSet reps;
    for (std::size_t idx : detail::sample_indices_weighted(weights, cfg.n_representers, rng))
        reps.points.push_back(candidates[idx]);
    return reps;
}

/// Monte-Carlo estimate of the optimum-location distribution over the
/// representer points, averaged across ensemble members, Laplace-smoothed by
/// 1/(n_mc * count).
inline PminEstimate estimate_pmin(const GPEnsemble& ens, const RepresenterSet& reps, int n_mc,
                                  RngStream& rng) {
    ens.validate();
    if (reps.count() < 1) throw Error(Errc::invalid_argument, "need at least one representer");
    if (n_mc < 1) throw Error(Errc::invalid_argument, "n_mc must be >= 1");
    AcquisitionConfig cfg;
    cfg.n_mc = n_mc;
    cfg.n_representers = reps.count();
    cfg.n_candidates = std::max(cfg.n_candidates, reps.count());
    auto ctx = detail::EntropyContext::make(ens, reps, cfg, rng);
    Eigen::VectorXd freq_avg = Eigen::VectorXd::Zero(reps.count());
    for (const auto& m : ctx.members) freq_avg += m.freq;
    freq_avg /= static_cast<double>(ctx.members.size());
    return detail::smooth_and_normalize(freq_avg, n_mc);
}

/// Expected reduction in p_min entropy from one fantasized observation at
/// (x, t). Fantasy outcomes are drawn per-member from the posterior
/// predictive; current and fantasized estimates share MC randomness.
inline double expected_entropy_reduction(const GPEnsemble& ens, const ConfigPoint& x, TaskValue t,
                                         const RepresenterSet& reps, const AcquisitionConfig& cfg,
                                         RngStream& rng) {
    cfg.validate();
    t.validate();
    if (!x.in_unit_box()) throw Error(Errc::out_of_bounds, "candidate outside the search box");
    auto ctx = detail::EntropyContext::make(ens, reps, cfg, rng);
    return ctx.eer(ens, x, t, rng);
}

/// Cost-normalized acquisition: entropy reduction divided by the predicted
/// training cost exp(mean posterior log-cost).
inline double acquisition_ibo(const ConfigPoint& x, TaskValue t, const GPEnsemble& ens_f,
                              const GPEnsemble& ens_c, const RepresenterSet& reps,
                              const AcquisitionConfig& cfg, RngStream& rng) {
    const double reduction = expected_entropy_reduction(ens_f, x, t, reps, cfg, rng);
    return reduction / std::exp(detail::predicted_log_cost(ens_c, x, t));
}

/// Maximize the acquisition over n_candidates random configurations crossed
/// with the task grid. Pass cost_ens = nullptr to skip cost normalization
/// (plain entropy search). Ties break to the lowest candidate index.
inline std::pair<ConfigPoint, TaskValue> maximize_acquisition(const GPEnsemble& ens_f,
                                                              const GPEnsemble* cost_ens, int dim,
                                                              const AcquisitionConfig& cfg,
                                                              RngStream& rng) {
    cfg.validate();
    if (dim < 1) throw Error(Errc::invalid_argument, "search space must have dimension >= 1");

    RngStream rep_rng = rng.split(1);
    RngStream ctx_rng = rng.split(2);
    RngStream cand_rng = rng.split(3);

    const RepresenterSet reps = select_representers(ens_f, dim, cfg, rep_rng);
    const auto ctx = detail::EntropyContext::make(ens_f, reps, cfg, ctx_rng);

    std::vector<ConfigPoint> candidates;
    candidates.reserve(static_cast<std::size_t>(cfg.n_candidates));
    for (int i = 0; i < cfg.n_candidates; ++i) {
        Eigen::VectorXd c(dim);
        for (int k = 0; k < dim; ++k) c[k] = cand_rng.uniform();
        candidates.emplace_back(std::move(c));
    }

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    std::size_t best_k = 0;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        for (std::size_t k = 0; k < cfg.task_grid.size(); ++k) {
            const TaskValue t{cfg.task_grid[k]};
            RngStream eval_rng = rng.split(10 + j * cfg.task_grid.size() + k);
            double a = ctx.eer(ens_f, candidates[j], t, eval_rng);
            if (cost_ens != nullptr)
                a /= std::exp(detail::predicted_log_cost(*cost_ens, candidates[j], t));
            if (a > best) {
                best = a;
                best_j = j;
                best_k = k;
            }
        }
    }
    return {candidates[best_j], TaskValue{cfg.task_grid[best_k]}};
}

} // namespace ibo
