#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ibo/common.hpp"
#include "ibo/mlp.hpp"

namespace ibo {

/// Inner-loop settings. The presample size is B = round(b * s_B).
struct TrainerConfig {
    int batch_size = 16;
    double presample_factor = 2.0;  // s_B
    int epochs = 1;
    double learning_rate = 0.1;
    double l2_weight = 0.0;
    std::uint64_t seed = 0;

    int presample_size() const {
        return std::max(batch_size, static_cast<int>(std::lround(
                                        presample_factor * static_cast<double>(batch_size))));
    }

    void validate() const {
        if (batch_size < 1) throw Error(Errc::invalid_argument, "batch size must be >= 1");
        if (!(presample_factor >= 1.0))
            throw Error(Errc::invalid_argument, "presample factor must be >= 1");
        if (epochs < 1) throw Error(Errc::invalid_argument, "epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw Error(Errc::invalid_argument, "learning rate must be > 0");
        if (!(l2_weight >= 0.0)) throw Error(Errc::invalid_argument, "l2 weight must be >= 0");
    }
};

/// Per-step choice between the importance-sampled and the vanilla update.
/// tau is the variance statistic B * sum p_i^2 of the presample scores.
struct StepDecision {
    bool use_is = false;
    double tau = 1.0;
    double threshold = 1.0;
};

struct TrainReport {
    double validation_error = 1.0;
    double cost_seconds = 0.0;
    double is_step_fraction = 0.0;
    std::vector<double> loss_curve;
    /// Deterministic work measure (forward-pass row units): presample scoring
    /// counts one unit per row, a training step three. Unlike cost_seconds it
    /// is reproducible bit-for-bit given the seed.
    double work_units = 0.0;
};

class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& msg, TrainReport partial)
        : Error(Errc::training_diverged, msg), partial_report(std::move(partial)) {}

    TrainReport partial_report;
};

enum class TrainMode { vanilla, importance_sampling };

/// p_i proportional to score_i; uniform fallback when all scores vanish.
inline Eigen::VectorXd importance_distribution(const Eigen::VectorXd& scores) {
    if (scores.size() == 0) throw Error(Errc::invalid_argument, "empty score vector");
    if ((scores.array() < 0.0).any() || !scores.allFinite())
        throw Error(Errc::invalid_argument, "scores must be finite and non-negative");
    const double total = scores.sum();
    if (total < 1e-12)
        return Eigen::VectorXd::Constant(scores.size(),
                                         1.0 / static_cast<double>(scores.size()));
    return scores / total;
}

/// Decide whether the variance reduction from importance sampling pays for the
/// presample scoring overhead. With a forward pass costing a third of a
/// training step, IS wins when tau = B sum p_i^2 exceeds (B + 3b) / (3b).
inline StepDecision do_sgd_test(const Eigen::VectorXd& scores, int presample_size,
                                int batch_size) {
    if (batch_size < 1 || presample_size < batch_size)
        throw Error(Errc::invalid_argument, "need presample size B >= batch size b >= 1");
    if (scores.size() != presample_size)
        throw Error(Errc::dimension_mismatch, "score count must equal presample size");
    const Eigen::VectorXd p = importance_distribution(scores);
    StepDecision d;
    d.tau = static_cast<double>(presample_size) * p.squaredNorm();
    d.threshold = (static_cast<double>(presample_size) + 3.0 * batch_size) / (3.0 * batch_size);
    d.use_is = d.tau > d.threshold;
    return d;
}

namespace detail {

/// Gradients of sum_i c_i * CE_i (no mean, no penalty).
inline MlpGrads weighted_ce_grads(const MlpModel& model, const Batch& batch,
                                  const Eigen::VectorXd& coeffs) {
    check_batch(model, batch);
    const auto acts = forward_activations(model, batch.features);
    const Eigen::MatrixXd& logits = acts.back();
    const Eigen::VectorXd lse = row_logsumexp(logits);

    Eigen::MatrixXd delta = ((logits.colwise() - lse).array().exp()).matrix();
    for (Eigen::Index i = 0; i < batch.size(); ++i)
        delta(i, batch.labels[static_cast<std::size_t>(i)]) -= 1.0;
    delta.array().colwise() *= coeffs.array();

    MlpGrads grads = MlpGrads::zeros_like(model);
    for (std::size_t l = model.n_layers(); l-- > 0;) {
        grads.w[l] = delta.transpose() * acts[l];
        grads.bias[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Eigen::MatrixXd back = delta * model.w[l];
            delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return grads;
}

/// Apply w <- w - lr * (ce_grads + l2_scale * l2 * W).
inline void apply_step(MlpModel& model, const MlpGrads& ce_grads, double learning_rate,
                       double l2_weight, double l2_scale) {
    for (std::size_t l = 0; l < model.w.size(); ++l) {
        model.w[l] -= learning_rate * ce_grads.w[l];
        if (l2_weight != 0.0) model.w[l] -= learning_rate * l2_scale * l2_weight * model.w[l];
        model.bias[l] -= learning_rate * ce_grads.bias[l];
    }
}

inline double mean_ce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    const Eigen::VectorXd lse = row_logsumexp(logits);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
        loss += lse[i] - logits(i, labels[static_cast<std::size_t>(i)]);
    return loss / static_cast<double>(logits.rows());
}

} // namespace detail

/// One importance-sampled update with precomputed presample scores: sample b
/// indices with replacement from p, reweight each gradient by 1/(B p_i) so the
/// update stays unbiased for the presample mean gradient.
inline double is_sgd_step_scored(MlpModel& model, const Batch& presample,
                                 const Eigen::VectorXd& scores, int batch_size,
                                 double learning_rate, double l2_weight, RngStream& rng) {
    if (batch_size < 1 || presample.size() < batch_size)
        throw Error(Errc::invalid_argument, "presample must hold at least batch_size examples");
    const Eigen::VectorXd p = importance_distribution(scores);
    const double big_b = static_cast<double>(presample.size());

    std::vector<int> idx(static_cast<std::size_t>(batch_size));
    Eigen::VectorXd coeffs(batch_size);
    for (int j = 0; j < batch_size; ++j) {
        const std::size_t i = rng.sample_weighted(p);
        idx[static_cast<std::size_t>(j)] = static_cast<int>(i);
        coeffs[j] = 1.0 / (static_cast<double>(batch_size) * big_b * p[static_cast<Eigen::Index>(i)]);
    }
    const Batch chosen = presample.subset(idx);
    const MlpGrads grads = detail::weighted_ce_grads(model, chosen, coeffs);
    detail::apply_step(model, grads, learning_rate, l2_weight, coeffs.sum());

    const auto acts = detail::forward_activations(model, chosen.features);
    return detail::mean_ce_loss(acts.back(), chosen.labels) +
           detail::l2_penalty(model, l2_weight);
}

/// Importance-sampled update that scores the presample itself.
inline double is_sgd_step(MlpModel& model, const Batch& presample, int batch_size,
                          double learning_rate, double l2_weight, RngStream& rng) {
    const Eigen::VectorXd scores = score_examples(model, presample);
    return is_sgd_step_scored(model, presample, scores, batch_size, learning_rate, l2_weight, rng);
}

/// Plain SGD update: w <- w - lr * (mean CE gradient + l2 W).
inline double vanilla_sgd_step(MlpModel& model, const Batch& batch, double learning_rate,
                               double l2_weight) {
    if (batch.size() == 0) throw Error(Errc::invalid_argument, "empty batch");
    const Eigen::VectorXd coeffs =
        Eigen::VectorXd::Constant(batch.size(), 1.0 / static_cast<double>(batch.size()));
    const MlpGrads grads = detail::weighted_ce_grads(model, batch, coeffs);
    detail::apply_step(model, grads, learning_rate, l2_weight, 1.0);

    const auto acts = detail::forward_activations(model, batch.features);
    return detail::mean_ce_loss(acts.back(), batch.labels) + detail::l2_penalty(model, l2_weight);
}

struct TrainDataset {
    Batch train;
    Batch validation;
    int n_classes = 0;
};

struct TrainResult {
    TrainReport report;
    MlpModel model;
};

/// Train an MLP for cfg.epochs. In importance-sampling mode every step first
/// scores a fresh uniform presample of size B and runs the DoSGD test; in
/// vanilla mode it takes plain uniform minibatch steps.
inline TrainResult train_mlp(const std::vector<int>& hidden_widths, const TrainerConfig& cfg,
                             const TrainDataset& data, TrainMode mode) {
    cfg.validate();
    if (data.train.size() == 0 || data.validation.size() == 0)
        throw Error(Errc::invalid_argument, "train/validation splits must be nonempty");

    const auto t_start = std::chrono::steady_clock::now();
    RngStream rng(cfg.seed);

    std::vector<int> widths;
    widths.push_back(static_cast<int>(data.train.features.cols()));
    widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
    widths.push_back(data.n_classes);
    MlpModel model = MlpModel::init(widths, rng);

    const int m = static_cast<int>(data.train.size());
    const int b = std::min(cfg.batch_size, m);
    const int big_b = std::max(b, cfg.presample_size());
    const int steps_per_epoch = (m + b - 1) / b;

    double row_flops = 0.0;  // per-row forward cost of this architecture
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        row_flops += static_cast<double>(widths[l]) * static_cast<double>(widths[l + 1]);

    TrainReport report;
    long is_steps = 0, total_steps = 0;

    const auto finish_cost = [&]() {
        const auto dt = std::chrono::steady_clock::now() - t_start;
        return std::max(std::chrono::duration<double>(dt).count(), 1e-6);
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            double loss = 0.0;
            try {
                if (mode == TrainMode::importance_sampling) {
                    std::vector<int> pre_idx(static_cast<std::size_t>(big_b));
                    for (int i = 0; i < big_b; ++i)
                        pre_idx[static_cast<std::size_t>(i)] =
                            static_cast<int>(rng.uniform_index(static_cast<std::size_t>(m)));
                    const Batch presample = data.train.subset(pre_idx);
                    const Eigen::VectorXd scores = score_examples(model, presample);
                    const StepDecision decision = do_sgd_test(scores, big_b, b);
                    if (decision.use_is) {
                        loss = is_sgd_step_scored(model, presample, scores, b, cfg.learning_rate,
                                                  cfg.l2_weight, rng);
                        ++is_steps;
                    } else {
                        std::vector<int> sub(static_cast<std::size_t>(b));
                        for (int i = 0; i < b; ++i)
                            sub[static_cast<std::size_t>(i)] =
                                static_cast<int>(rng.uniform_index(static_cast<std::size_t>(big_b)));
                        loss = vanilla_sgd_step(model, presample.subset(sub), cfg.learning_rate,
                                                cfg.l2_weight);
                    }
                } else {
                    std::vector<int> sub(static_cast<std::size_t>(b));
                    for (int i = 0; i < b; ++i)
                        sub[static_cast<std::size_t>(i)] =
                            static_cast<int>(rng.uniform_index(static_cast<std::size_t>(m)));
                    loss = vanilla_sgd_step(model, data.train.subset(sub), cfg.learning_rate,
                                            cfg.l2_weight);
                }
            } catch (const Error& e) {
                report.cost_seconds = finish_cost();
                report.is_step_fraction =
                    total_steps > 0 ? static_cast<double>(is_steps) / total_steps : 0.0;
                throw TrainingDivergedError(std::string("training aborted: ") + e.what(), report);
            }
            ++total_steps;
            epoch_loss += loss;
            report.work_units += row_flops * (mode == TrainMode::importance_sampling
                                                  ? static_cast<double>(big_b) + 3.0 * b
                                                  : 3.0 * b);
        }
        epoch_loss /= static_cast<double>(steps_per_epoch);
        report.loss_curve.push_back(epoch_loss);
        if (!std::isfinite(epoch_loss) || !model.finite()) {
            report.cost_seconds = finish_cost();
            report.is_step_fraction = static_cast<double>(is_steps) / total_steps;
            throw TrainingDivergedError("non-finite loss at epoch " + std::to_string(epoch),
                                        report);
        }
    }

    report.validation_error = classification_error(model, data.validation);
    report.work_units += row_flops * static_cast<double>(data.validation.size());
    report.is_step_fraction =
        total_steps > 0 ? static_cast<double>(is_steps) / static_cast<double>(total_steps) : 0.0;
    report.cost_seconds = finish_cost();
    return TrainResult{std::move(report), std::move(model)};
}

} // namespace ibo
