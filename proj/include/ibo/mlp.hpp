#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

#include "ibo/common.hpp"

namespace ibo {

/// A batch of examples, one row per example.
struct Batch {
    Eigen::MatrixXd features;
    std::vector<int> labels;

    Eigen::Index size() const { return features.rows(); }

    Batch subset(const std::vector<int>& idx) const {
        Batch out;
        out.features.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
        out.labels.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.features.row(static_cast<Eigen::Index>(i)) = features.row(idx[i]);
            out.labels[i] = labels[static_cast<std::size_t>(idx[i])];
        }
        return out;
    }
};

/// Fully connected rectifier network with a softmax head.
struct MlpModel {
    std::vector<int> widths;           // input, hidden..., classes
    std::vector<Eigen::MatrixXd> w;    // w[l]: widths[l+1] x widths[l]
    std::vector<Eigen::VectorXd> bias; // bias[l]: widths[l+1]

    static MlpModel init(const std::vector<int>& widths, RngStream& rng) {
        if (widths.size() < 2) throw Error(Errc::invalid_argument, "network needs >= 2 layers");
        for (int wdt : widths)
            if (wdt < 1) throw Error(Errc::invalid_argument, "layer widths must be positive");
        MlpModel m;
        m.widths = widths;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const int fan_in = widths[l];
            const int fan_out = widths[l + 1];
            Eigen::MatrixXd wl(fan_out, fan_in);
            const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (Eigen::Index i = 0; i < wl.rows(); ++i)
                for (Eigen::Index j = 0; j < wl.cols(); ++j) wl(i, j) = rng.normal(0.0, sd);
            m.w.push_back(std::move(wl));
            m.bias.push_back(Eigen::VectorXd::Zero(fan_out));
        }
        return m;
    }

    int input_dim() const { return widths.front(); }
    int n_classes() const { return widths.back(); }
    std::size_t n_layers() const { return w.size(); }

    std::size_t n_params() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < w.size(); ++l)
            n += static_cast<std::size_t>(w[l].size() + bias[l].size());
        return n;
    }

    bool finite() const {
        for (std::size_t l = 0; l < w.size(); ++l)
            if (!w[l].allFinite() || !bias[l].allFinite()) return false;
        return true;
    }
};

/// Parameter-shaped gradients.
struct MlpGrads {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> bias;

    static MlpGrads zeros_like(const MlpModel& m) {
        MlpGrads g;
        for (std::size_t l = 0; l < m.w.size(); ++l) {
            g.w.push_back(Eigen::MatrixXd::Zero(m.w[l].rows(), m.w[l].cols()));
            g.bias.push_back(Eigen::VectorXd::Zero(m.bias[l].size()));
        }
        return g;
    }

    void add_scaled(const MlpGrads& other, double scale) {
        for (std::size_t l = 0; l < w.size(); ++l) {
            w[l] += scale * other.w[l];
            bias[l] += scale * other.bias[l];
        }
    }
};

namespace detail {

inline void check_batch(const MlpModel& model, const Batch& batch) {
    if (batch.size() == 0) throw Error(Errc::invalid_argument, "empty batch");
    if (batch.features.cols() != model.input_dim())
        throw Error(Errc::dimension_mismatch,
                    "batch feature width " + std::to_string(batch.features.cols()) +
                        " != network input " + std::to_string(model.input_dim()));
    if (batch.labels.size() != static_cast<std::size_t>(batch.size()))
        throw Error(Errc::dimension_mismatch, "labels/features row count mismatch");
    for (int lab : batch.labels)
        if (lab < 0 || lab >= model.n_classes())
            throw Error(Errc::invalid_argument, "label outside [0, classes)");
}

/// Forward pass keeping the post-activation of every layer.
inline std::vector<Eigen::MatrixXd> forward_activations(const MlpModel& model,
                                                        const Eigen::MatrixXd& x) {
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(model.n_layers() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        Eigen::MatrixXd z =
            (acts.back() * model.w[l].transpose()).rowwise() + model.bias[l].transpose();
        if (l + 1 < model.n_layers()) z = z.cwiseMax(0.0);
        if (!z.allFinite())
            throw Error(Errc::numerical_failure, "non-finite activation in forward pass");
        acts.push_back(std::move(z));
    }
    return acts;
}

/// Row-wise log-sum-exp of logits.
inline Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& logits) {
    Eigen::VectorXd m = logits.rowwise().maxCoeff();
    return m.array() +
           ((logits.colwise() - m).array().exp().rowwise().sum()).log();
}

inline double l2_penalty(const MlpModel& model, double l2_weight) {
    if (l2_weight == 0.0) return 0.0;
    double s = 0.0;
    for (const auto& wl : model.w) s += wl.squaredNorm();
    return 0.5 * l2_weight * s;
}

} // namespace detail

/// Mean cross-entropy over the batch plus 0.5 * l2 * ||W||^2, with gradients.
inline std::pair<double, MlpGrads> mlp_forward_backward(const MlpModel& model, const Batch& batch,
                                                        double l2_weight) {
    detail::check_batch(model, batch);
    const auto acts = detail::forward_activations(model, batch.features);
    const Eigen::MatrixXd& logits = acts.back();
    const Eigen::Index n = batch.size();

    const Eigen::VectorXd lse = detail::row_logsumexp(logits);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += lse[i] - logits(i, batch.labels[static_cast<std::size_t>(i)]);
    loss = loss / static_cast<double>(n) + detail::l2_penalty(model, l2_weight);
    if (!std::isfinite(loss)) throw Error(Errc::numerical_failure, "non-finite loss");

    // delta at the softmax head: (softmax - onehot) / n
    Eigen::MatrixXd delta = ((logits.colwise() - lse).array().exp()).matrix();
    for (Eigen::Index i = 0; i < n; ++i) delta(i, batch.labels[static_cast<std::size_t>(i)]) -= 1.0;
    delta /= static_cast<double>(n);

    MlpGrads grads = MlpGrads::zeros_like(model);
    for (std::size_t l = model.n_layers(); l-- > 0;) {
        grads.w[l] = delta.transpose() * acts[l];
        if (l2_weight != 0.0) grads.w[l] += l2_weight * model.w[l];
        grads.bias[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Eigen::MatrixXd back = delta * model.w[l];
            // rectifier gate on the pre-activation sign, equal to act > 0
            delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return {loss, std::move(grads)};
}

/// Per-example cross-entropy (forward pass only, no penalty term).
inline Eigen::VectorXd score_examples(const MlpModel& model, const Batch& batch) {
    detail::check_batch(model, batch);
    const auto acts = detail::forward_activations(model, batch.features);
    const Eigen::MatrixXd& logits = acts.back();
    const Eigen::VectorXd lse = detail::row_logsumexp(logits);
    Eigen::VectorXd scores(batch.size());
    for (Eigen::Index i = 0; i < batch.size(); ++i)
        scores[i] = lse[i] - logits(i, batch.labels[static_cast<std::size_t>(i)]);
    return scores.cwiseMax(0.0);
}

/// Fraction of misclassified examples.
inline double classification_error(const MlpModel& model, const Batch& batch) {
    detail::check_batch(model, batch);
    const auto acts = detail::forward_activations(model, batch.features);
    const Eigen::MatrixXd& logits = acts.back();
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
        Eigen::Index pred;
        logits.row(i).maxCoeff(&pred);
        if (pred != batch.labels[static_cast<std::size_t>(i)]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(batch.size());
}

} // namespace ibo
