#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ibo/common.hpp"
#include "ibo/dataset.hpp"
#include "ibo/search_space.hpp"
#include "ibo/trainer.hpp"

namespace ibo {

/// Meaning of the task variable t in [0,1]: the presample factor s_B = 2 + 4t,
/// a training-set fraction s = 2^(7(t-1)), or nothing (synthetic fidelity).
enum class TaskSemantics { presample_factor, dataset_fraction, none };

inline double presample_factor_from_task(double t) { return 2.0 + 4.0 * t; }
inline double dataset_fraction_from_task(double t) { return std::pow(2.0, 7.0 * (t - 1.0)); }
inline double task_from_dataset_fraction(double s) { return 1.0 + std::log2(s) / 7.0; }

struct EvalResult {
    double y = 0.0;
    double cost = 0.0;
    /// Cost the GPs are fit to. Equals `cost` for synthetic problems; for
    /// dataset problems it is the trainer's deterministic work measure so
    /// cost-aware proposals do not depend on wall-clock noise.
    double fit_cost = 0.0;
    std::optional<TrainReport> diagnostics;
};

/// How a strategy wants a dataset evaluation carried out.
struct EvalPolicy {
    TaskSemantics semantics = TaskSemantics::presample_factor;
    bool use_is = true;
    /// Overrides the task-derived s_B (the IS-with-random-presample baselines).
    std::optional<double> forced_presample_factor;
};

/// Synthetic multi-fidelity function: the low-fidelity bias is strictly
/// positive, so t < 1 always over-estimates the target function, and cost
/// grows affinely with t.
struct SyntheticSpec {
    std::function<double(const Eigen::VectorXd&)> f_true;
    double f_min = 0.0;
    double bias_beta = 2.0;
    double sigma0 = 0.2;
    double sigma1 = 0.01;
    double cost_base = 1.0;   // c0
    double cost_gamma = 4.0;  // cost = c0 * (1 + gamma * t)
    bool noise_enabled = true;
};

struct DatasetProblemSpec {
    Dataset data;
    int epochs = 3;
};

struct Problem {
    std::string name;
    SearchSpace space;
    TaskSemantics task_semantics = TaskSemantics::none;
    std::optional<SyntheticSpec> synthetic;
    std::optional<DatasetProblemSpec> dataset;

    bool is_synthetic() const { return synthetic.has_value(); }

    /// True objective at a normalized point; NaN for dataset problems.
    double true_value(const ConfigPoint& x) const {
        if (!synthetic) return std::numeric_limits<double>::quiet_NaN();
        return synthetic->f_true(space.denormalize(x.coords));
    }
};

/// Branin on [-5,10] x [0,15]; global minimum 0.397887.
inline double branin(const Eigen::VectorXd& v) {
    const double x1 = v[0], x2 = v[1];
    const double a = 1.0, b = 5.1 / (4.0 * M_PI * M_PI), c = 5.0 / M_PI;
    const double r = 6.0, s = 10.0, t = 1.0 / (8.0 * M_PI);
    const double inner = x2 - b * x1 * x1 + c * x1 - r;
    return a * inner * inner + s * (1.0 - t) * std::cos(x1) + s;
}

/// Hartmann-3 on [0,1]^3; global minimum -3.86278.
inline double hartmann3(const Eigen::VectorXd& v) {
    static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static const double A[4][3] = {
        {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
    static const double P[4][3] = {{0.3689, 0.1170, 0.2673},
                                   {0.4699, 0.4387, 0.7470},
                                   {0.1091, 0.8732, 0.5547},
                                   {0.0381, 0.5743, 0.8828}};
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        double e = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double d = v[j] - P[i][j];
            e += A[i][j] * d * d;
        }
        acc += alpha[i] * std::exp(-e);
    }
    return -acc;
}

/// Evaluate a synthetic multi-fidelity problem:
/// y = f(x) + (1-t) beta |g(x)| + eps, cost = c0 (1 + gamma t),
/// with g(x) = 0.5 + (1 + sin x_0)/2 in [0.5, 1.5].
inline EvalResult synthetic_eval(const Problem& problem, const ConfigPoint& x, TaskValue t,
                                 RngStream& rng) {
    if (!problem.synthetic)
        throw Error(Errc::invalid_argument, "problem '" + problem.name + "' is not synthetic");
    t.validate();
    if (!x.in_unit_box())
        throw Error(Errc::out_of_bounds, "query point outside the search box");
    const SyntheticSpec& spec = *problem.synthetic;
    const Eigen::VectorXd xd = problem.space.denormalize(x.coords);
    const double g = 0.5 + (1.0 + std::sin(xd[0])) / 2.0;
    const double bias = (1.0 - t.t) * spec.bias_beta * std::abs(g);
    double y = spec.f_true(xd) + bias;
    if (spec.noise_enabled) {
        const double sd = spec.sigma0 * (1.0 - t.t) + spec.sigma1;
        y += rng.normal(0.0, sd);
    }
    EvalResult out;
    out.y = y;
    out.cost = spec.cost_base * (1.0 + spec.cost_gamma * t.t);
    out.fit_cost = out.cost;
    return out;
}

namespace detail {

inline TrainerConfig decode_trainer_config(const SearchSpace& space, const Eigen::VectorXd& u) {
    const Eigen::VectorXd v = space.denormalize(u);
    TrainerConfig cfg;
    bool seen_lr = false;
    for (int i = 0; i < space.dim(); ++i) {
        const std::string& name = space.dims[static_cast<std::size_t>(i)].name;
        if (name == "learning_rate") {
            cfg.learning_rate = v[i];
            seen_lr = true;
        } else if (name == "batch_size") {
            cfg.batch_size = static_cast<int>(std::lround(v[i]));
        } else if (name == "l2") {
            cfg.l2_weight = v[i];
        } else if (name != "hidden_width") {
            throw Error(Errc::invalid_argument,
                        "dataset problem cannot decode dimension '" + name + "'");
        }
    }
    if (!seen_lr)
        throw Error(Errc::invalid_argument, "dataset search space needs a learning_rate dimension");
    return cfg;
}

inline std::vector<int> decode_hidden_widths(const SearchSpace& space, const Eigen::VectorXd& u) {
    const Eigen::VectorXd v = space.denormalize(u);
    for (int i = 0; i < space.dim(); ++i)
        if (space.dims[static_cast<std::size_t>(i)].name == "hidden_width")
            return {static_cast<int>(std::lround(v[i]))};
    return {16};
}

} // namespace detail

/// Evaluate a dataset-backed tuning problem: decode the hyperparameters, run
/// the inner trainer, return the validation error and measured wall cost. A
/// training abort yields worst-case y = 1 with the partial report attached.
inline EvalResult dataset_blackbox_eval(const Problem& problem, const ConfigPoint& x, TaskValue t,
                                        const EvalPolicy& policy, RngStream& rng) {
    if (!problem.dataset)
        throw Error(Errc::invalid_argument, "problem '" + problem.name + "' has no dataset");
    t.validate();
    if (!x.in_unit_box())
        throw Error(Errc::out_of_bounds, "query point outside the search box");

    TrainerConfig cfg = detail::decode_trainer_config(problem.space, x.coords);
    cfg.epochs = problem.dataset->epochs;

    double fraction = 1.0;
    if (policy.semantics == TaskSemantics::dataset_fraction)
        fraction = dataset_fraction_from_task(t.t);
    if (policy.use_is) {
        cfg.presample_factor = policy.forced_presample_factor
                                   ? *policy.forced_presample_factor
                                   : (policy.semantics == TaskSemantics::presample_factor
                                          ? presample_factor_from_task(t.t)
                                          : presample_factor_from_task(1.0));
    }

    RngStream split_rng = rng.split(17);
    const TrainDataset data =
        split_train_validation(problem.dataset->data, fraction, &split_rng);
    cfg.seed = rng.next_u64();

    const std::vector<int> hidden = detail::decode_hidden_widths(problem.space, x.coords);
    const TrainMode mode =
        policy.use_is ? TrainMode::importance_sampling : TrainMode::vanilla;

    // work units map to pseudo-seconds; the scale cancels in the log-cost GP
    constexpr double work_to_seconds = 2e-9;
    EvalResult out;
    try {
        TrainResult res = train_mlp(hidden, cfg, data, mode);
        out.y = res.report.validation_error;
        out.cost = res.report.cost_seconds;
        out.fit_cost = std::max(res.report.work_units * work_to_seconds, 1e-9);
        out.diagnostics = std::move(res.report);
    } catch (const TrainingDivergedError& e) {
        out.y = 1.0;  // worst validation error keeps the GP defined
        out.cost = std::max(e.partial_report.cost_seconds, 1e-6);
        out.fit_cost = std::max(e.partial_report.work_units * work_to_seconds, 1e-9);
        out.diagnostics = e.partial_report;
    }
    return out;
}

/// Strategy-agnostic entry point used by the BO engine.
inline EvalResult evaluate_problem(const Problem& problem, const ConfigPoint& x, TaskValue t,
                                   const EvalPolicy& policy, RngStream& rng) {
    return problem.is_synthetic() ? synthetic_eval(problem, x, t, rng)
                                  : dataset_blackbox_eval(problem, x, t, policy, rng);
}

inline std::vector<std::string> builtin_problem_names() {
    return {"branin-mf", "hartmann3-mf", "synthetic-2class", "digits-small"};
}

inline SearchSpace mlp_tuning_space() {
    SearchSpace space;
    space.dims = {
        {"learning_rate", 1e-3, 1.0, Scale::logarithmic, DimKind::continuous},
        {"batch_size", 4.0, 64.0, Scale::logarithmic, DimKind::integer},
        {"hidden_width", 4.0, 64.0, Scale::logarithmic, DimKind::integer},
        {"l2", 1e-7, 1e-1, Scale::logarithmic, DimKind::continuous},
    };
    return space;
}

inline Problem make_problem(const std::string& name) {
    Problem p;
    p.name = name;
    if (name == "branin-mf") {
        p.space.dims = {{"x1", -5.0, 10.0, Scale::linear, DimKind::continuous},
                        {"x2", 0.0, 15.0, Scale::linear, DimKind::continuous}};
        SyntheticSpec spec;
        spec.f_true = branin;
        spec.f_min = 0.397887;
        p.synthetic = std::move(spec);
        p.task_semantics = TaskSemantics::none;
        return p;
    }
    if (name == "hartmann3-mf") {
        p.space.dims = {{"x1", 0.0, 1.0, Scale::linear, DimKind::continuous},
                        {"x2", 0.0, 1.0, Scale::linear, DimKind::continuous},
                        {"x3", 0.0, 1.0, Scale::linear, DimKind::continuous}};
        SyntheticSpec spec;
        spec.f_true = hartmann3;
        spec.f_min = -3.86278;
        p.synthetic = std::move(spec);
        p.task_semantics = TaskSemantics::none;
        return p;
    }
    if (name == "synthetic-2class" || name == "digits-small") {
        p.space = mlp_tuning_space();
        DatasetProblemSpec spec;
        spec.data = load_dataset(name);
        spec.epochs = name == "digits-small" ? 4 : 3;
        p.dataset = std::move(spec);
        p.task_semantics = TaskSemantics::presample_factor;
        return p;
    }
    throw Error(Errc::invalid_argument,
                "unknown problem '" + name + "'; built-ins: branin-mf, hartmann3-mf, "
                "synthetic-2class, digits-small");
}

} // namespace ibo
