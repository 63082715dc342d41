#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "ibo/common.hpp"

namespace ibo {

enum class KernelKind { objective, cost };

/// Product-kernel parameters: an ARD Matern 5/2 over configurations times a
/// polynomial factor over the task variable. `task_exponent` is nu for the
/// objective kernel and lambda for the cost kernel.
struct KernelSpec {
    Eigen::VectorXd lengthscales;
    double amplitude = 1.0;
    double task_exponent = 2.0;
    KernelKind kind = KernelKind::objective;

    static KernelSpec objective(Eigen::VectorXd ls, double amp = 1.0, double nu = 2.0) {
        KernelSpec s;
        s.lengthscales = std::move(ls);
        s.amplitude = amp;
        s.task_exponent = nu;
        s.kind = KernelKind::objective;
        s.validate();
        return s;
    }

    static KernelSpec cost(Eigen::VectorXd ls, double amp = 1.0, double lambda = 1.0) {
        KernelSpec s;
        s.lengthscales = std::move(ls);
        s.amplitude = amp;
        s.task_exponent = lambda;
        s.kind = KernelKind::cost;
        s.validate();
        return s;
    }

    void validate() const {
        if (lengthscales.size() == 0)
            throw Error(Errc::invalid_argument, "kernel needs at least one lengthscale");
        if ((lengthscales.array() <= 0.0).any())
            throw Error(Errc::invalid_argument, "lengthscales must be positive");
        if (!(amplitude > 0.0)) throw Error(Errc::invalid_argument, "amplitude must be positive");
        if (!(task_exponent > 0.0))
            throw Error(Errc::invalid_argument, "task exponent must be positive");
    }
};

/// Matern 5/2: amplitude^2 (1 + sqrt5 r + 5 r^2/3) exp(-sqrt5 r),
/// r the lengthscale-scaled Euclidean distance.
inline double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& lengthscales, double amplitude) {
    if (a.size() != b.size() || a.size() != lengthscales.size())
        throw Error(Errc::dimension_mismatch,
                    "matern52 inputs of dims " + std::to_string(a.size()) + ", " +
                        std::to_string(b.size()) + ", " + std::to_string(lengthscales.size()));
    if ((lengthscales.array() <= 0.0).any())
        throw Error(Errc::invalid_argument, "lengthscales must be positive");
    static constexpr double sqrt5 = 2.23606797749978969640917366873;
    const double r2 = ((a - b).array() / lengthscales.array()).square().sum();
    const double r = std::sqrt(r2);
    return amplitude * amplitude * (1.0 + sqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-sqrt5 * r);
}

inline double matern52(const ConfigPoint& a, const ConfigPoint& b,
                       const Eigen::VectorXd& lengthscales, double amplitude) {
    return matern52(a.coords, b.coords, lengthscales, amplitude);
}

/// Task factor (1-t)^nu (1-t')^nu + 1: fidelities decorrelate from the target
/// task as t moves away from 1; exactly 1 at t = t' = 1.
inline double task_factor_objective(double t, double t2, double nu) {
    if (!(t >= 0.0 && t <= 1.0) || !(t2 >= 0.0 && t2 <= 1.0))
        throw Error(Errc::invalid_argument, "task values must lie in [0,1]");
    return std::pow(1.0 - t, nu) * std::pow(1.0 - t2, nu) + 1.0;
}

/// Task factor t^lambda t'^lambda + 1: cost grows with the task variable;
/// exactly 1 at t = t' = 0.
inline double task_factor_cost(double t, double t2, double lambda) {
    if (!(t >= 0.0 && t <= 1.0) || !(t2 >= 0.0 && t2 <= 1.0))
        throw Error(Errc::invalid_argument, "task values must lie in [0,1]");
    return std::pow(t, lambda) * std::pow(t2, lambda) + 1.0;
}

inline double kernel_objective(const ConfigPoint& x, TaskValue t, const ConfigPoint& x2,
                               TaskValue t2, const KernelSpec& spec) {
    if (spec.kind != KernelKind::objective)
        throw Error(Errc::invalid_argument, "kernel_objective requires an objective-kind spec");
    return matern52(x, x2, spec.lengthscales, spec.amplitude) *
           task_factor_objective(t.t, t2.t, spec.task_exponent);
}

inline double kernel_cost(const ConfigPoint& x, TaskValue t, const ConfigPoint& x2, TaskValue t2,
                          const KernelSpec& spec) {
    if (spec.kind != KernelKind::cost)
        throw Error(Errc::invalid_argument, "kernel_cost requires a cost-kind spec");
    return matern52(x, x2, spec.lengthscales, spec.amplitude) *
           task_factor_cost(t.t, t2.t, spec.task_exponent);
}

/// Dispatch on spec.kind.
inline double kernel_value(const KernelSpec& spec, const ConfigPoint& x, TaskValue t,
                           const ConfigPoint& x2, TaskValue t2) {
    return spec.kind == KernelKind::objective ? kernel_objective(x, t, x2, t2, spec)
                                              : kernel_cost(x, t, x2, t2, spec);
}

} // namespace ibo
