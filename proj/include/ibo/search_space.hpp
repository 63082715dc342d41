#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "ibo/common.hpp"

namespace ibo {

enum class Scale { linear, logarithmic };
enum class DimKind { continuous, integer };

struct SpaceDim {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    Scale scale = Scale::linear;
    DimKind kind = DimKind::continuous;
};

/// Bounded hyperparameter box. The engine works in normalized [0,1]^d space;
/// log-scaled dimensions normalize after the log transform.
struct SearchSpace {
    std::vector<SpaceDim> dims;

    int dim() const { return static_cast<int>(dims.size()); }

    void validate() const {
        if (dims.empty()) throw Error(Errc::invalid_argument, "search space must be nonempty");
        for (const auto& d : dims) {
            if (!(d.lower < d.upper))
                throw Error(Errc::invalid_argument,
                            "dimension '" + d.name + "': lower bound must be < upper bound");
            if (d.scale == Scale::logarithmic && !(d.lower > 0.0))
                throw Error(Errc::invalid_argument,
                            "dimension '" + d.name + "': log scale requires lower bound > 0");
        }
    }

    Eigen::VectorXd denormalize(const Eigen::VectorXd& u) const {
        if (u.size() != dim())
            throw Error(Errc::dimension_mismatch, "point/space dimension mismatch");
        Eigen::VectorXd v(u.size());
        for (int i = 0; i < dim(); ++i) {
            const auto& d = dims[static_cast<std::size_t>(i)];
            double x;
            if (d.scale == Scale::logarithmic) {
                const double lo = std::log(d.lower), hi = std::log(d.upper);
                x = std::exp(lo + u[i] * (hi - lo));
            } else {
                x = d.lower + u[i] * (d.upper - d.lower);
            }
            if (d.kind == DimKind::integer)
                x = std::min(d.upper, std::max(d.lower, std::round(x)));
            v[i] = x;
        }
        return v;
    }

    Eigen::VectorXd normalize(const Eigen::VectorXd& v) const {
        if (v.size() != dim())
            throw Error(Errc::dimension_mismatch, "point/space dimension mismatch");
        Eigen::VectorXd u(v.size());
        for (int i = 0; i < dim(); ++i) {
            const auto& d = dims[static_cast<std::size_t>(i)];
            if (d.scale == Scale::logarithmic)
                u[i] = (std::log(v[i]) - std::log(d.lower)) /
                       (std::log(d.upper) - std::log(d.lower));
            else
                u[i] = (v[i] - d.lower) / (d.upper - d.lower);
        }
        return u;
    }
};

} // namespace ibo
