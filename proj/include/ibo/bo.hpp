#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ibo/acquisition.hpp"
#include "ibo/common.hpp"
#include "ibo/mcmc.hpp"
#include "ibo/problems.hpp"

namespace ibo {

enum class StrategyKind { ibo, es, es_is, fabolas, fabolas_is, random_search };

inline const char* strategy_kind_names() {
    return "ibo, es, es_is, fabolas, fabolas_is, random";
}

struct Strategy {
    StrategyKind kind = StrategyKind::ibo;
    /// Normalized s_B grid the *_is baselines draw from (s_B in {2..6}).
    std::vector<double> is_task_grid = {0.0, 0.25, 0.5, 0.75, 1.0};

    static Strategy parse(const std::string& name) {
        Strategy s;
        if (name == "ibo") s.kind = StrategyKind::ibo;
        else if (name == "es") s.kind = StrategyKind::es;
        else if (name == "es_is") s.kind = StrategyKind::es_is;
        else if (name == "fabolas") s.kind = StrategyKind::fabolas;
        else if (name == "fabolas_is") s.kind = StrategyKind::fabolas_is;
        else if (name == "random") s.kind = StrategyKind::random_search;
        else
            throw Error(Errc::parse_error, "unknown strategy '" + name + "'; valid kinds: " +
                                               strategy_kind_names());
        return s;
    }

    std::string name() const {
        switch (kind) {
            case StrategyKind::ibo: return "ibo";
            case StrategyKind::es: return "es";
            case StrategyKind::es_is: return "es_is";
            case StrategyKind::fabolas: return "fabolas";
            case StrategyKind::fabolas_is: return "fabolas_is";
            case StrategyKind::random_search: return "random";
        }
        return "?";
    }

    /// Whether the acquisition divides by the predicted evaluation cost.
    bool cost_aware() const {
        return kind == StrategyKind::ibo || kind == StrategyKind::fabolas ||
               kind == StrategyKind::fabolas_is;
    }

    /// Whether the GPs see the true task values; single-task baselines fit
    /// everything at the target task.
    bool multi_task() const { return cost_aware(); }

    TaskSemantics semantics(TaskSemantics problem_default) const {
        if (kind == StrategyKind::fabolas || kind == StrategyKind::fabolas_is)
            return problem_default == TaskSemantics::none ? TaskSemantics::none
                                                          : TaskSemantics::dataset_fraction;
        return problem_default;
    }
};

enum class InitScheme { max_task, ladder };

struct RunConfig {
    int n_init = 5;
    int n_bo = 30;
    std::uint64_t seed = 0;
    InitScheme init_scheme = InitScheme::max_task;
    AcquisitionConfig acq;
    HyperPriors priors;
    McmcSettings mcmc;
    int ensemble_size = 10;
    int trainer_epochs = 0;  // 0 keeps the problem's default

    void validate() const {
        if (n_init < 2) throw Error(Errc::invalid_argument, "n_init must be >= 2");
        if (n_bo < 0) throw Error(Errc::invalid_argument, "n_bo must be >= 0");
        if (ensemble_size < 1) throw Error(Errc::invalid_argument, "ensemble size must be >= 1");
        acq.validate();
        priors.validate();
    }
};

/// One line of the run trace. x and the task value are stored denormalized.
struct TraceRecord {
    int schema_version = 1;
    int iter = 0;
    Eigen::VectorXd x;
    double task = 1.0;
    double y = 0.0;
    double cost = 0.0;
    double cum_cost = 0.0;
    Eigen::VectorXd incumbent_x;
    double incumbent_pred = 0.0;
    double incumbent_true = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
    std::vector<TraceRecord> trace;
    bool completed = true;
    std::string abort_reason;
};

/// Latin hypercube design in normalized space: in every dimension exactly one
/// point per stratum [k/n, (k+1)/n).
inline std::vector<ConfigPoint> latin_hypercube(int dim, int n, RngStream& rng) {
    if (dim < 1) throw Error(Errc::invalid_argument, "dimension must be >= 1");
    if (n < 1) throw Error(Errc::invalid_argument, "sample count must be >= 1");
    Eigen::MatrixXd u(n, dim);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int d = 0; d < dim; ++d) {
        for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
        for (int i = n - 1; i > 0; --i) {
            const auto j = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(i + 1)));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        }
        for (int i = 0; i < n; ++i)
            u(i, d) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform()) /
                      static_cast<double>(n);
    }
    std::vector<ConfigPoint> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pts.emplace_back(u.row(i).transpose());
    return pts;
}

/// The (config, task) pairs of the initial design. max_task evaluates every
/// LHS config at the target task; the ladder scheme (Fabolas variants)
/// evaluates each config on the fraction ladder {1/128, 1/64, 1/32, 1/16}.
inline std::vector<std::pair<ConfigPoint, TaskValue>> initial_design(const Strategy& strategy,
                                                                     int dim,
                                                                     const RunConfig& cfg,
                                                                     RngStream& rng) {
    const std::vector<ConfigPoint> configs = latin_hypercube(dim, cfg.n_init, rng);
    std::vector<std::pair<ConfigPoint, TaskValue>> out;
    if (cfg.init_scheme == InitScheme::ladder) {
        if (strategy.kind != StrategyKind::fabolas && strategy.kind != StrategyKind::fabolas_is)
            throw Error(Errc::invalid_argument,
                        "ladder initialization applies to the fabolas variants only");
        for (const auto& x : configs)
            for (double s : {1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0})
                out.emplace_back(x, TaskValue{task_from_dataset_fraction(s)});
    } else {
        for (const auto& x : configs) out.emplace_back(x, TaskValue{1.0});
    }
    return out;
}

/// Best observed configuration by ensemble-averaged predicted value at the
/// target task; ties break to the earliest observation.
inline std::pair<ConfigPoint, double> incumbent(const GPEnsemble& ens,
                                                const std::vector<Observation>& history) {
    if (history.empty()) throw Error(Errc::invalid_argument, "incumbent needs history");
    ens.validate();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < history.size(); ++i) {
        bool seen = false;
        for (std::size_t j = 0; j < i; ++j)
            if (history[j].x.coords == history[i].x.coords) {
                seen = true;
                break;
            }
        if (seen) continue;
        const double pred = ens.mean_prediction(history[i].x, TaskValue{1.0});
        if (pred < best) {
            best = pred;
            best_i = i;
        }
    }
    return {history[best_i].x, best};
}

namespace detail {

inline std::vector<Observation> gp_view(const Strategy& strategy,
                                        const std::vector<Observation>& obs) {
    if (strategy.multi_task()) return obs;
    std::vector<Observation> mapped = obs;
    for (auto& o : mapped) o.t = TaskValue{1.0};
    return mapped;
}

inline std::vector<double> fabolas_task_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 7; ++k) grid.push_back(static_cast<double>(k) / 7.0);
    return grid;
}

inline double denormalized_task(TaskSemantics sem, double t) {
    switch (sem) {
        case TaskSemantics::presample_factor: return presample_factor_from_task(t);
        case TaskSemantics::dataset_fraction: return dataset_fraction_from_task(t);
        case TaskSemantics::none: return t;
    }
    return t;
}

} // namespace detail

struct BoState {
    GPEnsemble ens_f;
    std::optional<GPEnsemble> ens_c;
    int dim = 0;
};

/// One outer-loop proposal. ibo searches (x, t) jointly under cost
/// normalization; es fixes t = 1; the *_is baselines attach a uniformly drawn
/// presample grid value; fabolas searches (x, fraction).
inline std::pair<ConfigPoint, TaskValue> propose(const Strategy& strategy, const BoState& state,
                                                 const AcquisitionConfig& acq, RngStream& rng) {
    switch (strategy.kind) {
        case StrategyKind::ibo:
            return maximize_acquisition(state.ens_f, &*state.ens_c, state.dim, acq, rng);
        case StrategyKind::es: {
            AcquisitionConfig a = acq;
            a.task_grid = {1.0};
            return maximize_acquisition(state.ens_f, nullptr, state.dim, a, rng);
        }
        case StrategyKind::es_is: {
            AcquisitionConfig a = acq;
            a.task_grid = {1.0};
            auto [x, t] = maximize_acquisition(state.ens_f, nullptr, state.dim, a, rng);
            (void)t;
            const auto& grid = strategy.is_task_grid;
            return {x, TaskValue{grid[rng.uniform_index(grid.size())]}};
        }
        case StrategyKind::fabolas:
        case StrategyKind::fabolas_is: {
            AcquisitionConfig a = acq;
            a.task_grid = detail::fabolas_task_grid();
            return maximize_acquisition(state.ens_f, &*state.ens_c, state.dim, a, rng);
        }
        case StrategyKind::random_search: {
            Eigen::VectorXd c(state.dim);
            for (int k = 0; k < state.dim; ++k) c[k] = rng.uniform();
            return {ConfigPoint{std::move(c)}, TaskValue{1.0}};
        }
    }
    throw Error(Errc::invalid_argument, "unhandled strategy kind");
}

/// Run the full outer loop: initial design, then n_bo rounds of
/// fit / propose / evaluate / refit / incumbent. Deterministic given the seed
/// except for measured wall-cost fields. A GP failure aborts with the partial
/// trace. `on_record` (optional) observes each trace record as it is written.
inline RunResult run_bo(const Strategy& strategy, const Problem& problem, const RunConfig& cfg,
                        const std::function<void(const TraceRecord&)>& on_record = {}) {
    cfg.validate();
    problem.space.validate();
    RngStream rng(cfg.seed);

    Problem prob = problem;
    if (cfg.trainer_epochs > 0 && prob.dataset) prob.dataset->epochs = cfg.trainer_epochs;
    const TaskSemantics sem = strategy.semantics(prob.task_semantics);

    RunResult result;
    std::vector<Observation> obs;
    double cum_cost = 0.0;

    const auto make_policy = [&](RngStream& eval_rng) {
        EvalPolicy policy;
        policy.semantics = sem;
        switch (strategy.kind) {
            case StrategyKind::ibo:
            case StrategyKind::es_is: policy.use_is = true; break;
            case StrategyKind::fabolas_is: {
                policy.use_is = true;
                const auto& grid = strategy.is_task_grid;
                policy.forced_presample_factor = presample_factor_from_task(
                    grid[eval_rng.uniform_index(grid.size())]);
                break;
            }
            default: policy.use_is = false; break;
        }
        return policy;
    };

    const auto record_eval = [&](int iter, const ConfigPoint& x, TaskValue t,
                                 const EvalResult& res) {
        Observation o;
        o.x = x;
        o.t = t;
        o.y = res.y;
        o.cost = res.fit_cost;  // deterministic; the trace keeps the wall cost
        o.validate();
        obs.push_back(o);
        cum_cost += res.cost;
        TraceRecord rec;
        rec.iter = iter;
        rec.x = prob.space.denormalize(x.coords);
        rec.task = detail::denormalized_task(sem, t.t);
        rec.y = res.y;
        rec.cost = res.cost;
        rec.cum_cost = cum_cost;
        result.trace.push_back(std::move(rec));
    };

    const auto stamp_incumbent = [&](TraceRecord& rec, const GPEnsemble& ens) {
        auto [inc_x, pred] = incumbent(ens, obs);
        rec.incumbent_x = prob.space.denormalize(inc_x.coords);
        rec.incumbent_pred = pred;
        if (prob.is_synthetic()) rec.incumbent_true = prob.true_value(inc_x);
    };

    const auto fit_both = [&](RngStream fit_rng) {
        const std::vector<Observation> view = detail::gp_view(strategy, obs);
        BoState state;
        state.dim = prob.space.dim();
        RngStream rf = fit_rng.split(0);
        RngStream rc = fit_rng.split(1);
        state.ens_f = fit_ensemble(view, KernelKind::objective, cfg.priors, cfg.ensemble_size, rf,
                                   cfg.mcmc);
        state.ens_c =
            fit_ensemble(view, KernelKind::cost, cfg.priors, cfg.ensemble_size, rc, cfg.mcmc);
        return state;
    };

    // ---- initial design
    RngStream lhs_rng = rng.split(1);
    const auto design = initial_design(strategy, prob.space.dim(), cfg, lhs_rng);
    for (std::size_t i = 0; i < design.size(); ++i) {
        RngStream eval_rng = rng.split(100 + i);
        const EvalPolicy policy = make_policy(eval_rng);
        const EvalResult res =
            evaluate_problem(prob, design[i].first, design[i].second, policy, eval_rng);
        record_eval(static_cast<int>(i), design[i].first, design[i].second, res);
    }

    BoState state;
    try {
        state = fit_both(rng.split(3000));
    } catch (const Error& e) {
        // stamp best-observed incumbents so the partial trace stays readable
        std::size_t best = 0;
        for (std::size_t i = 1; i < obs.size(); ++i)
            if (obs[i].y < obs[best].y) best = i;
        for (auto& rec : result.trace) {
            rec.incumbent_x = prob.space.denormalize(obs[best].x.coords);
            rec.incumbent_pred = obs[best].y;
            if (prob.is_synthetic()) rec.incumbent_true = prob.true_value(obs[best].x);
            if (on_record) on_record(rec);
        }
        result.completed = false;
        result.abort_reason = e.what();
        return result;
    }
    for (auto& rec : result.trace) {
        stamp_incumbent(rec, state.ens_f);
        if (on_record) on_record(rec);
    }

    // ---- outer loop
    for (int i = 1; i <= cfg.n_bo; ++i) {
        try {
            RngStream prop_rng = rng.split(1000 + static_cast<std::uint64_t>(i));
            const auto [x, t] = propose(strategy, state, cfg.acq, prop_rng);
            RngStream eval_rng = rng.split(2000 + static_cast<std::uint64_t>(i));
            const EvalPolicy policy = make_policy(eval_rng);
            const EvalResult res = evaluate_problem(prob, x, t, policy, eval_rng);
            record_eval(static_cast<int>(design.size()) + i - 1, x, t, res);
            state = fit_both(rng.split(3000 + static_cast<std::uint64_t>(i)));
            stamp_incumbent(result.trace.back(), state.ens_f);
            if (on_record) on_record(result.trace.back());
        } catch (const Error& e) {
            result.completed = false;
            result.abort_reason = e.what();
            break;
        }
    }
    return result;
}

} // namespace ibo
