// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ibo/ibo.hpp"

using namespace ibo;

namespace {

Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x << v;
    return x;
}

Observation make_obs(Eigen::VectorXd x, double t, double y, double cost = 1.0) {
    Observation o;
    o.x = ConfigPoint{std::move(x)};
    o.t = TaskValue{t};
    o.y = y;
    o.cost = cost;
    return o;
}

struct Outcome {
    bool ok = true;
    std::string detail;
};

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << what;
        }
    }
};

std::vector<double> flatten_grads(const MlpGrads& g) {
    std::vector<double> out;
    for (std::size_t l = 0; l < g.w.size(); ++l) {
        for (Eigen::Index i = 0; i < g.w[l].size(); ++i) out.push_back(g.w[l].data()[i]);
        for (Eigen::Index i = 0; i < g.bias[l].size(); ++i) out.push_back(g.bias[l].data()[i]);
    }
    return out;
}

// ---------------------------------------------------------------- criterion 1
Outcome gp_oracle_equivalence() {
    Check c;
    RngStream rng(101);
    for (int ds = 0; ds < 20; ++ds) {
        std::vector<Observation> data;
        for (int i = 0; i < 18; ++i) {
            Eigen::VectorXd x(3);
            for (int k = 0; k < 3; ++k) x[k] = rng.uniform();
            data.push_back(make_obs(std::move(x), rng.uniform(), rng.normal(), 1.0));
        }
        Eigen::VectorXd ls(3);
        ls << 0.3 + rng.uniform(), 0.3 + rng.uniform(), 0.3 + rng.uniform();
        const auto spec = KernelSpec::objective(ls, 0.8 + rng.uniform(), 2.0);
        const double noise = 0.01 + 0.05 * rng.uniform();
        const GPModel model = gp_fit(data, spec, noise);

        const auto n = static_cast<Eigen::Index>(data.size());
        Eigen::MatrixXd gram(n, n);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y[i] = data[static_cast<std::size_t>(i)].y;
            for (Eigen::Index j = 0; j < n; ++j)
                gram(i, j) = kernel_objective(data[static_cast<std::size_t>(i)].x,
                                              data[static_cast<std::size_t>(i)].t,
                                              data[static_cast<std::size_t>(j)].x,
                                              data[static_cast<std::size_t>(j)].t, spec);
        }
        gram.diagonal().array() += noise + model.jitter();
        const Eigen::MatrixXd inv = gram.inverse();

        for (int q = 0; q < 10; ++q) {
            Eigen::VectorXd xq(3);
            for (int k = 0; k < 3; ++k) xq[k] = rng.uniform();
            const ConfigPoint cq{xq};
            const TaskValue tq{rng.uniform()};
            Eigen::VectorXd kq(n);
            for (Eigen::Index i = 0; i < n; ++i)
                kq[i] = kernel_objective(data[static_cast<std::size_t>(i)].x,
                                         data[static_cast<std::size_t>(i)].t, cq, tq, spec);
            const double mean_ref = kq.dot(inv * y);
            const double var_ref =
                std::max(kernel_objective(cq, tq, cq, tq, spec) - kq.dot(inv * kq), 1e-12);
            const auto post = model.posterior(cq, tq);
            const double mean_err =
                std::abs(post.mean - mean_ref) / std::max(1.0, std::abs(mean_ref));
            const double var_err = std::abs(post.var - var_ref) / std::max(1.0, var_ref);
            c.expect(mean_err < 1e-8, "mean mismatch " + std::to_string(mean_err));
            c.expect(var_err < 1e-8, "var mismatch " + std::to_string(var_err));
        }
    }
    return {c.ok, c.detail.str()};
}

// ---------------------------------------------------------------- criterion 2
Outcome kernel_endpoint_identities() {
    Check c;
    c.expect(task_factor_objective(1.0, 1.0, 2.0) == 1.0, "objective factor at t=t'=1 not 1");
    c.expect(task_factor_objective(0.0, 0.0, 2.0) == 2.0, "objective factor at t=t'=0 not 2");
    c.expect(task_factor_cost(1.0, 1.0, 1.0) == 2.0, "cost factor at t=t'=1 not 2");
    c.expect(task_factor_cost(0.0, 0.0, 1.0) == 1.0, "cost factor at t=t'=0 not 1");

    RngStream rng(202);
    const int n = 50;
    Eigen::VectorXd ls(2);
    ls << 0.35, 0.8;
    const auto obj = KernelSpec::objective(ls, 1.0, 2.0);
    const auto cst = KernelSpec::cost(ls, 1.0, 1.0);
    std::vector<ConfigPoint> xs;
    std::vector<TaskValue> ts;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x(2);
        x << rng.uniform(), rng.uniform();
        xs.emplace_back(std::move(x));
        ts.emplace_back(rng.uniform());
    }
    for (const auto* spec : {&obj, &cst}) {
        Eigen::MatrixXd gram(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                gram(i, j) = kernel_value(*spec, xs[static_cast<std::size_t>(i)],
                                          ts[static_cast<std::size_t>(i)],
                                          xs[static_cast<std::size_t>(j)],
                                          ts[static_cast<std::size_t>(j)]);
        const double min_eig =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().minCoeff();
        c.expect(min_eig >= -1e-8,
                 "Gram min eigenvalue " + std::to_string(min_eig) + " below -1e-8");
    }
    return {c.ok, c.detail.str()};
}

// ---------------------------------------------------------------- criterion 3
Outcome is_unbiasedness() {
    Check c;
    RngStream rng(303);
    const MlpModel model = [&] {
        RngStream r(17);
        return MlpModel::init({2, 2}, r);  // 8 parameters
    }();
    for (int rep = 0; rep < 100; ++rep) {
        const int big_b = 2 + static_cast<int>(rng.uniform_index(7));  // B in 2..8
        Batch pre;
        pre.features.resize(big_b, 2);
        for (Eigen::Index i = 0; i < big_b; ++i)
            for (Eigen::Index j = 0; j < 2; ++j) pre.features(i, j) = rng.normal();
        for (int i = 0; i < big_b; ++i)
            pre.labels.push_back(static_cast<int>(rng.uniform_index(2)));
        Eigen::VectorXd scores(big_b);
        for (int i = 0; i < big_b; ++i) scores[i] = 0.05 + rng.uniform();
        const Eigen::VectorXd p = importance_distribution(scores);

        MlpGrads expectation = MlpGrads::zeros_like(model);
        for (int i = 0; i < big_b; ++i) {
            Batch row;
            row.features = pre.features.row(i);
            row.labels = {pre.labels[static_cast<std::size_t>(i)]};
            const auto [loss, g] = mlp_forward_backward(model, row, 0.0);
            (void)loss;
            // weight of outcome i times its probability
            expectation.add_scaled(g, p[i] * (1.0 / (static_cast<double>(big_b) * p[i])));
        }
        const auto [loss, mean_grad] = mlp_forward_backward(model, pre, 0.0);
        (void)loss;
        const auto ev = flatten_grads(expectation);
        const auto mv = flatten_grads(mean_grad);
        for (std::size_t i = 0; i < ev.size(); ++i)
            c.expect(std::abs(ev[i] - mv[i]) < 1e-12,
                     "unbiasedness gap " + std::to_string(std::abs(ev[i] - mv[i])));
        if (!c.ok) break;
    }
    return {c.ok, c.detail.str()};
}

// ---------------------------------------------------------------- criterion 4
Outcome is_variance_dominance() {
    Check c;
    RngStream rng(404);
    const MlpModel model = [&] {
        RngStream r(18);
        return MlpModel::init({2, 2}, r);
    }();
    for (int rep = 0; rep < 100; ++rep) {
        const int big_b = 2 + static_cast<int>(rng.uniform_index(7));
        Batch pre;
        pre.features.resize(big_b, 2);
        for (Eigen::Index i = 0; i < big_b; ++i)
            for (Eigen::Index j = 0; j < 2; ++j) pre.features(i, j) = 2.0 * rng.normal();
        for (int i = 0; i < big_b; ++i)
            pre.labels.push_back(static_cast<int>(rng.uniform_index(2)));

        std::vector<Eigen::VectorXd> grads;
        Eigen::VectorXd norms(big_b);
        for (int i = 0; i < big_b; ++i) {
            Batch row;
            row.features = pre.features.row(i);
            row.labels = {pre.labels[static_cast<std::size_t>(i)]};
            const auto [loss, g] = mlp_forward_backward(model, row, 0.0);
            (void)loss;
            const auto flat = flatten_grads(g);
            Eigen::VectorXd v(static_cast<Eigen::Index>(flat.size()));
            for (std::size_t k = 0; k < flat.size(); ++k) v[static_cast<Eigen::Index>(k)] = flat[k];
            grads.push_back(v);
            norms[i] = v.norm();
        }
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(grads[0].size());
        for (const auto& g : grads) mean += g / static_cast<double>(big_b);

        // single-sample estimators: IS draws i with p_i ~ ||g_i||, weight
        // 1/(B p_i); uniform draws i with 1/B, weight 1
        const double bsz = static_cast<double>(big_b);
        const double norm_sum = norms.sum();
        double tr_is;
        if (norm_sum < 1e-300) {
            tr_is = -mean.squaredNorm();
        } else {
            tr_is = 0.0;
            for (int i = 0; i < big_b; ++i) {
                if (norms[i] <= 0.0) continue;  // never sampled, weight finite
                const double p = norms[i] / norm_sum;
                tr_is += p * grads[static_cast<std::size_t>(i)].squaredNorm() / (bsz * bsz * p * p);
            }
            tr_is -= mean.squaredNorm();
        }
        double tr_uniform = 0.0;
        for (const auto& g : grads) tr_uniform += g.squaredNorm() / bsz;
        tr_uniform -= mean.squaredNorm();

        c.expect(tr_is <= tr_uniform + 1e-12,
                 "IS trace-variance " + std::to_string(tr_is) + " exceeds uniform " +
                     std::to_string(tr_uniform));
        if (!c.ok) break;
    }
    return {c.ok, c.detail.str()};
}

// ---------------------------------------------------------------- criterion 5
Outcome dosgd_decisions() {
    Check c;
    for (int b = 1; b <= 8; ++b)
        for (int big_b = b; big_b <= 4 * b + 8; ++big_b) {
            const auto d = do_sgd_test(Eigen::VectorXd::Constant(big_b, 1.0), big_b, b);
            c.expect(std::abs(d.tau - 1.0) < 1e-12, "uniform tau != 1");
            c.expect(!d.use_is, "uniform scores triggered IS");
        }

    Eigen::VectorXd spike(4);
    spike << 1.0, 0.0, 0.0, 0.0;
    const auto d = do_sgd_test(spike, 4, 1);
    c.expect(std::abs(d.tau - 4.0) < 1e-12, "spike tau != 4");
    c.expect(std::abs(d.threshold - 7.0 / 3.0) < 1e-12, "threshold != 7/3");
    c.expect(d.use_is, "spike did not trigger IS");

    RngStream rng(505);
    for (int rep = 0; rep < 50; ++rep) {
        const int big_b = 3 + static_cast<int>(rng.uniform_index(6));
        Eigen::VectorXd s(big_b);
        for (int i = 0; i < big_b; ++i) s[i] = 0.1 + rng.uniform();
        const double tau = do_sgd_test(s, big_b, 1).tau;
        c.expect(do_sgd_test(8.0 * s, big_b, 1).tau == tau, "power-of-two rescale not exact");
        c.expect(do_sgd_test(0.25 * s, big_b, 1).tau == tau, "power-of-two rescale not exact");
    }
    return {c.ok, c.detail.str()};
}

// ---------------------------------------------------------------- criterion 6
Outcome gradient_correctness() {
    Check c;
    RngStream rng(606);
    for (int net = 0; net < 20; ++net) {
        const int d = 2 + static_cast<int>(rng.uniform_index(3));
        const int h = 2 + static_cast<int>(rng.uniform_index(4));
        const int classes = 2 + static_cast<int>(rng.uniform_index(2));
        MlpModel m = MlpModel::init({d, h, classes}, rng);
        Batch batch;
        const int nb = 3 + static_cast<int>(rng.uniform_index(4));
        batch.features.resize(nb, d);
        for (Eigen::Index i = 0; i < nb; ++i)
            for (Eigen::Index j = 0; j < d; ++j) batch.features(i, j) = rng.normal();
        for (int i = 0; i < nb; ++i)
            batch.labels.push_back(static_cast<int>(rng.uniform_index(classes)));
        const double l2 = rng.uniform() < 0.5 ? 0.0 : 0.02;

        const auto [loss0, grads] = mlp_forward_backward(m, batch, l2);
        (void)loss0;
        const std::vector<double> analytic = flatten_grads(grads);

        const double step = 1e-5;
        std::size_t k = 0;
        const auto check_param = [&](double* ptr) {
            const double saved = *ptr;
            *ptr = saved + step;
            const double fp = mlp_forward_backward(m, batch, l2).first;
            *ptr = saved - step;
            const double fm = mlp_forward_backward(m, batch, l2).first;
            *ptr = saved;
            const double fd = (fp - fm) / (2.0 * step);
            const double rel = std::abs(analytic[k] - fd) /
                               std::max({1.0, std::abs(analytic[k]), std::abs(fd)});
            c.expect(rel <= 1e-5, "gradient rel err " + std::to_string(rel));
            ++k;
        };
        for (std::size_t l = 0; l < m.w.size(); ++l) {
            for (Eigen::Index i = 0; i < m.w[l].size(); ++i) check_param(m.w[l].data() + i);
            for (Eigen::Index i = 0; i < m.bias[l].size(); ++i) check_param(m.bias[l].data() + i);
        }
        if (!c.ok) break;
    }
    return {c.ok, c.detail.str()};
}

// ---------------------------------------------------------------- criterion 7
Outcome pmin_validity() {
    Check c;
    GPEnsemble sym;
    sym.members.emplace_back(
        std::vector<Observation>{make_obs(vec1(0.25), 1.0, 0.5), make_obs(vec1(0.75), 1.0, 0.5)},
        KernelSpec::objective(vec1(0.15), 1.0, 2.0), 1e-2);
    RepresenterSet reps;
    reps.points.push_back(ConfigPoint{vec1(0.25)});
    reps.points.push_back(ConfigPoint{vec1(0.75)});
    RngStream rng(707);
    const auto p = estimate_pmin(sym, reps, 10000, rng);
    c.expect(std::abs(p.probs.sum() - 1.0) <= 1e-12, "p_min does not sum to 1");
    c.expect(std::abs(p.probs[0] - 0.5) <= 0.05, "symmetric p[0]=" + std::to_string(p.probs[0]));
    c.expect(std::abs(p.probs[1] - 0.5) <= 0.05, "symmetric p[1]=" + std::to_string(p.probs[1]));

    // representers at the observed points: posterior sd ~ 0.1, gap = 10 sd
    GPEnsemble dom;
    dom.members.emplace_back(
        std::vector<Observation>{make_obs(vec1(0.2), 1.0, 0.0), make_obs(vec1(0.8), 1.0, 1.0)},
        KernelSpec::objective(vec1(0.05), 1.0, 2.0), 1e-2);
    RngStream rng2(708);
    RepresenterSet dom_reps;
    dom_reps.points.push_back(ConfigPoint{vec1(0.2)});
    dom_reps.points.push_back(ConfigPoint{vec1(0.8)});
    const auto p2 = estimate_pmin(dom, dom_reps, 10000, rng2);
    c.expect(p2.probs[1] < 0.01, "dominated mass " + std::to_string(p2.probs[1]));
    return {c.ok, c.detail.str()};
}

// ---------------------------------------------------------------- criterion 8
Outcome entropy_reduction_sanity() {
    Check c;
    std::vector<Observation> data;
    for (double x : {0.05, 0.2, 0.3, 0.4, 0.55, 0.7, 0.9})
        data.push_back(make_obs(vec1(x), 1.0, 4.0 * (x - 0.3) * (x - 0.3)));
    GPEnsemble ens;
    ens.members.emplace_back(data, KernelSpec::objective(vec1(0.15), 1.0, 2.0), 1e-8);
    RepresenterSet reps;
    for (double x : {0.1, 0.25, 0.3, 0.35, 0.5, 0.8}) reps.points.push_back(ConfigPoint{vec1(x)});
    AcquisitionConfig cfg;
    cfg.n_mc = 400;
    cfg.n_fantasy = 6;

    std::vector<double> vals;
    for (int s = 0; s < 10; ++s) {
        RngStream rng(static_cast<std::uint64_t>(800 + s));
        vals.push_back(
            expected_entropy_reduction(ens, ConfigPoint{vec1(0.3)}, TaskValue{1.0}, reps, cfg, rng));
    }
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
    double varsum = 0.0;
    for (double v : vals) varsum += (v - mean) * (v - mean);
    const double sem = std::sqrt(varsum / vals.size() / vals.size());
    c.expect(std::abs(mean) <= std::max(2.0 * sem, 2e-3),
             "reduction at known point = " + std::to_string(mean));

    std::vector<Observation> half;
    for (double x : {0.05, 0.2, 0.35, 0.5})
        half.push_back(make_obs(vec1(x), 1.0, 2.0 * (x - 0.27) * (x - 0.27) + 0.1));
    GPEnsemble ens2;
    ens2.members.emplace_back(half, KernelSpec::objective(vec1(0.06), 1.0, 2.0), 1e-3);
    RepresenterSet reps2;
    for (double x : {0.1, 0.2, 0.25, 0.3, 0.35, 0.45})
        reps2.points.push_back(ConfigPoint{vec1(x)});
    AcquisitionConfig cfg2;
    cfg2.n_mc = 400;
    cfg2.n_fantasy = 6;
    int wins = 0;
    for (int s = 0; s < 20; ++s) {
        RngStream r1(static_cast<std::uint64_t>(900 + s));
        RngStream r2(static_cast<std::uint64_t>(900 + s));
        const double informative = expected_entropy_reduction(
            ens2, ConfigPoint{vec1(0.27)}, TaskValue{1.0}, reps2, cfg2, r1);
        const double remote = expected_entropy_reduction(ens2, ConfigPoint{vec1(0.99)},
                                                         TaskValue{1.0}, reps2, cfg2, r2);
        if (informative > remote) ++wins;
    }
    c.expect(wins >= 18, "informative beat remote only " + std::to_string(wins) + "/20");
    return {c.ok, c.detail.str()};
}

RunConfig synthetic_bench_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.n_init = 5;
    cfg.n_bo = 30;
    cfg.ensemble_size = 4;
    cfg.mcmc.burn_in = 25;
    cfg.mcmc.thinning = 2;
    cfg.acq.n_representers = 16;
    cfg.acq.n_mc = 48;
    cfg.acq.n_fantasy = 4;
    cfg.acq.n_candidates = 60;
    return cfg;
}

// ---------------------------------------------------------------- criterion 9
Outcome synthetic_benchmark() {
    Check c;
    const Problem problem = make_problem("branin-mf");
    const double f_min = problem.synthetic->f_min;
    std::vector<double> regret_ibo, regret_random, regret_es;

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::map<std::string, std::vector<TraceRecord>> traces;
        for (const char* name : {"ibo", "random", "es"}) {
            const RunResult res =
                run_bo(Strategy::parse(name), problem, synthetic_bench_config(seed));
            if (!res.completed) return {false, std::string(name) + " aborted: " + res.abort_reason};
            traces[name] = res.trace;
        }
        double budget = std::numeric_limits<double>::infinity();
        for (const auto& [name, trace] : traces)
            budget = std::min(budget, trace.back().cum_cost);
        const auto regret_at = [&](const std::vector<TraceRecord>& trace) {
            const TraceRecord* last = &trace.front();
            for (const auto& rec : trace)
                if (rec.cum_cost <= budget) last = &rec;
            return last->incumbent_true - f_min;
        };
        regret_ibo.push_back(regret_at(traces["ibo"]));
        regret_random.push_back(regret_at(traces["random"]));
        regret_es.push_back(regret_at(traces["es"]));
    }
    const double med_ibo = stats::median(regret_ibo);
    const double med_random = stats::median(regret_random);
    const double med_es = stats::median(regret_es);
    std::ostringstream os;
    os << "median simple regret at equal simulated cost: ibo=" << med_ibo
       << " random=" << med_random << " es=" << med_es;
    c.expect(med_ibo <= med_random, os.str() + " (ibo > random)");
    c.expect(med_ibo <= med_es, os.str() + " (ibo > es)");
    return {c.ok, c.ok ? os.str() : c.detail.str()};
}

RunConfig dataset_bench_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.n_init = 5;
    cfg.n_bo = 15;
    cfg.ensemble_size = 4;
    cfg.mcmc.burn_in = 20;
    cfg.mcmc.thinning = 2;
    cfg.acq.n_representers = 12;
    cfg.acq.n_mc = 48;
    cfg.acq.n_fantasy = 4;
    cfg.acq.n_candidates = 50;
    return cfg;
}

// --------------------------------------------------------------- criterion 10
Outcome dataset_benchmark() {
    Check c;
    const Problem problem = make_problem("digits-small");

    // every strategy completes with the expected trace length
    for (const char* name : {"ibo", "es", "es_is", "fabolas", "fabolas_is", "random"}) {
        const RunResult res = run_bo(Strategy::parse(name), problem, dataset_bench_config(0));
        c.expect(res.completed, std::string(name) + " aborted: " + res.abort_reason);
        c.expect(res.trace.size() == 20,
                 std::string(name) + " trace length " + std::to_string(res.trace.size()));
    }

    // non-timing fields are deterministic under a fixed seed
    for (const char* name : {"ibo", "fabolas_is"}) {
        const RunResult a = run_bo(Strategy::parse(name), problem, dataset_bench_config(1));
        const RunResult b = run_bo(Strategy::parse(name), problem, dataset_bench_config(1));
        c.expect(a.trace.size() == b.trace.size(), std::string(name) + " trace sizes differ");
        for (std::size_t i = 0; i < a.trace.size() && c.ok; ++i) {
            const auto& ra = a.trace[i];
            const auto& rb = b.trace[i];
            c.expect(ra.x == rb.x && ra.task == rb.task && ra.y == rb.y &&
                         ra.incumbent_x == rb.incumbent_x &&
                         ra.incumbent_pred == rb.incumbent_pred,
                     std::string(name) + " non-timing fields differ at record " +
                         std::to_string(i));
        }
    }

    // the final incumbent beats the best initialization value
    const Strategy ibo_strategy = Strategy::parse("ibo");
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RunConfig cfg = dataset_bench_config(seed);
        const RunResult res = run_bo(ibo_strategy, problem, cfg);
        if (!res.completed || res.trace.size() != 20) continue;
        double best_init = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 5; ++i) best_init = std::min(best_init, res.trace[i].y);

        const Eigen::VectorXd inc = res.trace.back().incumbent_x;
        // observed validation error of the incumbent at the target task
        double y_final = std::numeric_limits<double>::quiet_NaN();
        for (const auto& rec : res.trace)
            if (rec.x == inc && rec.task == 6.0)
                y_final = std::isnan(y_final) ? rec.y : std::min(y_final, rec.y);
        if (std::isnan(y_final)) {
            EvalPolicy policy;
            policy.semantics = TaskSemantics::presample_factor;
            RngStream eval_rng = RngStream(cfg.seed).split(999983);
            y_final = dataset_blackbox_eval(problem, ConfigPoint{problem.space.normalize(inc)},
                                            TaskValue{1.0}, policy, eval_rng)
                          .y;
        }
        if (y_final <= best_init) ++improved;
    }
    std::ostringstream os;
    os << "incumbent improved on initialization in " << improved << "/20 seeds";
    c.expect(improved >= 18, os.str());
    return {c.ok, c.ok ? os.str() : c.detail.str()};
}

// --------------------------------------------------------------- criterion 11
Outcome protocol_fidelity() {
    Check c;
    const Problem branin = make_problem("branin-mf");

    RunConfig init_cfg = synthetic_bench_config(3);
    init_cfg.n_bo = 0;
    const RunResult max_task = run_bo(Strategy::parse("ibo"), branin, init_cfg);
    c.expect(max_task.trace.size() == 5, "max_task init is not 5 evaluations");
    for (const auto& rec : max_task.trace)
        c.expect(rec.task == 1.0, "max_task init not at the target task");

    Problem moons = make_problem("synthetic-2class");
    RunConfig ladder_cfg = dataset_bench_config(3);
    ladder_cfg.n_bo = 0;
    ladder_cfg.init_scheme = InitScheme::ladder;
    ladder_cfg.trainer_epochs = 1;
    const RunResult ladder = run_bo(Strategy::parse("fabolas"), moons, ladder_cfg);
    c.expect(ladder.trace.size() == 20, "ladder init is not 20 evaluations");
    for (std::size_t i = 0; i < ladder.trace.size(); ++i) {
        const double expected[4] = {1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0};
        c.expect(std::abs(ladder.trace[i].task - expected[i % 4]) < 1e-12,
                 "ladder fraction mismatch at record " + std::to_string(i));
    }

    // the incumbent is always an observed configuration
    RunConfig small = synthetic_bench_config(5);
    small.n_bo = 5;
    const RunResult run = run_bo(Strategy::parse("ibo"), branin, small);
    for (const auto& rec : run.trace) {
        bool observed = false;
        for (const auto& other : run.trace)
            if (other.iter <= rec.iter && other.x == rec.incumbent_x) observed = true;
        c.expect(observed, "incumbent is not an observed config at iter " +
                               std::to_string(rec.iter));
    }

    // summary tables: strategies x {25,50,75,100}% with ordered quartiles
    std::map<std::string, std::vector<std::vector<TraceRecord>>> traces;
    for (const char* name : {"ibo", "random"}) {
        for (std::uint64_t seed = 0; seed < 2; ++seed) {
            RunConfig cfg = synthetic_bench_config(seed);
            cfg.n_bo = 4;
            traces[name].push_back(run_bo(Strategy::parse(name), branin, cfg).trace);
        }
    }
    const SummaryTable table = summarize(traces, BudgetMode::cost);
    c.expect(table.rows.size() == 8, "summary rows != strategies x 4");
    std::map<std::string, std::vector<double>> fractions;
    for (const auto& row : table.rows) {
        fractions[row.strategy].push_back(row.fraction);
        c.expect(row.q25 <= row.median && row.median <= row.q75, "quartile ordering violated");
    }
    for (const auto& [name, fr] : fractions)
        c.expect(fr == std::vector<double>{0.25, 0.5, 0.75, 1.0},
                 name + " does not report the four budget fractions");
    return {c.ok, c.detail.str()};
}

struct Criterion {
    int id;
    std::string label;
    std::function<Outcome()> fn;
    double time_limit_s;  // 0 = no limit
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "GP oracle equivalence", gp_oracle_equivalence, 5.0},
        {2, "kernel endpoint identities and PSD", kernel_endpoint_identities, 0.0},
        {3, "IS unbiasedness by enumeration", is_unbiasedness, 0.0},
        {4, "IS variance dominance", is_variance_dominance, 0.0},
        {5, "DoSGD decision rules", dosgd_decisions, 0.0},
        {6, "MLP gradient correctness", gradient_correctness, 10.0},
        {7, "p_min validity", pmin_validity, 0.0},
        {8, "entropy-reduction sanity", entropy_reduction_sanity, 0.0},
        {9, "end-to-end synthetic benchmark (branin-mf)", synthetic_benchmark, 600.0},
        {10, "end-to-end dataset benchmark (digits-small)", dataset_benchmark, 900.0},
        {11, "protocol fidelity", protocol_fidelity, 0.0},
    };

    int failures = 0;
    for (const auto& crit : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            const Outcome outcome = crit.fn();
            ok = outcome.ok;
            detail = outcome.detail;
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (crit.time_limit_s > 0.0 && secs > crit.time_limit_s) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + std::string("runtime ") +
                      std::to_string(secs) + "s exceeds limit " +
                      std::to_string(crit.time_limit_s) + "s";
        }
        if (!ok) ++failures;
        std::printf("%s criterion %2d: %s [%.1fs]%s%s\n", ok ? "PASS" : "FAIL", crit.id,
                    crit.label.c_str(), secs, detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
    }
    if (failures > 0) std::printf("%d criterion(s) FAILED\n", failures);
    else std::printf("all %zu criteria passed\n", criteria.size());
    return failures == 0 ? 0 : 1;
}
