#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibo/bo.hpp"
#include "ibo/common.hpp"

namespace ibo {

enum class BudgetMode { iterations, cost };

inline BudgetMode parse_budget_mode(const std::string& s) {
    if (s == "iterations") return BudgetMode::iterations;
    if (s == "cost") return BudgetMode::cost;
    throw Error(Errc::parse_error, "budget mode must be 'iterations' or 'cost', got '" + s + "'");
}

inline std::string budget_mode_name(BudgetMode m) {
    return m == BudgetMode::iterations ? "iterations" : "cost";
}

/// Experiment description: problem, strategies, seeds, engine settings.
struct ExperimentConfig {
    std::string problem;
    std::vector<Strategy> strategies;
    std::vector<std::uint64_t> seeds;
    std::string out_dir = "results";
    BudgetMode budget_mode = BudgetMode::iterations;
    RunConfig run;
    std::map<std::string, int> n_bo_override;  // per-strategy iteration budgets

    void validate() const {
        if (problem.empty()) throw Error(Errc::parse_error, "config is missing field 'problem'");
        if (strategies.empty())
            throw Error(Errc::parse_error, "config is missing field 'strategies'");
        if (seeds.empty()) throw Error(Errc::parse_error, "config needs at least one seed");
        run.validate();
    }
};

namespace detail {

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline Eigen::VectorXd vec_from_json(const nlohmann::json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

} // namespace detail

inline nlohmann::json trace_record_to_json(const TraceRecord& rec) {
    nlohmann::json j;
    j["schema_version"] = rec.schema_version;
    j["iter"] = rec.iter;
    j["x"] = detail::vec_to_json(rec.x);
    j["task"] = rec.task;
    j["y"] = rec.y;
    j["cost"] = rec.cost;
    j["cum_cost"] = rec.cum_cost;
    j["incumbent_x"] = detail::vec_to_json(rec.incumbent_x);
    j["incumbent_pred"] = rec.incumbent_pred;
    if (std::isfinite(rec.incumbent_true)) j["incumbent_true"] = rec.incumbent_true;
    return j;
}

inline TraceRecord trace_record_from_json(const nlohmann::json& j) {
    TraceRecord rec;
    rec.schema_version = j.at("schema_version").get<int>();
    rec.iter = j.at("iter").get<int>();
    rec.x = detail::vec_from_json(j.at("x"));
    rec.task = j.at("task").get<double>();
    rec.y = j.at("y").get<double>();
    rec.cost = j.at("cost").get<double>();
    rec.cum_cost = j.at("cum_cost").get<double>();
    rec.incumbent_x = detail::vec_from_json(j.at("incumbent_x"));
    rec.incumbent_pred = j.at("incumbent_pred").get<double>();
    if (j.contains("incumbent_true")) rec.incumbent_true = j.at("incumbent_true").get<double>();
    return rec;
}

/// Append one record as a single complete line (one fwrite call, flushed), so
/// readers never observe a torn line.
inline void append_trace_record(const std::string& path, const TraceRecord& rec) {
    const std::string line = trace_record_to_json(rec).dump() + "\n";
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (f == nullptr) throw Error(Errc::io_failure, "cannot open trace file '" + path + "'");
    const std::size_t written = std::fwrite(line.data(), 1, line.size(), f);
    const int flush_rc = std::fflush(f);
    std::fclose(f);
    if (written != line.size() || flush_rc != 0)
        throw Error(Errc::io_failure, "failed to append record to '" + path + "'");
}

inline std::vector<TraceRecord> read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_failure, "cannot open trace file '" + path + "'");
    std::vector<TraceRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(trace_record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::parse_error,
                        path + ":" + std::to_string(line_no) + ": bad trace record: " + e.what());
        }
    }
    return out;
}

// ---- experiment config (JSON document) ----

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    if (!j.contains("problem")) throw Error(Errc::parse_error, "config is missing field 'problem'");
    cfg.problem = j.at("problem").get<std::string>();
    if (!j.contains("strategies") || !j.at("strategies").is_array() || j.at("strategies").empty())
        throw Error(Errc::parse_error, "config is missing field 'strategies'");
    for (const auto& s : j.at("strategies"))
        cfg.strategies.push_back(Strategy::parse(s.get<std::string>()));
    if (j.contains("seeds"))
        for (const auto& s : j.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
    else
        cfg.seeds = {0};
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("budget_mode"))
        cfg.budget_mode = parse_budget_mode(j.at("budget_mode").get<std::string>());

    if (j.contains("run")) {
        const auto& r = j.at("run");
        if (r.contains("n_init")) cfg.run.n_init = r.at("n_init").get<int>();
        if (r.contains("n_bo")) cfg.run.n_bo = r.at("n_bo").get<int>();
        if (r.contains("ensemble_size")) cfg.run.ensemble_size = r.at("ensemble_size").get<int>();
        if (r.contains("trainer_epochs")) cfg.run.trainer_epochs = r.at("trainer_epochs").get<int>();
        if (r.contains("init_scheme")) {
            const std::string s = r.at("init_scheme").get<std::string>();
            if (s == "max_task") cfg.run.init_scheme = InitScheme::max_task;
            else if (s == "ladder") cfg.run.init_scheme = InitScheme::ladder;
            else throw Error(Errc::parse_error, "init_scheme must be 'max_task' or 'ladder'");
        }
        if (r.contains("acquisition")) {
            const auto& a = r.at("acquisition");
            if (a.contains("n_representers"))
                cfg.run.acq.n_representers = a.at("n_representers").get<int>();
            if (a.contains("n_mc")) cfg.run.acq.n_mc = a.at("n_mc").get<int>();
            if (a.contains("n_fantasy")) cfg.run.acq.n_fantasy = a.at("n_fantasy").get<int>();
            if (a.contains("n_candidates")) cfg.run.acq.n_candidates = a.at("n_candidates").get<int>();
            if (a.contains("task_grid"))
                cfg.run.acq.task_grid = a.at("task_grid").get<std::vector<double>>();
        }
        if (r.contains("mcmc")) {
            const auto& m = r.at("mcmc");
            if (m.contains("burn_in")) cfg.run.mcmc.burn_in = m.at("burn_in").get<int>();
            if (m.contains("thinning")) cfg.run.mcmc.thinning = m.at("thinning").get<int>();
        }
    }
    if (j.contains("per_strategy_n_bo"))
        for (const auto& [key, val] : j.at("per_strategy_n_bo").items())
            cfg.n_bo_override[key] = val.get<int>();
    cfg.validate();
    return cfg;
}

inline std::string serialize_config(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["problem"] = cfg.problem;
    nlohmann::json strategies = nlohmann::json::array();
    for (const auto& s : cfg.strategies) strategies.push_back(s.name());
    j["strategies"] = strategies;
    j["seeds"] = cfg.seeds;
    j["out_dir"] = cfg.out_dir;
    j["budget_mode"] = budget_mode_name(cfg.budget_mode);
    j["run"] = {
        {"n_init", cfg.run.n_init},
        {"n_bo", cfg.run.n_bo},
        {"ensemble_size", cfg.run.ensemble_size},
        {"trainer_epochs", cfg.run.trainer_epochs},
        {"init_scheme", cfg.run.init_scheme == InitScheme::ladder ? "ladder" : "max_task"},
        {"acquisition",
         {{"n_representers", cfg.run.acq.n_representers},
          {"n_mc", cfg.run.acq.n_mc},
          {"n_fantasy", cfg.run.acq.n_fantasy},
          {"n_candidates", cfg.run.acq.n_candidates},
          {"task_grid", cfg.run.acq.task_grid}}},
        {"mcmc", {{"burn_in", cfg.run.mcmc.burn_in}, {"thinning", cfg.run.mcmc.thinning}}},
    };
    if (!cfg.n_bo_override.empty()) j["per_strategy_n_bo"] = cfg.n_bo_override;
    return j.dump(2);
}

// ---- summaries ----

struct SummaryRow {
    std::string strategy;
    double fraction = 1.0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

struct SummaryTable {
    std::vector<SummaryRow> rows;
};

namespace detail {

/// Incumbent metric of a record: true value when known, else predicted.
inline double record_metric(const TraceRecord& rec) {
    return std::isfinite(rec.incumbent_true) ? rec.incumbent_true : rec.incumbent_pred;
}

/// Value of a trace truncated at `budget` (iteration count or cumulative cost).
inline double value_at_budget(const std::vector<TraceRecord>& trace, BudgetMode mode,
                              double budget) {
    const TraceRecord* last = &trace.front();
    for (const auto& rec : trace) {
        const double used = mode == BudgetMode::iterations ? static_cast<double>(rec.iter + 1)
                                                           : rec.cum_cost;
        if (used <= budget) last = &rec;
        else break;
    }
    return record_metric(*last);
}

inline double trace_total(const std::vector<TraceRecord>& trace, BudgetMode mode) {
    return mode == BudgetMode::iterations ? static_cast<double>(trace.size())
                                          : trace.back().cum_cost;
}

} // namespace detail

/// Shared-budget summary: the smallest per-strategy total budget (the fastest
/// method) bounds everyone; each trace is truncated at 25/50/75/100% of it and
/// incumbent values are aggregated to median and quartiles.
inline SummaryTable summarize(
    const std::map<std::string, std::vector<std::vector<TraceRecord>>>& traces_by_strategy,
    BudgetMode mode) {
    if (traces_by_strategy.empty()) throw Error(Errc::invalid_argument, "no traces to summarize");
    double shared_budget = std::numeric_limits<double>::infinity();
    for (const auto& [name, traces] : traces_by_strategy) {
        if (traces.empty())
            throw Error(Errc::invalid_argument, "strategy '" + name + "' has no traces");
        for (const auto& trace : traces) {
            if (trace.empty()) throw Error(Errc::invalid_argument, "empty trace for '" + name + "'");
            shared_budget = std::min(shared_budget, detail::trace_total(trace, mode));
        }
    }

    SummaryTable table;
    for (const auto& [name, traces] : traces_by_strategy) {
        for (double fraction : {0.25, 0.5, 0.75, 1.0}) {
            std::vector<double> values;
            values.reserve(traces.size());
            for (const auto& trace : traces)
                values.push_back(detail::value_at_budget(trace, mode, fraction * shared_budget));
            SummaryRow row;
            row.strategy = name;
            row.fraction = fraction;
            row.median = stats::quantile(values, 0.5);
            row.q25 = stats::quantile(values, 0.25);
            row.q75 = stats::quantile(values, 0.75);
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

inline std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void export_csv(const SummaryTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io_failure, "cannot open '" + path + "' for writing");
    out << "strategy,fraction,median,q25,q75\n";
    for (const auto& row : table.rows)
        out << row.strategy << ',' << format_double(row.fraction) << ','
            << format_double(row.median) << ',' << format_double(row.q25) << ','
            << format_double(row.q75) << "\n";
    if (!out) throw Error(Errc::io_failure, "failed writing '" + path + "'");
}

/// Line chart of median incumbent value vs cumulative cost with a quartile
/// band per strategy. Plain hand-rolled SVG.
inline void export_svg(
    const std::map<std::string, std::vector<std::vector<TraceRecord>>>& traces_by_strategy,
    const std::string& path) {
    if (traces_by_strategy.empty()) throw Error(Errc::invalid_argument, "no traces to plot");
    const double width = 760, height = 440;
    const double ml = 70, mr = 160, mt = 30, mb = 50;

    double budget = std::numeric_limits<double>::infinity();
    for (const auto& [name, traces] : traces_by_strategy)
        for (const auto& trace : traces)
            budget = std::min(budget, detail::trace_total(trace, BudgetMode::cost));

    const int grid_n = 64;
    struct Series {
        std::string name;
        std::vector<double> med, lo, hi;
    };
    std::vector<Series> series;
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    for (const auto& [name, traces] : traces_by_strategy) {
        Series s;
        s.name = name;
        for (int g = 0; g <= grid_n; ++g) {
            const double c = budget * static_cast<double>(g) / grid_n;
            std::vector<double> vals;
            for (const auto& trace : traces)
                vals.push_back(detail::value_at_budget(trace, BudgetMode::cost, c));
            s.med.push_back(stats::quantile(vals, 0.5));
            s.lo.push_back(stats::quantile(vals, 0.25));
            s.hi.push_back(stats::quantile(vals, 0.75));
            ymin = std::min(ymin, s.lo.back());
            ymax = std::max(ymax, s.hi.back());
        }
        series.push_back(std::move(s));
    }
    if (!(ymax > ymin)) ymax = ymin + 1.0;

    const auto sx = [&](double c) { return ml + (width - ml - mr) * (c / budget); };
    const auto sy = [&](double v) {
        return mt + (height - mt - mb) * (1.0 - (v - ymin) / (ymax - ymin));
    };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::ofstream out(path);
    if (!out) throw Error(Errc::io_failure, "cannot open '" + path + "' for writing");
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    out << "  <line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
        << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">cumulative cost (s)</text>\n";
    out << "  <text x=\"18\" y=\"" << (mt + height - mb) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << (mt + height - mb) / 2 << ")\">incumbent value</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double c = budget * tick / 4.0;
        const double v = ymin + (ymax - ymin) * tick / 4.0;
        out << "  <text x=\"" << sx(c) << "\" y=\"" << height - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(c) << "</text>\n";
        out << "  <text x=\"" << ml - 8 << "\" y=\"" << sy(v) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(v) << "</text>\n";
    }

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = palette[si % 6];
        out << "  <polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (int g = 0; g <= grid_n; ++g)
            out << sx(budget * g / grid_n) << ',' << sy(s.hi[static_cast<std::size_t>(g)]) << ' ';
        for (int g = grid_n; g >= 0; --g)
            out << sx(budget * g / grid_n) << ',' << sy(s.lo[static_cast<std::size_t>(g)]) << ' ';
        out << "\"/>\n";
        out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (int g = 0; g <= grid_n; ++g)
            out << sx(budget * g / grid_n) << ',' << sy(s.med[static_cast<std::size_t>(g)]) << ' ';
        out << "\"/>\n";
        const double ly = mt + 18 + 20 * static_cast<double>(si);
        out << "  <line x1=\"" << width - mr + 12 << "\" y1=\"" << ly << "\" x2=\""
            << width - mr + 40 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "  <text x=\"" << width - mr + 46 << "\" y=\"" << ly + 4
            << "\" font-size=\"12\">" << s.name << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw Error(Errc::io_failure, "failed writing '" + path + "'");
}

} // namespace ibo
