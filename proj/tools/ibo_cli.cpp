// Command-line driver: run experiments, summarize traces, list problems.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ibo/ibo.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ibo::Error(ibo::Errc::io_failure, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trace_filename(const std::string& strategy, std::uint64_t seed) {
    return strategy + ".seed" + std::to_string(seed) + ".jsonl";
}

/// Collect <strategy>.seed<k>.jsonl traces from a directory.
std::map<std::string, std::vector<std::vector<ibo::TraceRecord>>> collect_traces(
    const std::string& dir) {
    std::map<std::string, std::vector<std::vector<ibo::TraceRecord>>> traces;
    if (!fs::is_directory(dir))
        throw ibo::Error(ibo::Errc::io_failure, "'" + dir + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.path().extension() != ".jsonl") continue;
        const auto pos = name.find(".seed");
        if (pos == std::string::npos) continue;
        traces[name.substr(0, pos)].push_back(ibo::read_trace_file(entry.path().string()));
    }
    if (traces.empty())
        throw ibo::Error(ibo::Errc::io_failure, "no trace files (*.jsonl) found in '" + dir + "'");
    return traces;
}

int cmd_run(const std::string& config_path, const std::vector<std::uint64_t>& seed_override,
            const std::vector<std::string>& strategy_override,
            const std::string& out_override, const std::string& budget_override) {
    ibo::ExperimentConfig cfg = ibo::parse_config(read_file(config_path));
    if (!seed_override.empty()) cfg.seeds = seed_override;
    if (!strategy_override.empty()) {
        cfg.strategies.clear();
        for (const auto& s : strategy_override) cfg.strategies.push_back(ibo::Strategy::parse(s));
    }
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (!budget_override.empty()) cfg.budget_mode = ibo::parse_budget_mode(budget_override);
    cfg.validate();

    const ibo::Problem problem = ibo::make_problem(cfg.problem);
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream manifest(fs::path(cfg.out_dir) / "experiment.json");
        manifest << ibo::serialize_config(cfg) << "\n";
    }

    for (const auto& strategy : cfg.strategies) {
        for (std::uint64_t seed : cfg.seeds) {
            ibo::RunConfig run = cfg.run;
            run.seed = seed;
            if (auto it = cfg.n_bo_override.find(strategy.name()); it != cfg.n_bo_override.end())
                run.n_bo = it->second;

            const fs::path trace_path = fs::path(cfg.out_dir) / trace_filename(strategy.name(), seed);
            std::error_code ec;
            fs::remove(trace_path, ec);

            std::cout << "run: strategy=" << strategy.name() << " seed=" << seed
                      << " problem=" << cfg.problem << " n_bo=" << run.n_bo << std::endl;
            const ibo::RunResult result =
                ibo::run_bo(strategy, problem, run, [&](const ibo::TraceRecord& rec) {
                    ibo::append_trace_record(trace_path.string(), rec);
                });
            if (!result.completed)
                std::cerr << "warning: run aborted early (" << result.abort_reason
                          << "); partial trace kept" << std::endl;
            if (!result.trace.empty()) {
                const auto& last = result.trace.back();
                std::cout << "  records=" << result.trace.size()
                          << " cum_cost=" << ibo::format_double(last.cum_cost)
                          << " incumbent_pred=" << ibo::format_double(last.incumbent_pred)
                          << std::endl;
            }
        }
    }
    return 0;
}

int cmd_summarize(const std::string& in_dir, const std::string& format,
                  const std::string& budget_override) {
    ibo::BudgetMode mode = ibo::BudgetMode::iterations;
    const fs::path manifest_path = fs::path(in_dir) / "experiment.json";
    if (fs::exists(manifest_path))
        mode = ibo::parse_config(read_file(manifest_path.string())).budget_mode;
    if (!budget_override.empty()) mode = ibo::parse_budget_mode(budget_override);

    const auto traces = collect_traces(in_dir);
    if (format == "csv") {
        const ibo::SummaryTable table = ibo::summarize(traces, mode);
        const fs::path out = fs::path(in_dir) / "summary.csv";
        ibo::export_csv(table, out.string());
        std::cout << "strategy,fraction,median,q25,q75\n";
        for (const auto& row : table.rows)
            std::cout << row.strategy << ',' << row.fraction << ','
                      << ibo::format_double(row.median) << ',' << ibo::format_double(row.q25)
                      << ',' << ibo::format_double(row.q75) << "\n";
        std::cout << "wrote " << out.string() << std::endl;
    } else if (format == "svg") {
        const fs::path out = fs::path(in_dir) / "summary.svg";
        ibo::export_svg(traces, out.string());
        std::cout << "wrote " << out.string() << std::endl;
    } else {
        throw ibo::Error(ibo::Errc::invalid_argument,
                         "unknown format '" + format + "'; use csv or svg");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-fidelity Bayesian optimization for hyperparameter tuning"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the strategies of an experiment config");
    std::string config_path, out_dir, budget_mode;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> strategies;
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--seed", seeds, "Override the config's seed list");
    run->add_option("--strategy", strategies, "Override the config's strategy list");
    run->add_option("--out", out_dir, "Output directory override");
    run->add_option("--budget-mode", budget_mode, "iterations or cost");

    auto* summarize = app.add_subcommand("summarize", "Aggregate traces into a summary table");
    std::string in_dir, format = "csv", sum_budget_mode;
    summarize->add_option("--in", in_dir, "Directory holding *.jsonl traces")->required();
    summarize->add_option("--format", format, "csv or svg");
    summarize->add_option("--budget-mode", sum_budget_mode, "iterations or cost");

    auto* list = app.add_subcommand("list-problems", "List built-in problems");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seeds, strategies, out_dir, budget_mode);
        if (summarize->parsed()) return cmd_summarize(in_dir, format, sum_budget_mode);
        if (list->parsed()) {
            for (const auto& name : ibo::builtin_problem_names()) std::cout << name << "\n";
            return 0;
        }
    } catch (const ibo::Error& e) {
        std::cerr << "error[" << ibo::errc_name(e.code()) << "]: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
