// Command-line front end: run, sweep, verify, slope.

#include "hfrl/errors.hpp"
#include "hfrl/harness.hpp"
#include "hfrl/oracles.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

using nlohmann::json;

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out,
            std::optional<int> episodes, std::optional<int> threads) {
    hfrl::ExperimentConfig cfg = hfrl::load_config(config_path);
    if (seed)
        cfg.seed = *seed;
    if (!out.empty())
        cfg.output_dir = out;
    if (episodes)
        cfg.episodes = *episodes;
    if (threads)
        cfg.threads = *threads;
    cfg.check();
    const hfrl::RunResult r = hfrl::run_experiment(cfg);
    json line{{"agent", hfrl::agent_name(cfg.agent)},
              {"seed", cfg.seed},
              {"episodes", cfg.episodes},
              {"final_cum_regret", r.final_regret()},
              {"slope", r.summary["slope"]},
              {"seconds", r.seconds}};
    if (!cfg.output_dir.empty())
        line["output_dir"] = cfg.output_dir;
    std::cout << line.dump() << '\n';
    return hfrl::exit_ok;
}

int cmd_sweep(const std::string& config_path, int seeds, const std::string& out, std::optional<int> parallel) {
    hfrl::ExperimentConfig cfg = hfrl::load_config(config_path);
    if (!out.empty())
        cfg.output_dir = out;
    const hfrl::SweepResult r = hfrl::sweep(cfg, seeds, parallel.value_or(cfg.threads));
    std::cout << r.to_json().dump(2) << '\n';
    return hfrl::exit_ok;
}

int cmd_verify(const std::vector<std::string>& lemmas, std::optional<int> trials, std::uint64_t seed,
               const std::string& out, std::optional<int> threads) {
    const std::vector<std::string> ids = lemmas.empty() ? hfrl::lemma_ids() : lemmas;
    json report = json::object();
    bool ok = true;
    for (const auto& id : ids) {
        const int n = trials.value_or(hfrl::default_trials(id));
        const hfrl::LemmaReport r = hfrl::run_lemma(id, n, seed, threads.value_or(hfrl::default_threads()));
        report[id] = {{"trials", r.trials},
                      {"instances", n},
                      {"violations", r.violations},
                      {"worst_margin", r.to_json()["worst_margin"]}};
        if (r.violations > 0)
            report[id]["witness"] = r.witness;
        ok = ok && r.ok();
    }
    const std::string text = report.dump(2);
    if (!out.empty()) {
        std::ofstream f(out);
        f << text << '\n';
    }
    std::cout << text << '\n';
    return ok ? hfrl::exit_ok : hfrl::exit_lemma_violation;
}

int cmd_slope(const std::string& log, int kmin, int kmax) {
    const auto rows = hfrl::read_regret_csv(log);
    const hfrl::SlopeFit fit = hfrl::fit_slope(rows, kmin, kmax);
    std::cout << json{{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}, {"points", fit.points}}.dump()
              << '\n';
    return hfrl::exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear-MDP regret experiments and lemma oracles"};
    app.require_subcommand(1);

    std::string config_path, out, log;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes, threads, trials, parallel;
    int seeds = 5;
    std::uint64_t verify_seed = 0;
    std::vector<std::string> lemmas;
    int kmin = 1, kmax = 0;

    auto* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Master seed override");
    run->add_option("--out", out, "Output directory override");
    run->add_option("--episodes", episodes, "Episode count override");
    run->add_option("--threads", threads, "Worker threads");

    auto* sw = app.add_subcommand("sweep", "Run consecutive seeds and aggregate");
    sw->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
    sw->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
    sw->add_option("--out", out, "Output directory override");
    sw->add_option("--parallel", parallel, "Concurrent runs");

    auto* ver = app.add_subcommand("verify", "Run the randomized lemma oracles");
    ver->add_option("--lemma", lemmas, "Oracle id (repeatable); default all")
        ->check(CLI::IsMember(hfrl::lemma_ids()));
    ver->add_option("--trials", trials, "Instances per oracle")->check(CLI::NonNegativeNumber);
    ver->add_option("--seed", verify_seed, "Seed");
    ver->add_option("--out", out, "Also write the JSON report here");
    ver->add_option("--threads", threads, "Worker threads");

    auto* sl = app.add_subcommand("slope", "Fit the log-log cumulative regret slope");
    sl->add_option("--log", log, "regret.csv")->required()->check(CLI::ExistingFile);
    sl->add_option("--kmin", kmin, "First episode in the window");
    sl->add_option("--kmax", kmax, "Last episode in the window (0 = last)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run)
            return cmd_run(config_path, seed, out, episodes, threads);
        if (*sw)
            return cmd_sweep(config_path, seeds, out, parallel);
        if (*ver)
            return cmd_verify(lemmas, trials, verify_seed, out, threads);
        if (*sl)
            return cmd_slope(log, kmin, kmax > 0 ? kmax : std::numeric_limits<int>::max());
    } catch (const hfrl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hfrl::exit_failure;
    }
    return hfrl::exit_failure;
}
