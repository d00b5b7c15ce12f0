#pragma once

#include "hfrl/linmdp.hpp"
#include "hfrl/voful.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hfrl {

inline constexpr int regret_schema_version = 1;

enum class AgentKind { hf_exact, hf_bonus, lsvi, random };

std::string agent_name(AgentKind kind);
AgentKind agent_from_name(const std::string& name);

struct SpecSource {
    enum class Kind { generator, inline_spec, file };
    Kind kind = Kind::generator;
    GeneratorParams generator;
    nlohmann::json inline_spec;
    std::string path;
};

struct ExperimentConfig {
    SpecSource spec;
    AgentKind agent = AgentKind::hf_bonus;
    int episodes = 1024;
    double delta = 0.1;
    /// Grid spacing of the value-net parameters on the radius 2 sqrt(d) ball.
    double eps_net = 0.5;
    std::size_t net_budget = 200000;
    std::optional<double> eps_bonus;
    std::optional<double> alpha;
    std::optional<double> kappa;
    std::optional<double> beta;
    std::optional<double> lambda;
    double lsvi_c = 1.0;
    double lsvi_lambda = 1.0;
    VofulConfig voful;
    /// hf_exact: size of the model class (truth plus perturbations) and perturbation scale.
    int exact_candidates = 8;
    double exact_perturbation = 0.3;
    std::uint64_t seed = 0;
    std::string output_dir;
    int threads = 1;
    int validation_probes = 1000;
    /// Slope window; zeros mean [K/16, K].
    int slope_kmin = 0;
    int slope_kmax = 0;
    bool write_trajectories = false;

    void check() const;
};

/// Parses a config document. Relative spec file paths resolve against base_dir.
ExperimentConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Thread count from HFRL_THREADS, or 1.
int default_threads();

LinearMdpSpec resolve_spec(const ExperimentConfig& config);

struct RegretRow {
    int k = 0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
    double episode_reward = 0.0;
    double optimistic_value = 0.0;
    int diag_id = -1;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int points = 0;
};

/// OLS of log(cum_regret) on log(k) over kmin <= k <= kmax, skipping
/// non-positive regrets. Needs at least 8 points.
SlopeFit fit_slope(const std::vector<RegretRow>& rows, int kmin, int kmax);
SlopeFit fit_slope(const std::vector<double>& k, const std::vector<double>& cum, double kmin, double kmax);

struct RunResult {
    std::vector<RegretRow> rows;
    nlohmann::json summary;
    nlohmann::json diagnostics;
    double seconds = 0.0;

    double final_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
};

/**
 * Plays K episodes of plan, rollout, update. Instantaneous regret is the
 * exact gap V*_1(s_1) - V^pi_1(s_1). When output_dir is set, regret.csv is
 * written row by row and summary.json / diagnostics.json at the end; on
 * failure the summary records the error before it is rethrown.
 */
RunResult run_experiment(const ExperimentConfig& config);

void write_regret_header(std::ostream& out);
void write_regret_row(std::ostream& out, const RegretRow& row);
std::vector<RegretRow> read_regret_csv(const std::filesystem::path& path);

struct SweepEntry {
    std::uint64_t seed = 0;
    double final_regret = 0.0;
    SlopeFit slope;
    double seconds = 0.0;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    double mean_final = 0.0;
    double std_final = 0.0;
    double mean_slope = 0.0;
    double std_slope = 0.0;

    nlohmann::json to_json() const;
};

/// Runs seeds config.seed, config.seed + 1, ... and aggregates finals and
/// slopes (sample standard deviation). Per-seed outputs go to
/// output_dir/seed_<n> when output_dir is set, plus sweep.csv and sweep.json.
SweepResult sweep(const ExperimentConfig& config, int num_seeds, int parallel_runs = 1);

} // namespace hfrl
