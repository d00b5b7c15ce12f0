#include "hfrl/errors.hpp"
#include "hfrl/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hfrl;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_doc(const std::string& agent, int episodes) {
    return {{"spec",
             {{"generator",
               {{"S", 3}, {"A", 2}, {"d", 3}, {"H", 4}, {"seed", 5}, {"feature_sharpness", 3.0}}}}},
            {"agent", agent},
            {"episodes", episodes},
            {"eps_net", 0.5},
            {"eps_bonus", 0.001},
            {"overrides", {{"alpha", 0.1}, {"kappa", 0.1}}},
            {"voful", {{"iota", 4.0}}},
            {"seed", 9}};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hfrl_harness_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_log(const std::vector<RegretRow>& rows) {
    double sum = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].k == static_cast<int>(i) + 1);
        CHECK(rows[i].inst_regret >= -1e-12);
        CHECK(rows[i].inst_regret <= 1.0 + 1e-12);
        sum += rows[i].inst_regret;
        CHECK(std::abs(rows[i].cum_regret - sum) <= 1e-9);
        CHECK(rows[i].cum_regret >= prev - 1e-12);
        prev = rows[i].cum_regret;
    }
}

} // namespace

TEST_CASE("slope fit") {
    std::vector<double> k, root, flat;
    for (int i = 1; i <= 1000; ++i) {
        k.push_back(i);
        root.push_back(3.0 * std::sqrt(i));
        flat.push_back(7.0);
    }
    const SlopeFit a = fit_slope(k, root, 10, 1000);
    CHECK(a.slope == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(a.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-6));
    CHECK(a.points == 991);
    CHECK(std::abs(fit_slope(k, flat, 1, 1000).slope) < 1e-12);
    CHECK_THROWS(fit_slope(k, root, 1, 5));
}

TEST_CASE("random agent log") {
    ExperimentConfig c = config_from_json(small_doc("random", 16));
    const RunResult r = run_experiment(c);
    REQUIRE(r.rows.size() == 16);
    check_log(r.rows);

    c.episodes = 2048;
    const RunResult longer = run_experiment(c);
    check_log(longer.rows);
    // a policy drawn afresh each episode has linear expected regret
    CHECK(fit_slope(longer.rows, 128, 2048).slope == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("outputs are written and reproducible") {
    ExperimentConfig c = config_from_json(small_doc("hf_bonus", 48));
    c.write_trajectories = true;
    const fs::path a = scratch("a"), b = scratch("b");
    c.output_dir = a.string();
    const RunResult ra = run_experiment(c);
    c.output_dir = b.string();
    run_experiment(c);
    CHECK(slurp(a / "regret.csv") == slurp(b / "regret.csv"));
    CHECK(slurp(a / "trajectories.csv") == slurp(b / "trajectories.csv"));

    const std::vector<RegretRow> back = read_regret_csv(a / "regret.csv");
    REQUIRE(back.size() == ra.rows.size());
    check_log(back);
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK(back[i].cum_regret == ra.rows[i].cum_regret);

    const nlohmann::json summary = nlohmann::json::parse(slurp(a / "summary.json"));
    CHECK(summary["agent"] == "hf_bonus");
    CHECK(summary["final_cum_regret"] == ra.final_regret());
    CHECK(fs::exists(a / "diagnostics.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("config parsing") {
    nlohmann::json doc = small_doc("lsvi", 8);
    doc["episode_count"] = 8;
    CHECK_THROWS_AS(config_from_json(doc), StructuralError);
    doc = small_doc("lsvi", 8);
    doc["voful"]["radius"] = 1.0;
    CHECK_THROWS_AS(config_from_json(doc), StructuralError);
    doc = small_doc("nobody", 8);
    CHECK_THROWS(config_from_json(doc));
    doc = small_doc("lsvi", 8);
    doc.erase("spec");
    CHECK_THROWS_AS(config_from_json(doc), StructuralError);

    const ExperimentConfig c = config_from_json(small_doc("lsvi", 8));
    const ExperimentConfig round = config_from_json(config_to_json(c));
    CHECK(config_to_json(round) == config_to_json(c));

    for (const char* name : {"benchmark", "benchmark_h20", "benchmark_lsvi", "benchmark_random"}) {
        const ExperimentConfig f = load_config(fs::path(HFRL_SOURCE_DIR) / "configs" / (std::string(name) + ".json"));
        CHECK(resolve_spec(f).dim == 4);
    }
}

TEST_CASE("sweeps aggregate per-seed runs") {
    ExperimentConfig c = config_from_json(small_doc("lsvi", 64));
    const SweepResult one = sweep(c, 1);
    const RunResult direct = run_experiment(c);
    REQUIRE(one.entries.size() == 1);
    CHECK(one.entries[0].final_regret == direct.final_regret());
    CHECK(one.entries[0].slope.slope == fit_slope(direct.rows, 4, 64).slope);

    const SweepResult three = sweep(c, 3, 2);
    REQUIRE(three.entries.size() == 3);
    double mean = 0.0;
    for (const auto& e : three.entries)
        mean += e.final_regret;
    mean /= 3.0;
    double ss = 0.0;
    for (const auto& e : three.entries)
        ss += (e.final_regret - mean) * (e.final_regret - mean);
    CHECK(three.mean_final == doctest::Approx(mean));
    CHECK(three.std_final == doctest::Approx(std::sqrt(ss / 2.0)));
    CHECK(three.entries[1].seed == c.seed + 1);
    CHECK(three.entries[0].final_regret == one.entries[0].final_regret);
}

TEST_CASE("LSVI beats the random policy on the benchmark") {
    const fs::path dir = fs::path(HFRL_SOURCE_DIR) / "configs";
    ExperimentConfig lsvi = load_config(dir / "benchmark_lsvi.json");
    ExperimentConfig rnd = load_config(dir / "benchmark_random.json");
    lsvi.episodes = rnd.episodes = 512;
    lsvi.output_dir = rnd.output_dir = "";
    const SweepResult l = sweep(lsvi, 5, 5);
    const SweepResult r = sweep(rnd, 5, 5);
    MESSAGE("LSVI " << l.mean_final << ", random " << r.mean_final);
    CHECK(l.mean_final <= r.mean_final);
}
