#include "hfrl/harness.hpp"

#include "hfrl/baselines.hpp"
#include "hfrl/errors.hpp"
#include "hfrl/hf_estimator.hpp"
#include "hfrl/nets.hpp"
#include "hfrl/parallel.hpp"
#include "hfrl/planner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

namespace hfrl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_json_file(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

template <class T>
std::optional<T> optional_field(const json& doc, const char* key) {
    if (!doc.contains(key) || doc[key].is_null())
        return std::nullopt;
    return doc[key].get<T>();
}

void require_known_keys(const json& doc, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : doc.items())
        if (!known.count(key))
            throw StructuralError("config: unknown key '" + key + "' in " + where);
}

// Truth plus perturbed copies, shuffled; used by the elimination agent.
std::vector<ModelCandidate> perturbed_class(const LinearMdpSpec& spec, int count, double scale, Rng& rng) {
    std::vector<ModelCandidate> out;
    out.push_back({spec.mu, spec.theta_r});
    for (int c = 1; c < count; ++c) {
        ModelCandidate m{spec.mu, spec.theta_r};
        const double t = scale * rng.uniform(0.2, 1.0);
        for (int j = 0; j < spec.dim; ++j) {
            Eigen::VectorXd col(spec.num_states);
            for (int s = 0; s < spec.num_states; ++s)
                col(s) = rng.exponential();
            m.mu.col(j) = (1.0 - t) * spec.mu.col(j) + t * col / col.sum();
        }
        for (int j = 0; j < spec.dim; ++j)
            m.theta_r(j) = std::max(0.0, spec.theta_r(j) * (1.0 + t * rng.uniform(-1.0, 1.0)));
        const double norm = m.theta_r.norm();
        if (norm > 2.0)
            m.theta_r *= 2.0 / norm;
        out.push_back(std::move(m));
    }
    for (std::size_t i = out.size(); i > 1; --i)
        std::swap(out[i - 1], out[rng.uniform_int(i)]);
    return out;
}

json error_json(const std::exception& e) {
    json j{{"message", e.what()}};
    if (const auto* he = dynamic_cast<const Error*>(&e))
        j["exit_code"] = he->exit_code();
    else
        j["exit_code"] = exit_failure;
    return j;
}

} // namespace

std::string agent_name(AgentKind kind) {
    switch (kind) {
    case AgentKind::hf_exact: return "hf_exact";
    case AgentKind::hf_bonus: return "hf_bonus";
    case AgentKind::lsvi: return "lsvi";
    case AgentKind::random: return "random";
    }
    return "unknown";
}

AgentKind agent_from_name(const std::string& name) {
    if (name == "hf_exact")
        return AgentKind::hf_exact;
    if (name == "hf_bonus" || name == "hf")
        return AgentKind::hf_bonus;
    if (name == "lsvi")
        return AgentKind::lsvi;
    if (name == "random")
        return AgentKind::random;
    throw StructuralError("config: unknown agent '" + name + "'");
}

void ExperimentConfig::check() const {
    if (episodes < 1)
        throw StructuralError("config: episodes must be at least 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw StructuralError("config: delta must lie in (0, 1)");
    if (!(eps_net > 0.0))
        throw StructuralError("config: eps_net must be positive");
    for (const auto& v : {eps_bonus, alpha, kappa, beta, lambda})
        if (v && !(*v > 0.0))
            throw StructuralError("config: overrides must be positive");
    if (voful.iota_override && !(*voful.iota_override > 0.0))
        throw StructuralError("config: voful iota must be positive");
    if (threads < 1)
        throw StructuralError("config: threads must be at least 1");
    if (exact_candidates < 1)
        throw StructuralError("config: exact candidate count must be at least 1");
    if (!(lsvi_c >= 0.0) || !(lsvi_lambda > 0.0))
        throw StructuralError("config: lsvi c must be nonnegative and lambda positive");
}

int default_threads() {
    if (const char* env = std::getenv("HFRL_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1)
            return n;
    }
    return 1;
}

ExperimentConfig config_from_json(const json& doc, const fs::path& base_dir) {
    ExperimentConfig c;
    c.threads = default_threads();
    try {
        require_known_keys(doc,
                           {"spec", "agent", "episodes", "delta", "eps_net", "net_budget", "eps_bonus", "overrides",
                            "lsvi", "voful", "exact", "seed", "output_dir", "threads", "validation_probes",
                            "slope_window", "write_trajectories", "comment"},
                           "config");
        if (!doc.contains("spec"))
            throw StructuralError("config: missing 'spec'");
        const json& spec = doc["spec"];
        if (spec.contains("generator")) {
            c.spec.kind = SpecSource::Kind::generator;
            c.spec.generator = generator_from_json(spec["generator"]);
        } else if (spec.contains("inline")) {
            c.spec.kind = SpecSource::Kind::inline_spec;
            c.spec.inline_spec = spec["inline"];
        } else if (spec.contains("file")) {
            c.spec.kind = SpecSource::Kind::file;
            fs::path p = spec["file"].get<std::string>();
            if (p.is_relative() && !base_dir.empty())
                p = base_dir / p;
            c.spec.path = p.string();
        } else {
            throw StructuralError("config: spec needs one of 'generator', 'inline', 'file'");
        }
        c.agent = agent_from_name(doc.value("agent", std::string("hf_bonus")));
        c.episodes = doc.value("episodes", c.episodes);
        c.delta = doc.value("delta", c.delta);
        c.eps_net = doc.value("eps_net", c.eps_net);
        c.net_budget = doc.value("net_budget", c.net_budget);
        c.eps_bonus = optional_field<double>(doc, "eps_bonus");
        if (doc.contains("overrides")) {
            const json& o = doc["overrides"];
            require_known_keys(o, {"alpha", "kappa", "beta", "lambda"}, "overrides");
            c.alpha = optional_field<double>(o, "alpha");
            c.kappa = optional_field<double>(o, "kappa");
            c.beta = optional_field<double>(o, "beta");
            c.lambda = optional_field<double>(o, "lambda");
        }
        if (doc.contains("lsvi")) {
            const json& l = doc["lsvi"];
            require_known_keys(l, {"c", "lambda"}, "lsvi");
            c.lsvi_c = l.value("c", c.lsvi_c);
            c.lsvi_lambda = l.value("lambda", c.lsvi_lambda);
        }
        if (doc.contains("voful")) {
            const json& v = doc["voful"];
            require_known_keys(v,
                               {"random_directions", "candidate_resolution", "candidate_budget", "iota", "anchors",
                                "anchor_ridge"},
                               "voful");
            c.voful.random_directions = v.value("random_directions", c.voful.random_directions);
            c.voful.candidate_resolution = v.value("candidate_resolution", c.voful.candidate_resolution);
            c.voful.candidate_budget = v.value("candidate_budget", c.voful.candidate_budget);
            c.voful.iota_override = optional_field<double>(v, "iota");
            c.voful.anchors = v.value("anchors", c.voful.anchors);
            c.voful.anchor_ridge = v.value("anchor_ridge", c.voful.anchor_ridge);
        }
        if (doc.contains("exact")) {
            const json& e = doc["exact"];
            require_known_keys(e, {"candidates", "perturbation"}, "exact");
            c.exact_candidates = e.value("candidates", c.exact_candidates);
            c.exact_perturbation = e.value("perturbation", c.exact_perturbation);
        }
        c.seed = doc.value("seed", c.seed);
        c.output_dir = doc.value("output_dir", c.output_dir);
        c.threads = doc.value("threads", c.threads);
        c.validation_probes = doc.value("validation_probes", c.validation_probes);
        if (doc.contains("slope_window")) {
            const auto w = doc["slope_window"].get<std::vector<int>>();
            if (w.size() != 2)
                throw StructuralError("config: slope_window needs two entries");
            c.slope_kmin = w[0];
            c.slope_kmax = w[1];
        }
        c.write_trajectories = doc.value("write_trajectories", c.write_trajectories);
    } catch (const json::exception& e) {
        throw StructuralError(std::string("config: ") + e.what());
    }
    c.check();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json doc;
    switch (c.spec.kind) {
    case SpecSource::Kind::generator: doc["spec"] = {{"generator", generator_to_json(c.spec.generator)}}; break;
    case SpecSource::Kind::inline_spec: doc["spec"] = {{"inline", c.spec.inline_spec}}; break;
    case SpecSource::Kind::file: doc["spec"] = {{"file", c.spec.path}}; break;
    }
    doc["agent"] = agent_name(c.agent);
    doc["episodes"] = c.episodes;
    doc["delta"] = c.delta;
    doc["eps_net"] = c.eps_net;
    doc["net_budget"] = c.net_budget;
    doc["eps_bonus"] = c.eps_bonus ? json(*c.eps_bonus) : json(nullptr);
    doc["overrides"] = {{"alpha", c.alpha ? json(*c.alpha) : json(nullptr)},
                        {"kappa", c.kappa ? json(*c.kappa) : json(nullptr)},
                        {"beta", c.beta ? json(*c.beta) : json(nullptr)},
                        {"lambda", c.lambda ? json(*c.lambda) : json(nullptr)}};
    doc["lsvi"] = {{"c", c.lsvi_c}, {"lambda", c.lsvi_lambda}};
    doc["voful"] = {{"random_directions", c.voful.random_directions},
                    {"candidate_resolution", c.voful.candidate_resolution},
                    {"candidate_budget", c.voful.candidate_budget},
                    {"iota", c.voful.iota_override ? json(*c.voful.iota_override) : json(nullptr)},
                    {"anchors", c.voful.anchors},
                    {"anchor_ridge", c.voful.anchor_ridge}};
    doc["exact"] = {{"candidates", c.exact_candidates}, {"perturbation", c.exact_perturbation}};
    doc["seed"] = c.seed;
    doc["output_dir"] = c.output_dir;
    doc["threads"] = c.threads;
    doc["validation_probes"] = c.validation_probes;
    doc["slope_window"] = {c.slope_kmin, c.slope_kmax};
    doc["write_trajectories"] = c.write_trajectories;
    return doc;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw StructuralError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw StructuralError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(doc, path.parent_path());
}

LinearMdpSpec resolve_spec(const ExperimentConfig& config) {
    switch (config.spec.kind) {
    case SpecSource::Kind::generator: return generate_simplex_spec(config.spec.generator);
    case SpecSource::Kind::inline_spec: return spec_from_json(config.spec.inline_spec);
    case SpecSource::Kind::file: {
        std::ifstream in(config.spec.path);
        if (!in)
            throw StructuralError("cannot open spec file " + config.spec.path);
        try {
            return spec_from_json(json::parse(in));
        } catch (const json::exception& e) {
            throw StructuralError("spec file " + config.spec.path + ": " + e.what());
        }
    }
    }
    throw StructuralError("unknown spec source");
}

SlopeFit fit_slope(const std::vector<double>& k, const std::vector<double>& cum, double kmin, double kmax) {
    if (k.size() != cum.size())
        throw std::invalid_argument("fit_slope: length mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (k[i] < kmin || k[i] > kmax || !(cum[i] > 0.0) || !(k[i] > 0.0))
            continue;
        xs.push_back(std::log(k[i]));
        ys.push_back(std::log(cum[i]));
    }
    if (xs.size() < 8)
        throw std::invalid_argument("fit_slope: fewer than 8 usable points in the window");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    SlopeFit fit;
    fit.points = static_cast<int>(xs.size());
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

SlopeFit fit_slope(const std::vector<RegretRow>& rows, int kmin, int kmax) {
    std::vector<double> k, cum;
    for (const auto& r : rows) {
        k.push_back(r.k);
        cum.push_back(r.cum_regret);
    }
    return fit_slope(k, cum, kmin, kmax);
}

void write_regret_header(std::ostream& out) {
    out << "schema_version,k,inst_regret,cum_regret,episode_reward,optimistic_value,diag_id\n";
}

void write_regret_row(std::ostream& out, const RegretRow& r) {
    out << regret_schema_version << ',' << r.k << ',' << format_double(r.inst_regret) << ','
        << format_double(r.cum_regret) << ',' << format_double(r.episode_reward) << ','
        << format_double(r.optimistic_value) << ',' << r.diag_id << '\n';
}

std::vector<RegretRow> read_regret_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw StructuralError("cannot open regret log " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("schema_version,k,", 0) != 0)
        throw StructuralError("regret log " + path.string() + ": unexpected header");
    std::vector<RegretRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (f.size() != 7)
            throw StructuralError("regret log: malformed row '" + line + "'");
        RegretRow r;
        r.k = std::stoi(f[1]);
        r.inst_regret = std::strtod(f[2].c_str(), nullptr);
        r.cum_regret = std::strtod(f[3].c_str(), nullptr);
        r.episode_reward = std::strtod(f[4].c_str(), nullptr);
        r.optimistic_value = std::strtod(f[5].c_str(), nullptr);
        r.diag_id = std::stoi(f[6]);
        rows.push_back(r);
    }
    return rows;
}

RunResult run_experiment(const ExperimentConfig& config) {
    config.check();
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    json& summary = result.summary;
    summary["schema_version"] = regret_schema_version;
    summary["started_at"] = utc_now();
    json cfg = config_to_json(config);
    summary["config"] = cfg;
    cfg.erase("output_dir");
    cfg.erase("threads");
    summary["config_hash"] = fnv1a_hex(cfg.dump());
    summary["seed"] = config.seed;
    summary["agent"] = agent_name(config.agent);

    std::ofstream csv;
    std::ofstream traj_csv;
    fs::path dir;
    if (!config.output_dir.empty()) {
        dir = config.output_dir;
        fs::create_directories(dir);
        csv.open(dir / "regret.csv");
        if (!csv)
            throw Error("cannot write " + (dir / "regret.csv").string());
        write_regret_header(csv);
        csv.flush();
        if (config.write_trajectories) {
            traj_csv.open(dir / "trajectories.csv");
            write_trajectory_csv_header(traj_csv);
        }
    }
    json episodes_diag = json::array();

    try {
        const LinearMdpSpec spec = resolve_spec(config);
        check_dimensions(spec);
        const ValidationReport report =
            validate_spec(spec, config.validation_probes, derive_seed(config.seed, 5));
        summary["validation"] = report.to_json();
        if (!report.ok())
            throw ValidationError("spec failed validation: " + report.to_json().dump());
        const int K = config.episodes;
        const int H = spec.horizon;
        const int d = spec.dim;
        const double v_star = optimal_values(spec).V(0, spec.initial_state);
        summary["optimal_value"] = v_star;

        Rng env_rng(derive_seed(config.seed, 1));
        Rng agent_rng(derive_seed(config.seed, 2));

        std::unique_ptr<HfLearner> hf;
        std::unique_ptr<LsviLearner> lsvi;
        std::vector<ModelCandidate> model_class;
        json constants;
        if (config.agent == AgentKind::hf_bonus || config.agent == AgentKind::hf_exact) {
            WlsParams wls = default_wls_params(d, H, K, config.delta);
            if (config.lambda)
                wls.lambda = *config.lambda;
            if (config.alpha)
                wls.alpha = *config.alpha;
            if (config.kappa)
                wls.kappa = *config.kappa;
            if (config.eps_bonus)
                wls.eps_bonus = *config.eps_bonus;
            ThetaNet tn = build_theta_net(d, 2.0 * std::sqrt(static_cast<double>(d)), config.eps_net,
                                          config.net_budget, derive_seed(config.seed, 3), 2000);
            auto net = std::make_shared<const ValueNet>(build_value_net(spec, std::move(tn)));
            VofulConfig vc = config.voful;
            vc.delta = config.delta;
            vc.seed = derive_seed(config.seed, 4);
            hf = std::make_unique<HfLearner>(spec, net, wls, vc, config.threads);
            constants = {{"lambda", wls.lambda},
                         {"alpha", wls.alpha},
                         {"kappa", wls.kappa},
                         {"eps_bonus", wls.eps_bonus},
                         {"net_points", net->count()},
                         {"net_distinct_rows", net->distinct.size()},
                         {"net_is_grid", net->theta_net.is_grid},
                         {"net_covering_l2", net->theta_net.covering_l2},
                         {"voful_candidates", hf->rewards().candidates().size()},
                         {"voful_directions", hf->rewards().directions().rows()},
                         {"voful_iota_initial", hf->rewards().iota(1)}};
            if (config.agent == AgentKind::hf_exact) {
                Rng class_rng(derive_seed(config.seed, 6));
                model_class = perturbed_class(spec, config.exact_candidates, config.exact_perturbation, class_rng);
            }
        } else if (config.agent == AgentKind::lsvi) {
            LsviParams lp;
            lp.lambda = config.lsvi_lambda;
            lp.beta = config.beta ? *config.beta : default_lsvi_beta(d, H, K, config.delta, config.lsvi_c);
            lsvi = std::make_unique<LsviLearner>(spec, lp);
            constants = {{"lambda", lp.lambda}, {"beta", lp.beta}};
        }
        summary["constants"] = constants;

        double cum = 0.0;
        long long clip_total = 0;
        for (int k = 1; k <= K; ++k) {
            TabularPolicy policy;
            RegretRow row;
            row.k = k;
            row.optimistic_value = std::numeric_limits<double>::quiet_NaN();
            json diag;
            if (hf) {
                const OptimisticPlan plan =
                    config.agent == AgentKind::hf_exact ? hf->plan_exact(model_class) : hf->plan();
                policy = plan.policy;
                row.optimistic_value = plan.value(spec.initial_state);
                double max_proj = 0.0;
                for (double e : plan.projection_error)
                    max_proj = std::max(max_proj, e);
                double mean_bonus = 0.0;
                for (double b : plan.mean_bonus)
                    mean_bonus += b / H;
                diag = {{"k", k},
                        {"reward_candidates_alive", hf->rewards().alive_count(hf->rewards().last_checkpoint())},
                        {"max_projection_error", max_proj},
                        {"mean_bonus", mean_bonus},
                        {"active_estimators", hf->transitions().active_count()}};
                if (config.agent == AgentKind::hf_exact) {
                    diag["chosen_candidate"] = plan.chosen_candidate;
                    diag["surviving_models"] = plan.survivors.size();
                }
            } else if (lsvi) {
                const LsviPlan plan = lsvi->plan();
                policy = plan.policy;
                row.optimistic_value = plan.values(0, spec.initial_state);
                diag = {{"k", k}};
            } else {
                policy = random_policy(H, spec.num_states, spec.num_actions, agent_rng);
            }
            const Trajectory traj = rollout(spec, policy, env_rng, k);
            clip_total += traj.clip_activations;
            row.inst_regret = episode_regret(spec, policy);
            cum += row.inst_regret;
            row.cum_regret = cum;
            row.episode_reward = traj.total_reward();
            if (!diag.is_null()) {
                row.diag_id = static_cast<int>(episodes_diag.size());
                episodes_diag.push_back(std::move(diag));
            }
            if (hf)
                hf->update(traj);
            else if (lsvi)
                lsvi->update(traj);
            result.rows.push_back(row);
            if (csv.is_open()) {
                write_regret_row(csv, row);
                csv.flush();
            }
            if (traj_csv.is_open())
                write_trajectory_csv(traj_csv, traj);
        }

        summary["final_cum_regret"] = cum;
        const int kmin = config.slope_kmin > 0 ? config.slope_kmin : std::max(1, K / 16);
        const int kmax = config.slope_kmax > 0 ? config.slope_kmax : K;
        try {
            const SlopeFit fit = fit_slope(result.rows, kmin, kmax);
            summary["slope"] = {{"kmin", kmin}, {"kmax", kmax}, {"slope", fit.slope}, {"intercept", fit.intercept},
                                {"r2", fit.r2}, {"points", fit.points}};
        } catch (const std::invalid_argument&) {
            summary["slope"] = nullptr;
        }
        json& diagnostics = result.diagnostics;
        diagnostics["episodes"] = std::move(episodes_diag);
        diagnostics["reward_clip_activations"] = clip_total;
        if (hf) {
            const auto& conf = hf->transitions();
            const auto& vs = hf->rewards();
            diagnostics["estimators"] = {{"active", conf.active_count()},
                                         {"floor_activations", conf.floor_activations()},
                                         {"refreshes", conf.refresh_count()},
                                         {"max_condition", conf.max_condition()}};
            diagnostics["reward_confidence"] = {{"samples", vs.n()},
                                                {"candidates", vs.candidates().size()},
                                                {"alive", vs.alive_count(vs.last_checkpoint())},
                                                {"anchors_added", vs.anchors_added()},
                                                {"iota_final", vs.iota(vs.n())}};
        }
        summary["status"] = "ok";
    } catch (const std::exception& e) {
        summary["status"] = "error";
        summary["error"] = error_json(e);
        summary["episodes_completed"] = result.rows.size();
        summary["finished_at"] = utc_now();
        if (!dir.empty()) {
            csv.flush();
            result.diagnostics["episodes"] = std::move(episodes_diag);
            write_json_file(dir / "summary.json", summary);
            write_json_file(dir / "diagnostics.json", result.diagnostics);
        }
        throw;
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary["finished_at"] = utc_now();
    summary["seconds"] = result.seconds;
    if (!dir.empty()) {
        write_json_file(dir / "summary.json", summary);
        write_json_file(dir / "diagnostics.json", result.diagnostics);
    }
    return result;
}

json SweepResult::to_json() const {
    json runs = json::array();
    for (const auto& e : entries)
        runs.push_back({{"seed", e.seed}, {"final_regret", e.final_regret}, {"slope", e.slope.slope},
                        {"slope_r2", e.slope.r2}, {"seconds", e.seconds}});
    return {{"runs", runs},
            {"mean_final_regret", mean_final},
            {"std_final_regret", std_final},
            {"mean_slope", mean_slope},
            {"std_slope", std_slope}};
}

SweepResult sweep(const ExperimentConfig& config, int num_seeds, int parallel_runs) {
    if (num_seeds < 1)
        throw std::invalid_argument("sweep: need at least one seed");
    SweepResult out;
    out.entries.resize(static_cast<std::size_t>(num_seeds));
    const int kmin = config.slope_kmin > 0 ? config.slope_kmin : std::max(1, config.episodes / 16);
    const int kmax = config.slope_kmax > 0 ? config.slope_kmax : config.episodes;
    parallel_for(out.entries.size(), parallel_runs, [&](std::size_t i) {
        ExperimentConfig c = config;
        c.seed = config.seed + i;
        if (parallel_runs > 1)
            c.threads = 1;
        if (!config.output_dir.empty())
            c.output_dir = (fs::path(config.output_dir) / ("seed_" + std::to_string(c.seed))).string();
        const RunResult r = run_experiment(c);
        SweepEntry& e = out.entries[i];
        e.seed = c.seed;
        e.final_regret = r.final_regret();
        e.slope = fit_slope(r.rows, kmin, kmax);
        e.seconds = r.seconds;
    });
    auto mean_std = [&](auto get, double& mean, double& sd) {
        const double n = static_cast<double>(out.entries.size());
        mean = 0.0;
        for (const auto& e : out.entries)
            mean += get(e) / n;
        double ss = 0.0;
        for (const auto& e : out.entries)
            ss += (get(e) - mean) * (get(e) - mean);
        sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    };
    mean_std([](const SweepEntry& e) { return e.final_regret; }, out.mean_final, out.std_final);
    mean_std([](const SweepEntry& e) { return e.slope.slope; }, out.mean_slope, out.std_slope);
    if (!config.output_dir.empty()) {
        const fs::path dir = config.output_dir;
        fs::create_directories(dir);
        std::ofstream csv(dir / "sweep.csv");
        csv << "seed,final_regret,slope,slope_r2,seconds\n";
        for (const auto& e : out.entries)
            csv << e.seed << ',' << format_double(e.final_regret) << ',' << format_double(e.slope.slope) << ','
                << format_double(e.slope.r2) << ',' << format_double(e.seconds) << '\n';
        json doc = out.to_json();
        doc["config"] = config_to_json(config);
        write_json_file(dir / "sweep.json", doc);
    }
    return out;
}

} // namespace hfrl
