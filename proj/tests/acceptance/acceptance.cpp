// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Optional arguments select criteria by number.

#include "brute.hpp"

#include "hfrl/baselines.hpp"
#include "hfrl/errors.hpp"
#include "hfrl/harness.hpp"
#include "hfrl/oracles.hpp"
#include "hfrl/planner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>

using namespace hfrl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

const fs::path config_dir = fs::path(HFRL_SOURCE_DIR) / "configs";
const fs::path scratch_dir = fs::temp_directory_path() / "hfrl_acceptance";

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

LinearMdpSpec benchmark_spec() { return resolve_spec(load_config(config_dir / "benchmark.json")); }

Eigen::VectorXd transition_probs(const LinearMdpSpec& spec, int sa) {
    return spec.mu * spec.features.row(sa).transpose();
}

int sample_next(const LinearMdpSpec& spec, int sa, Rng& rng) {
    const Eigen::VectorXd p = transition_probs(spec, sa);
    return static_cast<int>(rng.categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size()))));
}

Eigen::VectorXd ball_point(Rng& rng, int d, double radius) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i)
        v(i) = rng.normal();
    return radius * v.normalized() * std::pow(rng.uniform(), 1.0 / d);
}

// ---------------------------------------------------------------------------

Outcome lemma_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    for (const auto& id : lemma_ids()) {
        const LemmaReport r = run_lemma(id, default_trials(id), 2024, default_threads());
        ok = ok && r.ok() && r.trials >= 200;
        detail += fmt("%s %lld/%lld ", id.c_str(), r.violations, r.trials);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail += fmt("(violations/trials), %.1fs", secs);
    return {ok && secs < 120.0, detail};
}

Outcome estimator_containment() {
    const LinearMdpSpec spec = benchmark_spec();
    const WlsParams params = default_wls_params(spec.dim, spec.horizon, 4096, 0.1);
    const auto net = std::make_shared<const ValueNet>(
        build_value_net(spec, build_theta_net(spec.dim, 2.0 * std::sqrt(spec.dim), 1.0, 200000, 1, 0)));
    const std::vector<int> checkpoints = {4, 16, 64, 256};
    const int replications = 200;
    const int rows_per_rep = 16;
    int contained = 0;
    double worst_ratio = 0.0;
    for (int rep = 0; rep < replications; ++rep) {
        Rng rng(derive_seed(77, static_cast<std::uint64_t>(rep)));
        TransitionConfidence conf(net, params, spec.features);
        std::vector<int> rows;
        for (int i = 0; i < rows_per_rep; ++i)
            rows.push_back(net->distinct[rng.uniform_int(net->distinct.size())]);
        bool all = true;
        std::size_t next_cp = 0;
        for (int k = 1; k <= checkpoints.back(); ++k) {
            const Trajectory t =
                rollout(spec, random_policy(spec.horizon, spec.num_states, spec.num_actions, rng), rng, k);
            for (const auto& st : t.steps)
                conf.add_transition(spec.sa(st.state, st.action), st.next_state);
            if (k != checkpoints[next_cp])
                continue;
            ++next_cp;
            for (int j : rows) {
                const WlsState& est = conf.estimator(j);
                const Eigen::VectorXd err = est.theta_hat() - spec.mu.transpose() * net->row(j);
                const double norm = std::sqrt(err.dot(est.lambda() * err));
                worst_ratio = std::max(worst_ratio, norm / params.kappa);
                all = all && norm <= params.kappa;
            }
        }
        contained += all ? 1 : 0;
    }
    const double freq = static_cast<double>(contained) / replications;
    return {freq >= 0.9, fmt("contained in %d/%d replications (need >= 0.90), kappa %.1f, worst ||err||/kappa %.3g",
                             contained, replications, params.kappa, worst_ratio)};
}

Outcome variance_dominance() {
    const LinearMdpSpec spec = benchmark_spec();
    const WlsParams params = default_wls_params(spec.dim, spec.horizon, 4096, 0.1);
    Rng rng(33);
    const int queries = 1000;
    int dominated = 0;
    double worst_plugin = 0.0;
    WlsParams plug = params;
    plug.alpha = 0.0;
    plug.eps_bonus = 0.0;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(spec.dim, spec.dim);
    for (int q = 0; q < queries; ++q) {
        Eigen::VectorXd v(spec.num_states);
        for (int s = 0; s < spec.num_states; ++s)
            v(s) = rng.uniform();
        WlsState st(spec.dim, params);
        for (int i = 0; i < 1000; ++i) {
            const int sa = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.num_pairs())));
            const int next = sample_next(spec, sa, rng);
            st.push_sample(spec.features.row(sa).transpose(), v(next), v(next) * v(next));
        }
        const int sa = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.num_pairs())));
        const Eigen::VectorXd phi = spec.features.row(sa).transpose();
        if (st.variance_upper(phi) >= brute_variance(transition_probs(spec, sa), v))
            ++dominated;

        const Eigen::VectorXd th = spec.mu.transpose() * v;
        const Eigen::VectorXd tt = spec.mu.transpose() * v.cwiseProduct(v);
        for (int p = 0; p < spec.num_pairs(); ++p) {
            const Eigen::VectorXd f = spec.features.row(p).transpose();
            worst_plugin = std::max(worst_plugin, std::abs(variance_upper(f, th, tt, identity, plug) -
                                                           brute_variance(transition_probs(spec, p), v)));
        }
    }
    const bool ok = dominated >= 990 && worst_plugin <= 1e-10;
    return {ok, fmt("dominance on %d/%d queries (need >= 990), plug-in max error %.2e (need <= 1e-10)", dominated,
                    queries, worst_plugin)};
}

Outcome voful_containment() {
    const int d = 4;
    const int n = 256;
    const int streams = 200;
    const int probes = 8;
    VofulConfig cfg;
    cfg.delta = 1e-4;
    cfg.random_directions = 16;
    int contained = 0;
    long long nesting_pairs = 0, nesting_failures = 0;
    long long agreement_failures = 0;
    for (int s = 0; s < streams; ++s) {
        Rng rng(derive_seed(55, static_cast<std::uint64_t>(s)));
        cfg.seed = static_cast<std::uint64_t>(s);
        const Eigen::VectorXd truth = ball_point(rng, d, 1.0);
        Eigen::MatrixXd cands(probes + 1, d);
        cands.row(0) = truth.transpose();
        for (int i = 1; i <= probes; ++i) {
            Eigen::VectorXd c = truth + ball_point(rng, d, std::pow(2.0, -i + 1));
            if (c.norm() > 2.0)
                c *= 2.0 / c.norm();
            cands.row(i) = c.transpose();
        }
        VofulState st(d, cfg, cands);
        for (int i = 1; i <= n; ++i) {
            const Eigen::VectorXd x = ball_point(rng, d, 1.0);
            // bounded zero-mean noise whose scale depends on the feature
            const double noise = (0.1 + 0.4 * std::abs(x(0))) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            st.ingest_scaled(x, x.dot(truth) + noise);
            if ((i & (i - 1)) == 0)
                st.checkpoint();
        }
        contained += st.member(truth, n) ? 1 : 0;
        const auto& cps = st.checkpoints();
        for (std::size_t c = 0; c < st.candidates().size(); ++c) {
            const auto& cand = st.candidates()[c];
            bool prev = true;
            for (long long k : cps) {
                const bool in = st.member(cand.theta, k);
                agreement_failures += (in != (cand.pruned_at > k)) ? 1 : 0;
                ++nesting_pairs;
                nesting_failures += (in && !prev) ? 1 : 0;
                prev = in;
            }
        }
    }
    const double freq = static_cast<double>(contained) / streams;
    const double need = 1.0 - 10.0 * n * cfg.delta;
    const bool ok = freq >= need && nesting_failures == 0 && agreement_failures == 0;
    return {ok, fmt("truth kept in %d/%d streams (need >= %.3f), nesting failures %lld/%lld, pruning/membership "
                    "mismatches %lld",
                    contained, streams, need, nesting_failures, nesting_pairs, agreement_failures)};
}

Outcome exact_fidelity() {
    int matched = 0, multi = 0, partial = 0, empty = 0;
    const int instances = 50;
    for (int i = 0; i < instances; ++i) {
        const int S = 2 + i % 2;
        const int H = 2 + i % 3;
        const int d = 2 + (i / 2) % 2;
        const LinearMdpSpec spec = brute::small_random(1000 + static_cast<std::uint64_t>(i), S, 2, d, H);
        Rng rng(derive_seed(91, static_cast<std::uint64_t>(i)));
        const auto net = std::make_shared<const ValueNet>(
            build_value_net(spec, build_theta_net(d, 2.0 * std::sqrt(d), 0.5, 200000, 1, 0)));
        WlsParams wp;
        wp.lambda = 0.1;
        wp.alpha = 1.0;
        wp.eps_bonus = 1e-4;
        wp.kappa = 1.0;
        TransitionConfidence conf(net, wp, spec.features);
        VofulConfig vc;
        vc.random_directions = 8;
        vc.candidate_resolution = 0.5;
        vc.iota_override = 2.0;
        vc.seed = static_cast<std::uint64_t>(i);
        VofulState voful(d, vc);
        for (int k = 0; k < 40; ++k) {
            const Trajectory t = rollout(spec, random_policy(H, S, 2, rng), rng, k);
            for (const auto& st : t.steps) {
                conf.add_transition(spec.sa(st.state, st.action), st.next_state);
                voful.ingest(st.feature, st.reward);
            }
            voful.checkpoint();
        }

        std::vector<ModelCandidate> cands;
        cands.push_back({spec.mu, spec.theta_r});
        for (int c = 1; c < 8; ++c) {
            ModelCandidate m{spec.mu, spec.theta_r};
            for (int col = 0; col < d; ++col) {
                const double w = 0.08 * c * rng.uniform();
                Eigen::VectorXd q(S);
                for (int s = 0; s < S; ++s)
                    q(s) = rng.exponential();
                m.mu.col(col) = (1 - w) * m.mu.col(col) + w * q / q.sum();
                m.theta_r(col) *= 1.0 + 0.15 * c * (rng.uniform() - 0.3);
            }
            cands.push_back(m);
        }

        // enumeration oracle over (candidate, policy)
        std::vector<int> survivors;
        double best = -1.0;
        int best_c = -1;
        for (int c = 0; c < 8; ++c) {
            const auto& m = cands[static_cast<std::size_t>(c)];
            if (!transition_member(m.mu, conf, Eigen::MatrixXd()) || !voful.member(m.theta_r, voful.n()))
                continue;
            survivors.push_back(c);
            brute::for_each_policy(S, 2, H, [&](const std::vector<int>& table) {
                const double v = brute::forward_value(spec.features, m.mu, m.theta_r, S, 2, H, spec.initial_state, table);
                if (v > best + 1e-12) {
                    best = v;
                    best_c = c;
                }
            });
        }

        bool ok = false;
        try {
            const OptimisticPlan plan = plan_exact(cands, conf, voful, spec);
            if (best_c >= 0 && plan.survivors == survivors && plan.chosen_candidate == best_c) {
                const auto& m = cands[static_cast<std::size_t>(best_c)];
                const double achieved = brute::forward_value(spec.features, m.mu, m.theta_r, S, 2, H,
                                                             spec.initial_state, plan.policy.table());
                ok = std::abs(plan.value(spec.initial_state) - best) <= 1e-12 && std::abs(achieved - best) <= 1e-12;
            }
        } catch (const EmptyConfidenceSet&) {
            ok = survivors.empty();
            ++empty;
        }
        matched += ok ? 1 : 0;
        multi += survivors.size() > 1 ? 1 : 0;
        partial += !survivors.empty() && survivors.size() < cands.size() ? 1 : 0;
    }
    return {matched == instances, fmt("%d/%d instances match enumeration (%d with several survivors, %d partly "
                                      "eliminated, %d empty)",
                                      matched, instances, multi, partial, empty)};
}

SweepResult run_sweep(const std::string& name, int episodes, const fs::path& out, int kmin = 0) {
    ExperimentConfig c = load_config(config_dir / name);
    c.episodes = episodes;
    c.output_dir = out.empty() ? std::string() : out.string();
    if (kmin > 0) {
        c.slope_kmin = kmin;
        c.slope_kmax = episodes;
    }
    return sweep(c, 5, default_threads());
}

Outcome sublinear_regret() {
    fs::remove_all(scratch_dir / "ac6");
    const SweepResult hf = run_sweep("benchmark.json", 4096, scratch_dir / "ac6", 256);
    const SweepResult rnd = run_sweep("benchmark_random.json", 4096, {});
    double slowest = 0.0;
    for (const auto& e : hf.entries)
        slowest = std::max(slowest, e.seconds);
    const bool ok = hf.mean_slope <= 0.75 && hf.mean_final < 0.5 * rnd.mean_final && slowest < 900.0;
    return {ok, fmt("mean slope %.3f (need <= 0.75), mean final %.1f vs random %.1f (need < %.1f), slowest seed %.1fs",
                    hf.mean_slope, hf.mean_final, rnd.mean_final, 0.5 * rnd.mean_final, slowest)};
}

Outcome horizon_mildness() {
    const SweepResult h10 = run_sweep("benchmark.json", 2048, {});
    const SweepResult h20 = run_sweep("benchmark_h20.json", 2048, {});
    const double ratio = h20.mean_final / h10.mean_final;
    // factor 2 widened by the 30% seed-noise band
    const double limit = 2.0 * 1.3;
    return {ratio < limit, fmt("H=20 / H=10 mean final regret %.1f / %.1f = %.3f (need < %.1f)", h20.mean_final,
                               h10.mean_final, ratio, limit)};
}

Outcome determinism() {
    ExperimentConfig c = load_config(config_dir / "benchmark.json");
    const fs::path first = scratch_dir / "ac6" / ("seed_" + std::to_string(c.seed)) / "regret.csv";
    if (!fs::exists(first)) {
        c.episodes = 512;
        c.output_dir = (scratch_dir / "ac8_a").string();
        run_experiment(c);
    }
    const fs::path reference = fs::exists(first) ? first : scratch_dir / "ac8_a" / "regret.csv";
    c.output_dir = (scratch_dir / "ac8_b").string();
    run_experiment(c);
    const std::string a = slurp(reference);
    const std::string b = slurp(scratch_dir / "ac8_b" / "regret.csv");
    const bool ok = !a.empty() && a == b;
    return {ok, fmt("regret.csv %s on repeat (%zu bytes, %d episodes)", ok ? "identical" : "differs", a.size(),
                    c.episodes)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"AC1 lemma oracle suite", lemma_suite},
        {"AC2 estimator containment", estimator_containment},
        {"AC3 variance dominance", variance_dominance},
        {"AC4 reward confidence containment and nesting", voful_containment},
        {"AC5 exact-mode fidelity", exact_fidelity},
        {"AC6 sublinear regret", sublinear_regret},
        {"AC7 horizon mildness", horizon_mildness},
        {"AC8 determinism", determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i)
        selected.insert(std::atoi(argv[i]));
    fs::create_directories(scratch_dir);

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected.empty() && !selected.count(static_cast<int>(i) + 1))
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += out.pass ? 0 : 1;
        std::cout << (out.pass ? "PASS " : "FAIL ") << criteria[i].first << ": " << out.detail
                  << fmt(" [%.1fs]", secs) << std::endl;
    }
    return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
