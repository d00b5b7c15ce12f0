#include "hfrl/oracles.hpp"

#include "hfrl/errors.hpp"
#include "hfrl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace hfrl {

using nlohmann::json;

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

struct Halfspace {
    Eigen::VectorXd normal;
    double offset;
};

// Supporting hyperplanes through d-subsets of the vertices, d <= 3.
std::vector<Halfspace> hull_facets(const Eigen::MatrixXd& V) {
    const int d = static_cast<int>(V.cols());
    const int n = static_cast<int>(V.rows());
    std::vector<Halfspace> facets;
    if (d == 1) {
        facets.push_back({Eigen::VectorXd::Constant(1, 1.0), V.col(0).maxCoeff()});
        facets.push_back({Eigen::VectorXd::Constant(1, -1.0), -V.col(0).minCoeff()});
        return facets;
    }
    auto try_plane = [&](Eigen::VectorXd normal, const Eigen::VectorXd& through) {
        const double len = normal.norm();
        if (len < 1e-12)
            return;
        normal /= len;
        double offset = normal.dot(through);
        const Eigen::VectorXd side = V * normal - Eigen::VectorXd::Constant(n, offset);
        if (side.maxCoeff() <= 1e-12) {
            facets.push_back({normal, offset});
        } else if (side.minCoeff() >= -1e-12) {
            facets.push_back({-normal, -offset});
        }
    };
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const Eigen::VectorXd e1 = (V.row(b) - V.row(a)).transpose();
            if (d == 2) {
                Eigen::VectorXd normal(2);
                normal << -e1(1), e1(0);
                try_plane(normal, V.row(a).transpose());
                continue;
            }
            for (int c = b + 1; c < n; ++c) {
                const Eigen::Vector3d u = e1.head<3>();
                const Eigen::Vector3d w = (V.row(c) - V.row(a)).transpose().head<3>();
                try_plane(u.cross(w), V.row(a).transpose());
            }
        }
    }
    return facets;
}

bool inside(const std::vector<Halfspace>& facets, const Eigen::VectorXd& x) {
    for (const auto& f : facets)
        if (f.normal.dot(x) > f.offset)
            return false;
    return true;
}

Eigen::VectorXd random_distribution(Rng& rng, int n) {
    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i)
        p(i) = rng.exponential();
    return p / p.sum();
}

Eigen::VectorXd random_unit(Rng& rng, int d) {
    Eigen::VectorXd u(d);
    do {
        for (int i = 0; i < d; ++i)
            u(i) = rng.normal();
    } while (u.norm() == 0.0);
    return u / u.norm();
}

int uniform_between(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
}

// --- randomized instance generators, one per oracle ---

LemmaReport trial_var_square(Rng& rng) {
    const int n = 5;
    const double C = rng.uniform(0.1, 3.0);
    Eigen::VectorXd values(n);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        values(i) = u < 0.15 ? C : (u < 0.3 ? -C : rng.uniform(-C, C));
    }
    return check_var_square(values, random_distribution(rng, n), C);
}

LemmaReport trial_center_dominance(Rng& rng) {
    for (int attempt = 0;; ++attempt) {
        const int d = uniform_between(rng, 1, 3);
        const int nv = d + 1 + uniform_between(rng, 0, 4);
        Eigen::MatrixXd V(nv, d);
        for (int i = 0; i < nv; ++i)
            for (int k = 0; k < d; ++k)
                V(i, k) = rng.uniform();
        Eigen::MatrixXd psi(10, d);
        for (int j = 0; j < 10; ++j) {
            Eigen::VectorXd cand(d);
            bool found = false;
            for (int t = 0; t < 1000 && !found; ++t) {
                cand = random_unit(rng, d);
                found = (V * cand).minCoeff() >= 0.0;
            }
            if (!found)
                cand = random_unit(rng, d).cwiseAbs();
            psi.row(j) = cand.transpose();
        }
        try {
            return check_center_dominance(V, psi, 20000, rng);
        } catch (const std::invalid_argument&) {
            if (attempt > 100)
                throw;
        }
    }
}

LemmaReport trial_group_max(Rng& rng) {
    for (;;) {
        const int l = uniform_between(rng, 1, 6);
        const int n = uniform_between(rng, 1, 20);
        const int m = uniform_between(rng, 1, 20);
        Eigen::MatrixXd phis(n, l);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < l; ++k)
                phis(i, k) = rng.uniform();
            if (l > 1 && rng.bernoulli(0.3))
                phis(i, static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(l)))) = -0.2 * rng.uniform();
            phis.row(i) *= rng.uniform(0.1, 2.0);
        }
        Eigen::MatrixXd psis(m, l);
        bool ok = true;
        for (int j = 0; j < m && ok; ++j) {
            bool found = false;
            for (int t = 0; t < 2000 && !found; ++t) {
                Eigen::VectorXd cand(l);
                for (int k = 0; k < l; ++k)
                    cand(k) = rng.uniform(-0.2, 1.0);
                cand *= rng.uniform(0.1, 2.0);
                if ((phis * cand).minCoeff() >= 0.0) {
                    psis.row(j) = cand.transpose();
                    found = true;
                }
            }
            ok = found;
        }
        if (ok)
            return check_group_max(phis, psis);
    }
}

LemmaReport trial_elliptical(Rng& rng) {
    const int d = uniform_between(rng, 1, 8);
    const int n = uniform_between(rng, 2, 500);
    const double lambda = rng.uniform(0.05, 1.0);
    Eigen::MatrixXd phis(n, d);
    const bool repeat = rng.bernoulli(0.2);
    const Eigen::VectorXd fixed = random_unit(rng, d);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd v = repeat ? fixed : Eigen::VectorXd(random_unit(rng, d) * std::sqrt(rng.uniform()));
        phis.row(i) = v.transpose();
    }
    const double p = rng.uniform(0.02, 0.6);
    std::vector<int> partition{0};
    for (int i = 1; i < n; ++i)
        if (rng.bernoulli(p))
            partition.push_back(i);
    partition.push_back(n);
    return check_elliptical_potential(phis, lambda, partition, 1.0);
}

GeneratorParams random_generator(Rng& rng, int s_lo, int s_hi, int a_lo, int a_hi, int d_lo, int d_hi, int h_lo,
                                 int h_hi) {
    GeneratorParams g;
    g.num_states = uniform_between(rng, s_lo, s_hi);
    g.num_actions = uniform_between(rng, a_lo, a_hi);
    g.dim = uniform_between(rng, d_lo, d_hi);
    g.horizon = uniform_between(rng, h_lo, h_hi);
    g.seed = rng.next_u64();
    g.feature_sharpness = rng.uniform(0.5, 3.0);
    g.kernel_sharpness = rng.uniform(0.5, 3.0);
    g.reward_mode = rng.bernoulli(0.5) ? GeneratorParams::RewardMode::dense : GeneratorParams::RewardMode::goal;
    g.goal_coordinate = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(g.dim)));
    return g;
}

LemmaReport trial_value_drift(Rng& rng) {
    return check_value_drift(generate_simplex_spec(random_generator(rng, 2, 10, 2, 4, 1, 5, 1, 32)));
}

LemmaReport trial_total_variance(Rng& rng) {
    const LinearMdpSpec spec = generate_simplex_spec(random_generator(rng, 2, 6, 2, 3, 2, 4, 2, 16));
    return check_total_variance(spec, 256, 0.1, rng);
}

using TrialFn = LemmaReport (*)(Rng&);

const std::map<std::string, std::pair<TrialFn, int>>& registry() {
    static const std::map<std::string, std::pair<TrialFn, int>> r{
        {"var_square", {trial_var_square, 1000}},
        {"center_dominance", {trial_center_dominance, 200}},
        {"group_max", {trial_group_max, 1000}},
        {"elliptical_potential", {trial_elliptical, 200}},
        {"value_drift", {trial_value_drift, 200}},
        {"total_variance", {trial_total_variance, 200}},
    };
    return r;
}

} // namespace

double brute_variance(const Eigen::VectorXd& p, const Eigen::VectorXd& v) {
    if (p.size() != v.size())
        throw StructuralError("brute_variance: length mismatch");
    double mean = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        mean += p(i) * v(i);
    double var = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        var += p(i) * (v(i) - mean) * (v(i) - mean);
    // Centered form equals p'(v^2) - (p'v)^2 when p sums to one.
    double mass = p.sum();
    if (std::abs(mass - 1.0) > 1e-12) {
        double second = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i)
            second += p(i) * v(i) * v(i);
        var = second - mean * mean;
    }
    if (var < 0.0 && var >= -1e-12)
        var = 0.0;
    return var;
}

void LemmaReport::merge(const LemmaReport& other) {
    trials += other.trials;
    violations += other.violations;
    if (other.worst_margin < worst_margin) {
        worst_margin = other.worst_margin;
        witness = other.witness;
    }
}

json LemmaReport::to_json() const {
    json j;
    j["lemma"] = lemma;
    j["trials"] = trials;
    j["violations"] = violations;
    j["worst_margin"] = std::isfinite(worst_margin) ? json(worst_margin) : json(nullptr);
    j["witness"] = witness;
    if (!extra.empty())
        j["extra"] = extra;
    return j;
}

LemmaReport check_var_square(const Eigen::VectorXd& values, const Eigen::VectorXd& probs, double C) {
    if (values.size() != probs.size() || values.size() == 0)
        throw std::invalid_argument("check_var_square: values and probabilities must match and be non-empty");
    if ((values.array().abs() > C + 1e-12).any())
        throw std::invalid_argument("check_var_square: support exceeds [-C, C]");
    LemmaReport r;
    r.lemma = "var_square";
    const double var_x = brute_variance(probs, values);
    const double var_x2 = brute_variance(probs, values.array().square().matrix());
    const double margin = 4.0 * C * C * var_x - var_x2;
    r.record(margin, [&] { return json{{"values", vec_json(values)}, {"probs", vec_json(probs)}, {"C", C}}; });
    return r;
}

LemmaReport check_center_dominance(const Eigen::MatrixXd& vertices, const Eigen::MatrixXd& directions,
                                   int mc_samples, Rng& rng) {
    const int d = static_cast<int>(vertices.cols());
    if (d < 1 || d > 3)
        throw std::invalid_argument("check_center_dominance: supports 1 <= d <= 3");
    if (directions.cols() != d)
        throw std::invalid_argument("check_center_dominance: direction dimension mismatch");
    if (mc_samples < 2)
        throw std::invalid_argument("check_center_dominance: need at least two samples");
    const Eigen::MatrixXd products = vertices * directions.transpose();
    if (products.minCoeff() < -1e-12)
        throw std::invalid_argument("check_center_dominance: a direction has negative product with a vertex");

    const Eigen::MatrixXd spread = vertices.rowwise() - vertices.row(0);
    if (vertices.rows() <= d || Eigen::FullPivLU<Eigen::MatrixXd>(spread).setThreshold(1e-10).rank() < d)
        throw std::invalid_argument("check_center_dominance: hull is degenerate");
    const auto facets = hull_facets(vertices);
    const Eigen::VectorXd lo = vertices.colwise().minCoeff().transpose();
    const Eigen::VectorXd hi = vertices.colwise().maxCoeff().transpose();
    const Eigen::Index m = directions.rows();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd x(d);
    long long accepted = 0;
    const long long max_draws = 1000LL * mc_samples;
    for (long long draws = 0; accepted < mc_samples; ++draws) {
        if (draws >= max_draws)
            throw std::invalid_argument("check_center_dominance: hull is degenerate");
        for (int k = 0; k < d; ++k)
            x(k) = rng.uniform(lo(k), hi(k));
        if (!inside(facets, x))
            continue;
        ++accepted;
        const Eigen::VectorXd t = directions * x;
        sum += t;
        sum_sq += t.cwiseProduct(t);
    }
    LemmaReport r;
    r.lemma = "center_dominance";
    const double N = static_cast<double>(accepted);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double mean = sum(j) / N;
        const double var = std::max(0.0, (sum_sq(j) - N * mean * mean) / (N - 1.0));
        const double se = std::sqrt(var / N);
        const double bound = products.col(j).maxCoeff() / (2.0 * d);
        r.record(
            mean - bound,
            [&] {
                return json{{"vertices", mat_json(vertices)},
                            {"direction", vec_json(directions.row(j).transpose())},
                            {"centroid_projection", mean},
                            {"standard_error", se},
                            {"bound", bound}};
            },
            3.0 * se + lemma_tolerance);
    }
    return r;
}

LemmaReport check_group_max(const Eigen::MatrixXd& phis, const Eigen::MatrixXd& psis) {
    if (phis.cols() != psis.cols() || phis.rows() == 0 || psis.rows() == 0)
        throw std::invalid_argument("check_group_max: need non-empty sets of equal dimension");
    const Eigen::MatrixXd G = phis * psis.transpose(); // n x m
    if (G.minCoeff() < -1e-12)
        throw std::invalid_argument("check_group_max: negative inner product");
    const double l = static_cast<double>(phis.cols());
    const double lhs = G.rowwise().maxCoeff().sum();
    const double rhs = 2.0 * l * G.colwise().sum().maxCoeff();
    LemmaReport r;
    r.lemma = "group_max";
    r.record(rhs - lhs, [&] { return json{{"phis", mat_json(phis)}, {"psis", mat_json(psis)}, {"lhs", lhs}, {"rhs", rhs}}; });
    return r;
}

double elliptical_potential_sum(const Eigen::MatrixXd& phis, double lambda, const std::vector<int>& partition) {
    const int n = static_cast<int>(phis.rows());
    const int d = static_cast<int>(phis.cols());
    if (partition.empty() || partition.front() != 0 || partition.back() != n)
        throw std::invalid_argument("elliptical_potential_sum: partition must run from 0 to n");
    for (std::size_t j = 1; j < partition.size(); ++j)
        if (partition[j] <= partition[j - 1] && n > 0)
            throw std::invalid_argument("elliptical_potential_sum: partition must be strictly increasing");
    Eigen::MatrixXd Lambda = lambda * Eigen::MatrixXd::Identity(d, d);
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < partition.size(); ++j) {
        const Eigen::LLT<Eigen::MatrixXd> llt(Lambda);
        double block = 0.0;
        for (int i = partition[j]; i < partition[j + 1]; ++i) {
            const Eigen::VectorXd phi = phis.row(i).transpose();
            block += phi.dot(llt.solve(phi));
        }
        total += std::min(block, 1.0);
        for (int i = partition[j]; i < partition[j + 1]; ++i)
            Lambda.noalias() += phis.row(i).transpose() * phis.row(i);
    }
    return total;
}

LemmaReport check_elliptical_potential(const Eigen::MatrixXd& phis, double lambda, const std::vector<int>& partition,
                                       double L) {
    if (!(lambda > 0.0) || !(L > 0.0))
        throw std::invalid_argument("check_elliptical_potential: lambda and L must be positive");
    for (Eigen::Index i = 0; i < phis.rows(); ++i)
        if (phis.row(i).norm() > L + 1e-12)
            throw std::invalid_argument("check_elliptical_potential: vector norm exceeds L");
    const int n = static_cast<int>(phis.rows());
    const int d = static_cast<int>(phis.cols());
    const double lhs = elliptical_potential_sum(phis, lambda, partition);
    LemmaReport r;
    r.lemma = "elliptical_potential";
    if (n == 0) {
        r.record(0.0, [] { return json{{"n", 0}}; });
        return r;
    }
    const double bound = 6.0 * d * std::log2(n * L / lambda);
    r.record(bound - lhs, [&] {
        return json{{"n", n}, {"d", d}, {"lambda", lambda}, {"L", L}, {"blocks", partition.size() - 1},
                    {"lhs", lhs}, {"bound", bound}};
    });
    return r;
}

LemmaReport check_value_drift(const LinearMdpSpec& spec) {
    const ValueTable vt = optimal_values(spec);
    const int H = spec.horizon;
    LemmaReport r;
    r.lemma = "value_drift";
    std::vector<double> drifts;
    for (int h = 1; h <= H; ++h) {
        const double drift = (vt.V.row(h - 1) - vt.V.row(h)).cwiseAbs().maxCoeff();
        drifts.push_back(drift);
        const double bound = 2.0 * spec.dim / (H - h + 1);
        r.record(bound - drift, [&] {
            return json{{"h", h}, {"drift", drift}, {"bound", bound}, {"spec", spec_to_json(spec)}};
        });
    }
    bool nondecreasing = true;
    for (std::size_t i = 1; i < drifts.size(); ++i)
        if (drifts[i] < drifts[i - 1] - 1e-12)
            nondecreasing = false;
    r.extra["drifts"] = drifts;
    r.extra["nondecreasing"] = nondecreasing;
    return r;
}

LemmaReport check_total_variance(const LinearMdpSpec& spec, int episodes, double delta, Rng& rng) {
    if (episodes < 1 || !(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("check_total_variance: need K >= 1 and 0 < delta < 1");
    const TabularModel model = tabulate(spec);
    const ValueTable vt = solve_optimal(model, spec.horizon);
    const TabularPolicy pi = greedy_policy(vt);
    const int H = spec.horizon;
    // Variance of each V*_{h'} under each (s,a), precomputed.
    Eigen::MatrixXd var(spec.num_pairs(), H + 1);
    for (int sa = 0; sa < spec.num_pairs(); ++sa)
        for (int hp = 0; hp <= H; ++hp)
            var(sa, hp) = brute_variance(model.P.row(sa).transpose(), vt.V.row(hp).transpose());
    Eigen::VectorXd totals = Eigen::VectorXd::Zero(H + 1);
    for (int k = 0; k < episodes; ++k) {
        const Trajectory traj = rollout(spec, pi, rng, k);
        for (const auto& st : traj.steps)
            totals += var.row(spec.sa(st.state, st.action)).transpose();
    }
    const double K = episodes;
    const double bound = K * (36.0 * std::log(2.0 / delta) + 18.0 * spec.dim + 10.0 * std::log(K * H));
    LemmaReport r;
    r.lemma = "total_variance";
    for (int hp = 0; hp <= H; ++hp)
        r.record(bound - totals(hp), [&] { return json{{"h_prime", hp + 1}, {"total", totals(hp)}, {"bound", bound}}; });
    r.extra["totals"] = std::vector<double>(totals.data(), totals.data() + totals.size());
    return r;
}

const std::vector<std::string>& lemma_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : registry())
            v.push_back(k);
        return v;
    }();
    return ids;
}

int default_trials(const std::string& id) {
    const auto it = registry().find(id);
    if (it == registry().end())
        throw std::invalid_argument("unknown lemma id: " + id);
    return it->second.second;
}

LemmaReport run_lemma(const std::string& id, int trials, std::uint64_t seed, int threads) {
    const auto it = registry().find(id);
    if (it == registry().end())
        throw std::invalid_argument("unknown lemma id: " + id);
    if (trials < 0)
        throw std::invalid_argument("run_lemma: trials must be nonnegative");
    const TrialFn fn = it->second.first;
    std::vector<LemmaReport> parts(static_cast<std::size_t>(trials));
    parallel_for(parts.size(), threads, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        parts[t] = fn(rng);
    });
    LemmaReport total;
    total.lemma = id;
    for (const auto& p : parts)
        total.merge(p);
    total.extra["instances"] = trials;
    if (id == "value_drift") {
        long long monotone = 0;
        for (const auto& p : parts)
            monotone += p.extra.value("nondecreasing", false) ? 1 : 0;
        total.extra["nondecreasing_instances"] = monotone;
    }
    return total;
}

} // namespace hfrl
