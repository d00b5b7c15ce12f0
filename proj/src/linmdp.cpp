#include "hfrl/linmdp.hpp"

#include "hfrl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace hfrl {

namespace {

constexpr double clamp_tolerance = 1e-12;

std::string format_sa(int s, int a) {
    std::ostringstream os;
    os << "(s=" << s << ", a=" << a << ")";
    return os.str();
}

Eigen::VectorXd simplex_point(Rng& rng, int n, double sharpness) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i)
        w(i) = std::pow(rng.exponential(), sharpness);
    const double total = w.sum();
    if (!(total > 0.0)) {
        w.setZero();
        w(0) = 1.0;
        return w;
    }
    return w / total;
}

} // namespace

void check_dimensions(const LinearMdpSpec& spec) {
    auto fail = [](const std::string& what) { throw StructuralError("linear MDP spec: " + what); };
    if (spec.num_states < 1 || spec.num_actions < 1 || spec.horizon < 1 || spec.dim < 1)
        fail("num_states, num_actions, horizon and dim must be positive");
    if (spec.features.rows() != spec.num_pairs() || spec.features.cols() != spec.dim)
        fail("features must be (S*A) x d");
    if (spec.mu.rows() != spec.num_states || spec.mu.cols() != spec.dim)
        fail("mu must be S x d");
    if (spec.theta_r.size() != spec.dim)
        fail("theta_r must have d entries");
    if (spec.initial_state < 0 || spec.initial_state >= spec.num_states)
        fail("initial_state out of range");
    if (spec.reward_noise.kind == RewardNoise::Kind::bernoulli_scaled &&
        !(spec.reward_noise.max_per_step > 0.0))
        fail("bernoulli_scaled noise needs max_per_step > 0");
    if (!spec.features.allFinite() || !spec.mu.allFinite() || !spec.theta_r.allFinite())
        fail("non-finite entries");
}

TabularModel tabulate(const Eigen::MatrixXd& features, const Eigen::MatrixXd& mu,
                      const Eigen::VectorXd& theta, int num_states, int num_actions) {
    TabularModel model;
    model.num_states = num_states;
    model.num_actions = num_actions;
    model.P = features * mu.transpose();
    model.r = features * theta;
    return model;
}

TabularModel tabulate(const LinearMdpSpec& spec) {
    check_dimensions(spec);
    TabularModel model = tabulate(spec.features, spec.mu, spec.theta_r, spec.num_states, spec.num_actions);
    for (Eigen::Index i = 0; i < model.P.size(); ++i) {
        double& p = model.P.data()[i];
        if (p < 0.0 && p >= -clamp_tolerance) {
            p = 0.0;
            ++model.clamped_entries;
        }
    }
    return model;
}

double Trajectory::total_reward() const {
    double total = 0.0;
    for (const auto& st : steps)
        total += st.reward;
    return total;
}

ValueTable solve_optimal(const TabularModel& model, int horizon) {
    const int S = model.num_states;
    const int A = model.num_actions;
    ValueTable out;
    out.V = Eigen::MatrixXd::Zero(horizon + 1, S);
    out.Q.assign(horizon, Eigen::MatrixXd::Zero(S, A));
    for (int h = horizon - 1; h >= 0; --h) {
        const Eigen::VectorXd next = out.V.row(h + 1).transpose();
        const Eigen::VectorXd backup = model.r + model.P * next;
        for (int s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a) {
                const double q = backup(s * A + a);
                out.Q[h](s, a) = q;
                best = std::max(best, q);
            }
            out.V(h, s) = best;
        }
    }
    return out;
}

TabularPolicy greedy_policy(const ValueTable& values) {
    const int H = static_cast<int>(values.Q.size());
    const int S = H > 0 ? static_cast<int>(values.Q[0].rows()) : static_cast<int>(values.V.cols());
    TabularPolicy policy(H, S);
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            int best = 0;
            for (int a = 1; a < values.Q[h].cols(); ++a)
                if (values.Q[h](s, a) > values.Q[h](s, best))
                    best = a;
            policy.at(h, s) = best;
        }
    }
    return policy;
}

Eigen::MatrixXd evaluate_policy(const TabularModel& model, const TabularPolicy& policy) {
    const int S = model.num_states;
    const int A = model.num_actions;
    const int H = policy.horizon();
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(H + 1, S);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            const int row = s * A + policy(h, s);
            V(h, s) = model.r(row) + model.P.row(row).dot(V.row(h + 1));
        }
    }
    return V;
}

ValueTable optimal_values(const LinearMdpSpec& spec) {
    return solve_optimal(tabulate(spec), spec.horizon);
}

Eigen::MatrixXd policy_value(const LinearMdpSpec& spec, const TabularPolicy& policy) {
    if (policy.horizon() != spec.horizon || policy.num_states() != spec.num_states)
        throw StructuralError("policy shape does not match spec");
    return evaluate_policy(tabulate(spec), policy);
}

double episode_regret(const LinearMdpSpec& spec, const TabularPolicy& policy) {
    const TabularModel model = tabulate(spec);
    const ValueTable opt = solve_optimal(model, spec.horizon);
    const Eigen::MatrixXd Vpi = evaluate_policy(model, policy);
    const double gap = opt.V(0, spec.initial_state) - Vpi(0, spec.initial_state);
    return std::max(0.0, gap);
}

StepOutcome step(const LinearMdpSpec& spec, int state, int action, Rng& rng) {
    const Eigen::VectorXd phi = spec.phi(state, action);
    const double mean = phi.dot(spec.theta_r);
    StepOutcome out;
    if (spec.reward_noise.kind == RewardNoise::Kind::bernoulli_scaled) {
        const double scale = spec.reward_noise.max_per_step;
        const double p = std::clamp(mean / scale, 0.0, 1.0);
        out.reward = rng.bernoulli(p) ? scale : 0.0;
    } else {
        out.reward = mean;
    }
    const Eigen::VectorXd dist = spec.mu * phi;
    out.next_state = static_cast<int>(rng.categorical(std::span<const double>(dist.data(), dist.size())));
    return out;
}

Trajectory rollout(const LinearMdpSpec& spec, const TabularPolicy& policy, Rng& rng, int episode) {
    Trajectory traj;
    traj.episode = episode;
    traj.steps.reserve(spec.horizon);
    int state = spec.initial_state;
    double total = 0.0;
    for (int h = 0; h < spec.horizon; ++h) {
        const int action = policy(h, state);
        StepOutcome o = step(spec, state, action, rng);
        double reward = std::clamp(o.reward, 0.0, 1.0);
        if (total + reward > 1.0) {
            reward = std::max(0.0, 1.0 - total);
            ++traj.clip_activations;
        }
        total += reward;
        traj.steps.push_back(StepRecord{state, action, spec.phi(state, action), reward, o.next_state});
        state = o.next_state;
    }
    return traj;
}

// ---------------------------------------------------------------------------

bool ValidationReport::ok() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const CheckResult& c) { return !c.passed && !c.warning_only; });
}

const CheckResult* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json entry{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}};
        if (c.warning_only)
            entry["warning_only"] = true;
        if (!c.witness.is_null())
            entry["witness"] = c.witness;
        out.push_back(std::move(entry));
    }
    return out;
}

ValidationReport validate_spec(const LinearMdpSpec& spec, int probe_count, std::uint64_t rng_seed) {
    check_dimensions(spec);
    ValidationReport report;
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const double sqrt_d = std::sqrt(static_cast<double>(spec.dim));

    // Probability rows.
    {
        CheckResult nonneg{"transition_nonnegative", true, false, {}, {}};
        CheckResult sums{"transition_sums_to_one", true, false, {}, {}};
        int clamped = 0;
        for (int s = 0; s < S && (nonneg.passed || sums.passed); ++s) {
            for (int a = 0; a < A; ++a) {
                const Eigen::VectorXd p = spec.transition(s, a);
                Eigen::Index arg;
                const double lo = p.minCoeff(&arg);
                if (lo < -clamp_tolerance && nonneg.passed) {
                    nonneg.passed = false;
                    nonneg.detail = "negative probability at " + format_sa(s, a);
                    nonneg.witness = {{"s", s}, {"a", a}, {"next_state", arg}, {"value", lo}};
                } else if (lo < 0.0) {
                    ++clamped;
                }
                const double total = p.sum();
                if (std::abs(total - 1.0) > prob_tolerance && sums.passed) {
                    sums.passed = false;
                    sums.detail = "row sums to " + std::to_string(total) + " at " + format_sa(s, a);
                    sums.witness = {{"s", s}, {"a", a}, {"sum", total}};
                }
            }
        }
        if (nonneg.passed && clamped > 0)
            nonneg.detail = std::to_string(clamped) + " entries within 1e-12 of zero clamped";
        report.checks.push_back(std::move(nonneg));
        report.checks.push_back(std::move(sums));
    }

    {
        CheckResult c{"feature_norm", true, false, {}, {}};
        for (int i = 0; i < spec.num_pairs(); ++i) {
            const double n = spec.features.row(i).norm();
            if (n > 1.0 + 1e-12) {
                c.passed = false;
                c.detail = "||phi||_2 = " + std::to_string(n) + " at " + format_sa(i / A, i % A);
                c.witness = {{"s", i / A}, {"a", i % A}, {"norm", n}};
                break;
            }
        }
        report.checks.push_back(std::move(c));
    }

    {
        CheckResult c{"reward_param_norm", true, false, {}, {}};
        const double n = spec.theta_r.norm();
        if (n > sqrt_d + 1e-12) {
            c.passed = false;
            c.detail = "||theta_r||_2 = " + std::to_string(n) + " exceeds sqrt(d)";
        }
        report.checks.push_back(std::move(c));
    }

    {
        CheckResult c{"kernel_param_norm", true, false, {}, {}};
        Rng rng(rng_seed);
        double worst = -1.0;
        Eigen::VectorXd worst_v;
        auto probe = [&](const Eigen::VectorXd& v) {
            const double n = (spec.mu.transpose() * v).norm();
            if (n > worst) {
                worst = n;
                worst_v = v;
            }
        };
        probe(Eigen::VectorXd::Ones(S));
        for (int s = 0; s < S; ++s) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(S);
            e(s) = 1.0;
            probe(e);
            probe(-e);
        }
        if (S <= 12) {
            Eigen::VectorXd v(S);
            for (std::uint32_t mask = 0; mask < (1u << S); ++mask) {
                for (int s = 0; s < S; ++s)
                    v(s) = (mask >> s) & 1u ? 1.0 : -1.0;
                probe(v);
            }
        }
        for (int i = 0; i < probe_count; ++i) {
            Eigen::VectorXd v(S);
            for (int s = 0; s < S; ++s)
                v(s) = rng.uniform(-1.0, 1.0);
            probe(v);
        }
        c.detail = "max ||mu' v||_2 = " + std::to_string(worst);
        if (worst > sqrt_d + 1e-12) {
            c.passed = false;
            c.witness = std::vector<double>(worst_v.data(), worst_v.data() + worst_v.size());
        }
        report.checks.push_back(std::move(c));
    }

    {
        CheckResult c{"mean_reward_range", true, false, {}, {}};
        CheckResult noise{"reward_noise_feasible", true, false, {}, {}};
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double r = spec.mean_reward(s, a);
                if ((r < -prob_tolerance || r > 1.0 + prob_tolerance) && c.passed) {
                    c.passed = false;
                    c.detail = "mean reward " + std::to_string(r) + " at " + format_sa(s, a);
                    c.witness = {{"s", s}, {"a", a}, {"reward", r}};
                }
                if (spec.reward_noise.kind == RewardNoise::Kind::bernoulli_scaled &&
                    r > spec.reward_noise.max_per_step + prob_tolerance && noise.passed) {
                    noise.passed = false;
                    noise.detail = "mean reward exceeds max_per_step at " + format_sa(s, a);
                }
            }
        }
        report.checks.push_back(std::move(c));
        report.checks.push_back(std::move(noise));
    }

    if (report.ok()) {
        CheckResult c{"optimal_value_bound", true, false, {}, {}};
        const ValueTable opt = optimal_values(spec);
        const double top = opt.V.row(0).maxCoeff();
        c.detail = "max_s V*_1(s) = " + std::to_string(top);
        if (top > 1.0 + value_tolerance) {
            c.passed = false;
            c.witness = {{"max_value", top}};
        }
        report.checks.push_back(std::move(c));

        // Realized totals above 1 are clipped during rollouts, so this is advisory.
        CheckResult path{"max_path_reward", true, false, {}, {}};
        path.warning_only = true;
        const double mp = spec.reward_noise.kind == RewardNoise::Kind::deterministic
                              ? max_path_reward(spec)
                              : spec.reward_noise.max_per_step * spec.horizon;
        path.detail = "largest realizable episode total = " + std::to_string(mp);
        path.passed = mp <= 1.0 + value_tolerance;
        report.checks.push_back(std::move(path));
    }
    return report;
}

// ---------------------------------------------------------------------------

double max_path_reward(const LinearMdpSpec& spec) {
    const TabularModel model = tabulate(spec);
    const int S = spec.num_states;
    const int A = spec.num_actions;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
    for (int h = spec.horizon - 1; h >= 0; --h) {
        Eigen::VectorXd cur(S);
        for (int s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a) {
                const int row = s * A + a;
                double cont = 0.0;
                bool any = false;
                for (int t = 0; t < S; ++t) {
                    if (model.P(row, t) > clamp_tolerance) {
                        cont = any ? std::max(cont, next(t)) : next(t);
                        any = true;
                    }
                }
                best = std::max(best, model.r(row) + cont);
            }
            cur(s) = best;
        }
        next = cur;
    }
    return next.maxCoeff();
}

LinearMdpSpec generate_simplex_spec(const GeneratorParams& p) {
    if (p.num_states < 1 || p.num_actions < 1 || p.dim < 1 || p.horizon < 1)
        throw StructuralError("generator: sizes must be positive");
    if (p.reward_mode == GeneratorParams::RewardMode::goal &&
        (p.goal_coordinate < 0 || p.goal_coordinate >= p.dim))
        throw StructuralError("generator: goal_coordinate out of range");
    Rng rng(p.seed);
    LinearMdpSpec spec;
    spec.num_states = p.num_states;
    spec.num_actions = p.num_actions;
    spec.horizon = p.horizon;
    spec.dim = p.dim;
    spec.initial_state = p.initial_state;
    spec.reward_noise = p.noise;

    spec.features.resize(spec.num_pairs(), p.dim);
    for (int i = 0; i < spec.num_pairs(); ++i)
        spec.features.row(i) = simplex_point(rng, p.dim, p.feature_sharpness).transpose();
    spec.mu.resize(p.num_states, p.dim);
    for (int j = 0; j < p.dim; ++j)
        spec.mu.col(j) = simplex_point(rng, p.num_states, p.kernel_sharpness);

    spec.theta_r = Eigen::VectorXd::Zero(p.dim);
    if (p.reward_mode == GeneratorParams::RewardMode::goal) {
        spec.theta_r(p.goal_coordinate) = 1.0;
    } else {
        for (int j = 0; j < p.dim; ++j)
            spec.theta_r(j) = rng.uniform();
    }

    double reference;
    if (p.scale_mode == GeneratorParams::ScaleMode::max_path) {
        LinearMdpSpec det = spec;
        det.reward_noise = RewardNoise{};
        reference = max_path_reward(det);
    } else {
        reference = optimal_values(spec).V.row(0).maxCoeff();
    }
    double scale = reference > 0.0 ? p.value_target / reference : 0.0;
    const double top_reward = (spec.features * spec.theta_r).maxCoeff();
    if (top_reward > 0.0)
        scale = std::min(scale, 1.0 / top_reward);
    const double norm = spec.theta_r.norm();
    if (norm > 0.0)
        scale = std::min(scale, std::sqrt(static_cast<double>(p.dim)) / norm);
    spec.theta_r *= scale;
    return spec;
}

LinearMdpSpec tabular_embedding(const Eigen::MatrixXd& P, const Eigen::VectorXd& r, int num_states,
                                int num_actions, int horizon, int initial_state) {
    const int n = num_states * num_actions;
    if (P.rows() != n || P.cols() != num_states || r.size() != n)
        throw StructuralError("tabular_embedding: P must be (S*A) x S and r must have S*A entries");
    LinearMdpSpec spec;
    spec.num_states = num_states;
    spec.num_actions = num_actions;
    spec.horizon = horizon;
    spec.dim = n;
    spec.initial_state = initial_state;
    spec.features = Eigen::MatrixXd::Identity(n, n);
    spec.mu = P.transpose();
    spec.theta_r = r;
    return spec;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row[j] = m(i, j);
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& doc, Eigen::Index rows, Eigen::Index cols,
                                 const char* what) {
    if (!doc.is_array() || static_cast<Eigen::Index>(doc.size()) != rows)
        throw StructuralError(std::string("spec json: wrong row count for ") + what);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = doc[i];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw StructuralError(std::string("spec json: wrong column count for ") + what);
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = row[j].get<double>();
    }
    return m;
}

} // namespace

nlohmann::json spec_to_json(const LinearMdpSpec& spec) {
    nlohmann::json noise;
    if (spec.reward_noise.kind == RewardNoise::Kind::bernoulli_scaled)
        noise = {{"kind", "bernoulli_scaled"}, {"max_per_step", spec.reward_noise.max_per_step}};
    else
        noise = {{"kind", "deterministic"}};
    return {
        {"num_states", spec.num_states},
        {"num_actions", spec.num_actions},
        {"horizon", spec.horizon},
        {"dim", spec.dim},
        {"features", matrix_to_json(spec.features)},
        {"mu", matrix_to_json(spec.mu)},
        {"theta_r", std::vector<double>(spec.theta_r.data(), spec.theta_r.data() + spec.theta_r.size())},
        {"reward_noise", noise},
        {"initial_state", spec.initial_state},
    };
}

LinearMdpSpec spec_from_json(const nlohmann::json& doc) {
    try {
        LinearMdpSpec spec;
        spec.num_states = doc.at("num_states").get<int>();
        spec.num_actions = doc.at("num_actions").get<int>();
        spec.horizon = doc.at("horizon").get<int>();
        spec.dim = doc.at("dim").get<int>();
        if (spec.num_states < 1 || spec.num_actions < 1 || spec.dim < 1)
            throw StructuralError("spec json: sizes must be positive");
        spec.features = matrix_from_json(doc.at("features"), spec.num_pairs(), spec.dim, "features");
        spec.mu = matrix_from_json(doc.at("mu"), spec.num_states, spec.dim, "mu");
        const auto theta = doc.at("theta_r").get<std::vector<double>>();
        if (static_cast<int>(theta.size()) != spec.dim)
            throw StructuralError("spec json: theta_r must have dim entries");
        spec.theta_r = Eigen::Map<const Eigen::VectorXd>(theta.data(), spec.dim);
        spec.initial_state = doc.value("initial_state", 0);
        if (doc.contains("reward_noise")) {
            const auto& n = doc["reward_noise"];
            const std::string kind = n.value("kind", "deterministic");
            if (kind == "bernoulli_scaled") {
                spec.reward_noise.kind = RewardNoise::Kind::bernoulli_scaled;
                spec.reward_noise.max_per_step = n.at("max_per_step").get<double>();
            } else if (kind != "deterministic") {
                throw StructuralError("spec json: unknown reward_noise kind '" + kind + "'");
            }
        }
        check_dimensions(spec);
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("spec json: ") + e.what());
    }
}

GeneratorParams generator_from_json(const nlohmann::json& doc) {
    GeneratorParams p;
    try {
        p.num_states = doc.value("S", p.num_states);
        p.num_actions = doc.value("A", p.num_actions);
        p.dim = doc.value("d", p.dim);
        p.horizon = doc.value("H", p.horizon);
        p.seed = doc.value("seed", p.seed);
        p.feature_sharpness = doc.value("feature_sharpness", p.feature_sharpness);
        p.kernel_sharpness = doc.value("kernel_sharpness", p.kernel_sharpness);
        const std::string mode = doc.value("reward_mode", std::string("dense"));
        if (mode == "goal")
            p.reward_mode = GeneratorParams::RewardMode::goal;
        else if (mode != "dense")
            throw StructuralError("generator: unknown reward_mode '" + mode + "'");
        p.goal_coordinate = doc.value("goal_coordinate", p.goal_coordinate);
        const std::string scale = doc.value("scale_mode", std::string("max_value"));
        if (scale == "max_path")
            p.scale_mode = GeneratorParams::ScaleMode::max_path;
        else if (scale != "max_value")
            throw StructuralError("generator: unknown scale_mode '" + scale + "'");
        p.value_target = doc.value("value_target", p.value_target);
        p.initial_state = doc.value("initial_state", p.initial_state);
        if (doc.contains("noise_max_per_step")) {
            p.noise.kind = RewardNoise::Kind::bernoulli_scaled;
            p.noise.max_per_step = doc["noise_max_per_step"].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("generator json: ") + e.what());
    }
    return p;
}

nlohmann::json generator_to_json(const GeneratorParams& p) {
    nlohmann::json out{
        {"S", p.num_states},
        {"A", p.num_actions},
        {"d", p.dim},
        {"H", p.horizon},
        {"seed", p.seed},
        {"feature_sharpness", p.feature_sharpness},
        {"kernel_sharpness", p.kernel_sharpness},
        {"reward_mode", p.reward_mode == GeneratorParams::RewardMode::goal ? "goal" : "dense"},
        {"goal_coordinate", p.goal_coordinate},
        {"scale_mode", p.scale_mode == GeneratorParams::ScaleMode::max_path ? "max_path" : "max_value"},
        {"value_target", p.value_target},
        {"initial_state", p.initial_state},
    };
    if (p.noise.kind == RewardNoise::Kind::bernoulli_scaled)
        out["noise_max_per_step"] = p.noise.max_per_step;
    return out;
}

void write_trajectory_csv_header(std::ostream& out) {
    out << "k,h,s,a,r,s_next\n";
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
    const auto old = out.precision(17);
    for (std::size_t h = 0; h < t.steps.size(); ++h) {
        const auto& st = t.steps[h];
        out << t.episode << ',' << h + 1 << ',' << st.state << ',' << st.action << ',' << st.reward << ','
            << st.next_state << '\n';
    }
    out.precision(old);
}

} // namespace hfrl
