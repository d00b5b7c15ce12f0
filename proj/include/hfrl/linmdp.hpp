#pragma once

#include "hfrl/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hfrl {

inline constexpr double prob_tolerance = 1e-9;
inline constexpr double value_tolerance = 1e-8;

struct RewardNoise {
    enum class Kind { deterministic, bernoulli_scaled };
    Kind kind = Kind::deterministic;
    /// Reward magnitude of a success for bernoulli_scaled noise.
    double max_per_step = 1.0;
};

/**
 * Finite-state linear MDP.
 *
 * Transitions factor as P(.|s,a) = mu * phi(s,a) and mean rewards as
 * phi(s,a)' theta_r. Features are stored row-wise, row s * A + a.
 */
struct LinearMdpSpec {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    int dim = 0;
    Eigen::MatrixXd features; // (S*A) x d
    Eigen::MatrixXd mu;       // S x d
    Eigen::VectorXd theta_r;  // d
    RewardNoise reward_noise;
    int initial_state = 0;

    int sa(int s, int a) const { return s * num_actions + a; }
    int num_pairs() const { return num_states * num_actions; }
    Eigen::VectorXd phi(int s, int a) const { return features.row(sa(s, a)).transpose(); }
    /// Next-state distribution mu * phi(s,a); tiny negative entries are not clamped here.
    Eigen::VectorXd transition(int s, int a) const { return mu * phi(s, a); }
    double mean_reward(int s, int a) const { return features.row(sa(s, a)).dot(theta_r); }
};

/// Throws StructuralError when matrix shapes disagree with the declared sizes.
void check_dimensions(const LinearMdpSpec& spec);

/// Dense tabular view of a (possibly candidate) linear model.
struct TabularModel {
    int num_states = 0;
    int num_actions = 0;
    Eigen::MatrixXd P; // (S*A) x S, row s*A + a
    Eigen::VectorXd r; // S*A
    /// Entries in [-1e-12, 0) that were clamped to zero.
    int clamped_entries = 0;
};

TabularModel tabulate(const LinearMdpSpec& spec);
/// Tabulates an arbitrary (mu, theta) pair over the given feature rows. No clamping.
TabularModel tabulate(const Eigen::MatrixXd& features, const Eigen::MatrixXd& mu,
                      const Eigen::VectorXd& theta, int num_states, int num_actions);

/// Deterministic non-stationary policy; entry (h, s) for h in [0, H).
class TabularPolicy {
public:
    TabularPolicy() = default;
    TabularPolicy(int horizon, int num_states, int fill = 0)
        : horizon_(horizon), num_states_(num_states),
          actions_(static_cast<std::size_t>(horizon) * num_states, fill) {}

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }
    int operator()(int h, int s) const { return actions_[index(h, s)]; }
    int& at(int h, int s) { return actions_[index(h, s)]; }
    const std::vector<int>& table() const { return actions_; }

    bool operator==(const TabularPolicy&) const = default;

private:
    std::size_t index(int h, int s) const {
        return static_cast<std::size_t>(h) * num_states_ + s;
    }
    int horizon_ = 0;
    int num_states_ = 0;
    std::vector<int> actions_;
};

struct StepRecord {
    int state = 0;
    int action = 0;
    Eigen::VectorXd feature;
    double reward = 0.0;
    int next_state = 0;
};

struct Trajectory {
    int episode = 0;
    std::vector<StepRecord> steps;
    /// Steps whose reward was reduced to keep the episode total at most 1.
    int clip_activations = 0;

    double total_reward() const;
};

/// Step indices are 0-based: V row h is step h+1, row H is the terminal zero.
struct ValueTable {
    Eigen::MatrixXd V;              // (H+1) x S
    std::vector<Eigen::MatrixXd> Q; // H entries of S x A
};

/// Backward induction with lowest-index tie-breaking.
ValueTable solve_optimal(const TabularModel& model, int horizon);
TabularPolicy greedy_policy(const ValueTable& values);
/// (H+1) x S values of a fixed policy.
Eigen::MatrixXd evaluate_policy(const TabularModel& model, const TabularPolicy& policy);

ValueTable optimal_values(const LinearMdpSpec& spec);
Eigen::MatrixXd policy_value(const LinearMdpSpec& spec, const TabularPolicy& policy);
/// V*_1(s_1) - V^pi_1(s_1), computed exactly.
double episode_regret(const LinearMdpSpec& spec, const TabularPolicy& policy);

struct StepOutcome {
    double reward = 0.0;
    int next_state = 0;
};

StepOutcome step(const LinearMdpSpec& spec, int state, int action, Rng& rng);
/// Plays one episode from the initial state. The running reward total is capped at 1.
Trajectory rollout(const LinearMdpSpec& spec, const TabularPolicy& policy, Rng& rng, int episode);

// ---------------------------------------------------------------------------
// Validation

struct CheckResult {
    std::string name;
    bool passed = true;
    /// Warnings are reported but do not make the spec invalid.
    bool warning_only = false;
    std::string detail;
    nlohmann::json witness;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool ok() const;
    const CheckResult* find(const std::string& name) const;
    nlohmann::json to_json() const;
};

/**
 * Checks the linear-MDP assumptions.
 *
 * The kernel-norm bound is probed with the all-ones vector, every +-e_s,
 * every sign vector in {-1,1}^S when S <= 12 (the maximum of a convex
 * function over the cube sits at a vertex, so this is exhaustive), and
 * probe_count uniform draws from [-1,1]^S.
 */
ValidationReport validate_spec(const LinearMdpSpec& spec, int probe_count, std::uint64_t rng_seed);

// ---------------------------------------------------------------------------
// Construction

struct GeneratorParams {
    int num_states = 5;
    int num_actions = 3;
    int dim = 4;
    int horizon = 10;
    std::uint64_t seed = 0;
    /// Weights are Exp(1)^sharpness before normalization; 1 is uniform on the simplex.
    double feature_sharpness = 1.0;
    double kernel_sharpness = 1.0;
    enum class RewardMode { dense, goal };
    RewardMode reward_mode = RewardMode::dense;
    /// Feature coordinate carrying the reward in goal mode.
    int goal_coordinate = 0;
    enum class ScaleMode { max_value, max_path };
    /// max_value: max_s V*_1(s) = value_target. max_path: the largest reward
    /// total along any feasible path equals value_target.
    ScaleMode scale_mode = ScaleMode::max_value;
    double value_target = 1.0;
    RewardNoise noise;
    int initial_state = 0;
};

/// Features on the probability simplex and stochastic mu columns.
LinearMdpSpec generate_simplex_spec(const GeneratorParams& params);

/// d = S*A embedding with one-hot features and mu columns equal to P(.|s,a).
LinearMdpSpec tabular_embedding(const Eigen::MatrixXd& P, const Eigen::VectorXd& r, int num_states,
                                int num_actions, int horizon, int initial_state = 0);

/// Largest reward total over any path whose transitions have positive probability.
double max_path_reward(const LinearMdpSpec& spec);

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json spec_to_json(const LinearMdpSpec& spec);
LinearMdpSpec spec_from_json(const nlohmann::json& doc);
GeneratorParams generator_from_json(const nlohmann::json& doc);
nlohmann::json generator_to_json(const GeneratorParams& params);

/// Header "k,h,s,a,r,s_next"; h is 1-based.
void write_trajectory_csv_header(std::ostream& out);
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

} // namespace hfrl
