#pragma once

#include "hfrl/hf_estimator.hpp"
#include "hfrl/linmdp.hpp"
#include "hfrl/nets.hpp"
#include "hfrl/voful.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace hfrl {

/**
 * One weighted regression per distinct value-net row, all fed the same
 * transition history.
 *
 * Estimators are created on first use and replay the history they have not
 * seen before answering, so a queried estimator always equals a fresh replay
 * of every recorded transition in order.
 */
class TransitionConfidence {
public:
    TransitionConfidence(std::shared_ptr<const ValueNet> net, const WlsParams& params,
                         const Eigen::MatrixXd& features);

    /// Appends (phi(s,a), s') to the shared history; sa = s * A + a.
    void add_transition(int sa, int next_state);
    /// Estimator of the canonical row of net element j, caught up with the history.
    const WlsState& estimator(int net_index);
    /// Catches up every estimator created so far.
    void sync(int threads = 1);

    long long history_size() const { return static_cast<long long>(history_.size()); }
    const std::vector<std::pair<int, int>>& history() const { return history_; }
    const ValueNet& net() const { return *net_; }
    const WlsParams& params() const { return params_; }
    const Eigen::MatrixXd& features() const { return features_; }
    int active_count() const { return static_cast<int>(active_.size()); }

    long long floor_activations() const;
    long long refresh_count() const;
    double max_condition() const;

private:
    void catch_up(int canonical);

    std::shared_ptr<const ValueNet> net_;
    WlsParams params_;
    Eigen::MatrixXd features_;
    std::vector<std::pair<int, int>> history_;
    std::vector<std::unique_ptr<WlsState>> states_; // indexed by canonical net index
    std::vector<int> active_;
};

/// True when |phi' mu_tilde' v - phi' theta_hat(v)| <= bonus(phi, v) for every
/// distinct net row v and every probe feature (rows of `probes`).
bool transition_member(const Eigen::MatrixXd& mu_tilde, TransitionConfidence& conf,
                       const Eigen::MatrixXd& probes);

struct OptimisticPlan {
    TabularPolicy policy;
    Eigen::MatrixXd values; // (H+1) x S
    /// Per step h: projected net index of the next-step value and its L-infinity error.
    std::vector<int> net_index;
    std::vector<double> projection_error;
    std::vector<double> mean_bonus;
    std::vector<double> max_bonus;
    /// Exact mode: chosen candidate and the indices that passed filtering.
    int chosen_candidate = -1;
    std::vector<int> survivors;

    double value(int state) const { return values(0, state); }
};

/// Mean next-value and bonus, per (s,a), for one next-step value vector.
struct BackupTerms {
    Eigen::VectorXd mean;  // S*A
    Eigen::VectorXd bonus; // S*A
    int net_index = -1;
    double projection_error = 0.0;
};

using BackupFn = std::function<BackupTerms(int h, const Eigen::VectorXd& v_next)>;

/**
 * Backward induction with Q(s,a) = clip(r_up(s,a) + mean + bonus, 0, 1) and
 * greedy lowest-index action choice. Rows of the result are 0-based steps.
 */
OptimisticPlan optimistic_value_iteration(int num_states, int num_actions, int horizon,
                                          const Eigen::VectorXd& reward_upper, const BackupFn& backup);

/// Optimistic reward per (s,a): sqrt(d) * max over the confidence set of (phi/sqrt(d))'theta.
Eigen::VectorXd optimistic_rewards(const VofulState& voful, const Eigen::MatrixXd& features);

/// Bonus-based planning: next values are projected onto the value net before
/// each backup. Only the structural fields of `structure` are used.
OptimisticPlan plan_bonus(TransitionConfidence& conf, const VofulState& voful, const LinearMdpSpec& structure);

struct ModelCandidate {
    Eigen::MatrixXd mu;      // S x d
    Eigen::VectorXd theta_r; // d
};

/**
 * Elimination over a finite model class. A candidate survives if its kernel
 * passes transition_member over `probes` (all realized features when empty)
 * and its reward parameter is in the reward confidence set at the current
 * sample count. The survivor with the largest optimal value from the initial
 * state wins; ties go to the lowest index. Throws EmptyConfidenceSet.
 */
OptimisticPlan plan_exact(const std::vector<ModelCandidate>& candidates, TransitionConfidence& conf,
                          const VofulState& voful, const LinearMdpSpec& structure,
                          const Eigen::MatrixXd& probes = Eigen::MatrixXd());

/// Algorithm state for the full learner: value net, transition and reward confidence.
class HfLearner {
public:
    HfLearner(const LinearMdpSpec& structure, std::shared_ptr<const ValueNet> net, const WlsParams& wls,
              const VofulConfig& voful, int threads = 1);

    OptimisticPlan plan();
    OptimisticPlan plan_exact(const std::vector<ModelCandidate>& candidates);
    /// Appends the episode's transitions and rewards in step order.
    void update(const Trajectory& trajectory);

    TransitionConfidence& transitions() { return conf_; }
    const TransitionConfidence& transitions() const { return conf_; }
    const VofulState& rewards() const { return voful_; }
    int episodes() const { return episodes_; }

private:
    LinearMdpSpec structure_;
    TransitionConfidence conf_;
    VofulState voful_;
    int threads_;
    int episodes_ = 0;
};

} // namespace hfrl
