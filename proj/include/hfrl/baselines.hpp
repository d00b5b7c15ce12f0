#pragma once

#include "hfrl/linmdp.hpp"
#include "hfrl/rng.hpp"

#include <Eigen/Dense>

#include <vector>

namespace hfrl {

struct LsviParams {
    double lambda = 1.0;
    double beta = 1.0;
};

/// c * d * sqrt(log(d K H / delta)).
double default_lsvi_beta(int dim, int horizon, int episodes, double delta, double c = 1.0);

struct LsviPlan {
    TabularPolicy policy;
    Eigen::MatrixXd values; // (H+1) x S
};

/**
 * Least-squares value iteration with an elliptical bonus, one ridge
 * regression per step. Data are kept as per-step transition counts so each
 * plan costs O(H (S A S + S A d^2)).
 */
class LsviLearner {
public:
    LsviLearner(const LinearMdpSpec& structure, const LsviParams& params);

    LsviPlan plan() const;
    void update(const Trajectory& trajectory);

    const Eigen::MatrixXd& gram(int h) const { return gram_[static_cast<std::size_t>(h)]; }
    const LsviParams& params() const { return params_; }

private:
    LinearMdpSpec structure_;
    LsviParams params_;
    std::vector<Eigen::MatrixXd> gram_;    // per step, d x d
    std::vector<Eigen::MatrixXd> counts_;  // per step, (S*A) x S
    std::vector<Eigen::VectorXd> rewards_; // per step, reward sums per (s,a)
};

/// Uniformly random deterministic action table.
TabularPolicy random_policy(int horizon, int num_states, int num_actions, Rng& rng);

} // namespace hfrl
