#pragma once

#include "hfrl/linmdp.hpp"
#include "hfrl/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace hfrl {

inline constexpr double lemma_tolerance = 1e-9;

/// p'(v^2) - (p'v)^2 in two passes, clamped at 0 when within 1e-12 below.
double brute_variance(const Eigen::VectorXd& p, const Eigen::VectorXd& v);

struct LemmaReport {
    std::string lemma;
    long long trials = 0;
    long long violations = 0;
    /// Smallest (bound - value) seen; negative means the inequality failed.
    double worst_margin = std::numeric_limits<double>::infinity();
    nlohmann::json witness;
    /// Oracle-specific extra output.
    nlohmann::json extra = nlohmann::json::object();

    /// Counts a trial. Violations need margin < -tolerance.
    template <class WitnessFn>
    void record(double margin, WitnessFn&& make_witness, double tolerance = lemma_tolerance) {
        ++trials;
        if (margin < -tolerance)
            ++violations;
        if (margin < worst_margin) {
            worst_margin = margin;
            witness = make_witness();
        }
    }
    void merge(const LemmaReport& other);
    bool ok() const { return violations == 0; }
    nlohmann::json to_json() const;
};

/// Finite distribution on values in [-C, C]: var(X^2) <= 4 C^2 var(X).
LemmaReport check_var_square(const Eigen::VectorXd& values, const Eigen::VectorXd& probs, double C);

/**
 * Centroid of the convex hull of `vertices` (rows, d <= 3) against
 * (1/2d) max_vertex phi'psi for each direction row of `directions`.
 * The centroid is estimated from `mc_samples` accepted rejection samples;
 * a direction is a violation only when it fails by more than 3 standard errors.
 */
LemmaReport check_center_dominance(const Eigen::MatrixXd& vertices, const Eigen::MatrixXd& directions,
                                   int mc_samples, Rng& rng);

/// Rows phi_i, psi_j in R^l with all products nonnegative:
/// sum_i max_j phi_i'psi_j <= 2 l max_j sum_i phi_i'psi_j.
LemmaReport check_group_max(const Eigen::MatrixXd& phis, const Eigen::MatrixXd& psis);

/// sum_j min{sum_{i in block j} phi_i' Lambda_{i_j}^{-1} phi_i, 1} with
/// Lambda_i = lambda I + sum_{i' <= i} phi phi'. `partition` is 0 = i_1 < ... < i_z = n.
double elliptical_potential_sum(const Eigen::MatrixXd& phis, double lambda, const std::vector<int>& partition);
/// Compares the potential sum with 6 d log2(n L / lambda).
LemmaReport check_elliptical_potential(const Eigen::MatrixXd& phis, double lambda,
                                       const std::vector<int>& partition, double L);

/// Optimal-value drift ||V_h - V_{h+1}||_inf <= 2d / (H - h + 1) for h = 1..H.
/// extra.drifts holds the drifts; extra.nondecreasing records whether they grow with h.
LemmaReport check_value_drift(const LinearMdpSpec& spec);

/// Plays the optimal policy for `episodes` episodes and compares, for each
/// h' = 1..H+1, sum_k sum_h Var(P_{s_h a_h}, V*_{h'}) with
/// K (36 log(2/delta) + 18 d + 10 log(K H)).
LemmaReport check_total_variance(const LinearMdpSpec& spec, int episodes, double delta, Rng& rng);

/// Oracle ids accepted by run_lemma.
const std::vector<std::string>& lemma_ids();
int default_trials(const std::string& id);

/// Runs `trials` randomized instances of one oracle. Trial t uses a seed
/// derived from (seed, t), so results do not depend on `threads`.
LemmaReport run_lemma(const std::string& id, int trials, std::uint64_t seed, int threads = 1);

} // namespace hfrl
