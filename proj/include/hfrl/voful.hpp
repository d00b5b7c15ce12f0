#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace hfrl {

/// Sign-preserving magnitude clamp: min(|u|, level) * sign(u).
double clip(double u, double level);

/// ceil(log2 n) for n >= 1, and 0 for n = 0.
int ceil_log2(long long n);

struct VofulConfig {
    double delta = 0.1;
    /// Random unit directions added to the coordinate directions.
    int random_directions = 128;
    /// Grid spacing of the candidate net on the radius-2 ball.
    double candidate_resolution = 0.25;
    std::size_t candidate_budget = 20000;
    /// When set, replaces the confidence radius 16 d ln(d n / delta).
    std::optional<double> iota_override;
    /// Add ridge-regression candidates at power-of-two checkpoints and when
    /// the surviving set would otherwise be empty.
    bool anchors = true;
    double anchor_ridge = 1e-3;
    std::uint64_t seed = 0;
};

/// Candidate parameter with the first checkpoint prefix it failed.
struct VofulCandidate {
    Eigen::VectorXd theta;
    long long pruned_at = std::numeric_limits<long long>::max();
    long long admitted_at = 0;
    bool anchor = false;
};

/**
 * Variance-aware confidence set for a linear reward model.
 *
 * Data are stored already scaled (x = phi / sqrt(d), y = r / sqrt(d)). For a
 * prefix of n samples the set keeps every theta in the radius-2 ball such that
 * for each clip level l_j = 2^{2-j}, j = 1..ceil(log2 n)+1, and each direction
 * u,
 *
 *   |sum_v clip(x_v'u, l_j) e_v| <= sqrt(sum_v clip(x_v'u, l_j)^2 e_v^2 iota) + l_j iota,
 *
 * with residuals e_v = y_v - x_v'theta, intersected with the sets at all
 * earlier checkpoints.
 *
 * Maximization enumerates a finite candidate net. Surviving candidates are
 * maintained incrementally from per-(direction, level) sufficient statistics.
 */
class VofulState {
public:
    VofulState(int dim, const VofulConfig& config);
    /// Uses the given candidate rows instead of a grid.
    VofulState(int dim, const VofulConfig& config, const Eigen::MatrixXd& candidates);

    /// Scales by 1/sqrt(d) and appends.
    void ingest(const Eigen::VectorXd& phi, double reward);
    void ingest_scaled(const Eigen::VectorXd& x, double y);
    /// Records the current prefix as a checkpoint and prunes the candidates.
    void checkpoint();

    /// Exact membership at prefix k: the constraints over the first k samples
    /// plus every recorded checkpoint below k. Independent of the candidate net.
    bool member(const Eigen::VectorXd& theta, long long k) const;
    /// max x'theta over candidates alive at prefix k, which must be 0 or a
    /// checkpoint. Throws EmptyConfidenceSet when nothing survives.
    double max(const Eigen::VectorXd& x, long long k) const;
    /// max over candidates alive at the latest checkpoint.
    double max(const Eigen::VectorXd& x) const { return max(x, last_checkpoint()); }
    /// Index of the candidate attaining the last max() call.
    int last_argmax() const { return last_argmax_; }

    int dim() const { return dim_; }
    long long n() const { return static_cast<long long>(y_.size()); }
    long long last_checkpoint() const { return checkpoints_.empty() ? 0 : checkpoints_.back(); }
    const std::vector<long long>& checkpoints() const { return checkpoints_; }
    const std::vector<VofulCandidate>& candidates() const { return candidates_; }
    const Eigen::MatrixXd& directions() const { return directions_; }
    const VofulConfig& config() const { return config_; }
    const Eigen::VectorXd& x(long long i) const { return x_[static_cast<std::size_t>(i)]; }
    double y(long long i) const { return y_[static_cast<std::size_t>(i)]; }
    /// Number of candidates alive at prefix k.
    int alive_count(long long k) const;
    int anchors_added() const { return anchors_added_; }

    /// Confidence radius at prefix n.
    double iota(long long n) const;
    /// Number of clip levels at prefix n: ceil(log2 n) + 1.
    static int num_levels(long long n) { return ceil_log2(n) + 1; }
    static double level(int j) { return std::ldexp(1.0, 2 - j); }

private:
    struct Stats {
        double cy = 0.0;           // sum c y
        Eigen::VectorXd cx;        // sum c x
        double c2y2 = 0.0;         // sum c^2 y^2
        Eigen::VectorXd c2yx;      // sum c^2 y x
        Eigen::MatrixXd c2xx;      // sum c^2 x x'
    };

    void init(const Eigen::MatrixXd& candidates);
    void accumulate(Stats& st, const Eigen::VectorXd& xv, double yv, double c) const;
    void add_level();
    bool passes_current(const Eigen::VectorXd& theta) const;
    bool try_anchor();
    Eigen::VectorXd ridge_estimate() const;

    int dim_;
    VofulConfig config_;
    Eigen::MatrixXd directions_; // m x d, unit rows
    std::vector<Eigen::VectorXd> x_;
    std::vector<double> y_;
    std::vector<long long> checkpoints_;
    std::vector<VofulCandidate> candidates_;
    std::vector<int> alive_; // indices alive at the latest checkpoint
    std::vector<std::vector<Stats>> stats_; // [level][direction]
    Eigen::MatrixXd gram_;   // sum x x'
    Eigen::VectorXd xy_;     // sum x y
    int anchors_added_ = 0;
    mutable int last_argmax_ = -1;
};

} // namespace hfrl
