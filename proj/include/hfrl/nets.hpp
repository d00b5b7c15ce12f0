#pragma once

#include "hfrl/linmdp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace hfrl {

/// Finite subset of the Euclidean ball of the given radius.
struct ThetaNet {
    double resolution = 0.0;
    double radius = 0.0;
    Eigen::MatrixXd points; // count x d
    /// True for the axis-aligned grid, false for the quasi-random fallback.
    bool is_grid = true;
    /// Probe estimates of the covering radius; negative when not computed.
    double covering_l2 = -1.0;
    double covering_linf = -1.0;
    int covering_probes = 0;

    int count() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
};

/**
 * Grid of spacing `resolution` intersected with the ball, ordered
 * lexicographically by integer coordinates. When the grid has more than
 * `budget` points, returns the origin followed by budget - 1 shifted Halton
 * points inside the ball instead.
 *
 * `covering_probes` uniform ball samples estimate the covering radius (0 skips).
 */
ThetaNet build_theta_net(int dim, double radius, double resolution, std::size_t budget,
                         std::uint64_t rng_seed, int covering_probes = 10000);

/// Net from explicit points; no covering estimate.
ThetaNet theta_net_from_points(const Eigen::MatrixXd& points, double radius);

/// Number of grid points of the given spacing inside the ball, or budget + 1 if larger.
std::size_t grid_cardinality(int dim, double radius, double resolution, std::size_t budget);

/// Clipped greedy value max_a phi(s,a)'theta clipped to [0, 1], per state.
Eigen::VectorXd value_from_theta(const LinearMdpSpec& spec, const Eigen::VectorXd& theta);

/// The induced value-function net W_eps.
struct ValueNet {
    ThetaNet theta_net;
    Eigen::MatrixXd values;  // count x S
    Eigen::MatrixXd squares; // count x S, entrywise squares of values
    /// canonical[j] is the lowest index whose value row equals row j.
    std::vector<int> canonical;
    /// Canonical indices in increasing order.
    std::vector<int> distinct;

    int count() const { return static_cast<int>(values.rows()); }
    int num_states() const { return static_cast<int>(values.cols()); }
    Eigen::VectorXd row(int j) const { return values.row(j).transpose(); }

    // distinct rows ordered by their first entry, for pruned projection
    std::vector<int> by_first;
    std::vector<double> first_sorted;
};

ValueNet build_value_net(const LinearMdpSpec& spec, ThetaNet theta_net);

struct Projection {
    int index = -1;
    double error = 0.0;
};

/// Nearest net row in L-infinity; ties go to the lowest index.
Projection project_to_net(const Eigen::VectorXd& v, const ValueNet& net);

/// Rows "index,theta_0,...,theta_{d-1}".
void write_theta_net_csv(std::ostream& out, const ThetaNet& net);

} // namespace hfrl
