#pragma once

// Enumeration oracles shared by unit tests and the acceptance binary. They
// work from raw matrices and forward state distributions, so they share no
// code with the backward-induction solvers.

#include "hfrl/linmdp.hpp"
#include "hfrl/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace brute {

/// Value from `start` of the action table `table[h * S + s]`, by forward propagation.
inline double forward_value(const Eigen::MatrixXd& features, const Eigen::MatrixXd& mu, const Eigen::VectorXd& theta,
                            int S, int A, int H, int start, const std::vector<int>& table) {
    Eigen::VectorXd occ = Eigen::VectorXd::Zero(S);
    occ(start) = 1.0;
    double total = 0.0;
    for (int h = 0; h < H; ++h) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
        for (int s = 0; s < S; ++s) {
            if (occ(s) == 0.0)
                continue;
            const int a = table[static_cast<std::size_t>(h * S + s)];
            const Eigen::VectorXd phi = features.row(s * A + a).transpose();
            total += occ(s) * phi.dot(theta);
            next += occ(s) * (mu * phi);
        }
        occ = next;
    }
    return total;
}

/// Calls fn(table) for every deterministic non-stationary action table.
inline void for_each_policy(int S, int A, int H, const std::function<void(const std::vector<int>&)>& fn) {
    const int cells = S * H;
    std::vector<int> table(static_cast<std::size_t>(cells), 0);
    while (true) {
        fn(table);
        int i = 0;
        while (i < cells && ++table[static_cast<std::size_t>(i)] == A)
            table[static_cast<std::size_t>(i++)] = 0;
        if (i == cells)
            return;
    }
}

/// Best value over all A^(S H) policies.
inline double best_value(const Eigen::MatrixXd& features, const Eigen::MatrixXd& mu, const Eigen::VectorXd& theta,
                         int S, int A, int H, int start) {
    double best = -1.0;
    for_each_policy(S, A, H, [&](const std::vector<int>& t) {
        best = std::max(best, forward_value(features, mu, theta, S, A, H, start, t));
    });
    return best;
}

inline std::vector<int> to_table(const hfrl::TabularPolicy& pi) { return pi.table(); }

/// S = 2, A = 2, H = 3 instance: action 1 in state 0 pays now, action 0 moves
/// toward state 1 where action 1 pays more.
inline hfrl::LinearMdpSpec hand_instance() {
    Eigen::MatrixXd P(4, 2);
    P << 0.8, 0.2,  // s0 a0
         0.9, 0.1,  // s0 a1
         0.3, 0.7,  // s1 a0
         0.6, 0.4;  // s1 a1
    Eigen::VectorXd r(4);
    r << 0.0, 0.15, 0.05, 0.3;
    return hfrl::tabular_embedding(P, r, 2, 2, 3, 0);
}

/// Random simplex instance small enough for enumeration.
inline hfrl::LinearMdpSpec small_random(std::uint64_t seed, int S, int A, int d, int H) {
    hfrl::GeneratorParams g;
    g.num_states = S;
    g.num_actions = A;
    g.dim = d;
    g.horizon = H;
    g.seed = seed;
    g.feature_sharpness = 2.0;
    g.kernel_sharpness = 2.0;
    return hfrl::generate_simplex_spec(g);
}

} // namespace brute
