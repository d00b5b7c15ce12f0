#include "hfrl/baselines.hpp"

#include "hfrl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hfrl {

double default_lsvi_beta(int dim, int horizon, int episodes, double delta, double c) {
    if (dim < 1 || horizon < 1 || episodes < 1 || !(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("default_lsvi_beta: need d, H, K >= 1 and 0 < delta < 1");
    return c * dim * std::sqrt(std::log(static_cast<double>(dim) * episodes * horizon / delta));
}

LsviLearner::LsviLearner(const LinearMdpSpec& structure, const LsviParams& params)
    : structure_(structure), params_(params) {
    if (!(params.lambda > 0.0) || !(params.beta >= 0.0))
        throw std::invalid_argument("LsviLearner: need lambda > 0 and beta >= 0");
    const int H = structure.horizon;
    const int d = structure.dim;
    gram_.assign(static_cast<std::size_t>(H), params.lambda * Eigen::MatrixXd::Identity(d, d));
    counts_.assign(static_cast<std::size_t>(H), Eigen::MatrixXd::Zero(structure.num_pairs(), structure.num_states));
    rewards_.assign(static_cast<std::size_t>(H), Eigen::VectorXd::Zero(structure.num_pairs()));
}

void LsviLearner::update(const Trajectory& trajectory) {
    if (static_cast<int>(trajectory.steps.size()) > structure_.horizon)
        throw StructuralError("LsviLearner: trajectory longer than the horizon");
    for (std::size_t h = 0; h < trajectory.steps.size(); ++h) {
        const auto& st = trajectory.steps[h];
        const int sa = structure_.sa(st.state, st.action);
        gram_[h].noalias() += st.feature * st.feature.transpose();
        counts_[h](sa, st.next_state) += 1.0;
        rewards_[h](sa) += st.reward;
    }
}

LsviPlan LsviLearner::plan() const {
    const int S = structure_.num_states;
    const int A = structure_.num_actions;
    const int H = structure_.horizon;
    const Eigen::MatrixXd& F = structure_.features;
    LsviPlan out{TabularPolicy(H, S), Eigen::MatrixXd::Zero(H + 1, S)};
    for (int h = H - 1; h >= 0; --h) {
        const auto hs = static_cast<std::size_t>(h);
        const Eigen::VectorXd target = rewards_[hs] + counts_[hs] * out.values.row(h + 1).transpose();
        const Eigen::LLT<Eigen::MatrixXd> llt(gram_[hs]);
        const Eigen::VectorXd w = llt.solve(F.transpose() * target);
        const Eigen::MatrixXd inv_ft = llt.solve(F.transpose()); // d x SA
        for (int s = 0; s < S; ++s) {
            double best = -1.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                const int sa = s * A + a;
                const double lev = std::max(0.0, F.row(sa).dot(inv_ft.col(sa)));
                const double q = std::clamp(F.row(sa).dot(w) + params_.beta * std::sqrt(lev), 0.0, 1.0);
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            out.values(h, s) = best;
            out.policy.at(h, s) = best_a;
        }
    }
    return out;
}

TabularPolicy random_policy(int horizon, int num_states, int num_actions, Rng& rng) {
    if (num_actions < 1)
        throw std::invalid_argument("random_policy: need at least one action");
    TabularPolicy pi(horizon, num_states);
    for (int h = 0; h < horizon; ++h)
        for (int s = 0; s < num_states; ++s)
            pi.at(h, s) = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_actions)));
    return pi;
}

} // namespace hfrl
