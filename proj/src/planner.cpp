#include "hfrl/planner.hpp"

#include "hfrl/errors.hpp"
#include "hfrl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hfrl {

TransitionConfidence::TransitionConfidence(std::shared_ptr<const ValueNet> net, const WlsParams& params,
                                           const Eigen::MatrixXd& features)
    : net_(std::move(net)), params_(params), features_(features) {
    if (!net_)
        throw std::invalid_argument("TransitionConfidence: null value net");
    params_.check();
    if (features_.cols() != net_->theta_net.dim())
        throw StructuralError("TransitionConfidence: feature dimension differs from net dimension");
    states_.resize(static_cast<std::size_t>(net_->count()));
}

void TransitionConfidence::add_transition(int sa, int next_state) {
    if (sa < 0 || sa >= features_.rows() || next_state < 0 || next_state >= net_->num_states())
        throw std::out_of_range("add_transition: index out of range");
    history_.emplace_back(sa, next_state);
}

void TransitionConfidence::catch_up(int canonical) {
    auto& st = states_[static_cast<std::size_t>(canonical)];
    const auto& values = net_->values;
    const auto& squares = net_->squares;
    for (long long i = st->n(); i < history_size(); ++i) {
        const auto [sa, next] = history_[static_cast<std::size_t>(i)];
        st->push_sample(features_.row(sa).transpose(), values(canonical, next), squares(canonical, next));
    }
}

const WlsState& TransitionConfidence::estimator(int net_index) {
    if (net_index < 0 || net_index >= net_->count())
        throw std::out_of_range("TransitionConfidence: net index out of range");
    const int canonical = net_->canonical[static_cast<std::size_t>(net_index)];
    auto& st = states_[static_cast<std::size_t>(canonical)];
    if (!st) {
        st = std::make_unique<WlsState>(static_cast<int>(features_.cols()), params_);
        active_.push_back(canonical);
    }
    catch_up(canonical);
    return *st;
}

void TransitionConfidence::sync(int threads) {
    parallel_for(active_.size(), threads, [&](std::size_t i) { catch_up(active_[i]); });
}

long long TransitionConfidence::floor_activations() const {
    long long total = 0;
    for (int j : active_)
        total += states_[static_cast<std::size_t>(j)]->floor_activations();
    return total;
}

long long TransitionConfidence::refresh_count() const {
    long long total = 0;
    for (int j : active_)
        total += states_[static_cast<std::size_t>(j)]->refresh_count();
    return total;
}

double TransitionConfidence::max_condition() const {
    double worst = 1.0;
    for (int j : active_)
        worst = std::max(worst, states_[static_cast<std::size_t>(j)]->last_condition());
    return worst;
}

bool transition_member(const Eigen::MatrixXd& mu_tilde, TransitionConfidence& conf, const Eigen::MatrixXd& probes) {
    const ValueNet& net = conf.net();
    if (mu_tilde.rows() != net.num_states() || mu_tilde.cols() != conf.features().cols())
        throw StructuralError("transition_member: kernel shape differs from S x d");
    const Eigen::MatrixXd& phis = probes.size() == 0 ? conf.features() : probes;
    for (int j : net.distinct) {
        const WlsState& st = conf.estimator(j);
        const Eigen::VectorXd theta_model = mu_tilde.transpose() * net.row(j);
        for (Eigen::Index p = 0; p < phis.rows(); ++p) {
            const Eigen::VectorXd phi = phis.row(p).transpose();
            if (std::abs(phi.dot(theta_model) - st.mean(phi)) > st.bonus(phi))
                return false;
        }
    }
    return true;
}

OptimisticPlan optimistic_value_iteration(int num_states, int num_actions, int horizon,
                                          const Eigen::VectorXd& reward_upper, const BackupFn& backup) {
    const int S = num_states;
    const int A = num_actions;
    if (reward_upper.size() != S * A)
        throw StructuralError("optimistic_value_iteration: reward vector length differs from S*A");
    OptimisticPlan plan;
    plan.policy = TabularPolicy(horizon, S);
    plan.values = Eigen::MatrixXd::Zero(horizon + 1, S);
    plan.net_index.assign(static_cast<std::size_t>(horizon), -1);
    plan.projection_error.assign(static_cast<std::size_t>(horizon), 0.0);
    plan.mean_bonus.assign(static_cast<std::size_t>(horizon), 0.0);
    plan.max_bonus.assign(static_cast<std::size_t>(horizon), 0.0);
    for (int h = horizon - 1; h >= 0; --h) {
        const BackupTerms terms = backup(h, plan.values.row(h + 1).transpose());
        if (terms.mean.size() != S * A || terms.bonus.size() != S * A)
            throw StructuralError("optimistic_value_iteration: backup terms have wrong length");
        plan.net_index[static_cast<std::size_t>(h)] = terms.net_index;
        plan.projection_error[static_cast<std::size_t>(h)] = terms.projection_error;
        plan.mean_bonus[static_cast<std::size_t>(h)] = terms.bonus.mean();
        plan.max_bonus[static_cast<std::size_t>(h)] = terms.bonus.maxCoeff();
        for (int s = 0; s < S; ++s) {
            double best = -1.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                const int sa = s * A + a;
                const double q = std::clamp(reward_upper(sa) + terms.mean(sa) + terms.bonus(sa), 0.0, 1.0);
                if (!std::isfinite(q))
                    throw NumericalError("optimistic_value_iteration: non-finite Q value");
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            plan.values(h, s) = best;
            plan.policy.at(h, s) = best_a;
        }
    }
    return plan;
}

Eigen::VectorXd optimistic_rewards(const VofulState& voful, const Eigen::MatrixXd& features) {
    const double root_d = std::sqrt(static_cast<double>(features.cols()));
    Eigen::VectorXd r(features.rows());
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        r(i) = voful.max(features.row(i).transpose() / root_d) * root_d;
    return r;
}

OptimisticPlan plan_bonus(TransitionConfidence& conf, const VofulState& voful, const LinearMdpSpec& structure) {
    const Eigen::VectorXd r_up = optimistic_rewards(voful, structure.features);
    const ValueNet& net = conf.net();
    const Eigen::Index SA = structure.features.rows();
    BackupFn backup = [&](int, const Eigen::VectorXd& v_next) {
        const Projection proj = project_to_net(v_next, net);
        const WlsState& st = conf.estimator(proj.index);
        BackupTerms t;
        t.net_index = proj.index;
        t.projection_error = proj.error;
        t.mean = structure.features * st.theta_hat();
        t.bonus.resize(SA);
        for (Eigen::Index i = 0; i < SA; ++i)
            t.bonus(i) = st.bonus(structure.features.row(i).transpose());
        return t;
    };
    return optimistic_value_iteration(structure.num_states, structure.num_actions, structure.horizon, r_up, backup);
}

OptimisticPlan plan_exact(const std::vector<ModelCandidate>& candidates, TransitionConfidence& conf,
                          const VofulState& voful, const LinearMdpSpec& structure, const Eigen::MatrixXd& probes) {
    if (candidates.empty())
        throw std::invalid_argument("plan_exact: empty candidate list");
    OptimisticPlan plan;
    double best_value = -std::numeric_limits<double>::infinity();
    ValueTable best_table;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (c.mu.rows() != structure.num_states || c.mu.cols() != structure.dim || c.theta_r.size() != structure.dim)
            throw StructuralError("plan_exact: candidate shape differs from the structure");
        if (!transition_member(c.mu, conf, probes))
            continue;
        if (!voful.member(c.theta_r, voful.n()))
            continue;
        plan.survivors.push_back(static_cast<int>(i));
        const TabularModel model =
            tabulate(structure.features, c.mu, c.theta_r, structure.num_states, structure.num_actions);
        ValueTable table = solve_optimal(model, structure.horizon);
        const double v = table.V(0, structure.initial_state);
        if (v > best_value) {
            best_value = v;
            best_table = std::move(table);
            plan.chosen_candidate = static_cast<int>(i);
        }
    }
    if (plan.chosen_candidate < 0) {
        std::ostringstream msg;
        msg << "empty model class: all " << candidates.size() << " candidates eliminated after "
            << conf.history_size() << " transitions";
        throw EmptyConfidenceSet(msg.str());
    }
    plan.policy = greedy_policy(best_table);
    plan.values = best_table.V;
    return plan;
}

HfLearner::HfLearner(const LinearMdpSpec& structure, std::shared_ptr<const ValueNet> net, const WlsParams& wls,
                     const VofulConfig& voful, int threads)
    : structure_(structure), conf_(std::move(net), wls, structure.features), voful_(structure.dim, voful),
      threads_(threads) {}

OptimisticPlan HfLearner::plan() { return plan_bonus(conf_, voful_, structure_); }

OptimisticPlan HfLearner::plan_exact(const std::vector<ModelCandidate>& candidates) {
    return hfrl::plan_exact(candidates, conf_, voful_, structure_);
}

void HfLearner::update(const Trajectory& trajectory) {
    for (const auto& st : trajectory.steps) {
        conf_.add_transition(structure_.sa(st.state, st.action), st.next_state);
        voful_.ingest(st.feature, st.reward);
    }
    voful_.checkpoint();
    conf_.sync(threads_);
    ++episodes_;
}

} // namespace hfrl
