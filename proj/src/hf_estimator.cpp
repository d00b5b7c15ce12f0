#include "hfrl/hf_estimator.hpp"

#include "hfrl/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hfrl {

void WlsParams::check() const {
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(lambda) || !positive(alpha) || !positive(eps_bonus) || !positive(kappa))
        throw std::invalid_argument("WlsParams: lambda, alpha, eps_bonus and kappa must be finite and positive");
}

WlsParams default_wls_params(int dim, int horizon, int episodes, double delta) {
    if (dim < 1 || horizon < 1 || episodes < 1 || !(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("default_wls_params: need d, H, K >= 1 and 0 < delta < 1");
    const double KH = static_cast<double>(episodes) * horizon;
    const double log_term = std::abs(std::log(KH / delta));
    WlsParams p;
    p.lambda = 1.0 / (static_cast<double>(horizon) * horizon);
    p.alpha = 150.0 * dim * log_term;
    p.eps_bonus = 1.0 / std::pow(KH, 4);
    p.kappa = 13.0 * std::sqrt(6.0 * dim * dim * log_term * log_term) + 72.0 * log_term;
    return p;
}

WlsState::WlsState(int dim, const WlsParams& params, bool record_sigma)
    : params_(params), record_sigma_(record_sigma) {
    params_.check();
    if (dim < 1)
        throw std::invalid_argument("WlsState: dim must be positive");
    lambda_ = params_.lambda * Eigen::MatrixXd::Identity(dim, dim);
    lambda_inv_ = (1.0 / params_.lambda) * Eigen::MatrixXd::Identity(dim, dim);
    b_ = Eigen::VectorXd::Zero(dim);
    b_tilde_ = Eigen::VectorXd::Zero(dim);
    theta_hat_ = Eigen::VectorXd::Zero(dim);
    theta_tilde_ = Eigen::VectorXd::Zero(dim);
}

double WlsState::variance_upper(const Eigen::VectorXd& phi) const {
    return hfrl::variance_upper(phi, theta_hat_, theta_tilde_, lambda_inv_, params_);
}

double WlsState::bonus(const Eigen::VectorXd& phi) const {
    return hfrl::bonus(phi, lambda_inv_, params_);
}

void WlsState::rank1_update(const Eigen::VectorXd& phi, double weight) {
    if (!phi.allFinite() || !std::isfinite(weight))
        throw NumericalError("rank1_update: non-finite input");
    if (weight == 0.0 || phi.isZero(0.0))
        return;
    const Eigen::VectorXd u = lambda_inv_ * phi;
    const double denom = 1.0 + weight * phi.dot(u);
    if (!(denom > 0.0))
        throw NumericalError("rank1_update: non-positive Sherman-Morrison denominator");
    lambda_.noalias() += weight * phi * phi.transpose();
    lambda_inv_.noalias() -= (weight / denom) * u * u.transpose();
    if (++since_refresh_ >= refresh_period)
        refresh();
}

void WlsState::refresh() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lambda_, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    last_condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(last_condition_ <= max_condition)) {
        std::ostringstream msg;
        msg << "WlsState: Gram matrix condition number " << last_condition_ << " exceeds " << max_condition
            << " (min eigenvalue " << lo << ", max " << hi << ", samples " << n_ << ")";
        throw NumericalError(msg.str());
    }
    lambda_inv_ = lambda_.llt().solve(Eigen::MatrixXd::Identity(dim(), dim()));
    lambda_inv_ = 0.5 * (lambda_inv_ + lambda_inv_.transpose()).eval();
    since_refresh_ = 0;
    ++refresh_count_;
}

double WlsState::push_sample(const Eigen::VectorXd& phi, double v_next, double v_next_sq) {
    if (phi.size() != dim())
        throw StructuralError("push_sample: feature length differs from estimator dimension");
    if (!phi.allFinite() || !std::isfinite(v_next) || !std::isfinite(v_next_sq))
        throw NumericalError("push_sample: non-finite sample");
    double sigma_sq = 4.0;
    if (n_ > 0) {
        const double raw = phi.dot(theta_tilde_) - std::pow(phi.dot(theta_hat_), 2) +
                           16.0 * params_.alpha * std::sqrt(std::max(0.0, leverage(phi))) +
                           4.0 * params_.eps_bonus;
        const double floor = 4.0 * params_.eps_bonus;
        if (raw < floor)
            ++floor_activations_;
        sigma_sq = std::max(raw, floor);
    }
    const double w = 1.0 / sigma_sq;
    b_.noalias() += (w * v_next) * phi;
    b_tilde_.noalias() += (w * v_next_sq) * phi;
    rank1_update(phi, w);
    theta_hat_.noalias() = lambda_inv_ * b_;
    theta_tilde_.noalias() = lambda_inv_ * b_tilde_;
    ++n_;
    if (record_sigma_)
        sigma_sq_.push_back(sigma_sq);
    return sigma_sq;
}

HfEstimate hf_estimate(const std::vector<WlsSample>& samples, int dim, const WlsParams& params) {
    WlsState state(dim, params, true);
    for (const auto& s : samples)
        state.push_sample(s.phi, s.v_next, s.v_next_sq);
    return HfEstimate{state.theta_hat(), state.theta_tilde(), state.lambda(), state.lambda_inv(),
                      state.sigma_sq()};
}

double variance_upper(const Eigen::VectorXd& phi, const Eigen::VectorXd& theta_hat,
                      const Eigen::VectorXd& theta_tilde, const Eigen::MatrixXd& lambda_inv,
                      const WlsParams& params) {
    if (!phi.allFinite())
        throw NumericalError("variance_upper: non-finite feature");
    const double lev = std::max(0.0, phi.dot(lambda_inv * phi));
    const double mean = phi.dot(theta_hat);
    const double raw = phi.dot(theta_tilde) - mean * mean + 16.0 * params.alpha * std::sqrt(lev) +
                       4.0 * params.eps_bonus;
    return std::max(raw, 4.0 * params.eps_bonus);
}

double bonus(const Eigen::VectorXd& phi, const Eigen::MatrixXd& lambda_inv, const WlsParams& params) {
    if (!phi.allFinite())
        throw NumericalError("bonus: non-finite feature");
    const double lev = std::max(0.0, phi.dot(lambda_inv * phi));
    return params.alpha * std::sqrt(lev) + 4.0 * params.eps_bonus;
}

} // namespace hfrl
