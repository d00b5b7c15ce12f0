#pragma once

#include <Eigen/Dense>

#include <vector>

namespace hfrl {

/// Constants of the variance-weighted regression.
struct WlsParams {
    double lambda = 1.0;
    double alpha = 1.0;
    double eps_bonus = 1e-3;
    double kappa = 1.0;

    /// Throws std::invalid_argument unless every constant is finite and positive.
    void check() const;
};

/// Theoretical constants for dimension d, horizon H, K episodes and confidence delta.
WlsParams default_wls_params(int dim, int horizon, int episodes, double delta);

/**
 * Incremental weighted ridge regression of v(s') and v(s')^2 on phi(s,a).
 *
 * Each sample is weighted by 1/sigma^2 where sigma^2 is the variance upper
 * bound computed from the state before the sample is added; the first sample
 * always gets sigma^2 = 4. The inverse Gram matrix is maintained with
 * Sherman-Morrison updates and recomputed from scratch every refresh_period
 * updates.
 */
class WlsState {
public:
    static constexpr int refresh_period = 256;
    static constexpr double max_condition = 1e12;

    WlsState() = default;
    WlsState(int dim, const WlsParams& params, bool record_sigma = false);

    /// Adds one sample; returns the sigma^2 it was weighted with.
    double push_sample(const Eigen::VectorXd& phi, double v_next, double v_next_sq);

    /// Lambda += phi phi' * weight. Does not touch b or the estimates.
    void rank1_update(const Eigen::VectorXd& phi, double weight);
    /// Recomputes Lambda^{-1} directly; throws NumericalError when ill-conditioned.
    void refresh();

    /// phi' theta_tilde - (phi' theta_hat)^2 + 16 alpha ||phi||_{Lambda^-1} + 4 eps, floored at 4 eps.
    double variance_upper(const Eigen::VectorXd& phi) const;
    /// alpha ||phi||_{Lambda^-1} + 4 eps.
    double bonus(const Eigen::VectorXd& phi) const;
    double mean(const Eigen::VectorXd& phi) const { return phi.dot(theta_hat_); }
    double leverage(const Eigen::VectorXd& phi) const { return phi.dot(lambda_inv_ * phi); }

    int dim() const { return static_cast<int>(b_.size()); }
    long long n() const { return n_; }
    const WlsParams& params() const { return params_; }
    const Eigen::MatrixXd& lambda() const { return lambda_; }
    const Eigen::MatrixXd& lambda_inv() const { return lambda_inv_; }
    const Eigen::VectorXd& b() const { return b_; }
    const Eigen::VectorXd& b_tilde() const { return b_tilde_; }
    const Eigen::VectorXd& theta_hat() const { return theta_hat_; }
    const Eigen::VectorXd& theta_tilde() const { return theta_tilde_; }
    const std::vector<double>& sigma_sq() const { return sigma_sq_; }

    long long floor_activations() const { return floor_activations_; }
    long long refresh_count() const { return refresh_count_; }
    /// Condition number measured at the last refresh.
    double last_condition() const { return last_condition_; }

private:
    WlsParams params_;
    bool record_sigma_ = false;
    Eigen::MatrixXd lambda_;
    Eigen::MatrixXd lambda_inv_;
    Eigen::VectorXd b_;
    Eigen::VectorXd b_tilde_;
    Eigen::VectorXd theta_hat_;
    Eigen::VectorXd theta_tilde_;
    long long n_ = 0;
    int since_refresh_ = 0;
    std::vector<double> sigma_sq_;
    long long floor_activations_ = 0;
    long long refresh_count_ = 0;
    double last_condition_ = 1.0;
};

struct WlsSample {
    Eigen::VectorXd phi;
    double v_next = 0.0;
    double v_next_sq = 0.0;
};

struct HfEstimate {
    Eigen::VectorXd theta_hat;
    Eigen::VectorXd theta_tilde;
    Eigen::MatrixXd lambda;
    Eigen::MatrixXd lambda_inv;
    std::vector<double> sigma_sq;
};

/// Batch form: replays the samples in order from a fresh state.
HfEstimate hf_estimate(const std::vector<WlsSample>& samples, int dim, const WlsParams& params);

double variance_upper(const Eigen::VectorXd& phi, const Eigen::VectorXd& theta_hat,
                      const Eigen::VectorXd& theta_tilde, const Eigen::MatrixXd& lambda_inv,
                      const WlsParams& params);
double bonus(const Eigen::VectorXd& phi, const Eigen::MatrixXd& lambda_inv, const WlsParams& params);

} // namespace hfrl
