#include "hfrl/voful.hpp"

#include "hfrl/errors.hpp"
#include "hfrl/nets.hpp"
#include "hfrl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hfrl {

namespace {

constexpr double radius = 2.0;
constexpr double radius_tolerance = 1e-12;

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

} // namespace

double clip(double u, double level) {
    if (u == 0.0)
        return 0.0;
    return std::copysign(std::min(std::abs(u), level), u);
}

int ceil_log2(long long n) {
    if (n <= 1)
        return 0;
    int r = 0;
    unsigned long long v = static_cast<unsigned long long>(n - 1);
    while (v > 0) {
        v >>= 1;
        ++r;
    }
    return r;
}

VofulState::VofulState(int dim, const VofulConfig& config) : dim_(dim), config_(config) {
    if (dim < 1)
        throw std::invalid_argument("VofulState: dim must be positive");
    const ThetaNet net = build_theta_net(dim, radius, config.candidate_resolution, config.candidate_budget,
                                         derive_seed(config.seed, 1), 0);
    init(net.points);
}

VofulState::VofulState(int dim, const VofulConfig& config, const Eigen::MatrixXd& candidates)
    : dim_(dim), config_(config) {
    if (dim < 1)
        throw std::invalid_argument("VofulState: dim must be positive");
    if (candidates.cols() != dim)
        throw StructuralError("VofulState: candidate dimension differs from state dimension");
    init(candidates);
}

void VofulState::init(const Eigen::MatrixXd& candidates) {
    if (!(config_.delta > 0.0 && config_.delta < 1.0))
        throw std::invalid_argument("VofulState: delta must lie in (0, 1)");
    if (config_.random_directions < 0)
        throw std::invalid_argument("VofulState: random_directions must be nonnegative");
    if (config_.iota_override && !(*config_.iota_override > 0.0))
        throw std::invalid_argument("VofulState: iota override must be positive");

    // u and -u give the same constraint, so only one of each pair is kept.
    directions_.resize(dim_ + config_.random_directions, dim_);
    directions_.topRows(dim_).setIdentity();
    Rng rng(derive_seed(config_.seed, 2));
    for (int i = 0; i < config_.random_directions; ++i) {
        Eigen::VectorXd u(dim_);
        do {
            for (int k = 0; k < dim_; ++k)
                u(k) = rng.normal();
        } while (u.norm() == 0.0);
        directions_.row(dim_ + i) = (u / u.norm()).transpose();
    }

    for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
        const Eigen::VectorXd theta = candidates.row(i).transpose();
        if (theta.norm() > radius + radius_tolerance)
            continue;
        candidates_.push_back(VofulCandidate{theta, std::numeric_limits<long long>::max(), 0, false});
        alive_.push_back(static_cast<int>(candidates_.size()) - 1);
    }
    gram_ = Eigen::MatrixXd::Zero(dim_, dim_);
    xy_ = Eigen::VectorXd::Zero(dim_);
}

double VofulState::iota(long long n) const {
    if (config_.iota_override)
        return *config_.iota_override;
    const double n_eff = std::ldexp(1.0, ceil_log2(std::max(1LL, n)));
    return 16.0 * dim_ * std::log(dim_ * n_eff / config_.delta);
}

void VofulState::accumulate(Stats& st, const Eigen::VectorXd& xv, double yv, double c) const {
    if (c == 0.0)
        return;
    const double c2 = c * c;
    st.cy += c * yv;
    st.cx.noalias() += c * xv;
    st.c2y2 += c2 * yv * yv;
    st.c2yx.noalias() += (c2 * yv) * xv;
    st.c2xx.noalias() += c2 * xv * xv.transpose();
}

void VofulState::add_level() {
    const int j = static_cast<int>(stats_.size()) + 1;
    const double l = level(j);
    std::vector<Stats> row(static_cast<std::size_t>(directions_.rows()));
    for (auto& st : row) {
        st.cx = Eigen::VectorXd::Zero(dim_);
        st.c2yx = Eigen::VectorXd::Zero(dim_);
        st.c2xx = Eigen::MatrixXd::Zero(dim_, dim_);
    }
    for (std::size_t i = 0; i < y_.size(); ++i) {
        for (Eigen::Index m = 0; m < directions_.rows(); ++m) {
            const double c = clip(directions_.row(m).dot(x_[i]), l);
            accumulate(row[static_cast<std::size_t>(m)], x_[i], y_[i], c);
        }
    }
    stats_.push_back(std::move(row));
}

void VofulState::ingest(const Eigen::VectorXd& phi, double reward) {
    if (phi.size() != dim_)
        throw StructuralError("voful ingest: feature length differs from state dimension");
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
    ingest_scaled(phi * scale, reward * scale);
}

void VofulState::ingest_scaled(const Eigen::VectorXd& xv, double yv) {
    if (xv.size() != dim_)
        throw StructuralError("voful ingest: feature length differs from state dimension");
    if (!xv.allFinite() || !std::isfinite(yv))
        throw NumericalError("voful ingest: non-finite sample");
    if (xv.norm() > 1.0 + 1e-9)
        throw ValidationError("voful ingest: scaled feature norm exceeds 1");
    x_.push_back(xv);
    y_.push_back(yv);
    gram_.noalias() += xv * xv.transpose();
    xy_.noalias() += yv * xv;
    for (std::size_t j = 0; j < stats_.size(); ++j) {
        const double l = level(static_cast<int>(j) + 1);
        for (Eigen::Index m = 0; m < directions_.rows(); ++m) {
            const double c = clip(directions_.row(m).dot(xv), l);
            accumulate(stats_[j][static_cast<std::size_t>(m)], xv, yv, c);
        }
    }
    while (static_cast<int>(stats_.size()) < num_levels(n()))
        add_level();
}

bool VofulState::passes_current(const Eigen::VectorXd& theta) const {
    if (theta.norm() > radius + radius_tolerance)
        return false;
    if (n() == 0)
        return true;
    const double io = iota(n());
    const int levels = num_levels(n());
    for (int j = 0; j < levels; ++j) {
        const double l = level(j + 1);
        for (const Stats& st : stats_[static_cast<std::size_t>(j)]) {
            const double lhs = std::abs(st.cy - st.cx.dot(theta));
            const double sq = std::max(0.0, st.c2y2 - 2.0 * theta.dot(st.c2yx) + theta.dot(st.c2xx * theta));
            if (lhs > std::sqrt(sq * io) + l * io)
                return false;
        }
    }
    return true;
}

bool VofulState::member(const Eigen::VectorXd& theta, long long k) const {
    if (theta.size() != dim_)
        throw StructuralError("voful member: parameter length differs from state dimension");
    if (k < 0 || k > n())
        throw std::invalid_argument("voful member: prefix out of range");
    if (theta.norm() > radius + radius_tolerance)
        return false;
    if (k == 0)
        return true;

    std::vector<long long> prefixes;
    for (long long c : checkpoints_)
        if (c >= 1 && c < k)
            prefixes.push_back(c);
    prefixes.push_back(k);

    const int max_levels = num_levels(k);
    const Eigen::Index m = directions_.rows();
    std::vector<double> lin(static_cast<std::size_t>(max_levels * m), 0.0);
    std::vector<double> quad(lin.size(), 0.0);
    std::vector<double> proj(static_cast<std::size_t>(m));
    std::size_t next = 0;
    for (long long i = 0; i < k; ++i) {
        const Eigen::VectorXd& xv = x_[static_cast<std::size_t>(i)];
        const double e = y_[static_cast<std::size_t>(i)] - xv.dot(theta);
        for (Eigen::Index u = 0; u < m; ++u)
            proj[static_cast<std::size_t>(u)] = directions_.row(u).dot(xv);
        for (int j = 0; j < max_levels; ++j) {
            const double l = level(j + 1);
            for (Eigen::Index u = 0; u < m; ++u) {
                const double c = clip(proj[static_cast<std::size_t>(u)], l);
                const std::size_t idx = static_cast<std::size_t>(j * m + u);
                lin[idx] += c * e;
                quad[idx] += c * c * e * e;
            }
        }
        if (i + 1 == prefixes[next]) {
            const long long p = i + 1;
            const double io = iota(p);
            const int levels = num_levels(p);
            for (int j = 0; j < levels; ++j) {
                const double l = level(j + 1);
                for (Eigen::Index u = 0; u < m; ++u) {
                    const std::size_t idx = static_cast<std::size_t>(j * m + u);
                    if (std::abs(lin[idx]) > std::sqrt(quad[idx] * io) + l * io)
                        return false;
                }
            }
            ++next;
        }
    }
    return true;
}

Eigen::VectorXd VofulState::ridge_estimate() const {
    const Eigen::MatrixXd A = gram_ + config_.anchor_ridge * Eigen::MatrixXd::Identity(dim_, dim_);
    Eigen::VectorXd theta = A.llt().solve(xy_);
    const double norm = theta.norm();
    if (norm > radius)
        theta *= radius / norm;
    return theta;
}

bool VofulState::try_anchor() {
    const Eigen::VectorXd theta = ridge_estimate();
    if (!theta.allFinite() || !member(theta, n()))
        return false;
    candidates_.push_back(VofulCandidate{theta, std::numeric_limits<long long>::max(), n(), true});
    alive_.push_back(static_cast<int>(candidates_.size()) - 1);
    ++anchors_added_;
    return true;
}

void VofulState::checkpoint() {
    if (!checkpoints_.empty() && checkpoints_.back() == n())
        return;
    if (n() == 0)
        return;
    checkpoints_.push_back(n());
    std::vector<int> survivors;
    survivors.reserve(alive_.size());
    for (int idx : alive_) {
        auto& cand = candidates_[static_cast<std::size_t>(idx)];
        if (passes_current(cand.theta))
            survivors.push_back(idx);
        else
            cand.pruned_at = n();
    }
    alive_ = std::move(survivors);
    if (config_.anchors && (alive_.empty() || is_power_of_two(checkpoints_.size())))
        try_anchor();
}

int VofulState::alive_count(long long k) const {
    if (k == last_checkpoint())
        return static_cast<int>(alive_.size());
    int count = 0;
    for (const auto& c : candidates_)
        if (c.pruned_at > k)
            ++count;
    return count;
}

double VofulState::max(const Eigen::VectorXd& xv, long long k) const {
    if (xv.size() != dim_)
        throw StructuralError("voful max: feature length differs from state dimension");
    if (k != 0 && !std::binary_search(checkpoints_.begin(), checkpoints_.end(), k))
        throw std::invalid_argument("voful max: prefix must be 0 or a recorded checkpoint");
    double best = -std::numeric_limits<double>::infinity();
    int arg = -1;
    auto consider = [&](int idx) {
        const double v = xv.dot(candidates_[static_cast<std::size_t>(idx)].theta);
        if (v > best || (v == best && idx < arg)) {
            best = v;
            arg = idx;
        }
    };
    if (k == last_checkpoint()) {
        for (int idx : alive_)
            consider(idx);
    } else {
        for (std::size_t i = 0; i < candidates_.size(); ++i)
            if (candidates_[i].pruned_at > k)
                consider(static_cast<int>(i));
    }
    if (arg < 0) {
        std::ostringstream msg;
        msg << "empty confidence set: no reward candidate survives at prefix " << k << " (samples " << n()
            << ", candidates " << candidates_.size() << ", anchors added " << anchors_added_ << ")";
        throw EmptyConfidenceSet(msg.str());
    }
    last_argmax_ = arg;
    return best;
}

} // namespace hfrl
