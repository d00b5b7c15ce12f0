#include "hfrl/nets.hpp"

#include "hfrl/errors.hpp"
#include "hfrl/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace hfrl {

namespace {

constexpr double ball_tolerance = 1e-12;

constexpr int halton_primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                                 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113};

double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

// Integer grid points n with |n|^2 <= limit2, enumerated lexicographically.
// Returns false if more than budget points exist.
bool enumerate_grid(int dim, int extent, double limit2, std::size_t budget,
                    std::vector<std::vector<int>>* out, std::size_t& count) {
    std::vector<int> coord(dim, -extent);
    std::vector<double> partial(dim + 1, 0.0);
    int level = 0;
    coord[0] = -extent - 1;
    while (level >= 0) {
        ++coord[level];
        if (coord[level] > extent) {
            --level;
            continue;
        }
        const double sq = partial[level] + static_cast<double>(coord[level]) * coord[level];
        if (sq > limit2 + ball_tolerance) {
            // Past the positive boundary: nothing more at this level.
            if (coord[level] > 0)
                --level;
            continue;
        }
        if (level + 1 == dim) {
            if (++count > budget)
                return false;
            if (out)
                out->push_back(coord);
        } else {
            partial[level + 1] = sq;
            ++level;
            coord[level] = -extent - 1;
        }
    }
    return true;
}

Eigen::VectorXd uniform_ball(Rng& rng, int dim, double radius) {
    Eigen::VectorXd x(dim);
    double n;
    do {
        for (int i = 0; i < dim; ++i)
            x(i) = rng.normal();
        n = x.norm();
    } while (n == 0.0);
    const double r = radius * std::pow(rng.uniform(), 1.0 / dim);
    return x * (r / n);
}

void estimate_covering(ThetaNet& net, int probes, std::uint64_t seed) {
    if (probes <= 0 || net.count() == 0)
        return;
    Rng rng(derive_seed(seed, 0xc0fe));
    const int d = net.dim();
    // Keep brute-force work bounded for large quasi-random nets.
    const double work = static_cast<double>(probes) * net.count();
    if (!net.is_grid && work > 5e8)
        probes = std::max(100, static_cast<int>(5e8 / net.count()));
    double worst2 = 0.0;
    double worst_inf = 0.0;
    for (int p = 0; p < probes; ++p) {
        const Eigen::VectorXd x = uniform_ball(rng, d, net.radius);
        double best2 = std::numeric_limits<double>::infinity();
        double best_inf = std::numeric_limits<double>::infinity();
        bool done = false;
        if (net.is_grid) {
            Eigen::VectorXd snapped(d);
            for (int i = 0; i < d; ++i)
                snapped(i) = std::round(x(i) / net.resolution) * net.resolution;
            if (snapped.norm() <= net.radius + ball_tolerance) {
                best2 = (snapped - x).squaredNorm();
                best_inf = (snapped - x).cwiseAbs().maxCoeff();
                done = true;
            }
        }
        if (!done) {
            for (int j = 0; j < net.count(); ++j) {
                const auto diff = net.points.row(j).transpose() - x;
                best2 = std::min(best2, diff.squaredNorm());
                best_inf = std::min(best_inf, diff.cwiseAbs().maxCoeff());
            }
        }
        worst2 = std::max(worst2, best2);
        worst_inf = std::max(worst_inf, best_inf);
    }
    net.covering_l2 = std::sqrt(worst2);
    net.covering_linf = worst_inf;
    net.covering_probes = probes;
}

struct RowHash {
    std::size_t operator()(const std::vector<double>& v) const {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (double x : v) {
            h ^= std::bit_cast<std::uint64_t>(x == 0.0 ? 0.0 : x);
            h *= 0x100000001b3ULL;
        }
        return h;
    }
};

} // namespace

std::size_t grid_cardinality(int dim, double radius, double resolution, std::size_t budget) {
    const int extent = static_cast<int>(std::floor(radius / resolution + 1e-9));
    const double limit = radius / resolution;
    std::size_t count = 0;
    if (!enumerate_grid(dim, extent, limit * limit, budget, nullptr, count))
        return budget + 1;
    return count;
}

ThetaNet build_theta_net(int dim, double radius, double resolution, std::size_t budget,
                         std::uint64_t rng_seed, int covering_probes) {
    if (budget < 1)
        throw std::invalid_argument("build_theta_net: budget must be at least 1");
    if (!(resolution > 0.0) || !(radius >= 0.0) || dim < 1)
        throw std::invalid_argument("build_theta_net: need dim >= 1, radius >= 0, resolution > 0");

    ThetaNet net;
    net.resolution = resolution;
    net.radius = radius;

    const int extent = static_cast<int>(std::floor(radius / resolution + 1e-9));
    const double limit = radius / resolution;
    std::vector<std::vector<int>> grid;
    std::size_t count = 0;
    if (enumerate_grid(dim, extent, limit * limit, budget, &grid, count)) {
        net.is_grid = true;
        net.points.resize(static_cast<Eigen::Index>(grid.size()), dim);
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (int k = 0; k < dim; ++k)
                net.points(static_cast<Eigen::Index>(i), k) = grid[i][k] * resolution;
    } else {
        net.is_grid = false;
        if (dim > static_cast<int>(std::size(halton_primes)))
            throw std::invalid_argument("build_theta_net: quasi-random fallback supports dim <= 30");
        Rng rng(rng_seed);
        std::vector<double> shift(dim);
        for (auto& s : shift)
            s = rng.uniform();
        std::vector<Eigen::VectorXd> pts;
        pts.reserve(budget);
        pts.push_back(Eigen::VectorXd::Zero(dim));
        Eigen::VectorXd x(dim);
        for (std::uint64_t i = 1; pts.size() < budget; ++i) {
            for (int k = 0; k < dim; ++k) {
                double u = radical_inverse(i, halton_primes[k]) + shift[k];
                u -= std::floor(u);
                x(k) = radius * (2.0 * u - 1.0);
            }
            if (x.norm() <= radius)
                pts.push_back(x);
        }
        net.points.resize(static_cast<Eigen::Index>(pts.size()), dim);
        for (std::size_t i = 0; i < pts.size(); ++i)
            net.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    }
    estimate_covering(net, covering_probes, rng_seed);
    return net;
}

ThetaNet theta_net_from_points(const Eigen::MatrixXd& points, double radius) {
    ThetaNet net;
    net.points = points;
    net.radius = radius;
    net.is_grid = false;
    return net;
}

Eigen::VectorXd value_from_theta(const LinearMdpSpec& spec, const Eigen::VectorXd& theta) {
    if (!theta.allFinite())
        throw NumericalError("value_from_theta: non-finite theta");
    const Eigen::VectorXd scores = spec.features * theta;
    Eigen::VectorXd v(spec.num_states);
    for (int s = 0; s < spec.num_states; ++s) {
        const double best = scores.segment(static_cast<Eigen::Index>(s) * spec.num_actions, spec.num_actions).maxCoeff();
        v(s) = std::clamp(best, 0.0, 1.0);
    }
    return v;
}

ValueNet build_value_net(const LinearMdpSpec& spec, ThetaNet theta_net) {
    if (theta_net.dim() != spec.dim)
        throw StructuralError("build_value_net: net dimension differs from spec dimension");
    ValueNet net;
    const int n = theta_net.count();
    const int S = spec.num_states;
    const int A = spec.num_actions;
    net.values.resize(n, S);
    const Eigen::MatrixXd scores = theta_net.points * spec.features.transpose(); // n x (S*A)
    for (int j = 0; j < n; ++j) {
        for (int s = 0; s < S; ++s) {
            double best = scores(j, s * A);
            for (int a = 1; a < A; ++a)
                best = std::max(best, scores(j, s * A + a));
            net.values(j, s) = std::clamp(best, 0.0, 1.0);
        }
    }
    net.squares = net.values.array().square().matrix();
    net.theta_net = std::move(theta_net);

    net.canonical.resize(n);
    std::unordered_map<std::vector<double>, int, RowHash> seen;
    seen.reserve(static_cast<std::size_t>(n));
    std::vector<double> key(S);
    for (int j = 0; j < n; ++j) {
        for (int s = 0; s < S; ++s)
            key[s] = net.values(j, s);
        auto [it, inserted] = seen.emplace(key, j);
        net.canonical[j] = it->second;
        if (inserted)
            net.distinct.push_back(j);
    }
    net.by_first = net.distinct;
    std::stable_sort(net.by_first.begin(), net.by_first.end(),
                     [&](int a, int b) { return net.values(a, 0) < net.values(b, 0); });
    net.first_sorted.reserve(net.by_first.size());
    for (int j : net.by_first)
        net.first_sorted.push_back(net.values(j, 0));
    return net;
}

Projection project_to_net(const Eigen::VectorXd& v, const ValueNet& net) {
    if (net.count() == 0)
        throw std::invalid_argument("project_to_net: empty net");
    if (v.size() != net.num_states())
        throw StructuralError("project_to_net: vector length differs from net state count");
    const int S = net.num_states();
    Projection best{-1, std::numeric_limits<double>::infinity()};
    auto consider = [&](int j) {
        double err = 0.0;
        for (int s = 0; s < S; ++s) {
            err = std::max(err, std::abs(net.values(j, s) - v(s)));
            if (err > best.error)
                return;
        }
        if (err < best.error || (err == best.error && j < best.index))
            best = Projection{j, err};
    };
    // Walk outward from the first-coordinate position; rows whose first entry
    // is farther than the current best cannot win.
    const auto mid = std::lower_bound(net.first_sorted.begin(), net.first_sorted.end(), v(0));
    std::ptrdiff_t hi = mid - net.first_sorted.begin();
    std::ptrdiff_t lo = hi - 1;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(net.by_first.size());
    while (lo >= 0 || hi < n) {
        const double dlo = lo >= 0 ? v(0) - net.first_sorted[lo] : std::numeric_limits<double>::infinity();
        const double dhi = hi < n ? net.first_sorted[hi] - v(0) : std::numeric_limits<double>::infinity();
        if (std::min(dlo, dhi) > best.error)
            break;
        if (dlo <= dhi) {
            consider(net.by_first[lo]);
            --lo;
        } else {
            consider(net.by_first[hi]);
            ++hi;
        }
    }
    return best;
}

void write_theta_net_csv(std::ostream& out, const ThetaNet& net) {
    const auto old = out.precision(17);
    out << "index";
    for (int k = 0; k < net.dim(); ++k)
        out << ",theta_" << k;
    out << '\n';
    for (int j = 0; j < net.count(); ++j) {
        out << j;
        for (int k = 0; k < net.dim(); ++k)
            out << ',' << net.points(j, k);
        out << '\n';
    }
    out.precision(old);
}

} // namespace hfrl
