#include "brute.hpp"

#include "hfrl/nets.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

using namespace hfrl;

namespace {

double clipped_greedy(const LinearMdpSpec& spec, int s, const Eigen::VectorXd& theta) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < spec.num_actions; ++a) {
        double dot = 0.0;
        for (int i = 0; i < spec.dim; ++i)
            dot += spec.features(s * spec.num_actions + a, i) * theta(i);
        best = std::max(best, dot);
    }
    return std::min(1.0, std::max(0.0, best));
}

Eigen::VectorXd random_in_ball(Rng& rng, int d, double radius) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i)
        v(i) = rng.normal();
    return v.normalized() * radius * std::pow(rng.uniform(), 1.0 / d);
}

} // namespace

TEST_CASE("one-dimensional grid") {
    const ThetaNet net = build_theta_net(1, 2.0, 1.0, 100, 0, 0);
    REQUIRE(net.count() == 5);
    CHECK(net.is_grid);
    for (int i = 0; i < 5; ++i)
        CHECK(net.points(i, 0) == doctest::Approx(-2.0 + i));
    CHECK(grid_cardinality(1, 2.0, 1.0, 100) == 5);
}

TEST_CASE("origin is always a member") {
    for (std::size_t budget : {std::size_t(1), std::size_t(10), std::size_t(100000)}) {
        const ThetaNet net = build_theta_net(3, 2.0, 0.3, budget, 5, 0);
        bool found = false;
        for (int i = 0; i < net.count(); ++i)
            found = found || net.points.row(i).norm() == 0.0;
        CHECK(found);
        CHECK(static_cast<std::size_t>(net.count()) <= budget);
    }
}

TEST_CASE("budget fallback stays inside the ball") {
    const ThetaNet net = build_theta_net(4, 2.0, 0.1, 500, 3, 0);
    CHECK_FALSE(net.is_grid);
    CHECK(net.count() == 500);
    for (int i = 0; i < net.count(); ++i)
        CHECK(net.points.row(i).norm() <= 2.0 + 1e-12);
    CHECK_THROWS_AS(build_theta_net(2, 1.0, 0.5, 0, 0), std::invalid_argument);
}

TEST_CASE("grid covering radius in three dimensions") {
    const ThetaNet net = build_theta_net(3, 2.0, 0.5, 100000, 7, 10000);
    CHECK(net.is_grid);
    CHECK(net.covering_l2 >= 0.0);
    CHECK(net.covering_l2 <= 0.5 * std::sqrt(3.0));
    CHECK(net.covering_linf <= 0.5);

    // independent probe of the same quantity
    Rng rng(99);
    double worst = 0.0;
    for (int p = 0; p < 2000; ++p) {
        const Eigen::VectorXd x = random_in_ball(rng, 3, 2.0);
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < net.count(); ++i)
            best = std::min(best, (net.points.row(i).transpose() - x).norm());
        worst = std::max(worst, best);
    }
    CHECK(worst <= 0.5 * std::sqrt(3.0));
}

TEST_CASE("value_from_theta matches a per-entry recomputation") {
    const LinearMdpSpec spec = brute::small_random(4, 5, 3, 4, 3);
    CHECK(value_from_theta(spec, Eigen::VectorXd::Zero(4)).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd big = Eigen::VectorXd::Constant(4, 10.0);
    CHECK(value_from_theta(spec, big) == Eigen::VectorXd::Ones(5));
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        const Eigen::VectorXd theta = random_in_ball(rng, 4, 4.0);
        const Eigen::VectorXd v = value_from_theta(spec, theta);
        for (int s = 0; s < 5; ++s)
            CHECK(v(s) == doctest::Approx(clipped_greedy(spec, s, theta)).epsilon(1e-15));
    }
}

TEST_CASE("value rows are Lipschitz in theta") {
    const LinearMdpSpec spec = brute::small_random(5, 4, 3, 3, 3);
    double l1 = 0.0;
    for (int i = 0; i < spec.num_pairs(); ++i)
        l1 = std::max(l1, spec.features.row(i).lpNorm<1>());
    Rng rng(12);
    for (int t = 0; t < 500; ++t) {
        const Eigen::VectorXd a = random_in_ball(rng, 3, 2.0 * std::sqrt(3.0));
        const Eigen::VectorXd b = random_in_ball(rng, 3, 2.0 * std::sqrt(3.0));
        const double lhs = (value_from_theta(spec, a) - value_from_theta(spec, b)).cwiseAbs().maxCoeff();
        CHECK(lhs <= (a - b).cwiseAbs().maxCoeff() * l1 + 1e-12);
    }
}

TEST_CASE("value net: squares, canonical indices, projection") {
    const LinearMdpSpec spec = brute::small_random(6, 4, 2, 3, 3);
    const ValueNet net = build_value_net(spec, build_theta_net(3, 2.0 * std::sqrt(3.0), 0.75, 100000, 1, 0));
    CHECK(net.squares == net.values.cwiseProduct(net.values));
    for (int j = 0; j < net.count(); ++j) {
        const int c = net.canonical[static_cast<std::size_t>(j)];
        CHECK(c <= j);
        CHECK(net.values.row(c) == net.values.row(j));
    }
    // first row equal to each canonical row is the canonical row itself
    for (int c : net.distinct)
        for (int j = 0; j < c; ++j)
            CHECK(net.values.row(j) != net.values.row(c));

    const Projection exact = project_to_net(net.row(3), net);
    CHECK(exact.error == 0.0);
    CHECK(exact.index == net.canonical[3]);

    const Projection ones = project_to_net(Eigen::VectorXd::Ones(4), net);
    CHECK(ones.error == 0.0);

    Rng rng(13);
    for (int t = 0; t < 200; ++t) {
        Eigen::VectorXd v(4);
        for (int s = 0; s < 4; ++s)
            v(s) = rng.uniform();
        const Projection p = project_to_net(v, net);
        int best = -1;
        double err = std::numeric_limits<double>::infinity();
        for (int j = 0; j < net.count(); ++j) {
            const double e = (net.row(j) - v).cwiseAbs().maxCoeff();
            if (e < err) {
                err = e;
                best = j;
            }
        }
        CHECK(p.index == best);
        CHECK(p.error == err);
    }
}

TEST_CASE("projection on a 50-row explicit net matches a linear scan") {
    const LinearMdpSpec spec = brute::small_random(7, 3, 2, 2, 3);
    Rng rng(14);
    Eigen::MatrixXd pts(50, 2);
    for (int i = 0; i < 50; ++i)
        pts.row(i) = random_in_ball(rng, 2, 2.0 * std::sqrt(2.0)).transpose();
    const ValueNet net = build_value_net(spec, theta_net_from_points(pts, 2.0 * std::sqrt(2.0)));
    CHECK(net.count() == 50);
    for (int t = 0; t < 100; ++t) {
        Eigen::VectorXd v(3);
        for (int s = 0; s < 3; ++s)
            v(s) = rng.uniform();
        const Projection p = project_to_net(v, net);
        for (int j = 0; j < net.count(); ++j) {
            const double e = (net.row(j) - v).cwiseAbs().maxCoeff();
            CHECK(p.error <= e);
            if (j < p.index)
                CHECK(e > p.error);
        }
    }
}

TEST_CASE("net CSV lists one row per point") {
    const ThetaNet net = build_theta_net(2, 1.0, 0.5, 1000, 0, 0);
    std::ostringstream out;
    write_theta_net_csv(out, net);
    std::istringstream in(out.str());
    std::string line;
    int lines = 0;
    while (std::getline(in, line))
        ++lines;
    CHECK(lines >= net.count());
    CHECK(lines <= net.count() + 1);
}
