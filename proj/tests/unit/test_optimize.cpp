#include <cmath>

#include <doctest.h>

#include "dpd/optimize.hpp"
#include "dpd/stats.hpp"

using namespace dpd;
using Eigen::VectorXd;

TEST_SUITE("optimize") {
  TEST_CASE("simplex finds the Rosenbrock minimum") {
    auto rosen = [](const VectorXd& x) { return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2); };
    const auto r = nelder_mead(rosen, VectorXd::Constant(2, -1.2), 1e-14, 20000);
    CHECK(r.converged);
    CHECK(std::abs(r.x[0] - 1) < 1e-4);
    CHECK(std::abs(r.x[1] - 1) < 1e-4);
  }

  TEST_CASE("polish converges on a quadratic and never increases f") {
    Eigen::Matrix3d A;
    A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    const Eigen::Vector3d b(1, -2, 0.5);
    auto f = [&](const VectorXd& x) { return 0.5 * x.dot(A * x) - b.dot(x); };
    auto g = [&](const VectorXd& x) -> VectorXd { return A * x - b; };
    const VectorXd x0 = VectorXd::Constant(3, 2.0);
    const auto p = newton_polish(f, g, x0, 1e-12);
    const VectorXd exact = A.ldlt().solve(b);
    CHECK((p.x - exact).norm() < 1e-8);
    CHECK(p.f <= f(x0));
    const auto q = newton_polish(f, nullptr, x0, 1e-12);
    CHECK((q.x - exact).norm() < 1e-6);
  }

  TEST_CASE("numeric gradient") {
    auto f = [](const VectorXd& x) { return std::sin(x[0]) * std::exp(x[1]); };
    const VectorXd x = (VectorXd(2) << 0.3, -0.2).finished();
    const VectorXd g = numeric_gradient(f, x);
    CHECK(g[0] == doctest::Approx(std::cos(0.3) * std::exp(-0.2)).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(std::sin(0.3) * std::exp(-0.2)).epsilon(1e-8));
  }

  TEST_CASE("multi-start picks the lower basin and breaks ties by distance to the first start") {
    auto two_wells = [](const VectorXd& x) { return std::pow(x[0] * x[0] - 1, 2); };
    OptimizerConfig cfg;
    cfg.f_tol = 1e-12;
    const std::vector<VectorXd> starts = {VectorXd::Constant(1, -0.8), VectorXd::Constant(1, 0.9)};
    const auto r = minimize_multistart(two_wells, nullptr, starts, cfg);
    CHECK(std::abs(r.x[0] + 1) < 1e-6);
    CHECK(r.best_start == 0);

    auto tilted = [](const VectorXd& x) { return std::pow(x[0] * x[0] - 1, 2) + 0.05 * x[0]; };
    const auto t = minimize_multistart(tilted, nullptr, starts, cfg);
    CHECK(t.x[0] < 0);
    CHECK(t.starts_used == 2);
    const std::vector<VectorXd> rev = {VectorXd::Constant(1, 0.9), VectorXd::Constant(1, -0.8)};
    CHECK(minimize_multistart(tilted, nullptr, rev, cfg).x[0] < 0);
  }

  TEST_CASE("dispersed starts are deterministic") {
    const std::vector<VectorXd> anchors = {VectorXd::Zero(3), VectorXd::Constant(3, 10)};
    const auto a = dispersed_starts(anchors, 6, 0.5, 42);
    const auto b = dispersed_starts(anchors, 6, 0.5, 42);
    const auto c = dispersed_starts(anchors, 6, 0.5, 43);
    REQUIRE(a.size() == 6);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
    CHECK(a[0] != c[0]);
  }

  TEST_CASE("type-7 quantiles") {
    const std::vector<double> v = {4, 1, 3, 2};
    CHECK(quantile(v, 0.0) == 1);
    CHECK(quantile(v, 1.0) == 4);
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
    CHECK(median(v) == doctest::Approx(2.5));
    CHECK(median({7.0}) == 7.0);
  }
}
