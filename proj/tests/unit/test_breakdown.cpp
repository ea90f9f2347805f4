#include <cmath>
#include <random>

#include <doctest.h>

#include "dpd/breakdown.hpp"
#include "dpd/random.hpp"

using namespace dpd;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double e : v) out[k++] = e;
  return out;
}

ModelFamily poisson_model(int n, std::uint64_t seed) {
  auto gen = make_rng(seed);
  std::uniform_real_distribution<double> U(0, 4);
  Matrix X(n, 2);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = U(gen);
  }
  return ModelFamily::poisson(DesignMatrix(X));
}

std::vector<double> grid(double from, double to, double step) {
  std::vector<double> g;
  for (int k = 0; from + k * step <= to + 1e-12; ++k) g.push_back(from + k * step);
  return g;
}

}  // namespace

TEST_SUITE("breakdown") {
  TEST_CASE("C = 0 gives root 1/(1 + alpha) and bound 1/2") {
    const auto s = solve_bound({0.0, 0.3, 0.4});
    CHECK(s.root == doctest::Approx(1.0 / 1.4).epsilon(1e-11));
    CHECK(s.bound == 0.5);
    for (double a : {0.01, 0.1, 0.5, 1.0})
      for (double l0 : {1e-3, 0.2, 5.0}) CHECK(abp_lower_bound({0.0, l0, a}) == 0.5);
  }

  TEST_CASE("quadratic case at alpha 1") {
    const double l0 = 1.0 / 15.0;
    const auto s = solve_bound({1.0, l0, 1.0});
    const double exact = -l0 + std::sqrt(l0 * l0 + l0);
    CHECK(std::abs(s.root - exact) < 1e-12);
    CHECK(std::abs(s.root - 0.2) < 1e-12);
    CHECK(std::abs(s.residual) <= 1e-10);
  }

  TEST_CASE("root brackets the sign change") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      const BoundProblem p{3 * U(gen), 0.001 + 2 * U(gen), 0.001 + U(gen)};
      const auto s = solve_bound(p);
      // The root is pinned to 1e-12 in x, so the residual scales with the slope of h.
      const double slope = (1 + p.alpha) / p.alpha * (p.C + p.L0);
      CHECK(std::abs(bound_equation(p, s.root)) <= 2e-12 * slope);
      CHECK(bound_equation(p, s.root - 1e-6) < 0.0);
      CHECK(bound_equation(p, s.root + 1e-6) > 0.0);
      CHECK(s.bound == std::min(s.root, 0.5));
    }
  }

  TEST_CASE("bound is monotone in C and L0") {
    for (double a : {0.05, 0.3, 1.0}) {
      double prev = 1.0;
      for (double C : {0.0, 0.1, 0.5, 1.0, 2.0, 10.0}) {
        const double b = abp_lower_bound({C, 0.1, a});
        CHECK(b <= prev + 1e-15);
        prev = b;
      }
      prev = 0.0;
      for (double l0 : {1e-4, 1e-3, 0.01, 0.1, 1.0, 10.0}) {
        const double b = abp_lower_bound({1.0, l0, a});
        CHECK(b >= prev - 1e-15);
        prev = b;
      }
    }
  }

  TEST_CASE("implicit L0 inverts the root") {
    for (double a : {0.01, 0.2, 0.7, 1.0})
      for (double level : {0.05, 0.2, 0.4}) {
        const double l0 = implicit_L0(1.0, a, level);
        CHECK(solve_bound({1.0, l0, a}).root == doctest::Approx(level).epsilon(1e-10));
      }
    CHECK_THROWS_AS(implicit_L0(1.0, 1.0, 0.5), DomainError);
    const auto curve = implicit_curve({0.1, 0.5, 1.0}, 1.0, 0.2);
    REQUIRE(curve.size() == 3);
    for (const auto& r : curve) CHECK(abp_lower_bound({1.0, r.L0, r.alpha}) == doctest::Approx(0.2).epsilon(1e-10));
  }

  TEST_CASE("invalid bound problems") {
    CHECK_THROWS_AS(solve_bound({-1.0, 0.1, 0.5}), DomainError);
    CHECK_THROWS_AS(solve_bound({1.0, 0.0, 0.5}), DomainError);
    CHECK_THROWS_AS(solve_bound({1.0, 0.1, 0.0}), DomainError);
  }

  TEST_CASE("L0 for the normal and exponential families") {
    const auto slr = ModelFamily::normal(MeanFunction(MeanKind::Linear), DesignMatrix(Vector::LinSpaced(7, 0, 60)));
    const double expected = 1.0 / (std::sqrt(2 * M_PI) * std::sqrt(2.0) * 1.2);
    CHECK(compute_L0(slr, slr.parameter(vec({35, 1, 1.2})), 1.0).value == doctest::Approx(expected).epsilon(1e-14));
    CHECK(compute_L0(slr, slr.parameter(vec({-3, 9, 1.2})), 1.0).value == doctest::Approx(expected).epsilon(1e-14));

    Matrix X(4, 2);
    X << 1, 2, 3, 1, 0.5, 0.5, 2, 4;
    const auto exm = ModelFamily::exponential(DesignMatrix(X));
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += 1.0 / (2.0 * std::exp(0.5 * X(i, 0) + 0.5 * X(i, 1)));
    CHECK(compute_L0(exm, exm.parameter(vec({0.5, 0.5})), 1.0).value == doctest::Approx(s / 4).epsilon(1e-13));
  }

  TEST_CASE("Poisson L0 by Monte Carlo agrees with exact sums") {
    const auto pm = poisson_model(50, 1);
    MonteCarloConfig mc, exact;
    mc.seed = 3;
    exact.exact = true;
    const auto th0 = pm.parameter(vec({1, 1}));
    const auto a = compute_L0(pm, th0, 1.0, mc);
    const auto b = compute_L0(pm, th0, 1.0, exact);
    CHECK(a.standard_error > 0.0);
    CHECK(std::abs(a.value - b.value) < 3 * a.standard_error);
  }

  TEST_CASE("Poisson bound sweep") {
    MonteCarloConfig mc;
    mc.seed = 5;
    const std::vector<double> alphas = {0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 1.0};
    const auto small = poisson_bound_sweep(poisson_model(50, 11), ParameterVector(vec({1, 1}), {false, false}),
                                           alphas, mc);
    const auto large = poisson_bound_sweep(poisson_model(500, 12), ParameterVector(vec({1, 1}), {false, false}),
                                           alphas, mc);
    REQUIRE(small.size() == alphas.size());
    for (std::size_t k = 1; k < small.size(); ++k) CHECK(small[k].bound <= small[k - 1].bound + 1e-12);
    CHECK(std::abs(small.back().bound - 0.20) <= 0.03);
    for (std::size_t k = 0; k < small.size(); ++k) CHECK(std::abs(small[k].bound - large[k].bound) <= 0.02);
    CHECK_THROWS_AS(poisson_bound_sweep(ModelFamily::normal(MeanFunction(MeanKind::Linear),
                                                            DesignMatrix(Vector::LinSpaced(3, 0, 1))),
                                        ParameterVector(vec({0, 1, 1}), {false, false, true}), alphas, mc),
                    DomainError);
  }

  TEST_CASE("bound grid rises with alpha at small L0 and with L0 at fixed alpha") {
    const std::vector<double> alphas = {0.05, 0.25, 0.5, 1.0};
    const auto rows = bound_grid(alphas, {1e-3, 0.5}, 1.0);
    REQUIRE(rows.size() == 8);
    for (std::size_t k = 1; k < 4; ++k) CHECK(rows[k].bound > rows[k - 1].bound);
    for (std::size_t k = 0; k < 4; ++k) CHECK(rows[k + 4].bound >= rows[k].bound);
    for (const auto& r : bound_grid(alphas, {0.01, 0.1}, 0.0)) CHECK(r.bound == 0.5);
  }

  TEST_CASE("empirical breakdown point detector") {
    const Vector th0 = vec({35, 1, 1.2}), thc = vec({50, 2, 0.5});
    const auto eps = grid(0.0, 0.5, 0.05);
    std::vector<Vector> flat(eps.size(), th0);
    CHECK_FALSE(empirical_breakdown_point(eps, flat, th0, thc).eps.has_value());

    std::vector<Vector> jump;
    for (double e : eps) jump.push_back(e >= 0.25 - 1e-12 ? thc : th0);
    const auto r = empirical_breakdown_point(eps, jump, th0, thc);
    REQUIRE(r.eps.has_value());
    CHECK(*r.eps == doctest::Approx(0.25));
    CHECK_FALSE(r.ambiguous);

    std::vector<Vector> flip = jump;
    flip[2] = thc;
    const auto f = empirical_breakdown_point(eps, flip, th0, thc);
    CHECK(f.ambiguous);
    REQUIRE(f.candidates.size() == 2);
    CHECK(f.candidates[0] == doctest::Approx(0.10));
    CHECK(f.candidates[1] == doctest::Approx(0.25));

    std::vector<Vector> undone = flat;
    undone[3] = thc;
    const auto u = empirical_breakdown_point(eps, undone, th0, thc);
    CHECK_FALSE(u.eps.has_value());
    CHECK(u.ambiguous);

    std::vector<Vector> escape;
    for (double e : eps) escape.push_back(e >= 0.3 - 1e-12 ? Vector(vec({35, 1, 40})) : th0);
    CHECK(*empirical_breakdown_point(eps, escape, th0, thc).eps == doctest::Approx(0.3));

    std::vector<Vector> late = flat;
    for (std::size_t k = 0; k < late.size(); ++k)
      if (eps[k] > 0.45) late[k] = thc;
    BreakdownOptions opts;
    opts.eps_max = 0.4;
    CHECK_FALSE(empirical_breakdown_point(eps, late, th0, thc, opts).eps.has_value());
    CHECK_THROWS_AS(empirical_breakdown_point({0.1, 0.0}, {th0, th0}, th0, thc), InvalidParameter);
  }

  TEST_CASE("SLR sweep breaks down in the expected window at alpha 0.1") {
    auto gen = make_rng(derive_seed(20230101, {0}));
    std::normal_distribution<double> N(50, 20);
    Vector x(20);
    for (auto& v : x) v = N(gen);
    const auto slr = ModelFamily::normal(MeanFunction(MeanKind::Linear), DesignMatrix(x));
    const Vector th0 = vec({35, 1, 1.2}), thc = vec({50, 2, 0.5});
    OptimizerConfig opt;
    opt.n_starts = 8;
    const auto eps = grid(0.1, 0.4, 0.01);
    const auto table = mdpdf_sweep(slr, slr.parameter(th0), ContaminationScheme::from_model(slr, thc, 0.0), {0.1},
                                   eps, opt, MonteCarloConfig{});
    const auto bp = empirical_breakdown_point(eps, table.curve(0), th0, thc);
    REQUIRE(bp.eps.has_value());
    CHECK(*bp.eps >= 0.18);
    CHECK(*bp.eps <= 0.30);
  }

  TEST_CASE("sweep records per-cell failures instead of aborting") {
    const auto slr = ModelFamily::normal(MeanFunction(MeanKind::Linear), DesignMatrix(Vector::LinSpaced(10, 0, 5)));
    OptimizerConfig opt;
    opt.n_starts = 4;
    const auto table = mdpdf_sweep(slr, slr.parameter(vec({1, 1, 1})),
                                   ContaminationScheme::from_model(slr, vec({5, 2, 0.5}), 0.0), {0.5}, {0.0}, opt,
                                   MonteCarloConfig{});
    REQUIRE(table.cells.size() == 1);
    CHECK(table.cells[0].status.empty());
    CHECK((table.cells[0].theta - vec({1, 1, 1})).norm() < 1e-4);
  }

  TEST_CASE("assumption checks along diverging schedules") {
    std::vector<double> etas;
    for (int m = 1; m <= 6; ++m) etas.push_back(std::pow(10.0, m));
    const auto ex = check_assumptions(UnivariateDensity::exponential(1.0), UnivariateDensity::exponential(1.0),
                                      [](double e) { return UnivariateDensity::exponential(e); }, etas, 0.5);
    CHECK(ex.decreasing);
    CHECK(ex.rows.back().overlap_model_contaminant < 1e-3);
    for (std::size_t k = 1; k < ex.rows.size(); ++k)
      CHECK(ex.rows[k].overlap_model_contaminant < ex.rows[k - 1].overlap_model_contaminant);
    const auto po = check_assumptions(UnivariateDensity::poisson(1.0), UnivariateDensity::poisson(1.0),
                                      [](double e) { return UnivariateDensity::poisson(e); }, etas, 0.5);
    CHECK(po.decreasing);
    CHECK(po.C == 1.0);
    CHECK(po.sup_contaminant_power_norm <= 1.0);
    CHECK(po.rows.back().overlap_model_contaminant < 1e-3);
    const auto same = check_assumptions(UnivariateDensity::exponential(2.0), UnivariateDensity::exponential(2.0),
                                        [](double) { return UnivariateDensity::exponential(2.0); }, etas, 0.5);
    for (const auto& r : same.rows) CHECK(r.overlap_model_contaminant == doctest::Approx(1.0).epsilon(1e-12));
  }
}
