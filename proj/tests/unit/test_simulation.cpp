#include <cmath>
#include <random>

#include <doctest.h>

#include "dpd/breakdown.hpp"
#include "dpd/random.hpp"
#include "dpd/simulation.hpp"

using namespace dpd;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double e : v) out[k++] = e;
  return out;
}

ModelFamily slr_model() {
  auto gen = make_rng(77);
  std::normal_distribution<double> N(50, 20);
  Vector x(20);
  for (auto& v : x) v = N(gen);
  return ModelFamily::normal(MeanFunction(MeanKind::Linear), DesignMatrix(x));
}

SimulationPlan slr_plan(int reps, std::vector<double> alphas, std::vector<double> eps, std::uint64_t seed) {
  const auto m = slr_model();
  SimulationPlan p{m,
                   m.parameter(vec({35, 1, 1.2})),
                   ContaminationScheme::from_model(m, vec({50, 2, 0.5}), 0.0),
                   std::move(alphas),
                   std::move(eps),
                   reps,
                   seed,
                   OptimizerConfig{},
                   false,
                   1,
                   false};
  p.opt.n_starts = 4;
  return p;
}

/// Standard error of a median from the replicate interquartile range.
double median_se(const CellSummary& c, Eigen::Index j, int reps) {
  const double sd = (c.q75[j] - c.q25[j]) / 1.349;
  return 1.2533 * sd / std::sqrt(double(reps));
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("eps 0 reproduces plain sampling") {
    const auto m = slr_model();
    const auto th0 = m.parameter(vec({35, 1, 1.2}));
    const auto cont = ContaminationScheme::from_model(m, vec({50, 2, 0.5}), 0.0);
    for (std::uint64_t seed : {1ULL, 99ULL}) CHECK(sample_contaminated(m, th0, cont, 0.0, seed) == sample(m, th0, seed));
    CHECK(sample_contaminated(m, th0, cont, 0.3, 5) == sample_contaminated(m, th0, cont, 0.3, 5));
  }

  TEST_CASE("contamination flags follow the mixing fraction") {
    const int n = 100000;
    const auto m = ModelFamily::normal(MeanFunction(MeanKind::Linear), DesignMatrix(Vector::Zero(n)));
    const auto th0 = m.parameter(vec({0, 0, 1}));
    const auto cont = ContaminationScheme::from_model(m, vec({1000, 0, 1}), 0.0);
    for (double eps : {0.3, 0.999}) {
      std::vector<bool> flags;
      const Vector y = sample_contaminated(m, th0, cont, eps, 8, false, &flags);
      int count = 0, far = 0;
      for (int i = 0; i < n; ++i) {
        count += flags[static_cast<std::size_t>(i)];
        far += y[i] > 500;
        CHECK((y[i] > 500) == flags[static_cast<std::size_t>(i)]);
      }
      CHECK(count == far);
      CHECK(std::abs(count / double(n) - eps) < 4 * std::sqrt(eps * (1 - eps) / n));
    }
    std::vector<bool> flags;
    sample_contaminated(m, th0, cont, 0.37, 8, true, &flags);
    CHECK(std::count(flags.begin(), flags.end(), true) == 37000);
  }

  TEST_CASE("contaminated Poisson rows have the contaminant mean") {
    const int n = 20000;
    auto gen = make_rng(3);
    std::uniform_real_distribution<double> U(0, 4);
    Matrix X(n, 2);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1;
      X(i, 1) = U(gen);
    }
    const auto m = ModelFamily::poisson(DesignMatrix(X));
    const auto cont = ContaminationScheme::affine_mean(m, vec({3, 0, 2}), 0.0);
    std::vector<bool> flags;
    const Vector y = sample_contaminated(m, m.parameter(vec({1, 1})), cont, 0.3, 4, false, &flags);
    double sy = 0, sx = 0;
    int k = 0;
    for (int i = 0; i < n; ++i)
      if (flags[static_cast<std::size_t>(i)]) {
        sy += y[i];
        sx += X(i, 1);
        ++k;
      }
    const double xbar = sx / k, target = 3 + 2 * xbar;
    CHECK(std::abs(sy / k - target) < 4 * std::sqrt(target / k));
  }

  TEST_CASE("replicate seeds are shared across alphas and distinct across cells") {
    CHECK(replicate_seed(1, 0, 0) != replicate_seed(1, 0, 1));
    CHECK(replicate_seed(1, 0, 0) != replicate_seed(1, 1, 0));
    CHECK(replicate_seed(1, 0, 0) != replicate_seed(2, 0, 0));
    CHECK(replicate_seed(1, 2, 3) == replicate_seed(1, 2, 3));
  }

  TEST_CASE("simulation is deterministic and its quantiles are ordered") {
    const auto plan = slr_plan(8, {0.0, 0.5}, {0.0, 0.2}, 42);
    const auto a = run_simulation(plan);
    const auto b = run_simulation(plan);
    REQUIRE(a.cells.size() == 4);
    for (std::size_t k = 0; k < a.cells.size(); ++k) {
      CHECK(a.cells[k].median == b.cells[k].median);
      CHECK(a.cells[k].q25 == b.cells[k].q25);
      CHECK(a.cells[k].q75 == b.cells[k].q75);
      for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(a.cells[k].q25[j] <= a.cells[k].median[j]);
        CHECK(a.cells[k].median[j] <= a.cells[k].q75[j]);
      }
      CHECK(a.cells[k].conv_rate > 0.5);
      CHECK_FALSE(a.cells[k].flagged);
    }
    auto threaded = plan;
    threaded.threads = 3;
    const auto c = run_simulation(threaded);
    for (std::size_t k = 0; k < a.cells.size(); ++k) CHECK(a.cells[k].median == c.cells[k].median);
  }

  TEST_CASE("a single replicate collapses the band") {
    const auto s = run_simulation(slr_plan(1, {0.25}, {0.1}, 7));
    const auto& c = s.cells.front();
    CHECK(c.q25 == c.median);
    CHECK(c.q75 == c.median);
  }

  TEST_CASE("uncontaminated coefficient medians sit at the truth") {
    const int reps = 40;
    const auto s = run_simulation(slr_plan(reps, {0.0, 0.25, 1.0}, {0.0}, 11));
    const Vector th0 = vec({35, 1, 1.2});
    for (const auto& c : s.cells) {
      for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(c.median[j] - th0[j]) <= 3 * median_se(c, j, reps));
      // The scale estimate is biased downward at n = 20, more so for larger alpha.
      CHECK(c.median[2] < th0[2]);
      CHECK(c.median[2] > 0.7 * th0[2]);
    }
  }

  TEST_CASE("robust fits resist contamination where small alphas break") {
    const int reps = 30;
    const auto s = run_simulation(slr_plan(reps, {0.01, 0.05, 1.0}, {0.3}, 13));
    const Vector th0 = vec({35, 1, 1.2}), thc = vec({50, 2, 0.5});
    CHECK(in_contaminant_basin(s.at(0, 0).median, th0, thc));
    CHECK_FALSE(in_contaminant_basin(s.at(2, 0).median, th0, thc));
    CHECK(s.at(2, 0).q75[1] - s.at(2, 0).q25[1] < s.at(1, 0).q75[1] - s.at(1, 0).q25[1]);
  }

  TEST_CASE("disjoint base seeds agree within Monte-Carlo error") {
    const int reps = 40;
    const auto a = run_simulation(slr_plan(reps, {0.5}, {0.0, 0.1}, 100));
    const auto b = run_simulation(slr_plan(reps, {0.5}, {0.0, 0.1}, 200));
    for (std::size_t k = 0; k < a.cells.size(); ++k)
      for (Eigen::Index j = 0; j < 3; ++j) {
        const double se = std::hypot(median_se(a.cells[k], j, reps), median_se(b.cells[k], j, reps));
        CHECK(std::abs(a.cells[k].median[j] - b.cells[k].median[j]) < 4 * se);
      }
  }

  TEST_CASE("invalid plans are rejected") {
    auto p = slr_plan(0, {0.5}, {0.1}, 1);
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p = slr_plan(2, {1.5}, {0.1}, 1);
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p = slr_plan(2, {0.5}, {1.0}, 1);
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p = slr_plan(2, {}, {0.1}, 1);
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
  }
}
