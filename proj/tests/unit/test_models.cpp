#include <cmath>
#include <filesystem>
#include <random>

#include <doctest.h>

#include "dpd/models.hpp"
#include "dpd/quadrature.hpp"
#include "../support/oracles.hpp"

using namespace dpd;

namespace {

ModelFamily slr(const Vector& x) { return ModelFamily::normal(MeanFunction(MeanKind::Linear), DesignMatrix(x)); }

ModelFamily mm(const Vector& x) {
  return ModelFamily::normal(MeanFunction(MeanKind::MichaelisMenten), DesignMatrix(x));
}

Matrix intercept_design(const Vector& x) {
  Matrix X(x.size(), 2);
  X.col(0).setOnes();
  X.col(1) = x;
  return X;
}

Vector linspace(int n, double lo, double hi) { return Vector::LinSpaced(n, lo, hi); }

double log_density(const ModelFamily& m, Eigen::Index i, const Vector& th, double y) {
  return obs_density(m, i, th).log_pdf(y);
}

void check_score_fd(const ModelFamily& m, const Vector& th, double y, Eigen::Index i) {
  const Vector s = score(m, i, th, y);
  const Vector fd = oracle::fd_gradient([&](const Vector& t) { return log_density(m, i, t, y); }, th, 1e-6);
  for (Eigen::Index j = 0; j < th.size(); ++j)
    CHECK(std::abs(s[j] - fd[j]) <= 1e-5 * std::max(1.0, std::abs(fd[j])));
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("obs_density examples") {
    Vector x(1);
    x << 50;
    const auto d = obs_density(slr(x), 0, Vector((Vector(3) << 35, 1, 1.2).finished()));
    CHECK(d.is_normal());
    CHECK(d.mean() == doctest::Approx(85.0));
    CHECK(d.sd() == doctest::Approx(1.2));

    Vector x2(1);
    x2 << 2;
    CHECK(obs_density(mm(x2), 0, Vector((Vector(3) << 5, 2, 0.5).finished())).mean() == doctest::Approx(2.5));

    Matrix X(1, 2);
    X << 1, 0;
    const auto p = obs_density(ModelFamily::poisson(DesignMatrix(X)), 0, Vector((Vector(2) << 1, 1).finished()));
    CHECK(p.is_poisson());
    CHECK(p.mean() == doctest::Approx(std::exp(1.0)).epsilon(1e-15));

    const auto e = obs_density(ModelFamily::exponential(DesignMatrix(X)), 0, Vector((Vector(2) << 0.5, 2).finished()));
    CHECK(e.is_exponential());
    CHECK(e.mean() == doctest::Approx(std::exp(0.5)));
  }

  TEST_CASE("parameter constraints") {
    const auto m = slr(linspace(5, 0, 1));
    CHECK_THROWS_AS(m.parameter(Vector((Vector(3) << 1, 1, 0).finished())), InvalidParameter);
    CHECK_THROWS_AS(m.parameter(Vector((Vector(2) << 1, 1).finished())), InvalidParameter);
    CHECK_THROWS_AS(m.parameter(Vector((Vector(3) << 1, NAN, 1).finished())), InvalidParameter);
    const auto mmm = mm(linspace(5, 0.1, 2));
    CHECK_THROWS_AS(mmm.parameter(Vector((Vector(3) << 5, -2, 0.5).finished())), InvalidParameter);
    CHECK_THROWS_AS(mmm.parameter(Vector((Vector(3) << 5, 0, 0.5).finished())), InvalidParameter);
    CHECK_NOTHROW(mmm.parameter(Vector((Vector(3) << 5, 2, 0.5).finished())));
    Matrix bad(2, 1);
    bad << 1, INFINITY;
    CHECK_THROWS_AS(DesignMatrix{bad}, InvalidParameter);
    CHECK_THROWS_AS(DesignMatrix{Matrix(0, 1)}, InvalidParameter);
    CHECK_THROWS_AS(ModelFamily::normal(MeanFunction(MeanKind::Linear), DesignMatrix(Matrix::Ones(3, 2))),
                    InvalidParameter);
  }

  TEST_CASE("unconstrained coordinates round-trip") {
    const ParameterVector p((Vector(3) << -2.5, 3, 0.7).finished(), {false, true, true});
    const Vector z = p.to_unconstrained();
    CHECK(z[0] == -2.5);
    CHECK(z[1] == doctest::Approx(std::log(3.0)));
    const auto back = ParameterVector::from_unconstrained(z, p.positive());
    CHECK((back.values() - p.values()).norm() < 1e-14);
  }

  TEST_CASE("score vanishes in the mean block at y = mu") {
    Vector x(1);
    x << 12;
    const auto m = slr(x);
    const Vector th = (Vector(3) << 2, 0.5, 1.3).finished();
    const Vector s = score(m, 0, th, 8.0);
    CHECK(std::abs(s[0]) < 1e-14);
    CHECK(std::abs(s[1]) < 1e-14);
  }

  TEST_CASE("score matches finite differences on random points") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const Vector x = linspace(6, 0.2, 4.0);
    const auto lin = slr(x);
    const auto mic = mm(x);
    const auto poi = ModelFamily::poisson(DesignMatrix(intercept_design(x)));
    const auto exm = ModelFamily::exponential(DesignMatrix(intercept_design(x)));
    for (int k = 0; k < 100; ++k) {
      const Eigen::Index i = k % x.size();
      const Vector tl = (Vector(3) << -3 + 6 * U(gen), -2 + 4 * U(gen), 0.3 + 2 * U(gen)).finished();
      check_score_fd(lin, tl, -5 + 10 * U(gen), i);
      const Vector tm = (Vector(3) << 1 + 5 * U(gen), 0.2 + 3 * U(gen), 0.3 + 2 * U(gen)).finished();
      check_score_fd(mic, tm, 3 * U(gen), i);
      const Vector tp = (Vector(2) << -1 + 2 * U(gen), -0.5 + U(gen)).finished();
      check_score_fd(poi, tp, std::floor(10 * U(gen)), i);
      const Vector te = (Vector(2) << -1 + 2 * U(gen), -0.5 + U(gen)).finished();
      check_score_fd(exm, te, 5 * U(gen), i);
    }
    Matrix X(1, 2);
    X << 1, 0.7;
    check_score_fd(ModelFamily::poisson(DesignMatrix(X)), (Vector(2) << 1, 1).finished(), 3.0, 0);
    check_score_fd(ModelFamily::exponential(DesignMatrix(X)), (Vector(2) << 0.5, 0.5).finished(), 1.4, 0);
  }

  TEST_CASE("score rejects responses outside the support") {
    Matrix X(1, 2);
    X << 1, 1;
    const Vector th = (Vector(2) << 0.1, 0.1).finished();
    CHECK_THROWS_AS(score(ModelFamily::poisson(DesignMatrix(X)), 0, th, 2.5), DomainError);
    CHECK_THROWS_AS(score(ModelFamily::poisson(DesignMatrix(X)), 0, th, -1.0), DomainError);
    CHECK_THROWS_AS(score(ModelFamily::exponential(DesignMatrix(X)), 0, th, -0.1), DomainError);
  }

  TEST_CASE("observation densities are normalised") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const Vector x = linspace(4, 0.5, 3.5);
    const auto lin = slr(x);
    const auto poi = ModelFamily::poisson(DesignMatrix(intercept_design(x)));
    const auto exm = ModelFamily::exponential(DesignMatrix(intercept_design(x)));
    for (int k = 0; k < 20; ++k) {
      const Eigen::Index i = k % x.size();
      const auto dn = obs_density(lin, i, Vector((Vector(3) << 4 * U(gen), U(gen), 0.2 + 3 * U(gen)).finished()));
      const auto qn = integrate([&](double y) { return dn.pdf(y); }, dn.mean() - 20 * dn.sd(),
                                dn.mean() + 20 * dn.sd(), 1e-13);
      CHECK(std::abs(qn.value - 1.0) < 1e-10);
      const auto de = obs_density(exm, i, Vector((Vector(2) << -1 + 2 * U(gen), -0.5 + U(gen)).finished()));
      const auto qe = integrate_pieces([&](double y) { return de.pdf(y); },
                                       {0.0, de.mean(), 10 * de.mean(), 80 * de.mean()}, 1e-13);
      CHECK(std::abs(qe.value - 1.0) < 1e-10);
      const auto dp = obs_density(poi, i, Vector((Vector(2) << -1 + 2 * U(gen), -0.5 + U(gen)).finished()));
      double s = 0.0;
      for (int y = 0; y < 400; ++y) s += dp.pdf(y);
      CHECK(std::abs(s - 1.0) < 1e-14);
    }
  }

  TEST_CASE("sampling is deterministic and has the right moments") {
    const Vector x = linspace(100000, 0, 10);
    const auto lin = slr(x);
    const auto th = lin.parameter((Vector(3) << 35, 1, 1.2).finished());
    const Vector y1 = sample(lin, th, 99);
    const Vector y2 = sample(lin, th, 99);
    CHECK((y1 - y2).norm() == 0.0);
    CHECK((y1 - sample(lin, th, 100)).norm() > 0.0);
    double mean_resid = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) mean_resid += y1[i] - (35 + x[i]);
    mean_resid /= x.size();
    CHECK(std::abs(mean_resid) < 4 * 1.2 / std::sqrt(double(x.size())));

    Matrix X(100000, 2);
    X.col(0).setOnes();
    X.col(1).setConstant(0.5);
    const auto poi = ModelFamily::poisson(DesignMatrix(X));
    const Vector yp = sample(poi, poi.parameter((Vector(2) << 1, 1).finished()), 5);
    const double p = std::exp(1.5);
    CHECK(std::abs(yp.mean() - p) < 4 * std::sqrt(p / X.rows()));
    for (Eigen::Index i = 0; i < 100; ++i) CHECK(yp[i] == std::floor(yp[i]));

    const auto exm = ModelFamily::exponential(DesignMatrix(X));
    const Vector ye = sample(exm, exm.parameter((Vector(2) << 0.5, 0.5).finished()), 5);
    const double pe = std::exp(0.75);
    CHECK(std::abs(ye.mean() - pe) < 4 * pe / std::sqrt(double(X.rows())));
    CHECK(ye.minCoeff() >= 0.0);
  }

  TEST_CASE("design CSV round-trip") {
    const auto dir = std::filesystem::temp_directory_path() / "dpd_models_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "design.csv").string();
    Matrix X(3, 2);
    X << 1, 0.1, 1, 1.0 / 3.0, 1, 2.5e-17;
    const Vector y = (Vector(3) << 4, 0, 7).finished();
    write_design_csv(path, DesignMatrix(X), y);
    const auto back = read_design_csv(path);
    CHECK(back.design.matrix() == X);
    REQUIRE(back.y.has_value());
    CHECK(*back.y == y);
    write_design_csv(path, DesignMatrix(X), std::nullopt);
    CHECK_FALSE(read_design_csv(path).y.has_value());
    CHECK_THROWS(read_design_csv((dir / "missing.csv").string()));
  }

  TEST_CASE("response validation") {
    Matrix X = Matrix::Ones(2, 1);
    CHECK_THROWS_AS(ModelFamily::poisson(DesignMatrix(X)).check_response((Vector(2) << 1, 1.5).finished()),
                    InvalidParameter);
    CHECK_THROWS_AS(ModelFamily::exponential(DesignMatrix(X)).check_response((Vector(2) << 1, -1).finished()),
                    InvalidParameter);
    CHECK_THROWS_AS(ModelFamily::exponential(DesignMatrix(X)).check_response((Vector(3) << 1, 1, 1).finished()),
                    InvalidParameter);
  }
}
