#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpd/divergence.hpp"

namespace dpd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Fixed n x p covariate matrix; entries must be finite.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  explicit DesignMatrix(Matrix x);

  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index p() const { return x_.cols(); }
  const Matrix& matrix() const { return x_; }
  auto row(Eigen::Index i) const { return x_.row(i); }

 private:
  Matrix x_;
};

enum class MeanKind { Linear, AffineVector, MichaelisMenten };

/// Regression mean mu(x, beta).
///   Linear:          beta0 + beta1 * x        (scalar covariate)
///   AffineVector:    x' beta                   (p covariates, p coefficients)
///   MichaelisMenten: beta1 * x / (beta2 + x)   (scalar covariate, beta2 > 0)
class MeanFunction {
 public:
  explicit MeanFunction(MeanKind kind = MeanKind::Linear) : kind_(kind) {}

  MeanKind kind() const { return kind_; }
  Eigen::Index n_coefficients(Eigen::Index p) const;
  double value(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::Ref<const Vector>& beta) const;
  Vector gradient(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::Ref<const Vector>& beta) const;

 private:
  MeanKind kind_;
};

enum class FamilyKind { NormalNLR, PoissonLogLink, ExponentialLogLink };

const char* family_name(FamilyKind k);

/// Parameter values together with the positivity flags of the model they
/// belong to.
class ParameterVector {
 public:
  ParameterVector() = default;
  ParameterVector(Vector values, std::vector<bool> positive);

  const Vector& values() const { return values_; }
  const std::vector<bool>& positive() const { return positive_; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

  /// Coordinates with log applied to positive components.
  Vector to_unconstrained() const;
  static ParameterVector from_unconstrained(const Vector& z, const std::vector<bool>& positive);
  /// exp applied to positive components, without validation (may give 0 or inf).
  static Vector natural_values(const Vector& z, const std::vector<bool>& positive);

 private:
  Vector values_;
  std::vector<bool> positive_;
};

/// Regression family with its fixed design. Parameters:
///   NormalNLR:          (beta, sigma), sigma > 0 and mean-specific constraints
///   PoissonLogLink:     beta, mean exp(x' beta)
///   ExponentialLogLink: beta, mean exp(x' beta)
class ModelFamily {
 public:
  static ModelFamily normal(MeanFunction mean, DesignMatrix design);
  static ModelFamily poisson(DesignMatrix design);
  static ModelFamily exponential(DesignMatrix design);

  FamilyKind kind() const { return kind_; }
  const DesignMatrix& design() const { return design_; }
  const MeanFunction& mean_function() const { return mean_; }
  Eigen::Index n() const { return design_.n(); }
  Eigen::Index dim() const;
  std::vector<bool> positivity() const;

  /// Validated parameter; throws InvalidParameter.
  ParameterVector parameter(const Vector& theta) const;
  bool is_valid(const Vector& theta) const;

  /// Location of observation i: regression mean (Normal) or exp(x' beta).
  double location(Eigen::Index i, const Vector& theta) const;
  /// Gradient of the location in the coefficient block.
  Vector location_gradient(Eigen::Index i, const Vector& theta) const;
  double sigma(const Vector& theta) const;

  /// Validate a response vector against the family's support.
  void check_response(const Vector& y) const;

 private:
  ModelFamily(FamilyKind k, MeanFunction m, DesignMatrix d) : kind_(k), mean_(m), design_(std::move(d)) {}
  FamilyKind kind_;
  MeanFunction mean_;
  DesignMatrix design_;
};

/// f_{i, theta}.
UnivariateDensity obs_density(const ModelFamily& model, Eigen::Index i, const ParameterVector& theta);
UnivariateDensity obs_density(const ModelFamily& model, Eigen::Index i, const Vector& theta);

/// Score u_i(y; theta) = d/dtheta log f_{i, theta}(y).
Vector score(const ModelFamily& model, Eigen::Index i, const ParameterVector& theta, double y);
Vector score(const ModelFamily& model, Eigen::Index i, const Vector& theta, double y);

/// Draw one response per design row.
Vector sample(const ModelFamily& model, const ParameterVector& theta, std::uint64_t seed);

/// Draw y ~ d with the given generator.
template <class Gen>
double draw(const UnivariateDensity& d, Gen& gen);

/// Design plus optional response read from a CSV with columns x1..xp[,y].
struct DesignData {
  DesignMatrix design;
  std::optional<Vector> y;
};

DesignData read_design_csv(const std::string& path);
void write_design_csv(const std::string& path, const DesignMatrix& design, const std::optional<Vector>& y);

}  // namespace dpd

#include "dpd/detail/draw.hpp"
