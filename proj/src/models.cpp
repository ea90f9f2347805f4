#include "dpd/models.hpp"

#include <cmath>
#include <string>

#include "dpd/errors.hpp"
#include "dpd/random.hpp"

namespace dpd {

DesignMatrix::DesignMatrix(Matrix x) : x_(std::move(x)) {
  if (x_.rows() == 0 || x_.cols() == 0) throw InvalidParameter("design matrix is empty");
  if (!x_.allFinite()) throw InvalidParameter("design matrix has non-finite entries");
}

Eigen::Index MeanFunction::n_coefficients(Eigen::Index p) const {
  return kind_ == MeanKind::AffineVector ? p : 2;
}

double MeanFunction::value(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                           const Eigen::Ref<const Vector>& beta) const {
  switch (kind_) {
    case MeanKind::Linear: return beta[0] + beta[1] * x[0];
    case MeanKind::AffineVector: return x.dot(beta.transpose());
    case MeanKind::MichaelisMenten: return beta[0] * x[0] / (beta[1] + x[0]);
  }
  return 0.0;
}

Vector MeanFunction::gradient(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                              const Eigen::Ref<const Vector>& beta) const {
  switch (kind_) {
    case MeanKind::Linear: return Eigen::Vector2d(1.0, x[0]);
    case MeanKind::AffineVector: return x.transpose();
    case MeanKind::MichaelisMenten: {
      const double d = beta[1] + x[0];
      return Eigen::Vector2d(x[0] / d, -beta[0] * x[0] / (d * d));
    }
  }
  return {};
}

const char* family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::NormalNLR: return "normal";
    case FamilyKind::PoissonLogLink: return "poisson";
    case FamilyKind::ExponentialLogLink: return "exponential";
  }
  return "?";
}

ParameterVector::ParameterVector(Vector values, std::vector<bool> positive)
    : values_(std::move(values)), positive_(std::move(positive)) {
  if (static_cast<Eigen::Index>(positive_.size()) != values_.size())
    throw InvalidParameter("parameter and positivity flags differ in length");
  for (Eigen::Index j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j])) throw InvalidParameter("parameter has non-finite component");
    if (positive_[j] && !(values_[j] > 0.0))
      throw InvalidParameter("component " + std::to_string(j + 1) + " must be > 0");
  }
}

Vector ParameterVector::to_unconstrained() const {
  Vector z = values_;
  for (Eigen::Index j = 0; j < z.size(); ++j)
    if (positive_[j]) z[j] = std::log(z[j]);
  return z;
}

Vector ParameterVector::natural_values(const Vector& z, const std::vector<bool>& positive) {
  Vector v = z;
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (positive[static_cast<std::size_t>(j)]) v[j] = std::exp(v[j]);
  return v;
}

ParameterVector ParameterVector::from_unconstrained(const Vector& z, const std::vector<bool>& positive) {
  return ParameterVector(natural_values(z, positive), positive);
}

ModelFamily ModelFamily::normal(MeanFunction mean, DesignMatrix design) {
  if (mean.kind() != MeanKind::AffineVector && design.p() != 1)
    throw InvalidParameter("linear and Michaelis-Menten means take one covariate column");
  return ModelFamily(FamilyKind::NormalNLR, mean, std::move(design));
}

ModelFamily ModelFamily::poisson(DesignMatrix design) {
  return ModelFamily(FamilyKind::PoissonLogLink, MeanFunction(MeanKind::AffineVector), std::move(design));
}

ModelFamily ModelFamily::exponential(DesignMatrix design) {
  return ModelFamily(FamilyKind::ExponentialLogLink, MeanFunction(MeanKind::AffineVector),
                     std::move(design));
}

Eigen::Index ModelFamily::dim() const {
  const Eigen::Index k = mean_.n_coefficients(design_.p());
  return kind_ == FamilyKind::NormalNLR ? k + 1 : k;
}

std::vector<bool> ModelFamily::positivity() const {
  std::vector<bool> pos(static_cast<std::size_t>(dim()), false);
  if (kind_ == FamilyKind::NormalNLR) {
    pos.back() = true;
    if (mean_.kind() == MeanKind::MichaelisMenten) pos[1] = true;
  }
  return pos;
}

bool ModelFamily::is_valid(const Vector& theta) const {
  if (theta.size() != dim() || !theta.allFinite()) return false;
  const auto pos = positivity();
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (pos[j] && !(theta[j] > 0.0)) return false;
  for (Eigen::Index i = 0; i < n(); ++i) {
    const double m = location(i, theta);
    if (!std::isfinite(m)) return false;
    if (kind_ != FamilyKind::NormalNLR && !(m > 0.0)) return false;
  }
  return true;
}

ParameterVector ModelFamily::parameter(const Vector& theta) const {
  if (theta.size() != dim())
    throw InvalidParameter("expected " + std::to_string(dim()) + " parameters, got " +
                           std::to_string(theta.size()));
  ParameterVector pv(theta, positivity());
  if (!is_valid(theta)) throw InvalidParameter("parameter gives a non-finite or invalid mean");
  return pv;
}

double ModelFamily::location(Eigen::Index i, const Vector& theta) const {
  const Eigen::Index k = mean_.n_coefficients(design_.p());
  const double eta = mean_.value(design_.row(i), theta.head(k));
  return kind_ == FamilyKind::NormalNLR ? eta : std::exp(eta);
}

Vector ModelFamily::location_gradient(Eigen::Index i, const Vector& theta) const {
  const Eigen::Index k = mean_.n_coefficients(design_.p());
  Vector g = mean_.gradient(design_.row(i), theta.head(k));
  if (kind_ != FamilyKind::NormalNLR) g *= location(i, theta);
  return g;
}

double ModelFamily::sigma(const Vector& theta) const {
  if (kind_ != FamilyKind::NormalNLR) throw DomainError("sigma is defined for the normal family only");
  return theta[theta.size() - 1];
}

void ModelFamily::check_response(const Vector& y) const {
  if (y.size() != n())
    throw InvalidParameter("response has " + std::to_string(y.size()) + " entries, design has " +
                           std::to_string(n()) + " rows");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y[i];
    if (!std::isfinite(v)) throw InvalidParameter("response has non-finite entries");
    if (kind_ == FamilyKind::PoissonLogLink && (v < 0.0 || v != std::floor(v)))
      throw InvalidParameter("poisson responses must be non-negative integers");
    if (kind_ == FamilyKind::ExponentialLogLink && v < 0.0)
      throw InvalidParameter("exponential responses must be non-negative");
  }
}

UnivariateDensity obs_density(const ModelFamily& model, Eigen::Index i, const Vector& theta) {
  const double m = model.location(i, theta);
  switch (model.kind()) {
    case FamilyKind::NormalNLR: return UnivariateDensity::normal(m, model.sigma(theta));
    case FamilyKind::PoissonLogLink: return UnivariateDensity::poisson(m);
    case FamilyKind::ExponentialLogLink: return UnivariateDensity::exponential(m);
  }
  throw DomainError("unknown family");
}

UnivariateDensity obs_density(const ModelFamily& model, Eigen::Index i, const ParameterVector& theta) {
  return obs_density(model, i, theta.values());
}

Vector score(const ModelFamily& model, Eigen::Index i, const Vector& theta, double y) {
  if (model.kind() == FamilyKind::PoissonLogLink && (y < 0.0 || y != std::floor(y)))
    throw DomainError("poisson score needs a non-negative integer response");
  if (model.kind() == FamilyKind::ExponentialLogLink && y < 0.0)
    throw DomainError("exponential score needs a non-negative response");
  const double m = model.location(i, theta);
  const auto x = model.design().row(i);
  switch (model.kind()) {
    case FamilyKind::NormalNLR: {
      const double s = model.sigma(theta);
      const Eigen::Index k = theta.size() - 1;
      Vector u(theta.size());
      const double r = y - m;
      u.head(k) = (r / (s * s)) * model.location_gradient(i, theta);
      u[k] = (r * r / (s * s) - 1.0) / s;
      return u;
    }
    case FamilyKind::PoissonLogLink: return (y - m) * x.transpose();
    case FamilyKind::ExponentialLogLink: return (y / m - 1.0) * x.transpose();
  }
  return {};
}

Vector score(const ModelFamily& model, Eigen::Index i, const ParameterVector& theta, double y) {
  return score(model, i, theta.values(), y);
}

Vector sample(const ModelFamily& model, const ParameterVector& theta, std::uint64_t seed) {
  auto gen = make_rng(seed);
  Vector y(model.n());
  for (Eigen::Index i = 0; i < model.n(); ++i) y[i] = draw(obs_density(model, i, theta), gen);
  return y;
}

}  // namespace dpd
