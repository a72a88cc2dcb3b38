#include "deconvrf/noise.hpp"
#include "deconvrf/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace deconvrf {

NoiseModel
NoiseModel::none()
{
  return NoiseModel(Tag::none, 0.0, 0.0);
}

NoiseModel
NoiseModel::laplace(double sigma)
{
  if (!(sigma > 0.0))
    throw std::invalid_argument("laplace noise scale must be positive");
  return NoiseModel(Tag::laplace, sigma, 1.0);
}

NoiseModel
NoiseModel::symmetric_gamma(double shape, double sigma)
{
  if (!(sigma > 0.0) || !(shape > 0.0))
    throw std::invalid_argument("symmetric gamma noise needs positive shape and scale");
  return NoiseModel(Tag::symmetric_gamma, sigma, shape);
}

NoiseModel
NoiseModel::from_tag(std::string_view tag, double sigma, double shape)
{
  if (tag == "none")
    return none();
  if (tag == "laplace")
    return laplace(sigma);
  if (tag == "symmetric_gamma")
    return symmetric_gamma(shape, sigma);
  if (tag == "gaussian" || tag == "normal")
    throw ConditionViolation("A3",
                             "noise violates A3: gaussian characteristic function decays faster than "
                             "any polynomial (supersmooth), deconvolution rate is not ordinary smooth");
  throw std::invalid_argument("unknown noise tag '" + std::string(tag) + "'");
}

std::string
NoiseModel::tag_name() const
{
  switch (tag_) {
    case Tag::none:
      return "none";
    case Tag::laplace:
      return "laplace";
    case Tag::symmetric_gamma:
      return "symmetric_gamma";
  }
  return "unknown";
}

double
NoiseModel::cf(double t) const
{
  switch (tag_) {
    case Tag::none:
      return 1.0;
    case Tag::laplace:
      return 1.0 / (1.0 + sigma_ * sigma_ * t * t);
    case Tag::symmetric_gamma:
      return std::pow(1.0 + sigma_ * sigma_ * t * t, -shape_);
  }
  return 1.0;
}

double
NoiseModel::density(double x) const
{
  switch (tag_) {
    case Tag::none:
      return x == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    case Tag::laplace:
      return std::exp(-std::abs(x) / sigma_) / (2.0 * sigma_);
    case Tag::symmetric_gamma: {
      // variance-gamma density with nu = k - 1/2
      const double k = shape_;
      const double ax = std::abs(x);
      if (ax == 0.0) {
        if (k <= 0.5)
          return std::numeric_limits<double>::infinity();
        return std::tgamma(k - 0.5) / (2.0 * std::sqrt(std::numbers::pi) * sigma_ * std::tgamma(k));
      }
      const double nu = k - 0.5;
      const double u = ax / sigma_;
      const double log_pref = (k - 0.5) * std::log(u / 2.0) - std::lgamma(k) -
                              0.5 * std::log(std::numbers::pi) - std::log(sigma_);
      return std::exp(log_pref) * std::cyl_bessel_k(std::abs(nu), u);
    }
  }
  return 0.0;
}

double
NoiseModel::beta() const
{
  switch (tag_) {
    case Tag::none:
      return 0.0;
    case Tag::laplace:
      return 2.0;
    case Tag::symmetric_gamma:
      return 2.0 * shape_;
  }
  return 0.0;
}

double
NoiseModel::limit_constant() const
{
  switch (tag_) {
    case Tag::none:
      return 1.0;
    case Tag::laplace:
      return 1.0 / (sigma_ * sigma_);
    case Tag::symmetric_gamma:
      return std::pow(sigma_, -2.0 * shape_);
  }
  return 1.0;
}

double
NoiseModel::variance() const
{
  switch (tag_) {
    case Tag::none:
      return 0.0;
    case Tag::laplace:
      return 2.0 * sigma_ * sigma_;
    case Tag::symmetric_gamma:
      return 2.0 * shape_ * sigma_ * sigma_;
  }
  return 0.0;
}

double
NoiseModel::sample(Engine& rng) const
{
  switch (tag_) {
    case Tag::none:
      return 0.0;
    case Tag::laplace: {
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      const double v = u(rng);
      const double sgn = v < 0.0 ? -1.0 : 1.0;
      return -sigma_ * sgn * std::log1p(-2.0 * std::abs(v));
    }
    case Tag::symmetric_gamma: {
      std::gamma_distribution<double> g(shape_, sigma_);
      const double a = g(rng);
      const double b = g(rng);
      return a - b;
    }
  }
  return 0.0;
}

double
NoiseModel::a3_gap(double t_lo, double t_hi, int points) const
{
  const double b = limit_constant();
  const double beta_ = beta();
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double f = points > 1 ? static_cast<double>(i) / (points - 1) : 0.0;
    const double t = t_lo * std::pow(t_hi / t_lo, f);
    worst = std::max(worst, std::abs(std::pow(t, beta_) * std::abs(cf(t)) - b));
  }
  return worst;
}

} // namespace deconvrf
