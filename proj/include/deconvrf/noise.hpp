#pragma once

#include "deconvrf/rng.hpp"

#include <string>
#include <string_view>

namespace deconvrf {

/// Additive measurement error law. Shipped laws are symmetric and ordinary
/// smooth: |t|^beta |phi(t)| -> B as t -> infinity.
///
///   none                      phi = 1,                     beta = 0, B = 1
///   laplace(sigma)            phi = 1 / (1 + sigma^2 t^2), beta = 2, B = 1/sigma^2
///   symmetric_gamma(k, sigma) phi = (1 + sigma^2 t^2)^-k,  beta = 2k, B = sigma^-2k
///
/// symmetric_gamma is the law of G1 - G2 with G1, G2 iid Gamma(k, sigma);
/// k = 1 is the Laplace law.
class NoiseModel
{
public:
  enum class Tag
  {
    none,
    laplace,
    symmetric_gamma,
  };

  static NoiseModel none();
  static NoiseModel laplace(double sigma);
  static NoiseModel symmetric_gamma(double shape, double sigma);

  /// Builds a model from its text tag. "gaussian"/"normal" is refused with a
  /// ConditionViolation on A3 since its characteristic function decays
  /// faster than any polynomial.
  static NoiseModel from_tag(std::string_view tag, double sigma, double shape = 1.0);

  Tag tag() const { return tag_; }
  std::string tag_name() const;
  double sigma() const { return sigma_; }
  double shape() const { return shape_; }

  double cf(double t) const;
  double density(double x) const;
  double beta() const;
  double limit_constant() const;
  double variance() const;

  bool has_sampler() const { return tag_ != Tag::none; }
  double sample(Engine& rng) const;

  /// sup over a log-spaced grid of t in [t_lo, t_hi] of
  /// | t^beta |phi(t)| - B |.
  double a3_gap(double t_lo, double t_hi, int points = 200) const;

private:
  NoiseModel(Tag tag, double sigma, double shape)
    : tag_(tag)
    , sigma_(sigma)
    , shape_(shape)
  {
  }

  Tag tag_;
  double sigma_;
  double shape_;
};

} // namespace deconvrf
