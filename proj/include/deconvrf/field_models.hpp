#pragma once

#include "deconvrf/lattice.hpp"
#include "deconvrf/noise.hpp"
#include "deconvrf/rng.hpp"

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace deconvrf {

/// Mean-zero innovation law. normal and uniform have unit variance;
/// laplace has scale `scale` (variance 2 scale^2).
struct InnovationSpec
{
  enum class Tag
  {
    normal,
    uniform,
    laplace,
  };

  Tag tag = Tag::normal;
  double scale = 1.0;

  static InnovationSpec from_tag(std::string_view tag, double scale = 1.0);
  std::string tag_name() const;

  double sample(Engine& rng) const;
  double variance() const;
  /// ||eps_0||_p for p in {2, 3, 4}; Unsupported otherwise.
  double norm(int p) const;
  /// ||eps_0 - eps'_0||_p for independent copies, p in {2, 4}.
  double difference_norm(int p) const;
  /// Density of a single innovation.
  double density(double x) const;
};

struct LinearCoefficient
{
  Site offset;
  double value = 0.0;
};

/// X_i = sum_s a_s eps_{i-s} over a finite coefficient support.
struct LinearFieldSpec
{
  int dimension = 1;
  std::vector<LinearCoefficient> coefficients;
  InnovationSpec innovations;

  /// The iid field X_i = eps_i.
  static LinearFieldSpec iid(int dimension, InnovationSpec innovations = {});

  /// Throws std::invalid_argument on duplicate offsets or wrong dimension.
  void validate() const;
  double coefficient_sum_sq() const;
  /// sup-norm diameter of the support; 0 for a single offset.
  std::int64_t support_diameter() const;
};

/// Truncation of a_s = C |s|^-r (a_0 = C) to |s| <= radius.
struct TruncatedLinear
{
  LinearFieldSpec spec;
  /// sum_{|s| > radius} a_s^2
  double variance_deficit = 0.0;
};

TruncatedLinear truncate_power_decay(int dimension, double scale, double rate, std::int64_t radius,
                                     InnovationSpec innovations = {});

struct VolterraCoefficient
{
  Site first;
  Site second;
  double value = 0.0;
};

/// X_i = sum a_{s1,s2} eps_{i-s1} eps_{i-s2}, a_{s,s} = 0.
struct VolterraFieldSpec
{
  int dimension = 1;
  std::vector<VolterraCoefficient> coefficients;
  InnovationSpec innovations;

  /// Throws std::invalid_argument on a nonzero diagonal coefficient.
  void validate() const;
  std::int64_t support_diameter() const;
};

/// Field values indexed by the sites of a region.
struct FieldSample
{
  std::shared_ptr<const LatticeRegion> region;
  Eigen::VectorXd values;

  Index size() const { return values.size(); }
};

FieldSample simulate_linear(std::shared_ptr<const LatticeRegion> region, const LinearFieldSpec& spec,
                            std::uint64_t seed);

FieldSample simulate_volterra(std::shared_ptr<const LatticeRegion> region,
                              const VolterraFieldSpec& spec, std::uint64_t seed);

/// Y = X + theta with theta iid from `noise`, drawn on the noise stream of
/// `seed`. The "none" model returns x unchanged.
FieldSample add_noise(const FieldSample& x, const NoiseModel& noise, std::uint64_t seed);

/// Noise field alone, same stream as add_noise.
Eigen::VectorXd sample_noise(const NoiseModel& noise, Index count, std::uint64_t seed);

/// Either field model.
struct FieldSpec
{
  enum class Model
  {
    iid,
    linear,
    volterra,
  };

  Model model = Model::iid;
  LinearFieldSpec linear;
  VolterraFieldSpec volterra;

  int dimension() const;
  std::string model_name() const;
  const InnovationSpec& innovations() const;
  std::int64_t support_diameter() const;
  FieldSample simulate(std::shared_ptr<const LatticeRegion> region, std::uint64_t seed) const;

  /// Marginal density of X_i when it has a closed form: gaussian innovations
  /// (any linear field), or an iid field of any shipped innovation law.
  std::optional<double> marginal_density(double x) const;
  bool has_closed_form_marginal() const;
  /// Points where the closed-form marginal density is not smooth.
  std::vector<double> marginal_breakpoints() const;
};

} // namespace deconvrf
