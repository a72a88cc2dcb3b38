#pragma once

#include "deconvrf/asymptotics.hpp"
#include "deconvrf/deconv.hpp"
#include "deconvrf/dependence.hpp"
#include "deconvrf/field_models.hpp"
#include "deconvrf/lattice.hpp"
#include "deconvrf/stats.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deconvrf {

using RegionPtr = std::shared_ptr<const LatticeRegion>;

enum class TheoremTag
{
  mixing,
  dependence,
};

std::string theorem_name(TheoremTag tag);

/// Which checks decide the pass/fail outcome of an experiment.
struct VerdictConfig
{
  /// KS normality at every point on the largest region: p > ks_alpha.
  double ks_alpha = 0.01;
  bool check_ks = true;
  /// Off-diagonal correlations below this (default 3/sqrt(R) + 0.05).
  std::optional<double> diagonality_threshold;
  bool check_diagonality = true;
  /// Optional band for the variance-scaling ratio on the largest region.
  std::optional<std::pair<double, double>> variance_ratio_band;
  /// Optional bound on |mean f_hat - f_X| on the largest region.
  std::optional<double> bias_max_gap;
};

/// A complete Monte Carlo experiment description.
struct ExperimentConfig
{
  FieldSpec field;
  NoiseModel noise = NoiseModel::laplace(1.0);
  DeconvKernel kernel = DeconvKernel::polynomial(3);
  std::vector<RegionPtr> regions;
  BandwidthSchedule schedule;
  /// Overrides the schedule with a constant bandwidth. Diagnostics only;
  /// run_experiment refuses it since b_n does not vanish.
  std::optional<double> fixed_bandwidth;
  std::vector<double> points{0.0};
  int replicates = 500;
  std::uint64_t seed = 1;
  TheoremTag theorem = TheoremTag::mixing;
  /// Declared coefficients replacing the ones derived from the field spec.
  std::optional<MixingProfile> mixing_override;
  std::optional<DependenceProfile> dependence_override;
  int dependence_order = 2;
  /// Worker threads; 0 = hardware concurrency.
  int threads = 0;
  /// Sites of the one-off sample used for f_Y when f_X has no closed form.
  Index fy_sample_sites = 10'000'000;
  VerdictConfig verdicts;

  double bandwidth_for(double n_sites) const;
};

/// Throws ConditionViolation for: duplicate points, A5, condition (7) under
/// the mixing tag, condition (8) under the dependence tag; and
/// std::invalid_argument for structural problems (R < 100, no regions).
void validate_experiment(const ExperimentConfig& config);

/// How f_Y(x) was obtained for sigma^2(x).
struct DensitySource
{
  std::string method;  // "convolution" | "sample"
  Eigen::VectorXd values;
  /// Monte Carlo standard error for the sample method, zero otherwise.
  Eigen::VectorXd stderr_;
};

DensitySource observed_density(const ExperimentConfig& config, std::span<const double> points);

/// Raw estimates: replicates x points on one region.
struct ReplicateBlock
{
  Index n_sites = 0;
  double bandwidth = 0.0;
  Eigen::MatrixXd fhat;
  bool tabulated = false;
  double table_check_error = 0.0;
};

/// Simulates all replicates on one region (parallel, deterministic order).
ReplicateBlock simulate_replicates(const ExperimentConfig& config, const LatticeRegion& region,
                                   std::size_t region_index);

struct RegionResult
{
  Index n_sites = 0;
  double bandwidth = 0.0;
  /// replicates x points
  Eigen::MatrixXd fhat;
  Eigen::MatrixXd standardized;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::VectorXd fy;
  Eigen::VectorXd sigma2;
  /// |L| b^{2beta+1} Var(f_hat) / sigma^2
  Eigen::VectorXd variance_ratio;
  /// NaN where f_X has no closed form
  Eigen::VectorXd fx;
  Eigen::VectorXd bias_gap;
  std::vector<KsResult> ks;
  /// KS of (f_hat - mean) / sample sd: shape only, scale removed.
  std::vector<KsResult> ks_studentized;
  Eigen::MatrixXd correlation;
  /// Quadrature centering E f_hat by integrating against f_Y, and the
  /// difference to the replicate mean in standard errors. NaN when f_Y came
  /// from a sample.
  Eigen::VectorXd expected_quadrature;
  Eigen::VectorXd centering_z;
  /// Exact finite-bandwidth single-site variance (independent-site formula)
  /// and the variance ratio against it.
  Eigen::VectorXd finite_bandwidth_sigma2;
  Eigen::VectorXd finite_bandwidth_ratio;
  bool tabulated = false;
  double table_check_error = 0.0;
};

struct DiagonalityVerdict
{
  bool pass = false;
  double threshold = 0.0;
  double max_abs_offdiag = 0.0;
  Eigen::MatrixXd correlation;
};

struct CltReport
{
  TheoremTag theorem = TheoremTag::mixing;
  std::vector<double> points;
  int replicates = 0;
  double beta = 0.0;
  double limit_constant = 1.0;
  std::string density_method;
  std::string admissibility;
  RegionSequenceReport region_sequence;
  std::vector<RegionResult> regions;

  bool ks_pass = true;
  std::optional<DiagonalityVerdict> diagonality;
  std::optional<bool> variance_pass;
  std::optional<bool> bias_pass;

  bool all_pass() const;
};

/// Full CLT experiment: simulate, estimate (direct form), center at the
/// replicate mean, standardize with sigma^2(x), and test.
CltReport run_experiment(const ExperimentConfig& config);

/// Off-diagonal correlation check on the largest region. Throws for k < 2.
DiagonalityVerdict joint_diagonality(const CltReport& report, std::optional<double> threshold = std::nullopt);

struct VarianceScalingPoint
{
  Index n_sites = 0;
  double bandwidth = 0.0;
  double ratio = 0.0;
  double finite_bandwidth_ratio = 0.0;
};

struct VarianceScalingCurve
{
  std::vector<VarianceScalingPoint> points;
  /// |ratio - 1| did not grow over the last step
  bool approaching_one = false;
};

/// Ratio |L| b^{2beta+1} Var(f_hat(x)) / sigma^2(x) at the first evaluation
/// point for each region (>= 3, increasing sizes).
VarianceScalingCurve variance_scaling_curve(const ExperimentConfig& config, std::span<const RegionPtr> regions);

struct BiasPoint
{
  Index n_sites = 0;
  double bandwidth = 0.0;
  double mean_estimate = 0.0;
  double fx = 0.0;
  double gap = 0.0;
};

struct BiasCurve
{
  std::vector<BiasPoint> points;
  bool strictly_decreasing = false;
};

/// Replicate-mean estimate at the first evaluation point against f_X(x).
/// Throws Unsupported when f_X has no closed form.
BiasCurve bias_curve(const ExperimentConfig& config, std::span<const RegionPtr> regions);

} // namespace deconvrf
