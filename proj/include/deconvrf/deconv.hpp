#pragma once

#include "deconvrf/field_models.hpp"
#include "deconvrf/noise.hpp"

#include <Eigen/Core>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>

namespace deconvrf {

/// Band-limited kernel given through its Fourier transform phi_K, which
/// vanishes outside [-1, 1].
///   indicator:  phi_K(t) = 1
///   polynomial: phi_K(t) = (1 - t^2)^m
class DeconvKernel
{
public:
  enum class Tag
  {
    indicator,
    polynomial,
  };

  static DeconvKernel indicator() { return DeconvKernel(Tag::indicator, 0); }
  static DeconvKernel polynomial(int order);
  static DeconvKernel from_tag(std::string_view tag, int order = 3);

  Tag tag() const { return tag_; }
  int order() const { return order_; }
  std::string tag_name() const;

  double cf(double t) const
  {
    const double a = std::abs(t);
    if (a > 1.0)
      return 0.0;
    if (tag_ == Tag::indicator)
      return 1.0;
    double v = 1.0;
    const double base = 1.0 - t * t;
    for (int k = 0; k < order_; ++k)
      v *= base;
    return v;
  }

private:
  DeconvKernel(Tag tag, int order)
    : tag_(tag)
    , order_(order)
  {
  }

  Tag tag_;
  int order_;
};

/// Default node count of the Fourier-side quadrature on [0, 1].
inline constexpr int kGnNodes = 1024;
/// Uniform table size used when g_n is interpolated.
inline constexpr int kGnTablePoints = 4096;
/// Above this many g_n evaluations an estimator call interpolates.
inline constexpr double kTabulateThreshold = 1e7;

/// The deconvolving kernel
///   g_n(z) = (1/2pi) int e^{-itz} phi_K(t) / phi_theta(t/b) dt
///          = (1/pi)  int_0^1 cos(tz) phi_K(t) / phi_theta(t/b) dt
/// evaluated by Gauss-Legendre quadrature on [0, 1]. Both shipped kernels
/// and noise laws are even, so g_n is real and even.
///
/// Optionally holds a uniform table on [0, z_max] of g_n and g_n' for cubic
/// Hermite interpolation; |z| > z_max falls back to quadrature.
class GnTable
{
public:
  GnTable(DeconvKernel kernel, NoiseModel noise, double bandwidth, int nodes = kGnNodes);

  const DeconvKernel& kernel() const { return kernel_; }
  const NoiseModel& noise() const { return noise_; }
  double bandwidth() const { return bandwidth_; }
  int nodes() const { return static_cast<int>(t_.size()); }

  /// Quadrature value, never interpolated.
  double quadrature(double z) const;
  double derivative(double z) const;
  /// Interpolated when a table covers |z|, quadrature otherwise.
  double operator()(double z) const;

  /// Builds the interpolation table on [0, z_max].
  void tabulate(double z_max, int points = kGnTablePoints);
  bool tabulated() const { return table_step_ > 0.0; }
  double table_range() const { return table_max_; }

  /// (1/pi) int_0^1 |phi_K(t) / phi_theta(t/b)| dt, a bound on sup |g_n|.
  double sup_bound() const;

  /// Quadrature weights times phi_K / phi_theta at the nodes.
  const Eigen::VectorXd& nodes_t() const { return t_; }
  const Eigen::VectorXd& weighted_ratio() const { return psi_; }

private:
  DeconvKernel kernel_;
  NoiseModel noise_;
  double bandwidth_;
  Eigen::VectorXd t_;
  Eigen::VectorXd psi_;

  double table_step_ = 0.0;
  double table_max_ = 0.0;
  Eigen::VectorXd table_g_;
  Eigen::VectorXd table_dg_;
};

/// g_n(z) by quadrature. Throws std::invalid_argument for b <= 0.
double gn_eval(const GnTable& table, double z);
double gn_eval(const DeconvKernel& kernel, const NoiseModel& noise, double bandwidth, double z);

enum class EstimatorForm
{
  direct,
  cf,
};

std::string form_name(EstimatorForm form);

struct DensityEstimate
{
  Eigen::VectorXd grid;
  Eigen::VectorXd values;
  Index n_sites = 0;
  double bandwidth = 0.0;
  std::string kernel_tag;
  std::string noise_tag;
  EstimatorForm form = EstimatorForm::direct;
};

/// f_hat(x) = 1/(|L| b) sum_i g_n((x - Y_i)/b) at every grid point.
/// Interpolates g_n once |L| |grid| exceeds kTabulateThreshold.
DensityEstimate estimate_direct(const Eigen::Ref<const Eigen::VectorXd>& y, const DeconvKernel& kernel,
                                const NoiseModel& noise, double bandwidth,
                                const Eigen::Ref<const Eigen::VectorXd>& grid);
DensityEstimate estimate_direct(const FieldSample& y, const DeconvKernel& kernel, const NoiseModel& noise,
                                double bandwidth, const Eigen::Ref<const Eigen::VectorXd>& grid);

/// Same sum with a caller-owned table (possibly tabulated).
Eigen::VectorXd estimate_direct(const Eigen::Ref<const Eigen::VectorXd>& y, const GnTable& table,
                                const Eigen::Ref<const Eigen::VectorXd>& grid);

/// (1/|L|) sum_i exp(i t Y_i).
std::complex<double> empirical_cf(const Eigen::Ref<const Eigen::VectorXd>& y, double t);
std::complex<double> empirical_cf(const FieldSample& y, double t);

/// f_hat(x) = (1/2pi) int e^{-itx} phi_hat(t) phi_K(tb) / phi_theta(t) dt by
/// Gauss-Legendre on [-1/b, 1/b]. The imaginary residue of each value is
/// checked against 1e-9 (scaled by the integrand size).
DensityEstimate estimate_cf_form(const Eigen::Ref<const Eigen::VectorXd>& y, const DeconvKernel& kernel,
                                 const NoiseModel& noise, double bandwidth,
                                 const Eigen::Ref<const Eigen::VectorXd>& grid, int nodes = kGnNodes);
DensityEstimate estimate_cf_form(const FieldSample& y, const DeconvKernel& kernel, const NoiseModel& noise,
                                 double bandwidth, const Eigen::Ref<const Eigen::VectorXd>& grid,
                                 int nodes = kGnNodes);

/// Convolution density f_Y = f_X * f_theta by quadrature, with panels
/// graded towards the noise density's kink/singularity at 0 and split at
/// the points `x_breaks` where f_X is not smooth.
double convolve_density(const std::function<double(double)>& f_x, const NoiseModel& noise, double y,
                        std::span<const double> x_breaks = {});

/// E f_hat(x) = int g_n(u) f_Y(x - u b) du, by quadrature.
double expected_estimate(const GnTable& table, const std::function<double(double)>& f_y, double x);

/// Exact single-site scaled variance b^{2beta+1} Var(g_n((x-Y)/b)/b)
///   = b^{2beta} [ int g_n^2(u) f_Y(x-ub) du - b (int g_n(u) f_Y(x-ub) du)^2 ]
/// for an independent field, by quadrature.
double finite_bandwidth_variance(const GnTable& table, const std::function<double(double)>& f_y, double x);

struct SingleSiteMoments
{
  double expected = 0.0;
  double finite_bandwidth_variance = 0.0;
};

/// Both quantities above from a single pass over the quadrature nodes.
SingleSiteMoments single_site_moments(const GnTable& table, const std::function<double(double)>& f_y, double x);

/// Spatial integrals of g_n over R by trapezoid on [-z_max, z_max].
double gn_integral_sq(const GnTable& table, double z_max, double step);
double gn_integral_abs(const GnTable& table, double z_max, double step);

} // namespace deconvrf
