#pragma once

#include "deconvrf/deconv.hpp"
#include "deconvrf/dependence.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace deconvrf {

// ---------------------------------------------------------------------------
// kernel moments

/// I2(beta) = int_{-1}^{1} |t|^{2 beta} phi_K(t)^2 dt.
double kernel_moment_sq(const DeconvKernel& kernel, double beta);
/// I1(beta) = int_{-1}^{1} |t|^{beta} |phi_K(t)| dt.
double kernel_moment_abs(const DeconvKernel& kernel, double beta);

/// Same integrals by Gauss-Legendre on [0, 1]; independent of the closed forms.
double kernel_moment_sq_quadrature(const DeconvKernel& kernel, double beta, int nodes = 2048);
double kernel_moment_abs_quadrature(const DeconvKernel& kernel, double beta, int nodes = 2048);

// ---------------------------------------------------------------------------
// asymptotic variance

/// Limit of |L| b^{2beta+1} Var f_hat(x):
///   sigma^2(x) = f_Y(x) / (2 pi B^2) * I2(beta).
/// The 1/(2 pi) is the Plancherel constant of g_n's Fourier convention.
double sigma2(double fy_at_x, const DeconvKernel& kernel, double beta, double limit_constant);

/// Variance of lambda1 Z(x) + lambda2 Z(y) in the limit; needs
/// lambda1^2 + lambda2^2 = 1 within 1e-12.
double eta(double lambda1, double lambda2, double fy_x, double fy_y, const DeconvKernel& kernel, double beta,
           double limit_constant);

/// (n b^{2beta+1})^{1/2} (fhat - efhat) / sigma.
double standardize(double fhat, double efhat, double n_sites, double bandwidth, double beta, double sigma);

/// lim b^{2beta} int g_n^2 = (1 / (2 pi B^2)) I2(beta).
double gn_sq_limit(const DeconvKernel& kernel, const NoiseModel& noise);

/// lim b^{beta} int |g_n| = (1/B) int |h(z)| dz with
/// h(z) = (1/2pi) int e^{-itz} |t|^beta phi_K(t) dt, computed by quadrature
/// and a trapezoid in z over [-z_max, z_max].
double gn_abs_limit(const DeconvKernel& kernel, const NoiseModel& noise, double z_max = 400.0,
                    double step = 0.01);

// ---------------------------------------------------------------------------
// bandwidth schedule

/// b_n = c |L_n|^{-gamma}.
struct BandwidthSchedule
{
  double scale = 1.0;
  double rate = 0.125;

  double operator()(double n_sites) const;

  /// Throws ConditionViolation("A5", ...) unless 0 < gamma < 1/(2 beta + 1)
  /// and c > 0, i.e. b_n -> 0, |L| b_n -> inf, |L| b_n^{2beta+1} -> inf.
  void validate(double beta) const;
};

// ---------------------------------------------------------------------------
// blocking sequences

/// v = [b^{-1/(2d)}], integer part with a relative guard of 1e-12 so exact
/// powers are not lost to rounding.
std::int64_t base_block(double bandwidth, int dimension);

struct BlockSequence
{
  std::int64_t m = 0;
  std::int64_t v = 0;
  /// Tail sum at v that entered the max.
  double tail_at_v = 0.0;
  bool truncated = false;
};

/// m = max{v, [(b^{-1} sum_{|i|>v} |i|^d alpha(|i|))^{1/d}] + 1}.
BlockSequence m_seq_mixing(double bandwidth, const MixingProfile& mixing, int dimension);

/// m = max{v, [(b^{-3} sum_{|i|>v} |i|^{5d/2} delta_i)^{1/(3d)}] + 1}.
BlockSequence m_seq_dependence(double bandwidth, const DependenceProfile& profile, int dimension);

struct LemmaRow
{
  double n = 0.0;
  double bandwidth = 0.0;
  std::int64_t m = 0;
  /// m^d b
  double block_volume = 0.0;
  /// tail / (m^d b) for mixing, tail / (m^d b)^{3/2} for dependence
  double scaled_tail = 0.0;
  bool truncated = false;
};

struct LemmaReport
{
  std::string kind;
  std::vector<LemmaRow> rows;
  double threshold = 0.2;
  bool m_grows = false;
  bool volume_decreasing = false;
  bool volume_below_threshold = false;
  bool tail_decreasing = false;
  bool tail_below_threshold = false;
  bool tail_identically_zero = false;

  /// m grows, m^d b and the scaled tail shrink below threshold x first value
  /// (a zero tail counts as converged).
  bool converges() const;
};

using BlockingProfile = std::variant<MixingProfile, DependenceProfile>;

/// Evaluates the three sequences along n_list (>= 4 increasing entries).
LemmaReport check_lemma_limits(const BandwidthSchedule& schedule, const BlockingProfile& profile, int dimension,
                               std::span<const double> n_list, double threshold = 0.2);

} // namespace deconvrf
