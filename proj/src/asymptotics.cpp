#include "deconvrf/asymptotics.hpp"
#include "deconvrf/errors.hpp"
#include "deconvrf/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace deconvrf {

namespace {

double
beta_fn(double a, double b)
{
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

} // namespace

double
kernel_moment_sq(const DeconvKernel& kernel, double beta)
{
  if (kernel.tag() == DeconvKernel::Tag::indicator)
    return 2.0 / (2.0 * beta + 1.0);
  // 2 int_0^1 t^{2beta} (1-t^2)^{2m} dt = B(beta + 1/2, 2m + 1)
  return beta_fn(beta + 0.5, 2.0 * kernel.order() + 1.0);
}

double
kernel_moment_abs(const DeconvKernel& kernel, double beta)
{
  if (kernel.tag() == DeconvKernel::Tag::indicator)
    return 2.0 / (beta + 1.0);
  return beta_fn((beta + 1.0) / 2.0, kernel.order() + 1.0);
}

double
kernel_moment_sq_quadrature(const DeconvKernel& kernel, double beta, int nodes)
{
  auto f = [&](double t) {
    const double k = kernel.cf(t);
    return std::pow(t, 2.0 * beta) * k * k;
  };
  return 2.0 * integrate<double>(f, 0.0, 1.0, nodes);
}

double
kernel_moment_abs_quadrature(const DeconvKernel& kernel, double beta, int nodes)
{
  auto f = [&](double t) { return std::pow(t, beta) * std::abs(kernel.cf(t)); };
  return 2.0 * integrate<double>(f, 0.0, 1.0, nodes);
}

double
sigma2(double fy_at_x, const DeconvKernel& kernel, double beta, double limit_constant)
{
  if (!(limit_constant > 0.0))
    throw std::invalid_argument("limit constant B must be positive");
  if (!(fy_at_x >= 0.0))
    throw std::invalid_argument("f_Y(x) must be nonnegative");
  return fy_at_x * kernel_moment_sq(kernel, beta) / (2.0 * std::numbers::pi * limit_constant * limit_constant);
}

double
eta(double lambda1, double lambda2, double fy_x, double fy_y, const DeconvKernel& kernel, double beta,
    double limit_constant)
{
  if (std::abs(lambda1 * lambda1 + lambda2 * lambda2 - 1.0) > 1e-12)
    throw std::invalid_argument("eta requires lambda1^2 + lambda2^2 = 1");
  return lambda1 * lambda1 * sigma2(fy_x, kernel, beta, limit_constant) +
         lambda2 * lambda2 * sigma2(fy_y, kernel, beta, limit_constant);
}

double
standardize(double fhat, double efhat, double n_sites, double bandwidth, double beta, double sigma)
{
  if (!(sigma > 0.0))
    throw std::invalid_argument("standardization needs sigma > 0");
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("standardization needs b > 0");
  if (!(n_sites >= 1.0))
    throw std::invalid_argument("standardization needs at least one site");
  return std::sqrt(n_sites * std::pow(bandwidth, 2.0 * beta + 1.0)) * (fhat - efhat) / sigma;
}

double
gn_sq_limit(const DeconvKernel& kernel, const NoiseModel& noise)
{
  const double b = noise.limit_constant();
  return kernel_moment_sq(kernel, noise.beta()) / (2.0 * std::numbers::pi * b * b);
}

double
gn_abs_limit(const DeconvKernel& kernel, const NoiseModel& noise, double z_max, double step)
{
  const auto& rule = gauss_legendre<double>(kGnNodes);
  const double beta = noise.beta();
  Eigen::VectorXd psi(rule.size());
  for (Index k = 0; k < rule.size(); ++k)
    psi(k) = rule.weights(k) * std::pow(rule.nodes(k), beta) * kernel.cf(rule.nodes(k));
  auto h = [&](double z) { return (psi.array() * (rule.nodes.array() * z).cos()).sum() / std::numbers::pi; };

  const auto n = static_cast<Index>(std::ceil(z_max / step));
  const double dz = z_max / static_cast<double>(n);
  double s = 0.5 * std::abs(h(0.0));
  for (Index i = 1; i < n; ++i)
    s += std::abs(h(i * dz));
  s += 0.5 * std::abs(h(z_max));
  return 2.0 * s * dz / noise.limit_constant();
}

// ---------------------------------------------------------------------------

double
BandwidthSchedule::operator()(double n_sites) const
{
  return scale * std::pow(n_sites, -rate);
}

void
BandwidthSchedule::validate(double beta) const
{
  if (!(scale > 0.0))
    throw ConditionViolation("A5", "schedule violates A5: bandwidth scale c must be positive");
  if (!(rate > 0.0))
    throw ConditionViolation("A5", "schedule violates A5: does not satisfy b_n -> 0 (need gamma > 0)");
  const double upper = 1.0 / (2.0 * beta + 1.0);
  if (!(rate < upper)) {
    std::ostringstream os;
    os << "schedule violates A5: does not satisfy |Lambda_n| b_n^{2beta+1} -> infinity (need gamma < 1/(2beta+1) = "
       << upper << ", got " << rate << ")";
    throw ConditionViolation("A5", os.str());
  }
}

// ---------------------------------------------------------------------------

std::int64_t
base_block(double bandwidth, int dimension)
{
  const double v = std::pow(bandwidth, -1.0 / (2.0 * dimension));
  return static_cast<std::int64_t>(std::floor(v * (1.0 + 1e-12)));
}

namespace {

void
check_bandwidth(double b)
{
  if (!(b > 0.0) || !(b < 1.0))
    throw std::invalid_argument("blocking sequences need 0 < b < 1");
}

std::int64_t
integer_part_plus_one(double x)
{
  return static_cast<std::int64_t>(std::floor(x * (1.0 + 1e-12))) + 1;
}

} // namespace

BlockSequence
m_seq_mixing(double bandwidth, const MixingProfile& mixing, int dimension)
{
  check_bandwidth(bandwidth);
  BlockSequence out;
  out.v = base_block(bandwidth, dimension);
  const auto tail = mixing.tail_sum(dimension, out.v, static_cast<double>(dimension));
  out.tail_at_v = tail.value;
  out.truncated = tail.truncated;
  const double inner = std::pow(tail.value / bandwidth, 1.0 / dimension);
  out.m = std::max(out.v, integer_part_plus_one(inner));
  return out;
}

BlockSequence
m_seq_dependence(double bandwidth, const DependenceProfile& profile, int dimension)
{
  check_bandwidth(bandwidth);
  BlockSequence out;
  out.v = base_block(bandwidth, dimension);
  const auto tail = profile.tail_sum(out.v, 2.5 * dimension);
  out.tail_at_v = tail.value;
  out.truncated = tail.truncated;
  const double inner = std::pow(tail.value / (bandwidth * bandwidth * bandwidth), 1.0 / (3.0 * dimension));
  out.m = std::max(out.v, integer_part_plus_one(inner));
  return out;
}

bool
LemmaReport::converges() const
{
  const bool tail_ok = tail_identically_zero || (tail_decreasing && tail_below_threshold);
  return m_grows && volume_decreasing && volume_below_threshold && tail_ok;
}

LemmaReport
check_lemma_limits(const BandwidthSchedule& schedule, const BlockingProfile& profile, int dimension,
                   std::span<const double> n_list, double threshold)
{
  if (n_list.size() < 4)
    throw std::invalid_argument("lemma checks need at least four n values");
  for (std::size_t k = 1; k < n_list.size(); ++k) {
    if (!(n_list[k] > n_list[k - 1]))
      throw std::invalid_argument("lemma check n values must increase");
  }

  LemmaReport report;
  report.threshold = threshold;
  const bool mixing = std::holds_alternative<MixingProfile>(profile);
  report.kind = mixing ? "mixing" : "dependence";
  const double d = dimension;

  for (double n : n_list) {
    LemmaRow row;
    row.n = n;
    row.bandwidth = schedule(n);
    TailSum tail;
    if (mixing) {
      const auto& p = std::get<MixingProfile>(profile);
      row.m = m_seq_mixing(row.bandwidth, p, dimension).m;
      tail = p.tail_sum(dimension, row.m, d);
    } else {
      const auto& p = std::get<DependenceProfile>(profile);
      row.m = m_seq_dependence(row.bandwidth, p, dimension).m;
      tail = p.tail_sum(row.m, 2.5 * d);
    }
    row.block_volume = std::pow(static_cast<double>(row.m), d) * row.bandwidth;
    row.scaled_tail = mixing ? tail.value / row.block_volume : tail.value / std::pow(row.block_volume, 1.5);
    row.truncated = tail.truncated;
    report.rows.push_back(row);
  }

  const auto& first = report.rows.front();
  const auto& last = report.rows.back();
  report.m_grows = last.m > first.m;
  report.volume_decreasing = last.block_volume < first.block_volume;
  report.volume_below_threshold = last.block_volume < threshold * first.block_volume;
  report.tail_identically_zero = true;
  for (const auto& r : report.rows)
    report.tail_identically_zero = report.tail_identically_zero && r.scaled_tail == 0.0;
  report.tail_decreasing = last.scaled_tail < first.scaled_tail;
  report.tail_below_threshold = last.scaled_tail < threshold * first.scaled_tail;
  return report;
}

} // namespace deconvrf
