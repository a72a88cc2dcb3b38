#include "deconvrf/deconv.hpp"
#include "deconvrf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace deconvrf {

DeconvKernel
DeconvKernel::polynomial(int order)
{
  if (order < 1)
    throw std::invalid_argument("polynomial kernel order must be >= 1");
  return DeconvKernel(Tag::polynomial, order);
}

DeconvKernel
DeconvKernel::from_tag(std::string_view tag, int order)
{
  if (tag == "indicator")
    return indicator();
  if (tag == "polynomial")
    return polynomial(order);
  throw std::invalid_argument("unknown kernel tag '" + std::string(tag) + "'");
}

std::string
DeconvKernel::tag_name() const
{
  return tag_ == Tag::indicator ? "indicator" : "polynomial";
}

std::string
form_name(EstimatorForm form)
{
  return form == EstimatorForm::direct ? "direct" : "cf";
}

// ---------------------------------------------------------------------------
// GnTable

namespace {

Eigen::VectorXd
ratio_weights(const DeconvKernel& kernel, const NoiseModel& noise, double bandwidth,
               const GaussLegendreRule<double>& rule)
{
  Eigen::VectorXd psi(rule.size());
  for (Index k = 0; k < rule.size(); ++k) {
    const double t = rule.nodes(k);
    psi(k) = rule.weights(k) * kernel.cf(t) / noise.cf(t / bandwidth);
  }
  return psi;
}

/// Node count that resolves cos(tz) on [0, 1]. 1024 nodes are accurate to
/// roundoff for |z| up to ~2000; larger |z| gets a proportionally larger rule.
int
nodes_for(double z, int base)
{
  const double need = 0.5 * std::abs(z) + 64.0;
  if (need <= base)
    return base;
  return static_cast<int>(std::ceil(need / 1024.0)) * 1024;
}

} // namespace

GnTable::GnTable(DeconvKernel kernel, NoiseModel noise, double bandwidth, int nodes)
  : kernel_(kernel)
  , noise_(noise)
  , bandwidth_(bandwidth)
{
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  const auto& rule = gauss_legendre<double>(nodes);
  t_ = rule.nodes;
  psi_ = ratio_weights(kernel_, noise_, bandwidth_, rule);
}

double
GnTable::quadrature(double z) const
{
  const int n = nodes_for(z, nodes());
  if (n != nodes()) {
    const auto& rule = gauss_legendre<double>(n);
    const Eigen::VectorXd psi = ratio_weights(kernel_, noise_, bandwidth_, rule);
    return (psi.array() * (rule.nodes.array() * z).cos()).sum() / std::numbers::pi;
  }
  return (psi_.array() * (t_.array() * z).cos()).sum() / std::numbers::pi;
}

double
GnTable::derivative(double z) const
{
  const int n = nodes_for(z, nodes());
  if (n != nodes()) {
    const auto& rule = gauss_legendre<double>(n);
    const Eigen::VectorXd psi = ratio_weights(kernel_, noise_, bandwidth_, rule);
    return -(psi.array() * rule.nodes.array() * (rule.nodes.array() * z).sin()).sum() / std::numbers::pi;
  }
  return -(psi_.array() * t_.array() * (t_.array() * z).sin()).sum() / std::numbers::pi;
}

void
GnTable::tabulate(double z_max, int points)
{
  if (!(z_max > 0.0) || points < 2)
    throw std::invalid_argument("table needs a positive range and at least two points");
  table_step_ = z_max / (points - 1);
  table_max_ = z_max;
  table_g_.resize(points);
  table_dg_.resize(points);
  for (int i = 0; i < points; ++i) {
    const double z = i * table_step_;
    table_g_(i) = quadrature(z);
    table_dg_(i) = derivative(z);
  }
}

double
GnTable::operator()(double z) const
{
  const double a = std::abs(z);
  if (table_step_ <= 0.0 || a >= table_max_)
    return quadrature(z);
  const double pos = a / table_step_;
  const auto i = static_cast<Index>(pos);
  const double s = pos - static_cast<double>(i);
  const double h = table_step_;
  const double s2 = s * s;
  const double s3 = s2 * s;
  // cubic Hermite basis
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * table_g_(i) + h10 * h * table_dg_(i) + h01 * table_g_(i + 1) + h11 * h * table_dg_(i + 1);
}

double
GnTable::sup_bound() const
{
  return psi_.cwiseAbs().sum() / std::numbers::pi;
}

double
gn_eval(const GnTable& table, double z)
{
  return table.quadrature(z);
}

double
gn_eval(const DeconvKernel& kernel, const NoiseModel& noise, double bandwidth, double z)
{
  return GnTable(kernel, noise, bandwidth).quadrature(z);
}

// ---------------------------------------------------------------------------
// estimators

namespace {

void
check_grid(const Eigen::Ref<const Eigen::VectorXd>& grid)
{
  if (grid.size() == 0)
    throw std::invalid_argument("evaluation grid is empty");
  for (Index j = 1; j < grid.size(); ++j) {
    if (!(grid(j) > grid(j - 1)))
      throw std::invalid_argument("evaluation grid must be strictly increasing");
  }
}

} // namespace

Eigen::VectorXd
estimate_direct(const Eigen::Ref<const Eigen::VectorXd>& y, const GnTable& table,
                const Eigen::Ref<const Eigen::VectorXd>& grid)
{
  if (y.size() == 0)
    throw std::invalid_argument("sample is empty");
  const double b = table.bandwidth();
  Eigen::VectorXd out(grid.size());
  for (Index j = 0; j < grid.size(); ++j) {
    double s = 0.0;
    for (Index i = 0; i < y.size(); ++i)
      s += table((grid(j) - y(i)) / b);
    out(j) = s / (static_cast<double>(y.size()) * b);
  }
  return out;
}

DensityEstimate
estimate_direct(const Eigen::Ref<const Eigen::VectorXd>& y, const DeconvKernel& kernel, const NoiseModel& noise,
                double bandwidth, const Eigen::Ref<const Eigen::VectorXd>& grid)
{
  if (y.size() == 0)
    throw std::invalid_argument("sample is empty");
  check_grid(grid);
  GnTable table(kernel, noise, bandwidth);
  if (static_cast<double>(y.size()) * static_cast<double>(grid.size()) > kTabulateThreshold) {
    const double span = std::max(std::abs(grid.maxCoeff() - y.minCoeff()), std::abs(y.maxCoeff() - grid.minCoeff()));
    table.tabulate(span / bandwidth * (1.0 + 1e-9) + 1e-9);
  }

  DensityEstimate est;
  est.grid = grid;
  est.values = estimate_direct(y, table, grid);
  est.n_sites = y.size();
  est.bandwidth = bandwidth;
  est.kernel_tag = kernel.tag_name();
  est.noise_tag = noise.tag_name();
  est.form = EstimatorForm::direct;
  return est;
}

DensityEstimate
estimate_direct(const FieldSample& y, const DeconvKernel& kernel, const NoiseModel& noise, double bandwidth,
                const Eigen::Ref<const Eigen::VectorXd>& grid)
{
  return estimate_direct(y.values, kernel, noise, bandwidth, grid);
}

std::complex<double>
empirical_cf(const Eigen::Ref<const Eigen::VectorXd>& y, double t)
{
  if (y.size() == 0)
    throw std::invalid_argument("sample is empty");
  double re = 0.0;
  double im = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    re += std::cos(t * y(i));
    im += std::sin(t * y(i));
  }
  const double n = static_cast<double>(y.size());
  return {re / n, im / n};
}

std::complex<double>
empirical_cf(const FieldSample& y, double t)
{
  return empirical_cf(y.values, t);
}

DensityEstimate
estimate_cf_form(const Eigen::Ref<const Eigen::VectorXd>& y, const DeconvKernel& kernel, const NoiseModel& noise,
                 double bandwidth, const Eigen::Ref<const Eigen::VectorXd>& grid, int nodes)
{
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  if (y.size() == 0)
    throw std::invalid_argument("sample is empty");
  check_grid(grid);

  // t = s / b with s over the mirrored rule on [-1, 1]
  const auto& rule = gauss_legendre<double>(nodes);
  const Index n = rule.size();
  Eigen::VectorXd s(2 * n);
  Eigen::VectorXd w(2 * n);
  for (Index k = 0; k < n; ++k) {
    s(k) = -rule.nodes(k);
    s(n + k) = rule.nodes(k);
    w(k) = w(n + k) = rule.weights(k);
  }
  Eigen::VectorXcd phi_hat(2 * n);
  Eigen::VectorXd weight(2 * n);
  for (Index k = 0; k < 2 * n; ++k) {
    const double t = s(k) / bandwidth;
    phi_hat(k) = empirical_cf(y, t);
    weight(k) = w(k) * kernel.cf(s(k)) / noise.cf(t);
  }
  const double scale = weight.cwiseAbs().sum() / (2.0 * std::numbers::pi * bandwidth);

  DensityEstimate est;
  est.grid = grid;
  est.values.resize(grid.size());
  for (Index j = 0; j < grid.size(); ++j) {
    std::complex<double> acc = 0.0;
    for (Index k = 0; k < 2 * n; ++k) {
      const double a = -s(k) * grid(j) / bandwidth;
      acc += weight(k) * std::complex<double>(std::cos(a), std::sin(a)) * phi_hat(k);
    }
    acc /= 2.0 * std::numbers::pi * bandwidth;
    if (std::abs(acc.imag()) > 1e-9 * std::max(1.0, scale))
      throw std::logic_error("characteristic-function estimate has a non-negligible imaginary part");
    est.values(j) = acc.real();
  }
  est.n_sites = y.size();
  est.bandwidth = bandwidth;
  est.kernel_tag = kernel.tag_name();
  est.noise_tag = noise.tag_name();
  est.form = EstimatorForm::cf;
  return est;
}

DensityEstimate
estimate_cf_form(const FieldSample& y, const DeconvKernel& kernel, const NoiseModel& noise, double bandwidth,
                 const Eigen::Ref<const Eigen::VectorXd>& grid, int nodes)
{
  return estimate_cf_form(y.values, kernel, noise, bandwidth, grid, nodes);
}

// ---------------------------------------------------------------------------
// expectations

double
convolve_density(const std::function<double(double)>& f_x, const NoiseModel& noise, double y,
                 std::span<const double> x_breaks)
{
  if (!noise.has_sampler())
    return f_x(y);
  const double reach = noise.sigma() * (60.0 + 10.0 * noise.shape());
  std::vector<double> edges{0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 0.1, 0.25, 0.5};
  for (double e = 1.0; e < reach; e += 0.5)
    edges.push_back(e);
  edges.push_back(reach);
  std::vector<double> all;
  for (double e : edges) {
    all.push_back(e);
    all.push_back(-e);
  }
  // f_X(y - u) is kinked where y - u hits a break
  for (double xb : x_breaks) {
    const double u = y - xb;
    if (std::abs(u) < reach)
      all.push_back(u);
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  auto integrand = [&](double u) { return f_x(y - u) * noise.density(u); };
  return integrate_panels<double>(integrand, all, 16);
}

namespace {

/// int over y in [x - L, x + L] of h((x - y)/b) f_Y(y) dy / b, panels a
/// quarter period of cos(z) wide in z units.
struct SmoothedMoments
{
  double m1 = 0.0;
  double m2 = 0.0;
};

// int g_n(u)^k f_Y(x - u b) du for k = 1, 2 in one pass over the nodes.
SmoothedMoments
smoothed_moments(const GnTable& table, const std::function<double(double)>& f_y, double x)
{
  const double b = table.bandwidth();
  const double half_width = 60.0;
  const double panel = std::min(0.5, 0.25 * std::numbers::pi * b);
  const int panels = static_cast<int>(std::ceil(2.0 * half_width / panel));
  const double h = 2.0 * half_width / panels;
  const auto& rule = gauss_legendre<double>(16);
  SmoothedMoments out;
  for (int k = 0; k < panels; ++k) {
    const double a = x - half_width + h * k;
    for (Index q = 0; q < rule.size(); ++q) {
      const double y = a + h * rule.nodes(q);
      const double wf = rule.weights(q) * h * f_y(y);
      const double g = table((x - y) / b);
      out.m1 += wf * g;
      out.m2 += wf * g * g;
    }
  }
  out.m1 /= b;
  out.m2 /= b;
  return out;
}

} // namespace

SingleSiteMoments
single_site_moments(const GnTable& table, const std::function<double(double)>& f_y, double x)
{
  const double b = table.bandwidth();
  const SmoothedMoments m = smoothed_moments(table, f_y, x);
  return {m.m1, std::pow(b, 2.0 * table.noise().beta()) * (m.m2 - b * m.m1 * m.m1)};
}

double
expected_estimate(const GnTable& table, const std::function<double(double)>& f_y, double x)
{
  return smoothed_moments(table, f_y, x).m1;
}

double
finite_bandwidth_variance(const GnTable& table, const std::function<double(double)>& f_y, double x)
{
  const double b = table.bandwidth();
  const double beta = table.noise().beta();
  const SmoothedMoments m = smoothed_moments(table, f_y, x);
  return std::pow(b, 2.0 * beta) * (m.m2 - b * m.m1 * m.m1);
}

double
gn_integral_sq(const GnTable& table, double z_max, double step)
{
  const auto n = static_cast<Index>(std::ceil(z_max / step));
  const double h = z_max / static_cast<double>(n);
  double s = 0.5 * std::pow(table(0.0), 2);
  for (Index i = 1; i < n; ++i)
    s += std::pow(table(i * h), 2);
  s += 0.5 * std::pow(table(z_max), 2);
  return 2.0 * s * h;
}

double
gn_integral_abs(const GnTable& table, double z_max, double step)
{
  const auto n = static_cast<Index>(std::ceil(z_max / step));
  const double h = z_max / static_cast<double>(n);
  double s = 0.5 * std::abs(table(0.0));
  for (Index i = 1; i < n; ++i)
    s += std::abs(table(i * h));
  s += 0.5 * std::abs(table(z_max));
  return 2.0 * s * h;
}

} // namespace deconvrf
