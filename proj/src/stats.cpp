#include "deconvrf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace deconvrf {

double
normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double
kolmogorov_tail(double lambda)
{
  if (lambda <= 0.0)
    return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult
ks_normality(std::span<const double> samples)
{
  if (samples.size() < 8)
    throw std::invalid_argument("KS normality test needs at least 8 samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  return {d, kolmogorov_tail(std::sqrt(n) * d)};
}

double
sample_mean(std::span<const double> x)
{
  if (x.empty())
    throw std::invalid_argument("mean of an empty sample");
  double s = 0.0;
  for (double v : x)
    s += v;
  return s / static_cast<double>(x.size());
}

double
sample_variance(std::span<const double> x)
{
  if (x.size() < 2)
    throw std::invalid_argument("variance needs at least two samples");
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x)
    s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

Eigen::MatrixXd
correlation_matrix(const Eigen::Ref<const Eigen::MatrixXd>& data)
{
  if (data.rows() < 2)
    throw std::invalid_argument("correlation needs at least two rows");
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  Eigen::MatrixXd corr = cov.array() / (sd * sd.transpose()).array();
  corr.diagonal().setOnes();
  // exact symmetry
  corr = (0.5 * (corr + corr.transpose())).eval();
  return corr;
}

} // namespace deconvrf
