#pragma once

#include <Eigen/Core>
#include <span>

namespace deconvrf {

double normal_cdf(double x);

/// Asymptotic Kolmogorov tail P(K > lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2),
/// first 100 terms, clamped to [0, 1].
double kolmogorov_tail(double lambda);

struct KsResult
{
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample KS test against N(0, 1). The p-value is the asymptotic
/// Kolmogorov tail at sqrt(n) D (no finite-n correction). Needs >= 8 samples.
KsResult ks_normality(std::span<const double> samples);

double sample_mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> x);

/// Pearson correlation matrix of the columns of `data` (rows = replicates).
Eigen::MatrixXd correlation_matrix(const Eigen::Ref<const Eigen::MatrixXd>& data);

} // namespace deconvrf
