#include "deconvrf/mc_harness.hpp"

#include "deconvrf/errors.hpp"
#include "deconvrf/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace deconvrf {

namespace {

// Replicate workloads above this many g_n evaluations use the Hermite table.
constexpr double kHarnessTabulateThreshold = 1e6;
// Sites per chunk of the f_Y mega-sample.
constexpr Index kSampleChunkSites = 1'000'000;
constexpr std::uint64_t kDensitySampleStream = 0x6d656761ULL;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string
format_number(double v)
{
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void
validate_structure(const ExperimentConfig& config)
{
  if (config.regions.empty())
    throw std::invalid_argument("experiment needs at least one region");
  const int d = config.field.dimension();
  for (const auto& r : config.regions) {
    if (!r)
      throw std::invalid_argument("null region in experiment");
    if (r->dimension() != d)
      throw std::invalid_argument("region dimension does not match the field dimension");
  }
  if (config.points.empty())
    throw std::invalid_argument("experiment needs at least one evaluation point");
  for (std::size_t i = 0; i < config.points.size(); ++i) {
    if (!std::isfinite(config.points[i]))
      throw std::invalid_argument("evaluation points must be finite");
    for (std::size_t j = 0; j < i; ++j)
      if (config.points[i] == config.points[j])
        throw ConditionViolation("distinct points", "evaluation points must be pairwise distinct: x = " +
                                                      format_number(config.points[i]) + " repeated");
  }
  if (config.replicates < 100)
    throw std::invalid_argument("replicate count must be at least 100");
  if (config.fixed_bandwidth && !(*config.fixed_bandwidth > 0.0))
    throw std::invalid_argument("fixed bandwidth must be positive");
  if (config.threads < 0)
    throw std::invalid_argument("thread count must be non-negative");
}

std::string
check_admissibility(const ExperimentConfig& config)
{
  const int d = config.field.dimension();
  if (config.theorem == TheoremTag::mixing) {
    const MixingProfile profile =
      config.mixing_override ? *config.mixing_override : mixing_profile_of(config.field);
    const SummabilityVerdict v = check_mixing_summability(profile, d);
    if (!v.finite)
      throw ConditionViolation("condition (7)", "mixing coefficients violate condition (7): " + v.reason);
    return "condition (7): " + v.reason;
  }
  const DependenceProfile profile = config.dependence_override
                                      ? *config.dependence_override
                                      : dependence_profile_of(config.field, config.dependence_order);
  const SummabilityVerdict v = check_dependence_summability(profile, d, 10'000);
  if (!v.finite)
    throw ConditionViolation("condition (8)", "dependence measure violates condition (8): " + v.reason);
  return "condition (8): " + v.reason;
}

int
worker_count(int requested, int jobs)
{
  int n = requested;
  if (n <= 0)
    n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(n, jobs));
}

// Runs body(i) for i in [0, jobs) on up to `threads` workers. The first
// exception is rethrown after all workers stop.
template <class F>
void
parallel_for(int jobs, int threads, F&& body)
{
  const int workers = worker_count(threads, jobs);
  if (workers == 1) {
    for (int i = 0; i < jobs; ++i)
      body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= jobs || failed.load())
          return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error)
            error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

std::uint64_t
replicate_seed(std::uint64_t base, std::size_t region_index, int replicate)
{
  return derive_seed(derive_seed(base, region_index), static_cast<std::uint64_t>(replicate));
}

Eigen::VectorXd
observe(const ExperimentConfig& config, const std::shared_ptr<const LatticeRegion>& region, std::uint64_t seed)
{
  const FieldSample x = config.field.simulate(region, seed);
  return add_noise(x, config.noise, seed).values;
}

std::function<double(double)>
closed_form_fy(const ExperimentConfig& config)
{
  const FieldSpec field = config.field;
  const NoiseModel noise = config.noise;
  if (noise.tag() == NoiseModel::Tag::none)
    return [field](double y) { return *field.marginal_density(y); };
  const std::vector<double> breaks = field.marginal_breakpoints();
  return [field, noise, breaks](double y) {
    return convolve_density([&field](double x) { return *field.marginal_density(x); }, noise, y, breaks);
  };
}

struct PointDiagnostics
{
  Eigen::VectorXd expected;
  Eigen::VectorXd fb_sigma2;
};

PointDiagnostics
quadrature_diagnostics(const ExperimentConfig& config, const GnTable& table)
{
  const Index k = static_cast<Index>(config.points.size());
  PointDiagnostics out{Eigen::VectorXd::Constant(k, kNaN), Eigen::VectorXd::Constant(k, kNaN)};
  if (!config.field.has_closed_form_marginal())
    return out;
  const auto fy = closed_form_fy(config);
  for (Index j = 0; j < k; ++j) {
    const double x = config.points[static_cast<std::size_t>(j)];
    const SingleSiteMoments m = single_site_moments(table, fy, x);
    out.expected[j] = m.expected;
    out.fb_sigma2[j] = m.finite_bandwidth_variance;
  }
  return out;
}

} // namespace

std::string
theorem_name(TheoremTag tag)
{
  return tag == TheoremTag::mixing ? "mixing" : "dependence";
}

double
ExperimentConfig::bandwidth_for(double n_sites) const
{
  return fixed_bandwidth ? *fixed_bandwidth : schedule(n_sites);
}

void
validate_experiment(const ExperimentConfig& config)
{
  validate_structure(config);
  if (config.fixed_bandwidth)
    throw ConditionViolation("A5", "fixed bandwidth violates A5: b_n does not tend to 0");
  config.schedule.validate(config.noise.beta());
  check_admissibility(config);
}

DensitySource
observed_density(const ExperimentConfig& config, std::span<const double> points)
{
  const Index k = static_cast<Index>(points.size());
  DensitySource out;
  out.values.resize(k);
  out.stderr_ = Eigen::VectorXd::Zero(k);
  if (config.field.has_closed_form_marginal()) {
    out.method = "convolution";
    const auto fy = closed_form_fy(config);
    for (Index j = 0; j < k; ++j)
      out.values[j] = fy(points[static_cast<std::size_t>(j)]);
    return out;
  }

  // Gaussian KDE over a large sample made of independent chunks.
  out.method = "sample";
  const int d = config.field.dimension();
  const Index total = std::max<Index>(config.fy_sample_sites, 1000);
  const auto side = static_cast<std::int64_t>(
    std::floor(std::pow(static_cast<double>(std::min(total, kSampleChunkSites)), 1.0 / d) + 1e-9));
  const std::vector<std::int64_t> sides(static_cast<std::size_t>(d), std::max<std::int64_t>(side, 1));
  const auto chunk = std::make_shared<const LatticeRegion>(make_rect_region(sides));
  const Index chunks = (total + chunk->size() - 1) / chunk->size();

  std::vector<Eigen::VectorXd> samples(static_cast<std::size_t>(chunks));
  parallel_for(static_cast<int>(chunks), config.threads, [&](int c) {
    samples[static_cast<std::size_t>(c)] =
      observe(config, chunk, derive_seed(derive_seed(config.seed, kDensitySampleStream), c));
  });
  double n = 0.0, s1 = 0.0, s2 = 0.0;
  for (const auto& v : samples) {
    n += static_cast<double>(v.size());
    s1 += v.sum();
    s2 += v.squaredNorm();
  }
  const double mean = s1 / n;
  const double sd = std::sqrt(std::max(s2 / n - mean * mean, 1e-300));
  const double h = 1.06 * sd * std::pow(n, -0.2);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (Index j = 0; j < k; ++j) {
    const double x = points[static_cast<std::size_t>(j)];
    double acc = 0.0;
    for (const auto& v : samples)
      for (Index i = 0; i < v.size(); ++i) {
        const double u = (x - v[i]) / h;
        acc += std::exp(-0.5 * u * u);
      }
    out.values[j] = acc * norm;
    // Gaussian roughness R(K) = 1/(2 sqrt(pi)); iid approximation.
    out.stderr_[j] = std::sqrt(out.values[j] / (2.0 * std::sqrt(std::numbers::pi) * n * h));
  }
  return out;
}

ReplicateBlock
simulate_replicates(const ExperimentConfig& config, const LatticeRegion& region, std::size_t region_index)
{
  const auto shared = std::make_shared<const LatticeRegion>(region);
  const Index n = shared->size();
  const double b = config.bandwidth_for(static_cast<double>(n));
  const int reps = config.replicates;
  const Eigen::Map<const Eigen::VectorXd> grid(config.points.data(), static_cast<Index>(config.points.size()));

  ReplicateBlock out;
  out.n_sites = n;
  out.bandwidth = b;
  out.fhat.resize(reps, grid.size());

  GnTable table(config.kernel, config.noise, b);
  const double work = static_cast<double>(reps) * static_cast<double>(n) * static_cast<double>(grid.size());
  if (work > kHarnessTabulateThreshold) {
    // Range from a pilot replicate; values beyond it fall back to quadrature.
    const Eigen::VectorXd pilot = observe(config, shared, replicate_seed(config.seed, region_index, 0));
    double reach = 0.0;
    for (Index j = 0; j < grid.size(); ++j)
      reach = std::max(reach, (pilot.array() - grid[j]).abs().maxCoeff());
    const double z_max = 1.5 * reach / b + 1.0;
    table.tabulate(z_max);
    out.tabulated = true;
    double err = 0.0;
    for (int q = 0; q <= 64; ++q) {
      const double z = z_max * (q + 0.37) / 65.0;
      err = std::max(err, std::abs(table(z) - table.quadrature(z)));
    }
    out.table_check_error = err;
  }

  parallel_for(reps, config.threads, [&](int r) {
    const Eigen::VectorXd y = observe(config, shared, replicate_seed(config.seed, region_index, r));
    out.fhat.row(r) = estimate_direct(y, table, grid).transpose();
  });
  if (!out.fhat.allFinite())
    throw std::runtime_error("non-finite density estimate in replicate run");
  return out;
}

bool
CltReport::all_pass() const
{
  return ks_pass && (!diagonality || diagonality->pass) && variance_pass.value_or(true) && bias_pass.value_or(true);
}

CltReport
run_experiment(const ExperimentConfig& config)
{
  validate_structure(config);
  if (config.fixed_bandwidth)
    throw ConditionViolation("A5", "fixed bandwidth violates A5: b_n does not tend to 0");
  const double beta = config.noise.beta();
  config.schedule.validate(beta);

  CltReport report;
  report.admissibility = check_admissibility(config);
  report.theorem = config.theorem;
  report.points = config.points;
  report.replicates = config.replicates;
  report.beta = beta;
  report.limit_constant = config.noise.limit_constant();

  std::vector<LatticeRegion> copies;
  for (const auto& r : config.regions)
    copies.push_back(*r);
  report.region_sequence = check_region_sequence(copies);

  const DensitySource fy = observed_density(config, config.points);
  report.density_method = fy.method;
  const Index k = static_cast<Index>(config.points.size());
  const double R = config.replicates;

  Eigen::VectorXd sig2(k);
  for (Index j = 0; j < k; ++j)
    sig2[j] = sigma2(fy.values[j], config.kernel, beta, report.limit_constant);

  Eigen::VectorXd fx = Eigen::VectorXd::Constant(k, kNaN);
  if (config.field.has_closed_form_marginal())
    for (Index j = 0; j < k; ++j)
      fx[j] = *config.field.marginal_density(config.points[static_cast<std::size_t>(j)]);

  for (std::size_t ri = 0; ri < config.regions.size(); ++ri) {
    ReplicateBlock block = simulate_replicates(config, *config.regions[ri], ri);
    RegionResult res;
    res.n_sites = block.n_sites;
    res.bandwidth = block.bandwidth;
    res.tabulated = block.tabulated;
    res.table_check_error = block.table_check_error;
    res.fhat = std::move(block.fhat);
    res.fy = fy.values;
    res.sigma2 = sig2;
    res.fx = fx;
    res.mean = res.fhat.colwise().mean().transpose();
    res.variance.resize(k);
    res.standardized.resize(res.fhat.rows(), k);
    res.variance_ratio.resize(k);
    res.bias_gap.resize(k);
    const double n = static_cast<double>(res.n_sites);
    const double scale = n * std::pow(res.bandwidth, 2.0 * beta + 1.0);
    for (Index j = 0; j < k; ++j) {
      const auto col = res.fhat.col(j);
      res.variance[j] = (col.array() - res.mean[j]).square().sum() / (R - 1.0);
      const double sigma = std::sqrt(sig2[j]);
      for (Index r = 0; r < col.size(); ++r)
        res.standardized(r, j) = standardize(col[r], res.mean[j], n, res.bandwidth, beta, sigma);
      res.variance_ratio[j] = scale * res.variance[j] / sig2[j];
      res.bias_gap[j] = std::abs(res.mean[j] - fx[j]);
      const Eigen::VectorXd z = res.standardized.col(j);
      res.ks.push_back(ks_normality(std::span<const double>(z.data(), static_cast<std::size_t>(z.size()))));
      const Eigen::VectorXd t = (col.array() - res.mean[j]) / std::sqrt(res.variance[j]);
      res.ks_studentized.push_back(
        ks_normality(std::span<const double>(t.data(), static_cast<std::size_t>(t.size()))));
    }
    res.correlation = correlation_matrix(res.standardized);

    const GnTable table(config.kernel, config.noise, res.bandwidth);
    const PointDiagnostics diag = quadrature_diagnostics(config, table);
    res.expected_quadrature = diag.expected;
    res.finite_bandwidth_sigma2 = diag.fb_sigma2;
    res.centering_z.resize(k);
    res.finite_bandwidth_ratio.resize(k);
    for (Index j = 0; j < k; ++j) {
      res.centering_z[j] = (res.mean[j] - diag.expected[j]) / std::sqrt(res.variance[j] / R);
      res.finite_bandwidth_ratio[j] = scale * res.variance[j] / diag.fb_sigma2[j];
    }
    report.regions.push_back(std::move(res));
  }

  const RegionResult& last = report.regions.back();
  const VerdictConfig& v = config.verdicts;
  if (v.check_ks)
    for (const auto& ks : last.ks)
      report.ks_pass = report.ks_pass && ks.p_value > v.ks_alpha;
  if (v.check_diagonality && k >= 2)
    report.diagonality = joint_diagonality(report, v.diagonality_threshold);
  if (v.variance_ratio_band) {
    const auto [lo, hi] = *v.variance_ratio_band;
    report.variance_pass = ((last.variance_ratio.array() >= lo) && (last.variance_ratio.array() <= hi)).all();
  }
  if (v.bias_max_gap) {
    if (!config.field.has_closed_form_marginal())
      throw Unsupported("bias verdict needs a closed-form marginal density of X");
    report.bias_pass = (last.bias_gap.array() < *v.bias_max_gap).all();
  }
  return report;
}

DiagonalityVerdict
joint_diagonality(const CltReport& report, std::optional<double> threshold)
{
  if (report.points.size() < 2)
    throw std::invalid_argument("joint diagonality needs at least two evaluation points");
  if (report.regions.empty())
    throw std::invalid_argument("report holds no region results");
  DiagonalityVerdict out;
  out.threshold = threshold ? *threshold : 3.0 / std::sqrt(static_cast<double>(report.replicates)) + 0.05;
  out.correlation = report.regions.back().correlation;
  for (Index i = 0; i < out.correlation.rows(); ++i)
    for (Index j = i + 1; j < out.correlation.cols(); ++j)
      out.max_abs_offdiag = std::max(out.max_abs_offdiag, std::abs(out.correlation(i, j)));
  out.pass = out.max_abs_offdiag < out.threshold;
  return out;
}

VarianceScalingCurve
variance_scaling_curve(const ExperimentConfig& config, std::span<const RegionPtr> regions)
{
  if (regions.size() < 3)
    throw std::invalid_argument("variance scaling needs at least three regions");
  for (std::size_t i = 1; i < regions.size(); ++i)
    if (regions[i]->size() <= regions[i - 1]->size())
      throw std::invalid_argument("variance scaling regions must have increasing sizes");
  ExperimentConfig cfg = config;
  cfg.regions.assign(regions.begin(), regions.end());
  cfg.points.assign(1, config.points.empty() ? 0.0 : config.points.front());
  validate_structure(cfg);

  const double beta = cfg.noise.beta();
  const DensitySource fy = observed_density(cfg, cfg.points);
  const double s2 = sigma2(fy.values[0], cfg.kernel, beta, cfg.noise.limit_constant());
  if (!(s2 > 0.0))
    throw std::invalid_argument("sigma must be positive");

  VarianceScalingCurve out;
  for (std::size_t ri = 0; ri < regions.size(); ++ri) {
    const ReplicateBlock block = simulate_replicates(cfg, *regions[ri], ri);
    const auto col = block.fhat.col(0);
    const double var = (col.array() - col.mean()).square().sum() / (col.size() - 1.0);
    const double scale = static_cast<double>(block.n_sites) * std::pow(block.bandwidth, 2.0 * beta + 1.0);
    VarianceScalingPoint p;
    p.n_sites = block.n_sites;
    p.bandwidth = block.bandwidth;
    p.ratio = scale * var / s2;
    p.finite_bandwidth_ratio = kNaN;
    if (cfg.field.has_closed_form_marginal()) {
      const GnTable table(cfg.kernel, cfg.noise, block.bandwidth);
      p.finite_bandwidth_ratio = scale * var / finite_bandwidth_variance(table, closed_form_fy(cfg), cfg.points[0]);
    }
    out.points.push_back(p);
  }
  const auto& a = out.points[out.points.size() - 2];
  const auto& b = out.points.back();
  out.approaching_one = std::abs(b.ratio - 1.0) <= std::abs(a.ratio - 1.0);
  return out;
}

BiasCurve
bias_curve(const ExperimentConfig& config, std::span<const RegionPtr> regions)
{
  if (!config.field.has_closed_form_marginal())
    throw Unsupported("bias curve needs a closed-form marginal density of X (" + config.field.model_name() +
                      " field with " + config.field.innovations().tag_name() + " innovations)");
  if (regions.empty())
    throw std::invalid_argument("bias curve needs at least one region");
  ExperimentConfig cfg = config;
  cfg.regions.assign(regions.begin(), regions.end());
  cfg.points.assign(1, config.points.empty() ? 0.0 : config.points.front());
  validate_structure(cfg);

  const double fx = *cfg.field.marginal_density(cfg.points[0]);
  BiasCurve out;
  for (std::size_t ri = 0; ri < regions.size(); ++ri) {
    const ReplicateBlock block = simulate_replicates(cfg, *regions[ri], ri);
    BiasPoint p;
    p.n_sites = block.n_sites;
    p.bandwidth = block.bandwidth;
    p.mean_estimate = block.fhat.col(0).mean();
    p.fx = fx;
    p.gap = std::abs(p.mean_estimate - fx);
    out.points.push_back(p);
  }
  out.strictly_decreasing = true;
  for (std::size_t i = 1; i < out.points.size(); ++i)
    out.strictly_decreasing = out.strictly_decreasing && out.points[i].gap < out.points[i - 1].gap;
  return out;
}

} // namespace deconvrf
