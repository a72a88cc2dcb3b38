// Acceptance run: one PASS/FAIL line per criterion, diagnostics below each.

#include "deconvrf/asymptotics.hpp"
#include "deconvrf/commands.hpp"
#include "deconvrf/config.hpp"
#include "deconvrf/deconv.hpp"
#include "deconvrf/errors.hpp"
#include "deconvrf/mc_harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace deconvrf;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome
{
  bool pass = false;
  std::string summary;
  std::vector<std::string> notes;
};

template <typename... Args>
std::string
fmt(const char* f, Args... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RegionPtr
square(std::int64_t side)
{
  const std::int64_t sides[] = {side, side};
  return std::make_shared<const LatticeRegion>(make_rect_region(sides));
}

// ---------------------------------------------------------------------------

Outcome
forms_agree()
{
  std::mt19937_64 g(20240611);
  double worst = 0.0;
  Outcome o;
  for (int c = 0; c < 20; ++c) {
    const int d = 1 + static_cast<int>(g() % 2);
    const std::int64_t side =
      d == 1 ? 16 + static_cast<std::int64_t>(g() % 1009) : 4 + static_cast<std::int64_t>(g() % 29);
    std::vector<std::int64_t> sides(static_cast<std::size_t>(d), side);
    auto region = std::make_shared<const LatticeRegion>(make_rect_region(sides));
    const auto kernel = c % 2 == 0 ? DeconvKernel::indicator() : DeconvKernel::polynomial(1 + static_cast<int>(g() % 4));
    const auto noise = NoiseModel::laplace(g() % 2 == 0 ? 0.5 : 1.0);
    const double b = std::uniform_real_distribution<double>(0.2, 1.0)(g);
    FieldSpec field;
    field.model = FieldSpec::Model::linear;
    field.linear = LinearFieldSpec::iid(d);
    if (g() % 2 == 0) {
      Site s = Site::Zero(d);
      s[0] = 1;
      field.linear.coefficients = {{Site::Zero(d), 0.6}, {s, 0.8}};
    }
    const std::uint64_t seed = g();
    const auto y = add_noise(field.simulate(region, seed), noise, seed);
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(41, -4.0, 4.0);
    const auto direct = estimate_direct(y, kernel, noise, b, grid);
    const auto cf = estimate_cf_form(y, kernel, noise, b, grid);
    const double gap = (direct.values - cf.values).cwiseAbs().maxCoeff() / cf.values.cwiseAbs().maxCoeff();
    worst = std::max(worst, gap);
    if (gap >= 1e-6)
      o.notes.push_back(fmt("config %d: d=%d |L|=%lld gap %.3e", c, d, static_cast<long long>(region->size()), gap));
  }
  o.pass = worst < 1e-6;
  o.summary = fmt("20 configs, max relative gap %.3e (limit 1e-6)", worst);
  return o;
}

// int_{-1}^{1} cos(tz) (1 - t^2)^m dt = sqrt(pi) m! (2/z)^{m+1/2} J_{m+1/2}(z)
double
poly_ft(int m, double z)
{
  const double az = std::abs(z);
  if (az < 1e-4) {
    const double i0 = std::sqrt(kPi) * std::tgamma(m + 1.0) / std::tgamma(m + 1.5);
    const double i2 = std::sqrt(kPi) * std::tgamma(m + 1.0) / std::tgamma(m + 2.5) * 0.5;
    return i0 - 0.5 * az * az * i2;
  }
  return std::sqrt(kPi) * std::tgamma(m + 1.0) * std::pow(2.0 / az, m + 0.5) * std::cyl_bessel_j(m + 0.5, az);
}

Outcome
laplace_closed_form()
{
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> uz(-40.0, 40.0);
  const int m = 3;
  const std::pair<double, double> cases[] = {{0.5, 0.2}, {1.0, 0.3}, {1.0, 0.7}, {0.5, 1.0}};
  double worst = 0.0;
  int count = 0;
  for (const auto& [sigma, b] : cases) {
    const GnTable t(DeconvKernel::polynomial(m), NoiseModel::laplace(sigma), b);
    for (int k = 0; k < 250; ++k, ++count) {
      const double z = uz(g);
      const double kz = poly_ft(m, z) / (2.0 * kPi);
      const double k2 = (poly_ft(m + 1, z) - poly_ft(m, z)) / (2.0 * kPi);
      const double oracle = kz - sigma * sigma / (b * b) * k2;
      worst = std::max(worst, std::abs(gn_eval(t, z) - oracle));
    }
  }
  Outcome o;
  o.pass = worst < 1e-8;
  o.summary = fmt("%d random z, max abs error %.3e (limit 1e-8)", count, worst);
  return o;
}

Outcome
plancherel()
{
  const auto kernel = DeconvKernel::polynomial(3);
  const auto noise = NoiseModel::laplace(1.0);
  const double lim_sq = gn_sq_limit(kernel, noise);
  const double lim_abs = gn_abs_limit(kernel, noise);
  Outcome o;
  double prev_sq = 1e300, prev_abs = 1e300;
  bool mono = true;
  for (double b : {0.5, 0.2, 0.1, 0.05}) {
    const GnTable t(kernel, noise, b);
    const double sq = std::abs(std::pow(b, 4.0) * gn_integral_sq(t, 400.0, 0.01) / lim_sq - 1.0);
    const double ab = std::abs(b * b * gn_integral_abs(t, 400.0, 0.01) / lim_abs - 1.0);
    mono = mono && sq < prev_sq && ab < prev_abs;
    prev_sq = sq;
    prev_abs = ab;
    o.notes.push_back(fmt("b=%.2f  gap(int g^2) %.4f  gap(int |g|) %.4f", b, sq, ab));
  }
  o.pass = mono && prev_sq < 0.05 && prev_abs < 0.05;
  o.summary = fmt("monotone %s, gaps at b=0.05: %.4f / %.4f (limit 0.05)", mono ? "yes" : "no", prev_sq, prev_abs);
  return o;
}

ExperimentConfig
iid_normal_setup(int replicates)
{
  ExperimentConfig c;
  c.field.model = FieldSpec::Model::iid;
  c.field.linear = LinearFieldSpec::iid(2);
  c.noise = NoiseModel::laplace(1.0);
  c.kernel = DeconvKernel::polynomial(3);
  c.regions = {square(16), square(32), square(48)};
  c.schedule = BandwidthSchedule{1.0, 0.125};
  c.points = {0.0};
  c.replicates = replicates;
  c.seed = 20240611;
  return c;
}

Outcome
bias()
{
  const auto c = iid_normal_setup(300);
  const BiasCurve bc = bias_curve(c, c.regions);
  Outcome o;
  for (const auto& p : bc.points)
    o.notes.push_back(fmt("|L|=%lld b=%.4f mean %.5f f_X %.5f gap %.5f", static_cast<long long>(p.n_sites),
                          p.bandwidth, p.mean_estimate, p.fx, p.gap));
  // population centering for the same bandwidths, to separate MC noise from smoothing bias
  const auto& last = bc.points.back();
  const double gap = last.gap;
  for (const auto& p : bc.points) {
    const GnTable t(c.kernel, c.noise, p.bandwidth);
    const double e = expected_estimate(
      t, [&](double y) { return convolve_density([&](double x) { return *c.field.marginal_density(x); }, c.noise, y); },
      0.0);
    o.notes.push_back(fmt("b=%.4f exact E f_hat(0) %.5f, smoothing bias %.5f", p.bandwidth, e, std::abs(e - p.fx)));
  }
  o.pass = bc.strictly_decreasing && gap < 0.05;
  o.summary = fmt("strictly decreasing %s, gap at 48^2 %.5f (limit 0.05)", bc.strictly_decreasing ? "yes" : "no", gap);
  return o;
}

Outcome
variance_scaling()
{
  const auto c = iid_normal_setup(500);
  const VarianceScalingCurve vs = variance_scaling_curve(c, c.regions);
  Outcome o;
  for (const auto& p : vs.points)
    o.notes.push_back(fmt("|L|=%lld b=%.4f ratio to sigma^2 %.4f, ratio to finite-b variance %.4f",
                          static_cast<long long>(p.n_sites), p.bandwidth, p.ratio, p.finite_bandwidth_ratio));
  const double r = vs.points.back().ratio;
  o.pass = r >= 0.7 && r <= 1.3;
  o.summary = fmt("ratio at 48^2 %.4f (band [0.7, 1.3])", r);
  return o;
}

const char* const kCltConfig = R"({
  "schema": 1,
  "seed": 20240611,
  "dimension": 2,
  "field": {"model": "linear", "innovations": {"law": "normal"},
            "coefficients": [{"offset": [0, 0], "value": 0.6}, {"offset": [1, 0], "value": 0.8}]},
  "noise": {"law": "laplace", "sigma": 1.0},
  "kernel": {"type": "polynomial", "order": 3},
  "regions": [{"shape": "rect", "sides": [16, 16]}, {"shape": "rect", "sides": [32, 32]},
              {"shape": "rect", "sides": [48, 48]}],
  "bandwidth": {"scale": 1.0, "rate": 0.125},
  "experiment": {"theorem": "mixing", "points": [0, 3], "replicates": 500,
                 "verdicts": {"diagonality_threshold": 0.15}}
}
)";

void
describe_region(Outcome& o, const CltReport& rep)
{
  const RegionResult& r = rep.regions.back();
  for (std::size_t j = 0; j < rep.points.size(); ++j) {
    const auto k = static_cast<Index>(j);
    o.notes.push_back(fmt("x=%g: KS p %.3g (studentized %.3g), var ratio %.4f, finite-b ratio %.4f, centering z %.3f",
                          rep.points[j], r.ks[j].p_value, r.ks_studentized[j].p_value, r.variance_ratio[k],
                          r.finite_bandwidth_ratio[k], r.centering_z[k]));
  }
}

// Single-site correlation of g_n((x-Y)/b) and g_n((y-Y)/b) for independent Y,
// the finite-bandwidth counterpart of the limiting zero.
double
single_site_correlation(const ExperimentConfig& c, double b, double x, double y)
{
  GnTable t(c.kernel, c.noise, b);
  t.tabulate(80.0 / b + 2.0);
  auto fy = [&](double u) {
    return convolve_density([&](double v) { return *c.field.marginal_density(v); }, c.noise, u);
  };
  double m1x = 0, m1y = 0, m2x = 0, m2y = 0, mxy = 0;
  const int n = 16000;
  const double lo = -40.0, hi = 40.0, h = (hi - lo) / n;
  for (int i = 0; i <= n; ++i) {
    const double u = lo + h * i;
    const double w = (i == 0 || i == n ? 0.5 : 1.0) * h * fy(u);
    const double gx = t((x - u) / b), gy = t((y - u) / b);
    m1x += w * gx;
    m1y += w * gy;
    m2x += w * gx * gx;
    m2y += w * gy * gy;
    mxy += w * gx * gy;
  }
  return (mxy - m1x * m1y) / std::sqrt((m2x - m1x * m1x) * (m2y - m1y * m1y));
}

Outcome
mixing_clt(const CltReport& rep, const ExperimentConfig& c)
{
  Outcome o;
  const DiagonalityVerdict dv = joint_diagonality(rep, 0.15);
  const double p = rep.regions.back().ks[0].p_value;
  describe_region(o, rep);
  o.notes.push_back(fmt("admissibility: %s", rep.admissibility.c_str()));
  o.notes.push_back(fmt("single-site correlation at b=%.4f: %.4f", rep.regions.back().bandwidth,
                        single_site_correlation(c, rep.regions.back().bandwidth, 0.0, 3.0)));
  o.pass = p > 0.01 && dv.pass;
  o.summary = fmt("KS p at x=0 %.3g (limit > 0.01), |rho(0,3)| %.4f (limit < 0.15)", p, dv.max_abs_offdiag);
  return o;
}

Outcome
dependence_clt(const CltReport& mixing_rep, const ExperimentConfig& base)
{
  Outcome o;
  ExperimentConfig c = base;
  c.theorem = TheoremTag::dependence;
  c.dependence_order = 2;
  const DependenceProfile dp = dependence_profile_of(c.field, 2);
  bool delta_ok = dp.is_finite() && dp.entries().size() == c.field.linear.coefficients.size();
  for (std::size_t i = 0; delta_ok && i < dp.entries().size(); ++i) {
    const double expect = std::sqrt(2.0) * std::abs(c.field.linear.coefficients[i].value);
    delta_ok = std::abs(dp.entries()[i].delta - expect) < 1e-14 * expect;
  }
  const auto sv = check_dependence_summability(dp, c.field.dimension(), 10'000);
  const CltReport rep = run_experiment(c);
  const double p = rep.regions.back().ks[0].p_value;
  bool identical = rep.regions.size() == mixing_rep.regions.size();
  for (std::size_t i = 0; identical && i < rep.regions.size(); ++i)
    identical = rep.regions[i].standardized == mixing_rep.regions[i].standardized;
  o.notes.push_back(fmt("delta_{i,2} = sqrt(2)|a_i|: %s; summability %s (%s)", delta_ok ? "yes" : "no",
                        sv.finite ? "finite" : "infinite", sv.reason.c_str()));
  describe_region(o, rep);
  o.pass = delta_ok && sv.finite && identical && p > 0.01;
  o.summary = fmt("KS p at x=0 %.3g (limit > 0.01), samples identical to mixing tag: %s", p, identical ? "yes" : "no");
  return o;
}

Outcome
lemma_sequences()
{
  const double n_list[] = {1e2, 1e4, 1e6, 1e8};
  const LemmaReport rep = check_lemma_limits(BandwidthSchedule{1.0, 0.25}, MixingProfile::m_dependent(1), 1, n_list);
  Outcome o;
  for (const auto& r : rep.rows)
    o.notes.push_back(fmt("n=%.0e b=%.5f m=%lld m^d b=%.5f scaled tail %g", r.n, r.bandwidth,
                          static_cast<long long>(r.m), r.block_volume, r.scaled_tail));
  o.pass = rep.m_grows && rep.volume_decreasing && rep.tail_identically_zero;
  o.summary = fmt("m grows %s, m^d b decreasing %s, tail identically zero %s", rep.m_grows ? "yes" : "no",
                  rep.volume_decreasing ? "yes" : "no", rep.tail_identically_zero ? "yes" : "no");
  return o;
}

bool
raises(Outcome& o, const std::string& want, const std::function<void()>& f)
{
  try {
    f();
  } catch (const ConditionViolation& e) {
    o.notes.push_back(e.condition() + ": " + e.what());
    return e.condition() == want;
  } catch (const std::exception& e) {
    o.notes.push_back(std::string("unexpected exception: ") + e.what());
    return false;
  }
  o.notes.push_back(want + ": not raised");
  return false;
}

Outcome
guard_rails()
{
  Outcome o;
  int ok = 0;
  ok += raises(o, "A3", [] { (void)NoiseModel::from_tag("gaussian", 1.0); });
  auto c = iid_normal_setup(100);
  c.points = {0.0, 1.0, 0.0};
  ok += raises(o, "distinct points", [&] { validate_experiment(c); });
  c.points = {0.0};
  c.schedule = BandwidthSchedule{1.0, 1.0 / 5.0};
  ok += raises(o, "A5", [&] { validate_experiment(c); });
  c.schedule = BandwidthSchedule{1.0, 0.125};
  c.theorem = TheoremTag::dependence;
  c.dependence_override = DependenceProfile::power_decay(2, 2, 1.0, 2.0);
  ok += raises(o, "condition (8)", [&] { validate_experiment(c); });
  o.pass = ok == 4;
  o.summary = fmt("%d of 4 violations rejected with the named condition", ok);
  return o;
}

std::string
slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome
determinism()
{
  const fs::path dir = fs::temp_directory_path() / "deconvrf_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "clt.json") << kCltConfig;
  std::ostringstream err;
  CommandOptions opts;
  opts.config = dir / "clt.json";
  opts.out = dir / "run1";
  const int c1 = cmd_clt(opts, err);
  opts.out = dir / "run2";
  opts.threads = 3;
  const int c2 = cmd_clt(opts, err);
  Outcome o;
  bool same = c1 == c2 && (c1 == kExitOk || c1 == kExitVerdict);
  for (const char* f : {"replicates.csv", "summary.json", "lemma.json"}) {
    const std::string a = slurp(dir / "run1" / f), b = slurp(dir / "run2" / f);
    const bool eq = !a.empty() && a == b;
    same = same && eq;
    o.notes.push_back(fmt("%s: %zu bytes, %s", f, a.size(), eq ? "identical" : "DIFFERENT"));
  }
  o.notes.push_back(fmt("exit codes %d / %d", c1, c2));
  fs::remove_all(dir);
  o.pass = same;
  o.summary = same ? "report files byte-identical across runs" : "report files differ";
  return o;
}

} // namespace

int
main()
{
  using clock = std::chrono::steady_clock;
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
    const auto t0 = clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.summary.c_str(), secs);
    for (const auto& n : o.notes)
      std::printf("        %s\n", n.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };

  report(1, "direct and Fourier forms agree", forms_agree);
  report(2, "Laplace closed form of g_n", laplace_closed_form);
  report(3, "Plancherel limits", plancherel);
  report(4, "bias vanishes", bias);
  report(5, "variance scaling", variance_scaling);

  const RunConfig clt = parse_config(kCltConfig);
  std::optional<CltReport> mixing_rep;
  report(6, "mixing CLT", [&] {
    mixing_rep = run_experiment(clt.experiment);
    return mixing_clt(*mixing_rep, clt.experiment);
  });
  report(7, "dependence CLT", [&] {
    if (!mixing_rep)
      throw std::runtime_error("mixing run unavailable");
    return dependence_clt(*mixing_rep, clt.experiment);
  });
  report(8, "blocking sequences", lemma_sequences);
  report(9, "guard rails", guard_rails);
  report(10, "determinism", determinism);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
