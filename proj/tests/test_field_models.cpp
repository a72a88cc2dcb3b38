#include "doctest.h"

#include "deconvrf/errors.hpp"
#include "deconvrf/field_models.hpp"
#include "deconvrf/noise.hpp"
#include "deconvrf/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace deconvrf;

namespace {

std::shared_ptr<const LatticeRegion>
square(std::int64_t n)
{
  const std::vector<std::int64_t> sides{n, n};
  return std::make_shared<const LatticeRegion>(make_rect_region(sides));
}

double
mean(const Eigen::VectorXd& v)
{
  return v.mean();
}

double
var(const Eigen::VectorXd& v)
{
  return (v.array() - v.mean()).square().sum() / (v.size() - 1.0);
}

// Standard error of a sample variance from the sample fourth moment.
double
var_se(const Eigen::VectorXd& v)
{
  const double m = v.mean();
  const double m4 = (v.array() - m).pow(4).mean();
  const double s2 = (v.array() - m).square().mean();
  return std::sqrt((m4 - s2 * s2) / v.size());
}

LinearFieldSpec
linear(std::vector<std::pair<std::vector<std::int64_t>, double>> coeffs,
       InnovationSpec innov = {})
{
  LinearFieldSpec s;
  s.dimension = static_cast<int>(coeffs.front().first.size());
  s.innovations = innov;
  for (auto& [off, a] : coeffs) {
    Site o(s.dimension);
    for (int k = 0; k < s.dimension; ++k)
      o[k] = off[static_cast<std::size_t>(k)];
    s.coefficients.push_back({o, a});
  }
  return s;
}

} // namespace

TEST_CASE("identity coefficients give the innovations themselves")
{
  const auto r = square(20);
  const auto x = simulate_linear(r, linear({{{0, 0}, 1.0}}), 5);
  const auto iid = simulate_linear(r, LinearFieldSpec::iid(2), 5);
  CHECK(x.values == iid.values);
  CHECK(x.size() == 400);
}

TEST_CASE("linear field variance is the coefficient sum of squares")
{
  const auto r = square(256);
  const auto spec = linear({{{0, 0}, 0.5}, {{1, 0}, 0.5}});
  const auto x = simulate_linear(r, spec, 17);
  CHECK(spec.coefficient_sum_sq() == doctest::Approx(0.5));
  // neighbouring sites are correlated, so allow a generous multiple of the iid SE
  CHECK(std::abs(var(x.values) - 0.5) < 3.0 * 2.0 * var_se(x.values));
}

TEST_CASE("zero coefficients give a zero field")
{
  const auto x = simulate_linear(square(10), linear({{{0, 0}, 0.0}, {{0, 1}, 0.0}}), 1);
  CHECK(x.values.isZero(0.0));
  VolterraFieldSpec v;
  v.dimension = 2;
  v.coefficients.push_back({make_site({0, 0}), make_site({1, 0}), 0.0});
  CHECK(simulate_volterra(square(10), v, 1).values.isZero(0.0));
}

TEST_CASE("linear field is an exact moving sum of the innovations")
{
  // d = 1 with offsets {0, 2}: X_i - 0.3 eps_i = 0.7 eps_{i-2}; the two
  // coefficient fields must share their innovations exactly.
  const std::vector<std::int64_t> sides{50};
  const auto r = std::make_shared<const LatticeRegion>(make_rect_region(sides));
  const auto a = simulate_linear(r, linear({{{0}, 1.0}, {{2}, 0.0}}), 9);
  const auto b = simulate_linear(r, linear({{{0}, 0.0}, {{2}, 1.0}}), 9);
  const auto c = simulate_linear(r, linear({{{0}, 0.3}, {{2}, 0.7}}), 9);
  CHECK((c.values - (0.3 * a.values + 0.7 * b.values)).cwiseAbs().maxCoeff() < 1e-14);
  for (Index i = 2; i < 50; ++i)
    CHECK(b.values[i] == a.values[i - 2]);
}

TEST_CASE("dimension mismatch is rejected")
{
  CHECK_THROWS_AS(simulate_linear(square(4), LinearFieldSpec::iid(1), 1), std::invalid_argument);
}

TEST_CASE("simulation is deterministic under the seed")
{
  const auto r = square(32);
  const auto spec = linear({{{0, 0}, 0.6}, {{1, 0}, 0.8}});
  CHECK(simulate_linear(r, spec, 42).values == simulate_linear(r, spec, 42).values);
  CHECK(simulate_linear(r, spec, 42).values != simulate_linear(r, spec, 43).values);
}

TEST_CASE("linear field is stationary across disjoint subregions")
{
  const std::vector<std::int64_t> sides{400, 200};
  const auto r = std::make_shared<const LatticeRegion>(make_rect_region(sides));
  const auto x = simulate_linear(r, linear({{{0, 0}, 0.6}, {{0, 1}, 0.8}}), 3);
  // first half vs second half of the lexicographic order = two 200x200 blocks
  const Eigen::VectorXd a = x.values.head(40000), b = x.values.tail(40000);
  const double se_mean = std::sqrt(2.0 * 4.0 / 40000.0);
  CHECK(std::abs(mean(a) - mean(b)) < 4.0 * se_mean);
  CHECK(std::abs(var(a) - var(b)) < 4.0 * std::sqrt(2.0) * 2.0 * var_se(a));
}

TEST_CASE("finite-support field is uncorrelated beyond twice its radius")
{
  const std::vector<std::int64_t> sides{200000};
  const auto r = std::make_shared<const LatticeRegion>(make_rect_region(sides));
  const auto x = simulate_linear(r, linear({{{0}, 0.5}, {{1}, 0.5}, {{2}, 0.5}}), 11);
  const Index n = x.size();
  for (Index lag : {1, 5, 9}) {
    const Index pairs = n - lag;
    const Eigen::VectorXd u = x.values.head(pairs), w = x.values.tail(pairs);
    const double c = ((u.array() - u.mean()) * (w.array() - w.mean())).sum() /
                     std::sqrt((u.array() - u.mean()).square().sum() * (w.array() - w.mean()).square().sum());
    if (lag == 1)
      CHECK(c > 0.5);
    else
      CHECK(std::abs(c) < 4.0 / std::sqrt(static_cast<double>(pairs)));
  }
}

TEST_CASE("Volterra moments")
{
  const std::vector<std::int64_t> sides{100000};
  const auto r = std::make_shared<const LatticeRegion>(make_rect_region(sides));
  VolterraFieldSpec v;
  v.dimension = 1;
  v.coefficients.push_back({make_site({0}), make_site({1}), 1.0});
  const auto x = simulate_volterra(r, v, 21);
  // X_i = eps_i eps_{i-1}: mean 0, E X^2 = 1, E X^4 = 9
  const double se_mean = std::sqrt(1.0 / 1e5);
  CHECK(std::abs(mean(x.values)) < 3.0 * se_mean * 1.5);
  const double m2 = x.values.squaredNorm() / 1e5;
  CHECK(std::abs(m2 - 1.0) < 3.0 * std::sqrt((9.0 - 1.0) / 1e5) * 1.5);

  v.coefficients.push_back({make_site({1}), make_site({0}), 1.0});
  const auto y = simulate_volterra(r, v, 21);
  CHECK((y.values - 2.0 * x.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(var(y.values) - 4.0) < 3.0 * 1.5 * var_se(y.values));
}

TEST_CASE("Volterra diagonal coefficients are rejected")
{
  VolterraFieldSpec v;
  v.dimension = 1;
  v.coefficients.push_back({make_site({2}), make_site({2}), 0.5});
  CHECK_THROWS_AS(v.validate(), std::invalid_argument);
  const std::vector<std::int64_t> sides{10};
  CHECK_THROWS_AS(simulate_volterra(std::make_shared<const LatticeRegion>(make_rect_region(sides)), v, 1),
                  std::invalid_argument);
}

TEST_CASE("add_noise")
{
  const std::vector<std::int64_t> sides{100000};
  const auto r = std::make_shared<const LatticeRegion>(make_rect_region(sides));
  FieldSample zero{r, Eigen::VectorXd::Zero(r->size())};
  const auto y = add_noise(zero, NoiseModel::laplace(1.0), 8);
  // Laplace(1): variance 2, fourth moment 24
  CHECK(std::abs(var(y.values) - 2.0) < 3.0 * std::sqrt((24.0 - 4.0) / 1e5));
  CHECK(add_noise(zero, NoiseModel::laplace(1.0), 8).values == y.values);

  const auto x = simulate_linear(r, LinearFieldSpec::iid(1), 8);
  CHECK(add_noise(x, NoiseModel::none(), 8).values == x.values);
  // noise stream is separate from the innovation stream
  const Eigen::VectorXd theta = add_noise(x, NoiseModel::laplace(1.0), 8).values - x.values;
  CHECK((theta - y.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((theta - sample_noise(NoiseModel::laplace(1.0), r->size(), 8)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("noise models")
{
  const auto lap = NoiseModel::laplace(0.5);
  CHECK(lap.beta() == 2.0);
  CHECK(lap.limit_constant() == doctest::Approx(4.0));
  CHECK(lap.cf(0.0) == 1.0);
  CHECK(lap.cf(2.0) == doctest::Approx(1.0 / (1.0 + 0.25 * 4.0)));
  CHECK(NoiseModel::laplace(1.0).a3_gap(1e3, 1e4) < 1e-4);
  CHECK(NoiseModel::laplace(2.0).a3_gap(1e3, 1e4) < 1e-4);

  const auto sg = NoiseModel::symmetric_gamma(2.0, 0.7);
  CHECK(sg.beta() == 4.0);
  CHECK(sg.limit_constant() == doctest::Approx(std::pow(0.7, -4.0)));
  CHECK(sg.a3_gap(1e3, 1e4) / sg.limit_constant() < 1e-4);

  const auto none = NoiseModel::none();
  CHECK(none.beta() == 0.0);
  CHECK(none.limit_constant() == 1.0);
  CHECK_FALSE(none.has_sampler());

  try {
    NoiseModel::from_tag("gaussian", 1.0);
    FAIL("gaussian noise accepted");
  } catch (const ConditionViolation& e) {
    CHECK(e.condition() == "A3");
    CHECK(std::string(e.what()).find("noise violates A3") != std::string::npos);
  }
}

TEST_CASE("noise densities integrate to one and invert their characteristic functions")
{
  for (const auto& noise : {NoiseModel::laplace(0.8), NoiseModel::symmetric_gamma(1.5, 0.6),
                            NoiseModel::symmetric_gamma(3.0, 0.4)}) {
    // panels graded towards the kink at 0
    std::vector<double> edges{0.0};
    for (double e = 1e-8; e < 0.5; e *= 2.0)
      edges.push_back(e);
    for (double e = 0.5; e <= 80.0; e += 0.5)
      edges.push_back(e);
    const double total = 2.0 * integrate_panels<double>([&](double x) { return noise.density(x); }, edges, 20);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    const double second =
      2.0 * integrate_panels<double>([&](double x) { return x * x * noise.density(x); }, edges, 20);
    CHECK(second == doctest::Approx(noise.variance()).epsilon(1e-8));
    for (double t : {0.3, 1.0, 2.5}) {
      const double ft =
        2.0 * integrate_panels<double>([&](double x) { return std::cos(t * x) * noise.density(x); }, edges, 20);
      CHECK(ft == doctest::Approx(noise.cf(t)).epsilon(1e-8));
    }
  }
}

TEST_CASE("noise samplers match the law")
{
  const auto sg = NoiseModel::symmetric_gamma(2.0, 0.5);
  Engine rng(7);
  const int n = 200000;
  double s2 = 0.0, below = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sg.sample(rng);
    s2 += v * v;
    below += v < 0.3 ? 1.0 : 0.0;
  }
  CHECK(std::abs(s2 / n - sg.variance()) < 0.02 * sg.variance() * 3.0);
  std::vector<double> edges{0.0};
  for (double e = 1e-8; e < 0.3; e *= 2.0)
    edges.push_back(e);
  edges.push_back(0.3);
  const double cdf = 0.5 + integrate_panels<double>([&](double x) { return sg.density(x); }, edges, 20);
  CHECK(std::abs(below / n - cdf) < 4.0 * std::sqrt(cdf * (1 - cdf) / n));
}

TEST_CASE("innovation laws")
{
  const auto nrm = InnovationSpec::from_tag("normal");
  const auto uni = InnovationSpec::from_tag("uniform");
  const auto lap = InnovationSpec::from_tag("laplace", 0.5);
  CHECK(nrm.variance() == 1.0);
  CHECK(uni.variance() == doctest::Approx(1.0));
  CHECK(lap.variance() == doctest::Approx(0.5));
  CHECK(nrm.difference_norm(2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(uni.difference_norm(2) == doctest::Approx(std::sqrt(2.0)));
  // E(e - e')^4 = 2 m4 + 6 sigma^4: normal 12, uniform 2*9/5 + 6
  CHECK(nrm.difference_norm(4) == doctest::Approx(std::pow(12.0, 0.25)));
  CHECK(uni.difference_norm(4) == doctest::Approx(std::pow(2.0 * 9.0 / 5.0 + 6.0, 0.25)));
  CHECK(nrm.norm(4) == doctest::Approx(std::pow(3.0, 0.25)));
  CHECK(nrm.norm(3) == doctest::Approx(std::cbrt(2.0 * std::sqrt(2.0 / std::numbers::pi))));
  CHECK_THROWS_AS(nrm.norm(5), Unsupported);
}

TEST_CASE("power-decay truncation")
{
  const auto t = truncate_power_decay(1, 1.0, 3.0, 4);
  CHECK(t.spec.coefficients.size() == 9);
  // deficit = 2 sum_{m > 4} m^-6
  double tail = 0.0;
  for (int m = 5; m < 200000; ++m)
    tail += 2.0 * std::pow(m, -6.0);
  CHECK(t.variance_deficit == doctest::Approx(tail).epsilon(1e-6));
}

TEST_CASE("closed-form marginal densities")
{
  FieldSpec f;
  f.model = FieldSpec::Model::linear;
  f.linear = linear({{{0, 0}, 0.6}, {{1, 0}, 0.8}});
  REQUIRE(f.has_closed_form_marginal());
  CHECK(*f.marginal_density(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));

  FieldSpec u;
  u.model = FieldSpec::Model::iid;
  u.linear = LinearFieldSpec::iid(2, InnovationSpec::from_tag("uniform"));
  CHECK(*u.marginal_density(0.0) == doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))));
  CHECK(*u.marginal_density(2.0) == 0.0);

  FieldSpec mixed;
  mixed.model = FieldSpec::Model::linear;
  mixed.linear = linear({{{0, 0}, 0.6}, {{1, 0}, 0.8}}, InnovationSpec::from_tag("uniform"));
  CHECK_FALSE(mixed.has_closed_form_marginal());
  CHECK_FALSE(mixed.marginal_density(0.0).has_value());
}
