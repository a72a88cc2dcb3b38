#include "doctest.h"

#include "deconvrf/asymptotics.hpp"
#include "deconvrf/errors.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace deconvrf;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Brute force of the blocking sequence: sum over every lattice site
// with |i| > v (enumerated, not via shell counts) for d <= 2.
double
lattice_tail(int d, std::int64_t v, double exponent, const std::function<double(std::int64_t)>& coeff,
             std::int64_t radius)
{
  double s = 0.0;
  if (d == 1) {
    for (std::int64_t i = -radius; i <= radius; ++i) {
      const std::int64_t a = std::abs(i);
      if (a > v)
        s += std::pow(double(a), exponent) * coeff(a);
    }
    return s;
  }
  for (std::int64_t i = -radius; i <= radius; ++i)
    for (std::int64_t j = -radius; j <= radius; ++j) {
      const std::int64_t a = std::max(std::abs(i), std::abs(j));
      if (a > v)
        s += std::pow(double(a), exponent) * coeff(a);
    }
  return s;
}

} // namespace

TEST_CASE("kernel moments: closed forms against quadrature and Beta functions")
{
  const auto ind = DeconvKernel::indicator();
  CHECK(kernel_moment_sq(ind, 2.0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(kernel_moment_abs(ind, 2.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  for (int m : {1, 2, 3, 6}) {
    const auto k = DeconvKernel::polynomial(m);
    for (double beta : {0.0, 0.5, 1.0, 1.5, 2.0, 4.0}) {
      // int_{-1}^1 |t|^{2b} (1-t^2)^{2m} dt = B(b + 1/2, 2m + 1)
      CHECK(kernel_moment_sq(k, beta) == doctest::Approx(std::beta(beta + 0.5, 2.0 * m + 1.0)).epsilon(1e-10));
      CHECK(kernel_moment_sq(k, beta) == doctest::Approx(kernel_moment_sq_quadrature(k, beta)).epsilon(1e-10));
      CHECK(kernel_moment_abs(k, beta) == doctest::Approx(kernel_moment_abs_quadrature(k, beta)).epsilon(1e-10));
    }
  }
  CHECK(kernel_moment_sq(DeconvKernel::polynomial(3), 2.0) == doctest::Approx(8.02e-3).epsilon(1e-3));
}

TEST_CASE("asymptotic variance")
{
  const auto ind = DeconvKernel::indicator();
  CHECK(sigma2(0.5, ind, 2.0, 1.0) == doctest::Approx(0.2 / kTwoPi).epsilon(1e-14));
  CHECK(sigma2(0.0, ind, 2.0, 1.0) == 0.0);
  CHECK_THROWS_AS(sigma2(0.5, ind, 2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sigma2(-0.1, ind, 2.0, 1.0), std::invalid_argument);
  // B scales as sigma^-2 for Laplace: doubling sigma multiplies sigma^2(x) by 16
  const auto k = DeconvKernel::polynomial(3);
  const double s1 = sigma2(0.3, k, 2.0, NoiseModel::laplace(1.0).limit_constant());
  const double s2 = sigma2(0.3, k, 2.0, NoiseModel::laplace(2.0).limit_constant());
  CHECK(s2 == doctest::Approx(16.0 * s1).epsilon(1e-14));
}

TEST_CASE("eta")
{
  const auto ind = DeconvKernel::indicator();
  const auto poly = DeconvKernel::polynomial(3);
  CHECK(eta(1.0, 0.0, 0.31, 0.7, poly, 2.0, 3.0) == sigma2(0.31, poly, 2.0, 3.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(eta(r, r, 0.4, 0.4, poly, 2.0, 1.0) == doctest::Approx(sigma2(0.4, poly, 2.0, 1.0)).epsilon(1e-14));
  CHECK(eta(0.6, 0.8, 0.5, 0.25, ind, 2.0, 1.0) == doctest::Approx(0.136 / kTwoPi).epsilon(1e-13));
  CHECK_THROWS_AS(eta(0.6, 0.6, 0.5, 0.25, ind, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("standardize")
{
  CHECK(standardize(0.4, 0.4, 100.0, 0.3, 2.0, 1.0) == 0.0);
  CHECK(standardize(1.3, 1.0, 1.0, 1.0, 5.0, 1.0) == doctest::Approx(0.3));
  CHECK(standardize(0.01, 0.0, 1e4, 0.1, 2.0, 2.0) == doctest::Approx(std::sqrt(0.1) * 0.01 / 2.0).epsilon(1e-12));
  CHECK(standardize(0.01, 0.0, 1e4, 0.1, 2.0, 2.0) == doctest::Approx(0.00158).epsilon(0.01));
  CHECK_THROWS_AS(standardize(1.0, 0.0, 10.0, 0.1, 2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(standardize(1.0, 0.0, 10.0, 0.0, 2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(standardize(1.0, 0.0, 0.0, 0.1, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("bandwidth schedule and A5")
{
  BandwidthSchedule s{2.0, 0.125};
  CHECK(s(256.0) == doctest::Approx(2.0 * std::pow(256.0, -0.125)));
  CHECK_NOTHROW(s.validate(2.0));
  BandwidthSchedule edge{1.0, 0.2};
  try {
    edge.validate(2.0);
    FAIL("boundary rate accepted");
  } catch (const ConditionViolation& e) {
    CHECK(e.condition() == "A5");
    CHECK(std::string(e.what()).find("does not satisfy |Lambda_n| b_n^{2beta+1} -> infinity") !=
          std::string::npos);
  }
  CHECK_THROWS_AS((BandwidthSchedule{1.0, 0.0}.validate(2.0)), ConditionViolation);
  CHECK_THROWS_AS((BandwidthSchedule{-1.0, 0.1}.validate(2.0)), ConditionViolation);
  CHECK_NOTHROW((BandwidthSchedule{1.0, 0.99}.validate(0.0)));
  CHECK_THROWS_AS((BandwidthSchedule{1.0, 1.0}.validate(0.0)), ConditionViolation);
}

TEST_CASE("base block")
{
  CHECK(base_block(0.01, 1) == 10);
  CHECK(base_block(0.0001, 2) == 10);
  CHECK(base_block(0.5, 1) == 1);
  CHECK(base_block(1.0 / 64.0, 3) == 2);
}

TEST_CASE("mixing blocking sequence")
{
  // m-dependent with v >= m0: zero tail
  const auto md = MixingProfile::m_dependent(4);
  const auto r = m_seq_mixing(0.01, md, 1);
  CHECK(r.m == 10);
  CHECK(r.tail_at_v == 0.0);
  // alpha = 0 everywhere
  const auto zero = MixingProfile::m_dependent(0);
  for (double b : {0.9, 0.3, 0.01})
    CHECK(m_seq_mixing(b, zero, 2).m == base_block(b, 2));

  // brute-force oracles
  for (auto [C, q, b, d] : {std::tuple{1.0, 4.0, 0.01, 1}, std::tuple{1000.0, 3.0, 0.01, 1},
                            std::tuple{50.0, 6.0, 0.05, 2}, std::tuple{5.0, 6.0, 0.2, 2}}) {
    const auto p = MixingProfile::polynomial(C, q);
    const std::int64_t v = base_block(b, d);
    const std::int64_t radius = d == 1 ? 2'000'000 : 3000;
    const double tail = lattice_tail(d, v, d, [&](std::int64_t m) { return p(m); }, radius);
    const auto expect =
      std::max<std::int64_t>(v, static_cast<std::int64_t>(std::floor(std::pow(tail / b, 1.0 / d))) + 1);
    const auto got = m_seq_mixing(b, p, d);
    CHECK(got.tail_at_v == doctest::Approx(tail).epsilon(1e-4));
    CHECK(got.m == expect);
    CHECK(got.m >= v);
  }
  // pointwise smaller profile never increases m
  CHECK(m_seq_mixing(0.01, MixingProfile::polynomial(10.0, 3.0), 1).m <=
        m_seq_mixing(0.01, MixingProfile::polynomial(1000.0, 3.0), 1).m);

  CHECK_THROWS_AS(m_seq_mixing(1.0, md, 1), std::invalid_argument);
  CHECK_THROWS_AS(m_seq_mixing(0.0, md, 1), std::invalid_argument);
}

TEST_CASE("dependence blocking sequence")
{
  const double b = 0.01;
  const auto p = DependenceProfile::power_decay(1, 2, 1.0, 6.0);
  const std::int64_t v = base_block(b, 1);
  const double tail =
    lattice_tail(1, v, 2.5, [](std::int64_t m) { return std::pow(double(m), -6.0); }, 2'000'000);
  const auto expect =
    std::max<std::int64_t>(v, static_cast<std::int64_t>(std::floor(std::pow(tail / (b * b * b), 1.0 / 3.0))) + 1);
  const auto got = m_seq_dependence(b, p, 1);
  CHECK(got.m == expect);

  const auto big = DependenceProfile::power_decay(1, 2, 1e4, 6.0);
  const double tail_big = 1e4 * tail;
  const auto expect_big = std::max<std::int64_t>(
    v, static_cast<std::int64_t>(std::floor(std::pow(tail_big / (b * b * b), 1.0 / 3.0))) + 1);
  CHECK(m_seq_dependence(b, big, 1).m == expect_big);
  CHECK(expect_big > v);

  std::vector<DependenceProfile::Entry> entries{{make_site({0}), 1.0}, {make_site({2}), 0.5}};
  const auto finite = DependenceProfile::finite(1, 2, entries, false);
  CHECK(m_seq_dependence(0.01, finite, 1).m == 10);
  const auto none = DependenceProfile::finite(1, 2, {}, false);
  CHECK(m_seq_dependence(0.3, none, 1).m == base_block(0.3, 1));
}

TEST_CASE("lemma checks for an m-dependent profile")
{
  const BandwidthSchedule s{1.0, 0.25};
  const std::vector<double> n{1e2, 1e4, 1e6, 1e8};
  const auto rep = check_lemma_limits(s, MixingProfile::m_dependent(1), 1, n);
  REQUIRE(rep.rows.size() == 4);
  const std::int64_t m_expect[] = {1, 3, 5, 10};
  const double vol_expect[] = {0.316227766, 0.3, 0.158113883, 0.1};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(rep.rows[k].m == m_expect[k]);
    CHECK(rep.rows[k].block_volume == doctest::Approx(vol_expect[k]).epsilon(1e-8));
    CHECK(rep.rows[k].scaled_tail == 0.0);
  }
  CHECK(rep.m_grows);
  CHECK(rep.volume_decreasing);
  CHECK(rep.tail_identically_zero);
  // 0.1 / 0.316 is not below the 0.2 threshold
  CHECK_FALSE(rep.volume_below_threshold);
  CHECK_FALSE(rep.converges());

  const std::vector<double> wide{1e2, 1e6, 1e10, 1e16};
  CHECK(check_lemma_limits(s, MixingProfile::m_dependent(1), 1, wide).converges());
}

TEST_CASE("lemma checks flag a divergent profile")
{
  const BandwidthSchedule s{1.0, 0.25};
  const std::vector<double> n{1e2, 1e4, 1e6, 1e8};
  const auto rep = check_lemma_limits(s, DependenceProfile::power_decay(1, 2, 1.0, 1.0), 1, n);
  CHECK_FALSE(rep.converges());
  CHECK_THROWS_AS(check_lemma_limits(s, MixingProfile::m_dependent(1), 1, std::vector<double>{1e2, 1e4, 1e6}),
                  std::invalid_argument);
}
