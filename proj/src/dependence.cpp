#include "deconvrf/dependence.hpp"
#include "deconvrf/errors.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace deconvrf {

namespace {

constexpr double kTailRelTol = 1e-12;

/// sum_{m > v} shell(d, m) m^exponent f(m), stopping once a term drops
/// below kTailRelTol of the running sum (after the sequence has started to
/// decrease) or the budget runs out.
template <typename F>
TailSum
shell_series(int d, std::int64_t v, double exponent, std::int64_t max_terms, F&& f)
{
  TailSum out;
  double prev = std::numeric_limits<double>::infinity();
  for (std::int64_t k = 1; k <= max_terms; ++k) {
    const std::int64_t m = v + k;
    const double term = shell_count(d, m) * std::pow(static_cast<double>(m), exponent) * f(m);
    out.value += term;
    if (term <= prev && term <= kTailRelTol * out.value)
      return out;
    prev = term;
  }
  out.truncated = true;
  return out;
}

} // namespace

// ---------------------------------------------------------------------------

DependenceProfile
DependenceProfile::finite(int dimension, int p, std::vector<Entry> entries, bool upper_bound)
{
  DependenceProfile d;
  d.dimension_ = dimension;
  d.p_ = p;
  d.finite_ = true;
  d.upper_bound_ = upper_bound;
  for (auto& e : entries) {
    if (e.site.size() != dimension)
      throw std::invalid_argument("dependence entry has wrong dimension");
    if (!(e.delta >= 0.0))
      throw std::invalid_argument("dependence coefficients must be nonnegative");
  }
  d.entries_ = std::move(entries);
  return d;
}

DependenceProfile
DependenceProfile::power_decay(int dimension, int p, double scale, double rate)
{
  if (!(scale >= 0.0) || !(rate > 0.0))
    throw std::invalid_argument("power decay profile needs scale >= 0 and rate > 0");
  DependenceProfile d;
  d.dimension_ = dimension;
  d.p_ = p;
  d.finite_ = false;
  d.scale_ = scale;
  d.rate_ = rate;
  return d;
}

double
DependenceProfile::operator()(const Eigen::Ref<const Site>& i) const
{
  if (finite_) {
    for (const auto& e : entries_) {
      if (e.site == i)
        return e.delta;
    }
    return 0.0;
  }
  const auto m = sup_norm(i);
  return m == 0 ? scale_ : scale_ * std::pow(static_cast<double>(m), -rate_);
}

TailSum
DependenceProfile::tail_sum(std::int64_t v, double exponent, std::int64_t max_terms) const
{
  if (finite_) {
    TailSum out;
    for (const auto& e : entries_) {
      const auto m = sup_norm(e.site);
      if (m > v)
        out.value += std::pow(static_cast<double>(m), exponent) * e.delta;
    }
    return out;
  }
  return shell_series(dimension_, v, exponent, max_terms, [&](std::int64_t m) {
    return scale_ * std::pow(static_cast<double>(m), -rate_);
  });
}

// ---------------------------------------------------------------------------

MixingProfile
MixingProfile::m_dependent(std::int64_t cutoff, Tau tau)
{
  if (cutoff < 0)
    throw std::invalid_argument("m-dependence range must be >= 0");
  MixingProfile p;
  p.m_dependent_ = true;
  p.cutoff_ = cutoff;
  p.tau_ = tau;
  return p;
}

MixingProfile
MixingProfile::polynomial(double scale, double rate, Tau tau)
{
  if (!(scale >= 0.0) || !(rate > 0.0))
    throw std::invalid_argument("polynomial mixing profile needs scale >= 0 and rate > 0");
  MixingProfile p;
  p.m_dependent_ = false;
  p.scale_ = scale;
  p.rate_ = rate;
  p.tau_ = tau;
  return p;
}

double
MixingProfile::operator()(std::int64_t m) const
{
  if (m_dependent_)
    return m <= cutoff_ ? 0.25 : 0.0;
  if (m <= 0)
    return 0.25;
  return std::min(0.25, scale_ * std::pow(static_cast<double>(m), -rate_));
}

TailSum
MixingProfile::tail_sum(int dimension, std::int64_t v, double exponent, std::int64_t max_terms) const
{
  if (m_dependent_) {
    TailSum out;
    for (std::int64_t m = v + 1; m <= cutoff_; ++m)
      out.value += shell_count(dimension, m) * std::pow(static_cast<double>(m), exponent) * (*this)(m);
    return out;
  }
  return shell_series(dimension, v, exponent, max_terms, [&](std::int64_t m) { return (*this)(m); });
}

// ---------------------------------------------------------------------------

DependenceProfile
dependence_linear(const LinearFieldSpec& spec, int p)
{
  spec.validate();
  if (p < 1)
    throw Unsupported("moment order p must be >= 1");
  const double norm = spec.innovations.difference_norm(p);
  std::vector<DependenceProfile::Entry> entries;
  for (const auto& c : spec.coefficients)
    entries.push_back({c.offset, std::abs(c.value) * norm});
  return DependenceProfile::finite(spec.dimension, p, std::move(entries), false);
}

namespace {

struct SiteKeyLess
{
  bool operator()(const Site& a, const Site& b) const { return lex_less(a, b); }
};

} // namespace

VolterraSums
volterra_sums(const VolterraFieldSpec& spec, const Site& i, int p)
{
  VolterraSums s;
  for (const auto& c : spec.coefficients) {
    const double a = std::abs(c.value);
    if (c.second == i) {
      s.a += a * a;
      s.b += std::pow(a, p);
    }
    if (c.first == i) {
      s.a += a * a;
      s.b += std::pow(a, p);
    }
  }
  return s;
}

DependenceProfile
dependence_volterra(const VolterraFieldSpec& spec, int p)
{
  spec.validate();
  if (p < 2)
    throw Unsupported("volterra dependence bound requires p >= 2");
  const double cp = p;
  const double n2 = spec.innovations.norm(2);
  const double np = spec.innovations.norm(p);

  std::map<Site, bool, SiteKeyLess> sites;
  for (const auto& c : spec.coefficients) {
    sites[c.first] = true;
    sites[c.second] = true;
  }
  std::vector<DependenceProfile::Entry> entries;
  for (const auto& [i, unused] : sites) {
    const auto s = volterra_sums(spec, i, p);
    const double bound = cp * std::sqrt(s.a) * n2 * np + cp * std::pow(s.b, 1.0 / p) * np * np;
    entries.push_back({i, bound});
  }
  return DependenceProfile::finite(spec.dimension, p, std::move(entries), true);
}

MixingProfile
mixing_profile_of(const FieldSpec& spec)
{
  return MixingProfile::m_dependent(spec.support_diameter(), MixingProfile::Tau::infinity);
}

DependenceProfile
dependence_profile_of(const FieldSpec& spec, int p)
{
  if (spec.model == FieldSpec::Model::volterra)
    return dependence_volterra(spec.volterra, p);
  return dependence_linear(spec.linear, p);
}

// ---------------------------------------------------------------------------

SummabilityVerdict
check_dependence_summability(const DependenceProfile& profile, int dimension, std::int64_t cutoff)
{
  if (cutoff < 1)
    throw std::invalid_argument("summability cutoff must be >= 1");
  const double exponent = 2.5 * dimension;
  SummabilityVerdict v;
  std::ostringstream why;
  if (profile.is_finite()) {
    for (const auto& e : profile.entries())
      v.partial_sum += std::pow(static_cast<double>(sup_norm(e.site)), exponent) * e.delta;
    v.finite = true;
    why << "finite support: exact sum over " << profile.entries().size() << " coefficients";
  } else {
    for (std::int64_t m = 1; m <= cutoff; ++m)
      v.partial_sum += shell_count(dimension, m) * std::pow(static_cast<double>(m), exponent) *
                       profile.decay_scale() * std::pow(static_cast<double>(m), -profile.decay_rate());
    const double needed = exponent + dimension;
    v.finite = profile.decay_rate() > needed || profile.decay_scale() == 0.0;
    why << "power decay rate " << profile.decay_rate() << (v.finite ? " > " : " <= ") << needed
        << " = 5d/2 + d";
  }
  v.reason = why.str();
  return v;
}

SummabilityVerdict
check_mixing_summability(const MixingProfile& profile, int dimension, std::int64_t cutoff)
{
  if (dimension < 1)
    throw std::invalid_argument("dimension must be >= 1");
  SummabilityVerdict v;
  const double exponent = 2.0 * dimension - 1.0;
  for (std::int64_t m = 1; m <= cutoff; ++m)
    v.partial_sum += std::pow(static_cast<double>(m), exponent) * profile(m);
  std::ostringstream why;
  if (profile.is_m_dependent()) {
    v.finite = true;
    why << "m-dependent with range " << profile.cutoff() << ": finite sum";
  } else {
    v.finite = profile.rate() > 2.0 * dimension || profile.scale() == 0.0;
    why << "polynomial rate " << profile.rate() << (v.finite ? " > " : " <= ") << 2 * dimension
        << " = 2d";
  }
  v.reason = why.str();
  return v;
}

} // namespace deconvrf
