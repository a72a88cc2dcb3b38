#pragma once

#include "deconvrf/field_models.hpp"
#include "deconvrf/lattice.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace deconvrf {

/// Sum of a lattice series over {|i| > v}, with a flag telling whether an
/// infinite tail had to be cut before reaching the relative tolerance.
struct TailSum
{
  double value = 0.0;
  bool truncated = false;
};

/// Default term budget for infinite shell series.
inline constexpr std::int64_t kMaxShellTerms = 2'000'000;

/// Physical dependence coefficients i -> delta_{i,p}.
///
/// Two representations: a finite explicit table (linear and Volterra specs),
/// or a radial power decay delta_i = C |i|^-r (delta_0 = C) used for the
/// analytic summability checks of infinite-support fields.
class DependenceProfile
{
public:
  struct Entry
  {
    Site site;
    double delta = 0.0;
  };

  static DependenceProfile finite(int dimension, int p, std::vector<Entry> entries, bool upper_bound);
  static DependenceProfile power_decay(int dimension, int p, double scale, double rate);

  bool is_finite() const { return finite_; }
  bool is_upper_bound() const { return upper_bound_; }
  int dimension() const { return dimension_; }
  int moment_order() const { return p_; }
  double decay_scale() const { return scale_; }
  double decay_rate() const { return rate_; }
  const std::vector<Entry>& entries() const { return entries_; }

  double operator()(const Eigen::Ref<const Site>& i) const;

  /// sum over |i| > v of |i|^exponent delta_i.
  TailSum tail_sum(std::int64_t v, double exponent, std::int64_t max_terms = kMaxShellTerms) const;

private:
  DependenceProfile() = default;

  int dimension_ = 1;
  int p_ = 2;
  bool finite_ = true;
  bool upper_bound_ = false;
  double scale_ = 0.0;
  double rate_ = 0.0;
  std::vector<Entry> entries_;
};

/// alpha-mixing coefficient profile m -> alpha(m).
///
/// m-dependent: alpha(m) = 1/4 (the trivial bound) for m <= m0, 0 beyond.
/// polynomial:  alpha(m) = min(1/4, C m^-q).
class MixingProfile
{
public:
  enum class Tau
  {
    one,
    infinity,
  };

  static MixingProfile m_dependent(std::int64_t cutoff, Tau tau = Tau::infinity);
  static MixingProfile polynomial(double scale, double rate, Tau tau = Tau::infinity);

  bool is_m_dependent() const { return m_dependent_; }
  std::int64_t cutoff() const { return cutoff_; }
  double scale() const { return scale_; }
  double rate() const { return rate_; }
  Tau tau() const { return tau_; }

  double operator()(std::int64_t m) const;

  /// sum over lattice sites |i| > v of |i|^exponent alpha(|i|), using
  /// sup-norm shell counts.
  TailSum tail_sum(int dimension, std::int64_t v, double exponent,
                   std::int64_t max_terms = kMaxShellTerms) const;

private:
  MixingProfile() = default;

  bool m_dependent_ = true;
  std::int64_t cutoff_ = 0;
  double scale_ = 0.0;
  double rate_ = 0.0;
  Tau tau_ = Tau::infinity;
};

/// delta_{i,p} = |a_i| ||eps_0 - eps'_0||_p, exact.
DependenceProfile dependence_linear(const LinearFieldSpec& spec, int p);

/// Upper bound C_p A_i^{1/2} ||eps||_2 ||eps||_p + C_p B_i^{1/p} ||eps||_p^2
/// with C_p = p.
DependenceProfile dependence_volterra(const VolterraFieldSpec& spec, int p);

/// The Rosenthal-type sums A_i and B_i of a Volterra spec at site i.
struct VolterraSums
{
  double a = 0.0;
  double b = 0.0;
};
VolterraSums volterra_sums(const VolterraFieldSpec& spec, const Site& i, int p);

/// Admissibility of a finite-support field: m-dependent with range equal to
/// the support diameter.
MixingProfile mixing_profile_of(const FieldSpec& spec);
DependenceProfile dependence_profile_of(const FieldSpec& spec, int p);

struct SummabilityVerdict
{
  bool finite = false;
  double partial_sum = 0.0;
  std::string reason;
};

/// sum_i |i|^{5d/2} delta_i < infinity. Exact for finite tables, analytic
/// (r > 7d/2) for power decay with the shell sum up to `cutoff` reported.
SummabilityVerdict check_dependence_summability(const DependenceProfile& profile, int dimension,
                                                std::int64_t cutoff);

/// sum_m m^{2d-1} alpha(m) < infinity: always for m-dependent, q > 2d for
/// polynomial decay. partial_sum runs to `cutoff`.
SummabilityVerdict check_mixing_summability(const MixingProfile& profile, int dimension,
                                            std::int64_t cutoff = 10'000);

} // namespace deconvrf
