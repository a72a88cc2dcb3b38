#include "deconvrf/field_models.hpp"
#include "deconvrf/errors.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace deconvrf {

// ---------------------------------------------------------------------------
// innovations

InnovationSpec
InnovationSpec::from_tag(std::string_view tag, double scale)
{
  InnovationSpec s;
  if (tag == "normal" || tag == "gaussian")
    s.tag = Tag::normal;
  else if (tag == "uniform")
    s.tag = Tag::uniform;
  else if (tag == "laplace") {
    if (!(scale > 0.0))
      throw std::invalid_argument("laplace innovation scale must be positive");
    s.tag = Tag::laplace;
    s.scale = scale;
  } else
    throw std::invalid_argument("unknown innovation tag '" + std::string(tag) + "'");
  return s;
}

std::string
InnovationSpec::tag_name() const
{
  switch (tag) {
    case Tag::normal:
      return "normal";
    case Tag::uniform:
      return "uniform";
    case Tag::laplace:
      return "laplace";
  }
  return "unknown";
}

double
InnovationSpec::sample(Engine& rng) const
{
  switch (tag) {
    case Tag::normal: {
      std::normal_distribution<double> n(0.0, 1.0);
      return n(rng);
    }
    case Tag::uniform: {
      std::uniform_real_distribution<double> u(-std::numbers::sqrt3, std::numbers::sqrt3);
      return u(rng);
    }
    case Tag::laplace: {
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      const double v = u(rng);
      const double sgn = v < 0.0 ? -1.0 : 1.0;
      return -scale * sgn * std::log1p(-2.0 * std::abs(v));
    }
  }
  return 0.0;
}

double
InnovationSpec::variance() const
{
  return tag == Tag::laplace ? 2.0 * scale * scale : 1.0;
}

double
InnovationSpec::norm(int p) const
{
  if (p < 2 || p > 4)
    throw Unsupported("innovation norm only available for p in {2, 3, 4}");
  const double pd = p;
  switch (tag) {
    case Tag::normal: {
      // E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
      const double m = std::pow(2.0, pd / 2.0) * std::tgamma((pd + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
      return std::pow(m, 1.0 / pd);
    }
    case Tag::uniform: {
      // E|U|^p = a^p / (p+1), a = sqrt(3)
      const double m = std::pow(std::numbers::sqrt3, pd) / (pd + 1.0);
      return std::pow(m, 1.0 / pd);
    }
    case Tag::laplace: {
      // E|L|^p = scale^p p!
      return scale * std::pow(std::tgamma(pd + 1.0), 1.0 / pd);
    }
  }
  return 0.0;
}

double
InnovationSpec::difference_norm(int p) const
{
  const double m2 = variance();
  if (p == 2)
    return std::sqrt(2.0 * m2);
  if (p == 4) {
    // symmetric mean-zero laws: E(e - e')^4 = 2 m4 + 6 m2^2
    const double n4 = norm(4);
    const double m4 = n4 * n4 * n4 * n4;
    return std::pow(2.0 * m4 + 6.0 * m2 * m2, 0.25);
  }
  throw Unsupported("||eps - eps'||_p only available for p in {2, 4}");
}

double
InnovationSpec::density(double x) const
{
  switch (tag) {
    case Tag::normal:
      return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    case Tag::uniform:
      return std::abs(x) <= std::numbers::sqrt3 ? 1.0 / (2.0 * std::numbers::sqrt3) : 0.0;
    case Tag::laplace:
      return std::exp(-std::abs(x) / scale) / (2.0 * scale);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// specs

LinearFieldSpec
LinearFieldSpec::iid(int dimension, InnovationSpec innovations)
{
  LinearFieldSpec s;
  s.dimension = dimension;
  s.coefficients.push_back({Site::Zero(dimension), 1.0});
  s.innovations = innovations;
  return s;
}

namespace {

struct SiteLess
{
  bool operator()(const Site& a, const Site& b) const { return lex_less(a, b); }
};

std::int64_t
diameter_of(const std::vector<Site>& offsets)
{
  std::int64_t diam = 0;
  for (std::size_t i = 0; i < offsets.size(); ++i)
    for (std::size_t j = i + 1; j < offsets.size(); ++j)
      diam = std::max(diam, sup_norm(offsets[i] - offsets[j]));
  return diam;
}

} // namespace

void
LinearFieldSpec::validate() const
{
  if (dimension < 1)
    throw std::invalid_argument("field dimension must be >= 1");
  std::set<Site, SiteLess> seen;
  for (const auto& c : coefficients) {
    if (c.offset.size() != dimension)
      throw std::invalid_argument("linear coefficient offset has wrong dimension");
    if (!std::isfinite(c.value))
      throw std::invalid_argument("linear coefficient is not finite");
    if (!seen.insert(c.offset).second)
      throw std::invalid_argument("duplicate linear coefficient offset");
  }
}

double
LinearFieldSpec::coefficient_sum_sq() const
{
  double s = 0.0;
  for (const auto& c : coefficients)
    s += c.value * c.value;
  return s;
}

std::int64_t
LinearFieldSpec::support_diameter() const
{
  std::vector<Site> offs;
  for (const auto& c : coefficients) {
    if (c.value != 0.0)
      offs.push_back(c.offset);
  }
  return diameter_of(offs);
}

TruncatedLinear
truncate_power_decay(int dimension, double scale, double rate, std::int64_t radius,
                     InnovationSpec innovations)
{
  if (radius < 0)
    throw std::invalid_argument("truncation radius must be >= 0");
  if (2.0 * rate <= dimension)
    throw std::invalid_argument("power decay coefficients are not square summable");

  TruncatedLinear out;
  out.spec.dimension = dimension;
  out.spec.innovations = innovations;
  std::vector<std::int64_t> sides(static_cast<std::size_t>(dimension), 2 * radius + 1);
  const auto box = make_rect_region(sides, Site::Constant(dimension, -radius));
  for (Index j = 0; j < box.size(); ++j) {
    const Site s = box.site(j);
    const auto m = sup_norm(s);
    const double a = m == 0 ? scale : scale * std::pow(static_cast<double>(m), -rate);
    out.spec.coefficients.push_back({s, a});
  }

  double deficit = 0.0;
  for (std::int64_t m = radius + 1;; ++m) {
    const double term = shell_count(dimension, m) * scale * scale * std::pow(static_cast<double>(m), -2.0 * rate);
    deficit += term;
    if (term <= 1e-14 * deficit || m - radius > 10'000'000)
      break;
  }
  out.variance_deficit = deficit;
  return out;
}

void
VolterraFieldSpec::validate() const
{
  if (dimension < 1)
    throw std::invalid_argument("field dimension must be >= 1");
  for (const auto& c : coefficients) {
    if (c.first.size() != dimension || c.second.size() != dimension)
      throw std::invalid_argument("volterra coefficient index has wrong dimension");
    if (c.first == c.second && c.value != 0.0)
      throw std::invalid_argument("volterra diagonal coefficients a_{s,s} must be zero");
  }
}

std::int64_t
VolterraFieldSpec::support_diameter() const
{
  std::vector<Site> offs;
  for (const auto& c : coefficients) {
    if (c.value != 0.0) {
      offs.push_back(c.first);
      offs.push_back(c.second);
    }
  }
  return diameter_of(offs);
}

// ---------------------------------------------------------------------------
// simulation

namespace {

/// Innovations drawn on the bounding box of region (+) (-offsets), indexed
/// with row-major strides (last coordinate fastest).
class InnovationGrid
{
public:
  InnovationGrid(const LatticeRegion& region, const std::vector<Site>& offsets,
                 const InnovationSpec& law, std::uint64_t seed)
  {
    const Index d = region.dimension();
    Site max_off = Site::Zero(d);
    Site min_off = Site::Zero(d);
    if (!offsets.empty()) {
      max_off = offsets.front();
      min_off = offsets.front();
      for (const auto& o : offsets) {
        max_off = max_off.cwiseMax(o);
        min_off = min_off.cwiseMin(o);
      }
    }
    lower_ = region.lower() - max_off;
    const Site upper = region.upper() - min_off;
    strides_.resize(d);
    Index total = 1;
    for (Index k = d - 1; k >= 0; --k) {
      strides_(k) = total;
      total *= upper(k) - lower_(k) + 1;
    }
    values_.resize(total);
    auto rng = make_engine(seed, StreamRole::innovations);
    for (Index j = 0; j < total; ++j)
      values_(j) = law.sample(rng);
  }

  Index index(const Eigen::Ref<const Site>& s) const { return (s - lower_).dot(strides_); }
  Index shift(const Site& offset) const { return offset.dot(strides_); }
  double operator[](Index j) const { return values_(j); }

private:
  Site lower_;
  Site strides_;
  Eigen::VectorXd values_;
};

void
check_region(const std::shared_ptr<const LatticeRegion>& region, int dimension)
{
  if (!region)
    throw std::invalid_argument("null region");
  if (region->dimension() != dimension)
    throw std::invalid_argument("region dimension does not match field dimension");
}

} // namespace

FieldSample
simulate_linear(std::shared_ptr<const LatticeRegion> region, const LinearFieldSpec& spec,
                std::uint64_t seed)
{
  spec.validate();
  check_region(region, spec.dimension);

  std::vector<Site> offsets;
  for (const auto& c : spec.coefficients)
    offsets.push_back(c.offset);
  InnovationGrid eps(*region, offsets, spec.innovations, seed);

  std::vector<Index> shifts;
  for (const auto& c : spec.coefficients)
    shifts.push_back(eps.shift(c.offset));

  FieldSample out{region, Eigen::VectorXd::Zero(region->size())};
  for (Index j = 0; j < region->size(); ++j) {
    const Index base = eps.index(region->sites().col(j));
    double x = 0.0;
    for (std::size_t c = 0; c < shifts.size(); ++c)
      x += spec.coefficients[c].value * eps[base - shifts[c]];
    out.values(j) = x;
  }
  return out;
}

FieldSample
simulate_volterra(std::shared_ptr<const LatticeRegion> region, const VolterraFieldSpec& spec,
                  std::uint64_t seed)
{
  spec.validate();
  check_region(region, spec.dimension);

  std::vector<Site> offsets;
  for (const auto& c : spec.coefficients) {
    offsets.push_back(c.first);
    offsets.push_back(c.second);
  }
  InnovationGrid eps(*region, offsets, spec.innovations, seed);

  std::vector<std::pair<Index, Index>> shifts;
  for (const auto& c : spec.coefficients)
    shifts.emplace_back(eps.shift(c.first), eps.shift(c.second));

  FieldSample out{region, Eigen::VectorXd::Zero(region->size())};
  for (Index j = 0; j < region->size(); ++j) {
    const Index base = eps.index(region->sites().col(j));
    double x = 0.0;
    for (std::size_t c = 0; c < shifts.size(); ++c)
      x += spec.coefficients[c].value * eps[base - shifts[c].first] * eps[base - shifts[c].second];
    out.values(j) = x;
  }
  return out;
}

Eigen::VectorXd
sample_noise(const NoiseModel& noise, Index count, std::uint64_t seed)
{
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(count);
  if (!noise.has_sampler())
    return theta;
  auto rng = make_engine(seed, StreamRole::noise);
  for (Index j = 0; j < count; ++j)
    theta(j) = noise.sample(rng);
  return theta;
}

FieldSample
add_noise(const FieldSample& x, const NoiseModel& noise, std::uint64_t seed)
{
  if (!noise.has_sampler())
    return x;
  FieldSample y = x;
  y.values += sample_noise(noise, x.size(), seed);
  return y;
}

// ---------------------------------------------------------------------------
// FieldSpec

int
FieldSpec::dimension() const
{
  return model == Model::volterra ? volterra.dimension : linear.dimension;
}

std::string
FieldSpec::model_name() const
{
  switch (model) {
    case Model::iid:
      return "iid";
    case Model::linear:
      return "linear";
    case Model::volterra:
      return "volterra";
  }
  return "unknown";
}

const InnovationSpec&
FieldSpec::innovations() const
{
  return model == Model::volterra ? volterra.innovations : linear.innovations;
}

std::int64_t
FieldSpec::support_diameter() const
{
  return model == Model::volterra ? volterra.support_diameter() : linear.support_diameter();
}

FieldSample
FieldSpec::simulate(std::shared_ptr<const LatticeRegion> region, std::uint64_t seed) const
{
  if (model == Model::volterra)
    return simulate_volterra(std::move(region), volterra, seed);
  return simulate_linear(std::move(region), linear, seed);
}

bool
FieldSpec::has_closed_form_marginal() const
{
  if (model == Model::volterra)
    return false;
  if (linear.innovations.tag == InnovationSpec::Tag::normal)
    return true;
  // a single nonzero coefficient is a rescaled innovation
  int nonzero = 0;
  for (const auto& c : linear.coefficients)
    nonzero += c.value != 0.0;
  return nonzero == 1;
}

std::optional<double>
FieldSpec::marginal_density(double x) const
{
  if (!has_closed_form_marginal())
    return std::nullopt;
  if (linear.innovations.tag == InnovationSpec::Tag::normal) {
    const double var = linear.coefficient_sum_sq();
    if (var == 0.0)
      return std::nullopt;
    return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
  }
  for (const auto& c : linear.coefficients) {
    if (c.value != 0.0) {
      const double a = std::abs(c.value);
      return linear.innovations.density(x / c.value) / a;
    }
  }
  return std::nullopt;
}

std::vector<double>
FieldSpec::marginal_breakpoints() const
{
  if (!has_closed_form_marginal() || linear.innovations.tag == InnovationSpec::Tag::normal)
    return {};
  double a = 0.0;
  for (const auto& c : linear.coefficients) {
    if (c.value != 0.0)
      a = std::abs(c.value);
  }
  if (linear.innovations.tag == InnovationSpec::Tag::uniform)
    return {-std::numbers::sqrt3 * a, std::numbers::sqrt3 * a};
  return {0.0};
}

} // namespace deconvrf
