#include "deconvrf/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace deconvrf {

std::int64_t
sup_norm(const Eigen::Ref<const Site>& s)
{
  std::int64_t m = 0;
  for (Index k = 0; k < s.size(); ++k)
    m = std::max(m, std::abs(s(k)));
  return m;
}

bool
lex_less(const Eigen::Ref<const Site>& a, const Eigen::Ref<const Site>& b)
{
  for (Index k = 0; k < a.size(); ++k) {
    if (a(k) != b(k))
      return a(k) < b(k);
  }
  return false;
}

Site
make_site(std::initializer_list<std::int64_t> coords)
{
  Site s(static_cast<Index>(coords.size()));
  Index k = 0;
  for (auto c : coords)
    s(k++) = c;
  return s;
}

double
shell_count(int dimension, std::int64_t m)
{
  if (m == 0)
    return 1.0;
  const double outer = std::pow(2.0 * static_cast<double>(m) + 1.0, dimension);
  const double inner = std::pow(2.0 * static_cast<double>(m) - 1.0, dimension);
  return outer - inner;
}

namespace {

int
compare_cols(const SiteMatrix& m, Index i, const Eigen::Ref<const Site>& s)
{
  for (Index k = 0; k < m.rows(); ++k) {
    if (m(k, i) != s(k))
      return m(k, i) < s(k) ? -1 : 1;
  }
  return 0;
}

} // namespace

LatticeRegion::LatticeRegion(SiteMatrix sorted)
  : sites_(std::move(sorted))
{
  lower_ = sites_.rowwise().minCoeff();
  upper_ = sites_.rowwise().maxCoeff();

  double volume = 1.0;
  for (Index k = 0; k < lower_.size(); ++k)
    volume *= static_cast<double>(upper_(k) - lower_(k) + 1);
  if (volume == static_cast<double>(sites_.cols())) {
    Box b;
    b.origin = lower_;
    for (Index k = 0; k < lower_.size(); ++k)
      b.sides.push_back(upper_(k) - lower_(k) + 1);
    box_ = std::move(b);
  }
}

LatticeRegion
LatticeRegion::from_sites(SiteMatrix sites)
{
  if (sites.rows() < 1)
    throw std::invalid_argument("region dimension must be at least 1");
  if (sites.cols() < 1)
    throw std::invalid_argument("region must contain at least one site");

  std::vector<Index> order(static_cast<std::size_t>(sites.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return lex_less(sites.col(a), sites.col(b));
  });
  auto last = std::unique(order.begin(), order.end(), [&](Index a, Index b) {
    return sites.col(a) == sites.col(b);
  });
  order.erase(last, order.end());

  SiteMatrix sorted(sites.rows(), static_cast<Index>(order.size()));
  for (std::size_t j = 0; j < order.size(); ++j)
    sorted.col(static_cast<Index>(j)) = sites.col(order[j]);
  return LatticeRegion(std::move(sorted));
}

Index
LatticeRegion::index_of(const Eigen::Ref<const Site>& s) const
{
  if (s.size() != sites_.rows())
    return -1;
  Index lo = 0;
  Index hi = sites_.cols();
  while (lo < hi) {
    const Index mid = lo + (hi - lo) / 2;
    const int c = compare_cols(sites_, mid, s);
    if (c == 0)
      return mid;
    if (c < 0)
      lo = mid + 1;
    else
      hi = mid;
  }
  return -1;
}

LatticeRegion
LatticeRegion::translated(const Eigen::Ref<const Site>& v) const
{
  if (v.size() != sites_.rows())
    throw std::invalid_argument("translation vector dimension mismatch");
  SiteMatrix moved = sites_.colwise() + v;
  // translation preserves lexicographic order
  return LatticeRegion(std::move(moved));
}

LatticeRegion
make_rect_region(std::span<const std::int64_t> side_lengths, const Site& origin)
{
  if (side_lengths.empty())
    throw std::invalid_argument("rect region needs at least one side length");
  if (static_cast<Index>(side_lengths.size()) != origin.size())
    throw std::invalid_argument("origin dimension does not match side lengths");
  Index count = 1;
  for (auto s : side_lengths) {
    if (s < 1)
      throw std::invalid_argument("rect region side lengths must be >= 1");
    count *= s;
  }

  const Index d = origin.size();
  SiteMatrix sites(d, count);
  Site cur = Site::Zero(d);
  for (Index j = 0; j < count; ++j) {
    sites.col(j) = origin + cur;
    // odometer increment, last coordinate fastest
    for (Index k = d - 1; k >= 0; --k) {
      if (++cur(k) < side_lengths[static_cast<std::size_t>(k)])
        break;
      cur(k) = 0;
    }
  }
  return LatticeRegion::from_sites(std::move(sites));
}

LatticeRegion
make_rect_region(std::span<const std::int64_t> side_lengths)
{
  return make_rect_region(side_lengths, Site::Zero(static_cast<Index>(side_lengths.size())));
}

LatticeRegion
make_l_shaped_region(std::span<const std::int64_t> arm_lengths, std::int64_t thickness)
{
  const auto d = arm_lengths.size();
  if (d < 2)
    throw std::invalid_argument("L-shaped region needs dimension >= 2");
  if (thickness < 1)
    throw std::invalid_argument("L-shaped region thickness must be >= 1");
  for (auto a : arm_lengths) {
    if (a < thickness)
      throw std::invalid_argument("L-shaped region arms must be at least as long as the thickness");
  }

  std::vector<SiteMatrix> parts;
  Index total = 0;
  for (std::size_t axis = 0; axis < d; ++axis) {
    std::vector<std::int64_t> sides(d, thickness);
    sides[axis] = arm_lengths[axis];
    auto box = make_rect_region(sides);
    total += box.size();
    parts.push_back(box.sites());
  }
  SiteMatrix all(static_cast<Index>(d), total);
  Index off = 0;
  for (const auto& p : parts) {
    all.middleCols(off, p.cols()) = p;
    off += p.cols();
  }
  return LatticeRegion::from_sites(std::move(all));
}

LatticeRegion
boundary(const LatticeRegion& region)
{
  const Index d = region.dimension();
  const Index n = region.size();
  std::vector<Index> keep;

  if (region.box()) {
    const auto& b = *region.box();
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < d; ++k) {
        const auto c = region.sites()(k, j);
        if (c == b.origin(k) || c == b.origin(k) + b.sides[static_cast<std::size_t>(k)] - 1) {
          keep.push_back(j);
          break;
        }
      }
    }
  } else {
    // enumerate the 3^d - 1 unit sup-norm offsets
    Index n_offsets = 1;
    for (Index k = 0; k < d; ++k)
      n_offsets *= 3;
    Site probe(d);
    for (Index j = 0; j < n; ++j) {
      bool on_boundary = false;
      for (Index o = 0; o < n_offsets && !on_boundary; ++o) {
        Index code = o;
        bool zero = true;
        for (Index k = 0; k < d; ++k) {
          const auto step = static_cast<std::int64_t>(code % 3) - 1;
          code /= 3;
          zero = zero && step == 0;
          probe(k) = region.sites()(k, j) + step;
        }
        if (!zero && !region.contains(probe))
          on_boundary = true;
      }
      if (on_boundary)
        keep.push_back(j);
    }
  }

  SiteMatrix out(d, static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i)
    out.col(static_cast<Index>(i)) = region.sites().col(keep[i]);
  return LatticeRegion::from_sites(std::move(out));
}

RegionSequenceReport
check_region_sequence(std::span<const LatticeRegion> regions)
{
  RegionSequenceReport report;
  for (const auto& r : regions) {
    RegionSequenceEntry e;
    e.size = r.size();
    e.boundary_size = boundary(r).size();
    e.ratio = static_cast<double>(e.boundary_size) / static_cast<double>(e.size);
    report.entries.push_back(e);
  }
  const auto& es = report.entries;
  if (es.empty())
    return report;

  report.sizes_strictly_increasing = es.size() > 1;
  for (std::size_t i = 1; i < es.size(); ++i) {
    if (es[i].size <= es[i - 1].size)
      report.sizes_strictly_increasing = false;
  }

  report.ratio_nonincreasing_tail = true;
  for (std::size_t i = es.size() / 2 + 1; i < es.size(); ++i) {
    if (es[i].ratio > es[i - 1].ratio)
      report.ratio_nonincreasing_tail = false;
  }
  report.consistent = report.sizes_strictly_increasing && report.ratio_nonincreasing_tail &&
                      es.back().ratio < es.front().ratio;
  return report;
}

} // namespace deconvrf
