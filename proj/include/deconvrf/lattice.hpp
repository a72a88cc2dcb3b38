#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace deconvrf {

using Index = Eigen::Index;

/// Integer lattice point of Z^d.
using Site = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Sites stored column-wise: a d x N matrix.
using SiteMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Sup-norm |s| = max_k |s_k|.
std::int64_t sup_norm(const Eigen::Ref<const Site>& s);

/// Strict lexicographic order on two sites of equal dimension.
bool lex_less(const Eigen::Ref<const Site>& a, const Eigen::Ref<const Site>& b);

Site make_site(std::initializer_list<std::int64_t> coords);

/// Number of sites with sup-norm exactly m in Z^d: (2m+1)^d - (2m-1)^d,
/// and 1 for m = 0.
double shell_count(int dimension, std::int64_t m);

/// Finite region of Z^d with sites held in strictly increasing
/// lexicographic order. Column k of `sites()` is the (k+1)-th site in that
/// enumeration. Immutable after construction.
class LatticeRegion
{
public:
  struct Box
  {
    Site origin;
    std::vector<std::int64_t> sides;
  };

  /// Sorts, removes duplicates. Throws std::invalid_argument on an empty
  /// matrix or zero dimension.
  static LatticeRegion from_sites(SiteMatrix sites);

  int dimension() const { return static_cast<int>(sites_.rows()); }
  Index size() const { return sites_.cols(); }
  const SiteMatrix& sites() const { return sites_; }
  Site site(Index k) const { return sites_.col(k); }

  /// Position of `s` in the enumeration, or -1.
  Index index_of(const Eigen::Ref<const Site>& s) const;
  bool contains(const Eigen::Ref<const Site>& s) const { return index_of(s) >= 0; }

  /// Componentwise bounding box corners.
  const Site& lower() const { return lower_; }
  const Site& upper() const { return upper_; }

  /// Set when the region is a full box (rect regions, or any region that
  /// happens to fill its bounding box).
  const std::optional<Box>& box() const { return box_; }

  LatticeRegion translated(const Eigen::Ref<const Site>& v) const;

private:
  explicit LatticeRegion(SiteMatrix sorted);

  SiteMatrix sites_;
  Site lower_;
  Site upper_;
  std::optional<Box> box_;
};

LatticeRegion make_rect_region(std::span<const std::int64_t> side_lengths, const Site& origin);
LatticeRegion make_rect_region(std::span<const std::int64_t> side_lengths);

/// Union of d boxes anchored at the origin: box k has length arm_lengths[k]
/// along axis k and `thickness` along every other axis.
LatticeRegion make_l_shaped_region(std::span<const std::int64_t> arm_lengths, std::int64_t thickness);

/// Sites of the region having a sup-norm neighbour outside it.
LatticeRegion boundary(const LatticeRegion& region);

struct RegionSequenceEntry
{
  Index size = 0;
  Index boundary_size = 0;
  double ratio = 0.0;
};

struct RegionSequenceReport
{
  std::vector<RegionSequenceEntry> entries;
  bool sizes_strictly_increasing = false;
  /// |dL|/|L| non-increasing over the second half of the sequence.
  bool ratio_nonincreasing_tail = false;
  /// Increasing sizes and a boundary ratio that actually shrinks; false flags
  /// a sequence that cannot satisfy the vanishing boundary condition.
  bool consistent = false;
};

RegionSequenceReport check_region_sequence(std::span<const LatticeRegion> regions);

} // namespace deconvrf
