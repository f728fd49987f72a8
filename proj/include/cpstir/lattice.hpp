#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace cpstir {

inline constexpr int kMaxDim = 3;

/// Throws std::invalid_argument unless 1 <= dim <= kMaxDim.
void check_dimension(int dim);

/// Number of nearest neighbours of a site of Z^dim.
constexpr int num_directions(int dim) noexcept { return 2 * dim; }

/// A point of Z^d, d in {1, 2, 3}.
///
/// Directions are indexed 0..2d-1 in the fixed order +e_1, -e_1, +e_2, -e_2,
/// ...; every neighbour enumeration and tie-break in the library uses it.
class Site {
 public:
  Site() = default;
  Site(std::initializer_list<std::int64_t> coords);

  static Site origin(int dim);
  /// Site from the first `dim` entries of `coords`; the rest must be zero.
  static Site from_coords(int dim, const std::array<std::int64_t, kMaxDim>& coords);
  /// Unit vector for direction index `direction` (see class comment).
  static Site unit(int dim, int direction);

  int dim() const noexcept { return dim_; }
  std::int64_t operator[](int axis) const noexcept { return c_[axis]; }

  Site shifted(int direction) const noexcept {
    Site s = *this;
    s.c_[direction >> 1] += (direction & 1) ? -1 : 1;
    return s;
  }

  std::int64_t l1_norm() const noexcept;
  bool is_origin() const noexcept { return c_[0] == 0 && c_[1] == 0 && c_[2] == 0; }
  /// True iff the site is a neighbour of the origin, i.e. in N_0.
  bool is_unit() const noexcept { return l1_norm() == 1; }

  /// Direction index d with `*this == origin.shifted(d)`; -1 if not a unit vector.
  int unit_direction() const noexcept;

  friend Site operator+(const Site& a, const Site& b) noexcept;
  friend Site operator-(const Site& a, const Site& b) noexcept;
  Site operator-() const noexcept;
  friend bool operator==(const Site& a, const Site& b) noexcept {
    return a.dim_ == b.dim_ && a.c_ == b.c_;
  }

  std::string to_string() const;

 private:
  std::array<std::int64_t, kMaxDim> c_{};
  std::uint8_t dim_ = 0;
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept;
};

/// The 2d sites at L1 distance one, in direction-index order.
std::vector<Site> neighbors(const Site& x);

/// The direction opposite to `direction`.
constexpr int opposite(int direction) noexcept { return direction ^ 1; }

}  // namespace cpstir
