#include "cpstir/lattice.hpp"

#include <cstdlib>
#include <stdexcept>

#include "cpstir/rng.hpp"

namespace cpstir {

void check_dimension(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("dimension must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
  }
}

Site::Site(std::initializer_list<std::int64_t> coords) {
  const int d = static_cast<int>(coords.size());
  check_dimension(d);
  dim_ = static_cast<std::uint8_t>(d);
  int i = 0;
  for (auto v : coords) c_[i++] = v;
}

Site Site::origin(int dim) {
  check_dimension(dim);
  Site s;
  s.dim_ = static_cast<std::uint8_t>(dim);
  return s;
}

Site Site::from_coords(int dim, const std::array<std::int64_t, kMaxDim>& coords) {
  Site s = origin(dim);
  for (int i = 0; i < dim; ++i) s.c_[i] = coords[i];
  return s;
}

Site Site::unit(int dim, int direction) {
  if (direction < 0 || direction >= num_directions(dim)) {
    throw std::invalid_argument("direction index out of range");
  }
  return origin(dim).shifted(direction);
}

std::int64_t Site::l1_norm() const noexcept {
  return std::llabs(c_[0]) + std::llabs(c_[1]) + std::llabs(c_[2]);
}

int Site::unit_direction() const noexcept {
  if (l1_norm() != 1) return -1;
  for (int axis = 0; axis < dim_; ++axis) {
    if (c_[axis] == 1) return 2 * axis;
    if (c_[axis] == -1) return 2 * axis + 1;
  }
  return -1;
}

Site operator+(const Site& a, const Site& b) noexcept {
  Site s = a;
  for (int i = 0; i < kMaxDim; ++i) s.c_[i] += b.c_[i];
  return s;
}

Site operator-(const Site& a, const Site& b) noexcept {
  Site s = a;
  for (int i = 0; i < kMaxDim; ++i) s.c_[i] -= b.c_[i];
  return s;
}

Site Site::operator-() const noexcept {
  Site s = *this;
  for (auto& v : s.c_) v = -v;
  return s;
}

std::string Site::to_string() const {
  std::string out = "(";
  for (int i = 0; i < dim_; ++i) {
    if (i) out += ',';
    out += std::to_string(c_[i]);
  }
  return out + ")";
}

std::size_t SiteHash::operator()(const Site& s) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(s.dim());
  for (int i = 0; i < kMaxDim; ++i) {
    h = SeededStream::mix(h ^ (static_cast<std::uint64_t>(s[i]) + 0x9e3779b97f4a7c15ULL * (i + 1)));
  }
  return static_cast<std::size_t>(h);
}

std::vector<Site> neighbors(const Site& x) {
  std::vector<Site> out;
  out.reserve(num_directions(x.dim()));
  for (int dir = 0; dir < num_directions(x.dim()); ++dir) out.push_back(x.shifted(dir));
  return out;
}

}  // namespace cpstir
