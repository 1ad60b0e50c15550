#pragma once

#include "sphflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace sphflow {

/// Uniform cell list over a fixed set of positions. Only occupied cells are
/// stored (sorted by linear cell key), so sparse domains stay cheap.
///
/// Pair iteration order is canonical: cells in key order, particles inside a
/// cell in ascending index order. Callers that accumulate forces in that
/// order get bit-identical sums across runs.
class NeighborGrid {
 public:
  NeighborGrid() = default;

  NeighborGrid(std::span<const Vec3> positions, double cell_size, int dimensionality)
      : positions_(positions), cell_(cell_size), dim_(dimensionality) {
    if (positions.empty()) return;
    lo_ = positions[0];
    Vec3 hi = positions[0];
    for (const auto& p : positions) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    for (int a = 0; a < 3; ++a)
      dims_[a] = static_cast<std::int64_t>(std::floor((hi[a] - lo_[a]) / cell_)) + 1;
    if (dim_ == 2) dims_[1] = 1;

    const std::size_t n = positions.size();
    std::vector<std::uint64_t> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = key_of(coords_of(positions[i]));
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint64_t key = keys[order_[k]];
      if (cells_.empty() || cells_.back().key != key) cells_.push_back({key, k, k});
      cells_.back().end = k + 1;
    }
  }

  double cell_size() const { return cell_; }
  std::size_t occupied_cells() const { return cells_.size(); }

  /// Calls f(i, j, r_ij, |r_ij|) once per unordered pair closer than
  /// `radius` (which must not exceed the cell size), with r_ij = x_i - x_j.
  template <class F>
  void for_each_pair(double radius, F&& f) const {
    const double r2max = radius * radius;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const Cell& cell = cells_[c];
      const auto base = coords_of_key(cell.key);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = (dim_ == 2 ? 0 : -1); dy <= (dim_ == 2 ? 0 : 1); ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const std::int64_t nx = base[0] + dx, ny = base[1] + dy, nz = base[2] + dz;
            if (!inside(nx, ny, nz)) continue;
            const std::uint64_t nkey = key_of({nx, ny, nz});
            if (nkey < cell.key) continue;
            const Cell* other = find_cell(nkey);
            if (!other) continue;
            const bool same = nkey == cell.key;
            for (std::size_t a = cell.begin; a < cell.end; ++a) {
              const std::uint32_t i = order_[a];
              for (std::size_t b = same ? a + 1 : other->begin; b < other->end; ++b) {
                const std::uint32_t j = order_[b];
                const Vec3 rij = positions_[i] - positions_[j];
                const double r2 = rij.squaredNorm();
                if (r2 < r2max) {
                  if (i < j)
                    f(i, j, rij, std::sqrt(r2));
                  else
                    f(j, i, Vec3(-rij), std::sqrt(r2));
                }
              }
            }
          }
    }
  }

  /// Calls f(j, |x - x_j|) for every indexed particle closer than `radius`
  /// (<= cell size) to the query point.
  template <class F>
  void for_each_near(const Vec3& x, double radius, F&& f) const {
    if (cells_.empty()) return;
    const double r2max = radius * radius;
    const auto base = coords_of(x);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = (dim_ == 2 ? 0 : -1); dy <= (dim_ == 2 ? 0 : 1); ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const std::int64_t nx = base[0] + dx, ny = base[1] + dy, nz = base[2] + dz;
          if (!inside(nx, ny, nz)) continue;
          const Cell* cell = find_cell(key_of({nx, ny, nz}));
          if (!cell) continue;
          for (std::size_t a = cell->begin; a < cell->end; ++a) {
            const std::uint32_t j = order_[a];
            const double r2 = (positions_[j] - x).squaredNorm();
            if (r2 < r2max) f(j, std::sqrt(r2));
          }
        }
  }

 private:
  struct Cell {
    std::uint64_t key;
    std::size_t begin;
    std::size_t end;
  };
  using Coords = std::array<std::int64_t, 3>;

  Coords coords_of(const Vec3& p) const {
    Coords c{};
    for (int a = 0; a < 3; ++a) c[a] = static_cast<std::int64_t>(std::floor((p[a] - lo_[a]) / cell_));
    if (dim_ == 2) c[1] = 0;
    return c;
  }
  bool inside(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_[0] && y < dims_[1] && z < dims_[2];
  }
  std::uint64_t key_of(const Coords& c) const {
    return static_cast<std::uint64_t>(c[0] + dims_[0] * (c[1] + dims_[1] * c[2]));
  }
  Coords coords_of_key(std::uint64_t key) const {
    const auto k = static_cast<std::int64_t>(key);
    return {k % dims_[0], (k / dims_[0]) % dims_[1], k / (dims_[0] * dims_[1])};
  }
  const Cell* find_cell(std::uint64_t key) const {
    auto it = std::lower_bound(cells_.begin(), cells_.end(), key,
                               [](const Cell& c, std::uint64_t k) { return c.key < k; });
    return (it != cells_.end() && it->key == key) ? &*it : nullptr;
  }

  std::span<const Vec3> positions_;
  double cell_ = 1.0;
  int dim_ = 3;
  Vec3 lo_ = Vec3::Zero();
  std::array<std::int64_t, 3> dims_{1, 1, 1};
  std::vector<std::uint32_t> order_;
  std::vector<Cell> cells_;
};

}  // namespace sphflow
