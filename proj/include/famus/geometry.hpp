#pragma once

// Planar geometry for the service area. The area is a width x height
// rectangle tiled by a cols x rows grid of equal cells, one cell per server.
// Cell index is row-major: cluster = row * cols + col.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace famus {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

class Area {
 public:
  Area(double width, double height, int cols, int rows)
      : width_(width), height_(height), cols_(cols), rows_(rows) {
    if (width <= 0.0 || height <= 0.0)
      throw std::invalid_argument("Area: dimensions must be positive");
    if (cols <= 0 || rows <= 0)
      throw std::invalid_argument("Area: grid must have positive dimensions");
  }

  // Picks the cols x rows factorization of n whose cells are closest to
  // square. For 10 servers on 100 x 200 m this yields 2 x 5 (50 x 40 m cells).
  static Area tiled(double width, double height, int n) {
    if (n <= 0) throw std::invalid_argument("Area: need at least one cell");
    int best_cols = 1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int cols = 1; cols <= n; ++cols) {
      if (n % cols != 0) continue;
      const int rows = n / cols;
      const double cw = width / cols;
      const double ch = height / rows;
      const double ratio = cw > ch ? cw / ch : ch / cw;
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best_cols = cols;
      }
    }
    return Area(width, height, best_cols, n / best_cols);
  }

  double width() const { return width_; }
  double height() const { return height_; }
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  int cells() const { return cols_ * rows_; }
  double cell_width() const { return width_ / cols_; }
  double cell_height() const { return height_ / rows_; }

  bool contains(const Vec2& p) const {
    return p.x >= 0.0 && p.x <= width_ && p.y >= 0.0 && p.y <= height_;
  }

  // Cells are half-open as (lo, hi] per axis, so a point exactly on a shared
  // edge belongs to the smaller-indexed neighbor. The outer edges clamp.
  int cluster_of(const Vec2& p) const {
    return edge_index(p.y, cell_height(), rows_) * cols_ +
           edge_index(p.x, cell_width(), cols_);
  }

  Vec2 cell_center(int cluster) const {
    if (cluster < 0 || cluster >= cells())
      throw std::out_of_range("Area: cluster index out of range");
    const int col = cluster % cols_;
    const int row = cluster / cols_;
    return {(col + 0.5) * cell_width(), (row + 0.5) * cell_height()};
  }

 private:
  static int edge_index(double v, double cell, int n) {
    int i = static_cast<int>(std::ceil(v / cell)) - 1;
    if (i < 0) i = 0;
    if (i >= n) i = n - 1;
    return i;
  }

  double width_;
  double height_;
  int cols_;
  int rows_;
};

}  // namespace famus
