#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sseek/common.hpp"

namespace sseek {

// Binary 2-D occupancy grid. World points outside the grid bounds are free
// space, so a default-constructed grid is an unbounded obstacle-free world.
//
// File format (plain text, '#' comment lines allowed before the rows):
//   width W
//   height H
//   resolution R
//   origin OX OY
// followed by H rows of W characters ('0' free, '1' occupied). The first row
// is the y=0 row (cells adjacent to the origin), rows increase in y.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;

  OccupancyGrid(int width_cells, int height_cells, double resolution, Vec2 origin)
      : width_(width_cells), height_(height_cells), resolution_(resolution), origin_(origin),
        cells_(static_cast<size_t>(width_cells) * height_cells, 0) {
    if (width_cells < 1 || height_cells < 1)
      throw invalid_input_error("grid dimensions must be >= 1");
    if (!(resolution > 0.0))
      throw invalid_input_error("grid resolution must be > 0");
  }

  int width_cells() const { return width_; }
  int height_cells() const { return height_; }
  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }

  bool has_occupied_cells() const { return occupied_count_ > 0; }

  bool occupied(int ix, int iy) const {
    if (ix < 0 || iy < 0 || ix >= width_ || iy >= height_) return false;
    return cells_[static_cast<size_t>(iy) * width_ + ix] != 0;
  }

  bool occupied_at(const Vec2& p) const {
    const double fx = (p.x() - origin_.x()) / resolution_;
    const double fy = (p.y() - origin_.y()) / resolution_;
    if (fx < 0.0 || fy < 0.0 || fx >= width_ || fy >= height_) return false;
    return occupied(static_cast<int>(fx), static_cast<int>(fy));
  }

  void set(int ix, int iy, bool value) {
    if (ix < 0 || iy < 0 || ix >= width_ || iy >= height_)
      throw invalid_input_error("cell index out of range");
    auto& c = cells_[static_cast<size_t>(iy) * width_ + ix];
    occupied_count_ += (value ? 1 : 0) - (c ? 1 : 0);
    c = value ? 1 : 0;
  }

  // Marks every cell whose center lies in [x0,x1) x [y0,y1) (world coords).
  void fill_rect(double x0, double y0, double x1, double y1) {
    for (int iy = 0; iy < height_; ++iy)
      for (int ix = 0; ix < width_; ++ix) {
        const double cx = origin_.x() + (ix + 0.5) * resolution_;
        const double cy = origin_.y() + (iy + 0.5) * resolution_;
        if (cx >= x0 && cx < x1 && cy >= y0 && cy < y1) set(ix, iy, true);
      }
  }

  // Total length of segment p->q inside occupied cells, by exact cell walk.
  double wall_distance(const Vec2& p, const Vec2& q) const {
    if (!finite(p) || !finite(q))
      throw invalid_input_error("wall_distance: non-finite coordinates");
    if (occupied_count_ == 0) return 0.0;

    const Vec2 d = q - p;
    const double seg_len = d.norm();
    if (seg_len == 0.0) return 0.0;

    // Clip [0,1] segment parameter range to the grid bounding box.
    double t0 = 0.0, t1 = 1.0;
    const double lo[2] = {origin_.x(), origin_.y()};
    const double hi[2] = {origin_.x() + width_ * resolution_, origin_.y() + height_ * resolution_};
    for (int ax = 0; ax < 2; ++ax) {
      const double pa = p[ax], da = d[ax];
      if (da == 0.0) {
        if (pa < lo[ax] || pa > hi[ax]) return 0.0;
      } else {
        double ta = (lo[ax] - pa) / da;
        double tb = (hi[ax] - pa) / da;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 >= t1) return 0.0;
      }
    }

    // Amanatides-Woo walk over the clipped range, accumulating the chord
    // length inside occupied cells.
    const Vec2 start = p + t0 * d;
    double fx = (start.x() - origin_.x()) / resolution_;
    double fy = (start.y() - origin_.y()) / resolution_;
    int ix = std::clamp(static_cast<int>(std::floor(fx)), 0, width_ - 1);
    int iy = std::clamp(static_cast<int>(std::floor(fy)), 0, height_ - 1);

    const int step_x = d.x() > 0.0 ? 1 : (d.x() < 0.0 ? -1 : 0);
    const int step_y = d.y() > 0.0 ? 1 : (d.y() < 0.0 ? -1 : 0);
    const double inf = std::numeric_limits<double>::infinity();
    const double t_delta_x = step_x != 0 ? resolution_ / std::abs(d.x()) : inf;
    const double t_delta_y = step_y != 0 ? resolution_ / std::abs(d.y()) : inf;

    auto boundary_t = [&](int idx, int step, double origin_c, double pc, double dc) {
      const double edge = origin_c + (idx + (step > 0 ? 1 : 0)) * resolution_;
      return (edge - pc) / dc;
    };
    double t_max_x = step_x != 0 ? boundary_t(ix, step_x, origin_.x(), p.x(), d.x()) : inf;
    double t_max_y = step_y != 0 ? boundary_t(iy, step_y, origin_.y(), p.y(), d.y()) : inf;

    double total = 0.0;
    double t_prev = t0;
    while (t_prev < t1) {
      double t_next;
      int nix = ix, niy = iy;
      if (t_max_x < t_max_y) {
        t_next = t_max_x;
        t_max_x += t_delta_x;
        nix += step_x;
      } else {
        t_next = t_max_y;
        t_max_y += t_delta_y;
        niy += step_y;
      }
      const double t_end = std::min(t_next, t1);
      if (t_end > t_prev && occupied(ix, iy)) total += (t_end - t_prev) * seg_len;
      if (t_next >= t1) break;
      t_prev = t_next;
      ix = nix;
      iy = niy;
      if (ix < 0 || iy < 0 || ix >= width_ || iy >= height_) break;
    }
    return total;
  }

  bool is_los(const Vec2& p, const Vec2& q) const { return wall_distance(p, q) == 0.0; }

  static OccupancyGrid load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open grid file: " + path);
    return parse(in, path);
  }

  static OccupancyGrid parse(std::istream& in, const std::string& name = "<stream>") {
    auto fail = [&](const std::string& msg) -> void {
      throw config_error("grid file " + name + ": " + msg);
    };
    int w = -1, h = -1;
    double res = -1.0;
    Vec2 origin{0.0, 0.0};
    bool have_origin = false;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string key;
      ls >> key;
      if (key == "width") ls >> w;
      else if (key == "height") ls >> h;
      else if (key == "resolution") ls >> res;
      else if (key == "origin") { ls >> origin.x() >> origin.y(); have_origin = true; }
      else fail("unexpected header key '" + key + "'");
      if (!ls) fail("malformed header line '" + line + "'");
      if (w > 0 && h > 0 && res > 0 && have_origin) break;
    }
    if (w < 1 || h < 1 || !(res > 0) || !have_origin)
      fail("incomplete header (need width, height, resolution, origin)");
    OccupancyGrid g(w, h, res, origin);
    int rows = 0;
    while (rows < h && std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      int col = 0;
      for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        if (c != '0' && c != '1') fail("unexpected character in row data");
        if (col >= w) fail("row longer than width");
        g.set(col, rows, c == '1');
        ++col;
      }
      if (col != w) fail("row shorter than width");
      ++rows;
    }
    if (rows != h) fail("fewer rows than height");
    return g;
  }

  void save(std::ostream& out) const {
    out << "width " << width_ << "\n"
        << "height " << height_ << "\n"
        << "resolution " << resolution_ << "\n"
        << "origin " << origin_.x() << " " << origin_.y() << "\n";
    for (int iy = 0; iy < height_; ++iy) {
      for (int ix = 0; ix < width_; ++ix) out << (occupied(ix, iy) ? '1' : '0');
      out << "\n";
    }
  }

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Vec2 origin_{0.0, 0.0};
  std::vector<std::uint8_t> cells_;
  long occupied_count_ = 0;
};

}  // namespace sseek
