#include "gangtrack/geo_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gangtrack/errors.hpp"

namespace gangtrack {

Grid::Grid(GeoPoint south_west, int rows, int cols, double cell_km, const KmScale& scale)
    : origin_(south_west), rows_(rows), cols_(cols), cell_km_(cell_km), scale_(scale) {
  if (rows <= 0 || cols <= 0 || !(cell_km > 0.0)) throw InvalidParameter("grid needs positive shape and cell size");
}

Grid Grid::covering(const BoundingBox& box, double cell_km, const KmScale& scale) {
  if (!(box.lon_max > box.lon_min) || !(box.lat_max > box.lat_min)) throw InvalidParameter("empty bounding box");
  if (!(cell_km > 0.0)) throw InvalidParameter("cell size must be positive");
  const double width = scale.east_km(box.lon_max - box.lon_min);
  const double height = scale.north_km(box.lat_max - box.lat_min);
  const int cols = std::max(1, static_cast<int>(std::ceil(width / cell_km - 1e-9)));
  const int rows = std::max(1, static_cast<int>(std::ceil(height / cell_km - 1e-9)));
  return Grid({box.lon_min, box.lat_min}, rows, cols, cell_km, scale);
}

BoundingBox Grid::bounds() const {
  return {origin_.lon, origin_.lat, origin_.lon + cols_ * cell_km_ * scale_.delta_lon,
          origin_.lat + rows_ * cell_km_ * scale_.delta_lat};
}

GeoPoint Grid::center(int row, int col) const {
  return {origin_.lon + (col + 0.5) * cell_km_ * scale_.delta_lon,
          origin_.lat + (row + 0.5) * cell_km_ * scale_.delta_lat};
}

std::optional<std::size_t> Grid::cell_of(const GeoPoint& p) const {
  if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) return std::nullopt;
  const double x = (p.lon - origin_.lon) / (cell_km_ * scale_.delta_lon);
  const double y = (p.lat - origin_.lat) / (cell_km_ * scale_.delta_lat);
  if (x < 0.0 || y < 0.0 || x > cols_ || y > rows_) return std::nullopt;
  const int col = std::min(cols_ - 1, static_cast<int>(x));
  const int row = std::min(rows_ - 1, static_cast<int>(y));
  return index(row, col);
}

std::size_t Grid::require_cell(const GeoPoint& p) const {
  const auto c = cell_of(p);
  if (!c) throw OutOfRegion("location (" + std::to_string(p.lon) + ", " + std::to_string(p.lat) + ") is outside the grid");
  return *c;
}

void ForestRaster::validate(const Grid& grid) const {
  if (density.size() != grid.size()) throw InvalidParameter("forest raster does not match the grid shape");
  for (double v : density) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidParameter("forest density must lie in [0, 1]");
  }
}

double ExpertPrior::mass() const {
  double s = 0.0;
  for (double v : density) s += v;
  return s * grid.cell_area();
}

namespace {

struct Vec2 {
  double x, y;
};

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Andrew's monotone chain; counter-clockwise, collinear points dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double hull_distance(const std::vector<Vec2>& hull, const Vec2& p) {
  if (hull.size() == 1) return std::hypot(p.x - hull[0].x, p.y - hull[0].y);
  if (hull.size() == 2) return segment_distance(p, hull[0], hull[1]);
  bool inside = true;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    if (cross(a, b, p) < 0) inside = false;
    best = std::min(best, segment_distance(p, a, b));
  }
  return inside ? 0.0 : best;
}

std::vector<Vec2> project(std::span<const GeoPoint> pts, const GeoPoint& origin, const KmScale& scale) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({scale.east_km(p.lon - origin.lon), scale.north_km(p.lat - origin.lat)});
  return out;
}

}  // namespace

double distance_to_hull_km(std::span<const GeoPoint> pts, const GeoPoint& p, const KmScale& scale) {
  if (pts.empty()) throw InsufficientHistory("convex hull needs at least one point");
  const GeoPoint origin = pts.front();
  const auto hull = convex_hull(project(pts, origin, scale));
  return hull_distance(hull, {scale.east_km(p.lon - origin.lon), scale.north_km(p.lat - origin.lat)});
}

std::vector<bool> extended_hull_mask(std::span<const GeoPoint> recent, double buffer_km, const Grid& grid) {
  if (recent.empty()) throw InsufficientHistory("extended hull needs at least one recent location");
  const auto& scale = grid.scale();
  const GeoPoint origin = recent.front();
  const auto hull = convex_hull(project(recent, origin, scale));
  std::vector<bool> mask(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GeoPoint c = grid.center(i);
    mask[i] = hull_distance(hull, {scale.east_km(c.lon - origin.lon), scale.north_km(c.lat - origin.lat)}) <= buffer_km;
  }
  return mask;
}

std::vector<IntelInput> fresh_intel(std::span<const IntelInput> intel, int today, const PriorConfig& cfg) {
  std::vector<IntelInput> out;
  for (const auto& in : intel) {
    if (in.received_day <= today && today - in.received_day <= cfg.intel_fresh_days) out.push_back(in);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const IntelInput& a, const IntelInput& b) { return a.received_day > b.received_day; });
  return out;
}

ExpertPrior build_expert_prior(const Grid& grid, const ForestRaster& forest, const CampSet& camps,
                               std::span<const GeoPoint> recent, std::span<const IntelInput> intel,
                               int today, const PriorConfig& cfg) {
  forest.validate(grid);
  const auto& scale = grid.scale();
  const auto hull = extended_hull_mask(recent, cfg.buffer_km, grid);
  auto fresh = fresh_intel(intel, today, cfg);
  if (fresh.size() > 2) fresh.resize(2);

  ExpertPrior prior{grid, std::vector<double>(grid.size(), 0.0), std::vector<bool>(grid.size(), false),
                    std::vector<int>(grid.size(), 0), !fresh.empty(), false};
  long total = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GeoPoint c = grid.center(i);
    double camp = std::numeric_limits<double>::infinity();
    for (const auto& k : camps) camp = std::min(camp, dist_km(c, k, scale));
    const bool favoured = forest.density[i] >= cfg.forest_threshold && camp > cfg.camp_km && hull[i];
    int level = favoured ? 1 : 0;
    for (const auto& in : fresh) {
      if (dist_km(c, in.location, scale) <= cfg.intel_radius_km) ++level;
    }
    prior.raw_levels[i] = level;
    total += level;
  }

  std::vector<double> weight(grid.size(), 0.0);
  if (total > 0) {
    for (std::size_t i = 0; i < grid.size(); ++i) weight[i] = prior.raw_levels[i];
  } else {
    prior.fallback = true;
    const bool any_hull = std::find(hull.begin(), hull.end(), true) != hull.end();
    for (std::size_t i = 0; i < grid.size(); ++i) weight[i] = (!any_hull || hull[i]) ? 1.0 : 0.0;
  }
  double sum = 0.0;
  for (double w : weight) sum += w;
  const double norm = 1.0 / (sum * grid.cell_area());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    prior.density[i] = weight[i] * norm;
    prior.support_mask[i] = weight[i] > 0.0;
  }
  return prior;
}

double prior_credibility(bool intel_fresh, const PriorConfig& cfg) {
  return intel_fresh ? cfg.p_with_intel : cfg.p_without_intel;
}

}  // namespace gangtrack
