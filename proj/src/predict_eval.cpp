#include "gangtrack/predict_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "gangtrack/errors.hpp"

namespace gangtrack {

double PredictiveDensity::mass() const {
  return std::accumulate(values.begin(), values.end(), 0.0) * grid.cell_area();
}

void accumulate_model_density(const ConditionalModel& model, const MixtureCoefficients& coeffs, double h,
                              double weight, const Grid& grid, std::vector<double>& out) {
  const auto& scale = grid.scale();
  const auto& pts = model.observed_points();
  std::vector<double> ex(static_cast<std::size_t>(grid.cols()));
  std::vector<double> ey(static_cast<std::size_t>(grid.rows()));
  std::vector<double> xs(ex.size()), ys(ey.size());
  for (int c = 0; c < grid.cols(); ++c) xs[static_cast<std::size_t>(c)] = grid.center(0, c).lon;
  for (int r = 0; r < grid.rows(); ++r) ys[static_cast<std::size_t>(r)] = grid.center(r, 0).lat;

  for (int m = 0; m < coeffs.levels; ++m) {
    const double sigma2 = (m + 1.0) * h * h;  // km²
    const double norm = 1.0 / (2.0 * std::numbers::pi * sigma2);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double cw = coeffs.at(m, j) * weight;
      if (!(cw > 0.0)) continue;
      for (std::size_t c = 0; c < ex.size(); ++c) {
        const double dx = scale.east_km(xs[c] - pts[j].lon);
        ex[c] = std::exp(-dx * dx / (2.0 * sigma2));
      }
      for (std::size_t r = 0; r < ey.size(); ++r) {
        const double dy = scale.north_km(ys[r] - pts[j].lat);
        ey[r] = std::exp(-dy * dy / (2.0 * sigma2));
      }
      const double scale_cw = cw * norm;
      for (std::size_t r = 0; r < ey.size(); ++r) {
        const double fy = scale_cw * ey[r];
        if (fy == 0.0) continue;
        double* row = &out[r * ex.size()];
        for (std::size_t c = 0; c < ex.size(); ++c) row[c] += fy * ex[c];
      }
    }
  }
}

PredictiveDensity predictive_density(const ParticleSet& ps, const Track& track, int day,
                                     const ExpertPrior* expert_prior, double p_n, const Grid& grid,
                                     LikelihoodVariant variant) {
  if (!(p_n >= 0.0 && p_n <= 1.0)) throw InvalidParameter("credibility weight must lie in [0, 1]");
  if (p_n > 0.0 && expert_prior == nullptr) throw InvalidParameter("positive credibility weight without an expert map");
  if (expert_prior != nullptr && expert_prior->density.size() != grid.size()) {
    throw InvalidParameter("expert map does not match the prediction grid");
  }
  const ConditionalModel model(track, day);

  PredictiveDensity pd{grid, {}, {}, std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), 0.0),
                       p_n, day, track.gang_id};
  const double total_w = std::accumulate(ps.weights.begin(), ps.weights.end(), 0.0);
  if (p_n < 1.0) {
    if (!(total_w > 0.0)) throw DegeneratePosterior("particle set carries no mass");
    std::map<double, MixtureCoefficients> by_theta;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double w = ps.weights[i] / total_w;
      if (!(w > 0.0)) continue;
      const auto& p = ps.particles[i];
      auto it = by_theta.find(p.theta);
      if (it == by_theta.end()) it = by_theta.emplace(p.theta, model.coefficients(p.theta, variant)).first;
      accumulate_model_density(model, it->second, p.h, w, grid, pd.data_part);
    }
  }
  if (expert_prior != nullptr) pd.expert_part = expert_prior->density;

  pd.blend.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pd.blend[i] = (1.0 - p_n) * pd.data_part[i] + p_n * pd.expert_part[i];
  const double mass = std::accumulate(pd.blend.begin(), pd.blend.end(), 0.0) * grid.cell_area();
  if (!(mass > 0.0)) throw DegeneratePosterior("predictive density vanishes on the grid");
  pd.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pd.values[i] = pd.blend[i] / mass;
  return pd;
}

double ram(const PredictiveDensity& pd, const GeoPoint& actual) {
  const double at = pd.values[pd.grid.require_cell(actual)];
  const auto count = std::count_if(pd.values.begin(), pd.values.end(), [at](double v) { return v >= at; });
  return static_cast<double>(count) * pd.grid.cell_area();
}

std::vector<std::size_t> ranked_cells(const PredictiveDensity& pd) {
  std::vector<std::size_t> order(pd.values.size());
  std::iota(order.begin(), order.end(), 0);
  // Index order equals (row, col) order, so a stable sort on density settles ties.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pd.values[a] > pd.values[b]; });
  return order;
}

std::vector<double> default_p_grid() {
  std::vector<double> p(100);
  for (int k = 1; k <= 100; ++k) p[static_cast<std::size_t>(k - 1)] = k / 100.0;
  return p;
}

ProximityCurve proximity_curve(const PredictiveDensity& pd, const GeoPoint& actual, std::span<const double> p_grid) {
  const std::size_t own = pd.grid.require_cell(actual);
  for (std::size_t k = 0; k < p_grid.size(); ++k) {
    if (!(p_grid[k] > 0.0 && p_grid[k] <= 1.0) || (k > 0 && p_grid[k] <= p_grid[k - 1])) {
      throw InvalidParameter("fractions must be increasing within (0, 1]");
    }
  }
  const auto order = ranked_cells(pd);
  std::vector<double> prefix_min(order.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double d = order[i] == own ? 0.0 : dist_km(pd.grid.center(order[i]), actual, pd.grid.scale());
    best = std::min(best, d);
    prefix_min[i] = best;
  }
  ProximityCurve curve;
  const double cells = static_cast<double>(order.size());
  for (double p : p_grid) {
    auto k = static_cast<std::size_t>(std::ceil(p * cells - 1e-9));
    k = std::clamp<std::size_t>(k, 1, order.size());
    curve.p.push_back(p);
    curve.m_km.push_back(prefix_min[k - 1]);
  }
  return curve;
}

double aupc(const ProximityCurve& curve) {
  if (curve.p.size() < 2 || curve.p.size() != curve.m_km.size()) {
    throw InvalidParameter("proximity curve needs at least two samples");
  }
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < curve.p.size(); ++k) {
    area += (curve.p[k + 1] - curve.p[k]) * (curve.m_km[k] + curve.m_km[k + 1]) / 2.0;
  }
  return area / (curve.p.back() - curve.p.front());
}

std::vector<int> top_area_bands(const PredictiveDensity& pd, std::span<const double> area_limits_km2) {
  std::vector<int> band(pd.values.size(), -1);
  const auto order = ranked_cells(pd);
  double cum = 0.0;
  std::size_t b = 0;
  for (std::size_t idx : order) {
    cum += pd.grid.cell_area();
    while (b < area_limits_km2.size() && cum > area_limits_km2[b] + 1e-9) ++b;
    if (b == area_limits_km2.size()) break;
    band[idx] = static_cast<int>(b);
  }
  return band;
}

void write_svg_heatmap(std::ostream& os, const PredictiveDensity& pd, const GeoPoint* actual) {
  constexpr int kCell = 8;
  const Grid& g = pd.grid;
  const int width = g.cols() * kCell;
  const int height = g.rows() * kCell;
  const double top = *std::max_element(pd.values.begin(), pd.values.end());
  static constexpr double kBands[] = {500.0, 1000.0};
  const auto bands = top_area_bands(pd, kBands);
  char buf[160];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int x = g.col_of(i) * kCell;
    const int y = (g.rows() - 1 - g.row_of(i)) * kCell;
    if (bands[i] == 0) {
      std::snprintf(buf, sizeof buf, "#d62728");
    } else if (bands[i] == 1) {
      std::snprintf(buf, sizeof buf, "#ff9f1c");
    } else {
      const int shade = top > 0.0 ? 255 - static_cast<int>(std::lround(200.0 * pd.values[i] / top)) : 255;
      std::snprintf(buf, sizeof buf, "#%02x%02x%02x", shade, shade, 255);
    }
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell
       << "\" fill=\"" << buf << "\"/>\n";
  }
  if (actual != nullptr) {
    if (const auto cell = g.cell_of(*actual)) {
      const int x = g.col_of(*cell) * kCell + kCell / 2;
      const int y = (g.rows() - 1 - g.row_of(*cell)) * kCell + kCell / 2;
      os << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << kCell / 2 << "\" fill=\"#1f77b4\"/>\n";
    }
  }
  os << "</svg>\n";
}

std::vector<GangComparison> compare_variants(std::span<const AssessmentRecord> records, const std::string& a,
                                             const std::string& b) {
  std::map<std::string, std::map<int, const AssessmentRecord*>> va, vb;
  for (const auto& r : records) {
    if (r.variant == a) va[r.gang_id][r.instance] = &r;
    if (r.variant == b) vb[r.gang_id][r.instance] = &r;
  }
  std::set<std::string> gangs;
  for (const auto& [g, _] : va) gangs.insert(g);
  for (const auto& [g, _] : vb) gangs.insert(g);

  std::vector<GangComparison> out;
  for (const auto& gang : gangs) {
    const auto& ra = va[gang];
    const auto& rb = vb[gang];
    if (ra.size() != rb.size() ||
        !std::equal(ra.begin(), ra.end(), rb.begin(), [](const auto& x, const auto& y) { return x.first == y.first; })) {
      throw AlignmentError("variants " + a + " and " + b + " cover different instances of gang " + gang);
    }
    GangComparison gc;
    gc.gang_id = gang;
    gc.instances = static_cast<int>(ra.size());
    std::vector<int> ram_win, aupc_win;
    int ram_le = 0, aupc_le = 0;
    for (auto ia = ra.begin(), ib = rb.begin(); ia != ra.end(); ++ia, ++ib) {
      const auto& x = *ia->second;
      const auto& y = *ib->second;
      ram_win.push_back(x.ram_km2 < y.ram_km2 ? 1 : 0);
      aupc_win.push_back(x.aupc_km < y.aupc_km ? 1 : 0);
      ram_le += x.ram_km2 <= y.ram_km2 ? 1 : 0;
      aupc_le += x.aupc_km <= y.aupc_km ? 1 : 0;
    }
    const double n = gc.instances;
    if (gc.instances > 0) {
      gc.ram_better_pct = 100.0 * std::accumulate(ram_win.begin(), ram_win.end(), 0) / n;
      gc.aupc_better_pct = 100.0 * std::accumulate(aupc_win.begin(), aupc_win.end(), 0) / n;
      gc.ram_at_least_pct = 100.0 * ram_le / n;
      gc.aupc_at_least_pct = 100.0 * aupc_le / n;
    }
    for (std::size_t k = 0; k < ram_win.size(); ++k) {
      const double len = static_cast<double>(ram_win.size() - k);
      gc.trailing_ram_better_pct.push_back(100.0 * std::accumulate(ram_win.begin() + static_cast<long>(k), ram_win.end(), 0) / len);
      gc.trailing_aupc_better_pct.push_back(100.0 * std::accumulate(aupc_win.begin() + static_cast<long>(k), aupc_win.end(), 0) / len);
    }
    out.push_back(std::move(gc));
  }
  return out;
}

}  // namespace gangtrack
