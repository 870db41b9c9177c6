#include "gangtrack/geo.hpp"

#include <numbers>

namespace gangtrack {

KmScale KmScale::at_latitude(double ref_lat_deg) {
  KmScale s;
  s.ref_lat = ref_lat_deg;
  s.delta_lat = 1.0 / 110.574;
  s.delta_lon = 1.0 / (111.320 * std::cos(ref_lat_deg * std::numbers::pi / 180.0));
  return s;
}

double dist_km(const GeoPoint& a, const GeoPoint& b, const KmScale& scale) {
  return std::hypot(scale.east_km(a.lon - b.lon), scale.north_km(a.lat - b.lat));
}

}  // namespace gangtrack
