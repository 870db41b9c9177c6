#pragma once

#include <cmath>

namespace gangtrack {

/// A (longitude, latitude) pair in degrees.
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Displacement between two points, in degrees.
struct Offset {
  double dlon = 0.0;
  double dlat = 0.0;
};

inline Offset operator-(const GeoPoint& a, const GeoPoint& b) {
  return {a.lon - b.lon, a.lat - b.lat};
}

/// Degrees per kilometre along each axis, fixed at a reference latitude
/// (flat-earth equirectangular scaling).
struct KmScale {
  double delta_lon = 1.0 / 111.320;
  double delta_lat = 1.0 / 110.574;
  double ref_lat = 0.0;

  static KmScale at_latitude(double ref_lat_deg);

  /// Converts a displacement in degrees to kilometres along each axis.
  double east_km(double dlon) const { return dlon / delta_lon; }
  double north_km(double dlat) const { return dlat / delta_lat; }

  /// Square degrees per square kilometre; multiplies a per-degree² density
  /// into a per-km² one.
  double deg2_per_km2() const { return delta_lon * delta_lat; }
};

struct BoundingBox {
  double lon_min = 0.0;
  double lat_min = 0.0;
  double lon_max = 0.0;
  double lat_max = 0.0;

  bool contains(const GeoPoint& p) const {
    return p.lon >= lon_min && p.lon <= lon_max && p.lat >= lat_min && p.lat <= lat_max;
  }
  GeoPoint centroid() const { return {(lon_min + lon_max) / 2, (lat_min + lat_max) / 2}; }
};

/// Equirectangular distance in km.
double dist_km(const GeoPoint& a, const GeoPoint& b, const KmScale& scale);

}  // namespace gangtrack
