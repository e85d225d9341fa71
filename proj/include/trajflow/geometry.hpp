#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace trajflow {

inline constexpr double k_earth_radius_m = 6371000.0;
inline constexpr double k_earth_radius_km = 6371.0;

/// WGS84 coordinate pair in degrees.
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Local planar coordinate in meters east/north of a projection origin.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

struct Segment {
  PlanarPoint a;
  PlanarPoint b;
};

/// Equirectangular projection about a fixed origin. Exact inverse pair.
class LocalProjection {
 public:
  LocalProjection() = default;
  explicit LocalProjection(GeoPoint origin);

  // Throws std::domain_error when g is out of WGS84 range or further than
  // one degree from the origin along either axis.
  PlanarPoint project(GeoPoint g) const;
  GeoPoint unproject(PlanarPoint p) const;

  GeoPoint origin() const noexcept { return origin_; }

 private:
  GeoPoint origin_{};
  double cos_lat0_ = 1.0;
};

PlanarPoint project(GeoPoint g, GeoPoint origin);
GeoPoint unproject(PlanarPoint p, GeoPoint origin);

/// A GPS trip. Distances only use `points`; `times` and the start context are
/// carried along for the auxiliary weights and for output.
struct Trajectory {
  std::string id;
  std::vector<PlanarPoint> points;
  std::vector<double> times;  // seconds, non-decreasing
  std::vector<GeoPoint> geo_points;
  int start_hour = 0;     // 0..23
  int start_weekday = 1;  // 1 (Monday) .. 7 (Sunday)

  std::size_t size() const noexcept { return points.size(); }
  const PlanarPoint& last() const { return points.back(); }
  /// Piecewise-linear length in meters.
  double length() const noexcept;
};

/// Throws std::invalid_argument when the trajectory breaks its invariants
/// (at least `min_points` points, parallel arrays, ordered timestamps,
/// hour/weekday in range).
void validate(const Trajectory& t, std::size_t min_points = 2);

/// Builds a trajectory from geographic fixes. Start hour and weekday are
/// derived from the first timestamp (unix epoch) shifted by `utc_offset_hours`.
Trajectory make_trajectory(std::string id, std::vector<GeoPoint> geo, std::vector<double> times,
                           const LocalProjection& proj, double utc_offset_hours = 0.0);

/// Hour of day (0..23) and ISO weekday (1 = Monday) of a unix timestamp.
int hour_of_day(double epoch_seconds, double utc_offset_hours = 0.0);
int iso_weekday(double epoch_seconds, double utc_offset_hours = 0.0);

double euclidean(PlanarPoint a, PlanarPoint b) noexcept;
double polyline_length(std::span<const PlanarPoint> pts) noexcept;

double point_to_segment(PlanarPoint p, const Segment& s) noexcept;
/// Minimum point-to-segment distance over the polyline. A single-vertex
/// polyline degenerates to the distance to that vertex.
double point_to_polyline(PlanarPoint p, std::span<const PlanarPoint> line);
double point_to_trajectory(PlanarPoint p, const Trajectory& t);

double spd(std::span<const PlanarPoint> from, std::span<const PlanarPoint> to);
double spd(const Trajectory& from, const Trajectory& to);
double sspd(std::span<const PlanarPoint> a, std::span<const PlanarPoint> b);
double sspd(const Trajectory& a, const Trajectory& b);

/// Great-circle distance in kilometers on a sphere of radius 6371 km.
double haversine_km(GeoPoint a, GeoPoint b) noexcept;

/// Number of leading points whose piecewise length stays within
/// `fraction` of the full length. Always at least one.
std::size_t prefix_size(const Trajectory& t, double fraction);
/// p-trajectory: the maximal prefix with piecewise length <= fraction * length().
/// Throws std::domain_error for fraction outside [0, 1].
Trajectory prefix(const Trajectory& t, double fraction);

}  // namespace trajflow
