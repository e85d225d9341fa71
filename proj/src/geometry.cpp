#include <trajflow/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace trajflow {

namespace {

constexpr double k_deg = std::numbers::pi / 180.0;

void check_geo(GeoPoint g) {
  if (!std::isfinite(g.lon) || !std::isfinite(g.lat) || g.lon < -180.0 || g.lon > 180.0 || g.lat < -90.0 ||
      g.lat > 90.0) {
    throw std::domain_error{"GeoPoint out of WGS84 range"};
  }
}

double floor_div(double a, double b) { return std::floor(a / b); }

}  // namespace

LocalProjection::LocalProjection(GeoPoint origin) : origin_{origin}, cos_lat0_{std::cos(origin.lat * k_deg)} {
  check_geo(origin);
}

PlanarPoint LocalProjection::project(GeoPoint g) const {
  check_geo(g);
  const double dlon = g.lon - origin_.lon;
  const double dlat = g.lat - origin_.lat;
  if (std::abs(dlon) > 1.0 || std::abs(dlat) > 1.0) {
    throw std::domain_error{"GeoPoint further than one degree from the projection origin"};
  }
  return {k_earth_radius_m * cos_lat0_ * dlon * k_deg, k_earth_radius_m * dlat * k_deg};
}

GeoPoint LocalProjection::unproject(PlanarPoint p) const {
  return {origin_.lon + p.x / (k_earth_radius_m * cos_lat0_) / k_deg, origin_.lat + p.y / k_earth_radius_m / k_deg};
}

PlanarPoint project(GeoPoint g, GeoPoint origin) { return LocalProjection{origin}.project(g); }

GeoPoint unproject(PlanarPoint p, GeoPoint origin) { return LocalProjection{origin}.unproject(p); }

double Trajectory::length() const noexcept { return polyline_length(points); }

void validate(const Trajectory& t, std::size_t min_points) {
  if (t.points.size() < std::max<std::size_t>(min_points, 1)) {
    throw std::invalid_argument{"trajectory '" + t.id + "' has too few points"};
  }
  if (t.times.size() != t.points.size() || (!t.geo_points.empty() && t.geo_points.size() != t.points.size())) {
    throw std::invalid_argument{"trajectory '" + t.id + "' has mismatched point/time arrays"};
  }
  for (std::size_t j = 1; j < t.times.size(); ++j) {
    if (t.times[j] < t.times[j - 1]) {
      throw std::invalid_argument{"trajectory '" + t.id + "' has decreasing timestamps"};
    }
  }
  for (const auto& p : t.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw std::invalid_argument{"trajectory '" + t.id + "' has non-finite coordinates"};
    }
  }
  if (t.start_hour < 0 || t.start_hour > 23 || t.start_weekday < 1 || t.start_weekday > 7) {
    throw std::invalid_argument{"trajectory '" + t.id + "' has invalid start hour/weekday"};
  }
}

int hour_of_day(double epoch_seconds, double utc_offset_hours) {
  const double local = epoch_seconds + utc_offset_hours * 3600.0;
  const double day_seconds = local - floor_div(local, 86400.0) * 86400.0;
  return std::clamp(static_cast<int>(day_seconds / 3600.0), 0, 23);
}

int iso_weekday(double epoch_seconds, double utc_offset_hours) {
  // 1970-01-01 was a Thursday.
  const auto days = static_cast<long long>(floor_div(epoch_seconds + utc_offset_hours * 3600.0, 86400.0));
  const long long shifted = ((days + 3) % 7 + 7) % 7;
  return static_cast<int>(shifted) + 1;
}

Trajectory make_trajectory(std::string id, std::vector<GeoPoint> geo, std::vector<double> times,
                           const LocalProjection& proj, double utc_offset_hours) {
  Trajectory t;
  t.id = std::move(id);
  t.points.reserve(geo.size());
  for (const auto& g : geo) {
    t.points.push_back(proj.project(g));
  }
  t.geo_points = std::move(geo);
  t.times = std::move(times);
  if (!t.times.empty()) {
    t.start_hour = hour_of_day(t.times.front(), utc_offset_hours);
    t.start_weekday = iso_weekday(t.times.front(), utc_offset_hours);
  }
  validate(t, 1);
  return t;
}

double euclidean(PlanarPoint a, PlanarPoint b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

double polyline_length(std::span<const PlanarPoint> pts) noexcept {
  double total = 0.0;
  for (std::size_t j = 1; j < pts.size(); ++j) {
    total += euclidean(pts[j - 1], pts[j]);
  }
  return total;
}

double point_to_segment(PlanarPoint p, const Segment& s) noexcept {
  const double to_a = euclidean(p, s.a);
  const double to_b = euclidean(p, s.b);
  const double dx = s.b.x - s.a.x;
  const double dy = s.b.y - s.a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) {
    return to_a;
  }
  const double px = p.x - s.a.x;
  const double py = p.y - s.a.y;
  const double t = (px * dx + py * dy) / len2;
  if (t < 0.0 || t > 1.0) {
    return std::min(to_a, to_b);
  }
  // The perpendicular drop never exceeds either endpoint distance; the min
  // only absorbs rounding near t = 0 or t = 1.
  const double perp = std::abs(dx * py - dy * px) / std::sqrt(len2);
  return std::min({perp, to_a, to_b});
}

double point_to_polyline(PlanarPoint p, std::span<const PlanarPoint> line) {
  if (line.empty()) {
    throw std::invalid_argument{"point_to_polyline: empty polyline"};
  }
  if (line.size() == 1) {
    return euclidean(p, line.front());
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < line.size(); ++j) {
    best = std::min(best, point_to_segment(p, {line[j - 1], line[j]}));
  }
  return best;
}

double point_to_trajectory(PlanarPoint p, const Trajectory& t) { return point_to_polyline(p, t.points); }

double spd(std::span<const PlanarPoint> from, std::span<const PlanarPoint> to) {
  if (from.empty()) {
    throw std::invalid_argument{"spd: empty trajectory"};
  }
  double sum = 0.0;
  for (const auto& p : from) {
    sum += point_to_polyline(p, to);
  }
  return sum / static_cast<double>(from.size());
}

double spd(const Trajectory& from, const Trajectory& to) { return spd(from.points, to.points); }

double sspd(std::span<const PlanarPoint> a, std::span<const PlanarPoint> b) { return (spd(a, b) + spd(b, a)) / 2.0; }

double sspd(const Trajectory& a, const Trajectory& b) { return sspd(a.points, b.points); }

double haversine_km(GeoPoint a, GeoPoint b) noexcept {
  const double lat1 = a.lat * k_deg;
  const double lat2 = b.lat * k_deg;
  const double s_lat = std::sin((lat2 - lat1) / 2.0);
  const double s_lon = std::sin((b.lon - a.lon) * k_deg / 2.0);
  const double h = std::clamp(s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon, 0.0, 1.0);
  return 2.0 * k_earth_radius_km * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

std::size_t prefix_size(const Trajectory& t, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::domain_error{"prefix fraction must lie in [0, 1]"};
  }
  if (t.points.empty()) {
    return 0;
  }
  if (fraction == 1.0) {
    return t.points.size();
  }
  const double budget = fraction * t.length();
  std::size_t n = 1;
  double covered = 0.0;
  while (n < t.points.size()) {
    const double next = covered + euclidean(t.points[n - 1], t.points[n]);
    if (next > budget) {
      break;
    }
    covered = next;
    ++n;
  }
  return n;
}

Trajectory prefix(const Trajectory& t, double fraction) {
  const std::size_t n = prefix_size(t, fraction);
  Trajectory out;
  out.id = t.id;
  out.start_hour = t.start_hour;
  out.start_weekday = t.start_weekday;
  out.points.assign(t.points.begin(), t.points.begin() + static_cast<std::ptrdiff_t>(n));
  out.times.assign(t.times.begin(), t.times.begin() + static_cast<std::ptrdiff_t>(std::min(n, t.times.size())));
  if (!t.geo_points.empty()) {
    out.geo_points.assign(t.geo_points.begin(), t.geo_points.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return out;
}

}  // namespace trajflow
