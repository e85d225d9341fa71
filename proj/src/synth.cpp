#include <trajflow/synth.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace trajflow {

namespace {

PlanarPoint along(std::span<const PlanarPoint> path, std::span<const double> cumulative, double s) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
  const auto seg = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cumulative.begin(), 1)) - 1;
  if (seg + 1 >= path.size()) {
    return path.back();
  }
  const double len = cumulative[seg + 1] - cumulative[seg];
  const double t = len > 0.0 ? (s - cumulative[seg]) / len : 0.0;
  return {path[seg].x + t * (path[seg + 1].x - path[seg].x), path[seg].y + t * (path[seg + 1].y - path[seg].y)};
}

}  // namespace

SyntheticCity synth_city(const SyntheticCitySpec& spec) {
  if (spec.flows < 1 || spec.per_flow < 1 || spec.waypoints < 1 || !(spec.step_m > 0.0) || !(spec.leg_m > 0.0) ||
      !(spec.noise_m >= 0.0) || spec.days < 1) {
    throw std::invalid_argument{"synthetic city spec must have positive counts and lengths"};
  }
  constexpr double pi = std::numbers::pi;
  std::mt19937_64 rng{spec.seed};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const LocalProjection proj{spec.origin};

  SyntheticCity city;
  const double trunk_heading = 2.0 * pi * unit(rng);
  const PlanarPoint trunk_end{spec.leg_m * std::cos(trunk_heading), spec.leg_m * std::sin(trunk_heading)};
  const double spread = std::min(pi / 2.0, 2.0 * pi / spec.flows);
  for (int f = 0; f < spec.flows; ++f) {
    std::vector<PlanarPoint> path{{0.0, 0.0}, trunk_end};
    double heading = trunk_heading + (f - (spec.flows - 1) / 2.0) * spread;
    for (int w = 1; w < spec.waypoints; ++w) {
      if (w > 1) {
        heading += (unit(rng) - 0.5) * (pi / 6.0);
      }
      const auto& last = path.back();
      path.push_back({last.x + spec.leg_m * std::cos(heading), last.y + spec.leg_m * std::sin(heading)});
    }
    city.paths.push_back(std::move(path));
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> any_hour(0, 23);
  std::uniform_int_distribution<int> jitter(-1, 1);
  std::uniform_int_distribution<int> any_day(0, spec.days - 1);
  std::uniform_int_distribution<int> any_second(0, 3599);
  const int hour_stride = std::max(1, 24 / spec.flows);
  constexpr double speed_mps = 8.0;

  for (int f = 0; f < spec.flows; ++f) {
    const auto& path = city.paths[static_cast<std::size_t>(f)];
    std::vector<double> cumulative{0.0};
    for (std::size_t j = 1; j < path.size(); ++j) {
      cumulative.push_back(cumulative.back() + euclidean(path[j - 1], path[j]));
    }
    const double full = cumulative.back();
    const int preferred = (7 + f * hour_stride) % 24;
    for (int i = 0; i < spec.per_flow; ++i) {
      const double end = full * (0.8 + 0.2 * unit(rng));
      const int hour = unit(rng) < 0.6 ? (preferred + jitter(rng) + 24) % 24 : any_hour(rng);
      const double start = spec.first_day_epoch + any_day(rng) * 86400.0 + hour * 3600.0 + any_second(rng);

      RawTrip trip;
      trip.id = "f" + std::to_string(f + 1) + "_" + std::to_string(i);
      std::vector<double> stations;
      for (double s = 0.0; s < end; s += spec.step_m) {
        stations.push_back(s);
      }
      stations.push_back(end);
      for (double s : stations) {
        PlanarPoint p = along(path, cumulative, s);
        if (spec.noise_m > 0.0) {
          p.x += spec.noise_m * noise(rng);
          p.y += spec.noise_m * noise(rng);
        }
        trip.points.push_back(proj.unproject(p));
        trip.times.push_back(start + s / speed_mps);
      }
      city.trips.trips.push_back(std::move(trip));
      city.flow.push_back(f + 1);
    }
  }
  return city;
}

}  // namespace trajflow
