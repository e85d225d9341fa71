#pragma once

#include <cstdint>
#include <vector>

#include <trajflow/geometry.hpp>
#include <trajflow/ingest.hpp>

namespace trajflow {

/// Desk-scale city: K flows leave a shared origin along a common trunk and
/// then fan out along their own waypoint paths.
struct SyntheticCitySpec {
  int flows = 3;
  int per_flow = 200;
  int waypoints = 4;        // path vertices after the origin; the first ends the trunk
  double noise_m = 20.0;    // isotropic GPS noise sigma
  double step_m = 100.0;    // sampling step along the path
  double leg_m = 800.0;     // distance between consecutive waypoints
  std::uint64_t seed = 1;
  GeoPoint origin{-8.6106, 41.1456};
  double first_day_epoch = 1388966400.0;  // Monday 2014-01-06 00:00 UTC
  int days = 28;
};

struct SyntheticCity {
  TripSet trips;
  std::vector<int> flow;                        // generating flow per trip, 1-based
  std::vector<std::vector<PlanarPoint>> paths;  // noise-free flow polylines, planar about spec.origin
};

/// Each trip follows its flow path up to a random 80-100% of its length,
/// sampled every step_m and perturbed by N(0, noise_m^2) per axis. Flows also
/// differ in their preferred start hour. Throws std::invalid_argument for
/// non-positive counts or lengths (noise may be zero).
SyntheticCity synth_city(const SyntheticCitySpec& spec);

}  // namespace trajflow
