#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <trajflow/clustering.hpp>
#include <trajflow/geometry.hpp>

namespace trajflow {

/// A trip as read from a source file, before projection.
struct RawTrip {
  std::string id;
  std::vector<GeoPoint> points;
  std::vector<double> times;  // unix seconds
};

/// A set of trips plus the clock offset used to derive start hour/weekday.
struct TripSet {
  double utc_offset_hours = 0.0;
  std::vector<RawTrip> trips;
};

struct ParseStats {
  std::size_t rows = 0;
  std::size_t kept = 0;
  std::size_t missing = 0;    // flagged as missing data
  std::size_t too_short = 0;  // fewer than two fixes
  std::size_t malformed = 0;
  std::vector<std::string> warnings;
};

struct PortoOptions {
  double sample_interval_s = 15.0;
  bool strict = false;  // throw on the first malformed row
};

/// Kaggle ECML/PKDD 15 taxi CSV: TRIP_ID, TIMESTAMP, MISSING_DATA and a
/// POLYLINE column of [lon, lat] pairs sampled every `sample_interval_s`.
std::vector<RawTrip> parse_porto(std::istream& in, const PortoOptions& opt = {}, ParseStats* stats = nullptr);
std::vector<RawTrip> parse_porto(const std::filesystem::path& path, const PortoOptions& opt = {},
                                 ParseStats* stats = nullptr);

struct CabspottingOptions {
  bool strict = false;
};

/// One cabspotting taxi file ("lat lon occupied epoch" per line, newest
/// first). Every maximal run of occupied fixes becomes a trip named
/// <taxi>_<run>.
std::vector<RawTrip> parse_cabspotting_file(std::istream& in, const std::string& taxi,
                                            const CabspottingOptions& opt = {}, ParseStats* stats = nullptr);
/// All *.txt files of a directory not starting with '_', in name order.
std::vector<RawTrip> parse_cabspotting(const std::filesystem::path& dir, const CabspottingOptions& opt = {},
                                       ParseStats* stats = nullptr);

struct BoundingBox {
  double min_lon = -180.0;
  double min_lat = -90.0;
  double max_lon = 180.0;
  double max_lat = 90.0;

  bool contains(GeoPoint g) const noexcept {
    return g.lon >= min_lon && g.lon <= max_lon && g.lat >= min_lat && g.lat <= max_lat;
  }
};

enum class SourceFormat { porto_csv, cabspotting_dir, synthetic };

struct DatasetSpec {
  SourceFormat format = SourceFormat::porto_csv;
  std::optional<GeoPoint> origin;  // start must lie within radius_m of it
  double radius_m = 300.0;
  std::optional<BoundingBox> box;  // end must lie inside it
  std::size_t min_points = 2;
  std::size_t max_points = std::numeric_limits<std::size_t>::max();
};

/// Throws std::invalid_argument for a non-positive radius or a box whose
/// minimum exceeds its maximum.
void validate(const DatasetSpec& spec);

std::vector<RawTrip> filter(std::span<const RawTrip> trips, const DatasetSpec& spec);

/// Mean of all fixes; the projection origin of a dataset.
GeoPoint centroid(std::span<const RawTrip> trips);

struct Dataset {
  LocalProjection projection;
  std::vector<Trajectory> trajectories;
};

/// Projects every trip about the centroid (or `origin` when given).
Dataset make_dataset(const TripSet& set, std::optional<GeoPoint> origin = std::nullopt);

/// Canonical trajectory file: a header line, then one tab-separated record
/// per trip: id, start epoch, and "lon,lat,dt" triples joined by ';' where dt
/// is seconds since the start.
void write_trips(std::ostream& out, const TripSet& set);
TripSet read_trips(std::istream& in);
void write_trips(const std::filesystem::path& path, const TripSet& set);
TripSet read_trips(const std::filesystem::path& path);

/// Cluster label file: "id,label" rows after an "id,label" header.
void write_labels(std::ostream& out, std::span<const Trajectory> ts, const ClusterAssignment& labels);
/// Labels are matched to `ts` by id; throws std::runtime_error on a missing id.
ClusterAssignment read_labels(std::istream& in, std::span<const Trajectory> ts);

}  // namespace trajflow
