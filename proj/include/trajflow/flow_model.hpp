#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <trajflow/clustering.hpp>
#include <trajflow/geometry.hpp>
#include <trajflow/gmm.hpp>

namespace trajflow {

/// Which auxiliary context weights enter the complete score.
struct WeightFlags {
  bool empiric = false;
  bool weekday = false;
  bool hour = false;

  bool none() const noexcept { return !empiric && !weekday && !hour; }
  /// "none", or the selected names joined by '+', e.g. "emp+hour".
  std::string to_string() const;
  /// Accepts names separated by ',' or '+' ("emp", "weekday", "hour"), or
  /// "none" / "" for the empty set. Throws std::invalid_argument otherwise.
  static WeightFlags parse(std::string_view text);

  friend bool operator==(const WeightFlags&, const WeightFlags&) = default;
};

struct ClusterModel {
  MixtureModel mixture;
  PlanarPoint mean_destination;
  std::size_t member_count = 0;
};

/// Auxiliary context weights, each normalized over clusters:
/// emp[m], weekday[d - 1][m], hour[h][m] with m the 0-based cluster index.
struct WeightTables {
  std::vector<double> emp;
  std::array<std::vector<double>, 7> weekday;
  std::array<std::vector<double>, 24> hour;
};

/// Per-cluster trip counts behind the weight tables.
struct WeightCounts {
  std::vector<std::size_t> emp;
  std::array<std::vector<std::size_t>, 7> weekday;
  std::array<std::vector<std::size_t>, 24> hour;
};

WeightCounts count_context(std::span<const Trajectory> ts, const ClusterAssignment& labels);

/// Count ratios with `smoothing` pseudo-counts added per cluster. A context
/// value never seen in training (and no smoothing) falls back to 1/K.
WeightTables weight_tables(const WeightCounts& counts, double smoothing);

/// K fitted trajectory clusters plus everything needed at prediction time.
/// Cluster labels are 1-based throughout; clusters[label - 1].
struct FlowModel {
  LocalProjection projection;
  std::vector<ClusterModel> clusters;
  WeightTables weights;
  double smoothing = 1.0;

  int k() const noexcept { return static_cast<int>(clusters.size()); }
  const ClusterModel& cluster(int label) const { return clusters.at(static_cast<std::size_t>(label - 1)); }
};

struct FlowFitConfig {
  EmConfig em;
  int k_min = 1;
  int k_max = 40;
  double smoothing = 1.0;
  unsigned threads = 0;
};

/// One mixture per trajectory cluster, fitted on the pooled points of its
/// members with BIC-selected component count, plus the mean final point of the
/// members and the context weight tables. Throws std::domain_error if a
/// cluster has no members.
FlowModel fit_flow_model(std::span<const Trajectory> ts, const ClusterAssignment& labels,
                         const LocalProjection& projection, const FlowFitConfig& cfg);

/// Versioned line-oriented text format; doubles are written with 17
/// significant digits so a save/load cycle is exact.
void save_flow_model(const FlowModel& model, std::ostream& out);
FlowModel load_flow_model(std::istream& in);

}  // namespace trajflow
