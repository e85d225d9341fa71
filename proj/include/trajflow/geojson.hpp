#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include <trajflow/flow_model.hpp>
#include <trajflow/geometry.hpp>
#include <trajflow/gmm.hpp>
#include <trajflow/scoring.hpp>

namespace trajflow {

/// Closed ring of `vertices` + 1 points on the `sigma` Mahalanobis contour.
std::vector<PlanarPoint> covariance_ellipse(const GaussianComponent& c, double sigma, int vertices = 64);

/// Accumulates WGS84 features and renders a FeatureCollection.
class GeoJsonWriter {
 public:
  /// LineString with id and cluster label properties (label 0 = unlabelled).
  void add_trajectory(const Trajectory& t, const LocalProjection& proj, int label = 0);
  /// One Polygon per sigma level for every mixture component of the model.
  void add_mixture_ellipses(const FlowModel& f, std::span<const double> sigmas = k_default_sigmas, int vertices = 64);
  void add_component_ellipse(const GaussianComponent& c, const LocalProjection& proj, int cluster, int component,
                             double sigma, int vertices = 64);
  /// Point at the predicted destination of `rule` with the per-cluster
  /// normalized scores as properties.
  void add_prediction(const std::string& id, double completion, int rule, const Prediction& p);

  std::size_t size() const noexcept { return features_.size(); }
  nlohmann::json collection() const;
  std::string dump(int indent = -1) const { return collection().dump(indent); }

  static constexpr double k_default_sigmas[2] = {1.0, 2.0};

 private:
  nlohmann::json features_ = nlohmann::json::array();
};

}  // namespace trajflow
