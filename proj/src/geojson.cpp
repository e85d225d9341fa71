#include <trajflow/geojson.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trajflow {

namespace {

nlohmann::json position(GeoPoint g) {
  // 1e-7 degrees is ~1 cm; keeps files compact and deterministic.
  const auto round7 = [](double v) { return std::round(v * 1e7) / 1e7; };
  return nlohmann::json::array({round7(g.lon), round7(g.lat)});
}

nlohmann::json feature(nlohmann::json geometry, nlohmann::json properties) {
  return {{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(properties)}};
}

}  // namespace

std::vector<PlanarPoint> covariance_ellipse(const GaussianComponent& c, double sigma, int vertices) {
  if (!c.cov.positive_definite()) {
    throw std::domain_error{"covariance matrix is not positive definite"};
  }
  if (vertices < 3) {
    throw std::invalid_argument{"an ellipse needs at least three vertices"};
  }
  // Cholesky factor L with L L^T = S maps the unit circle onto the contour.
  const double l11 = std::sqrt(c.cov.xx);
  const double l21 = c.cov.xy / l11;
  const double l22 = std::sqrt(c.cov.yy - l21 * l21);
  std::vector<PlanarPoint> ring;
  ring.reserve(static_cast<std::size_t>(vertices) + 1);
  for (int i = 0; i < vertices; ++i) {
    const double a = 2.0 * std::numbers::pi * i / vertices;
    const double u = sigma * std::cos(a);
    const double v = sigma * std::sin(a);
    ring.push_back({c.mean.x + l11 * u, c.mean.y + l21 * u + l22 * v});
  }
  ring.push_back(ring.front());
  return ring;
}

void GeoJsonWriter::add_trajectory(const Trajectory& t, const LocalProjection& proj, int label) {
  auto coords = nlohmann::json::array();
  if (!t.geo_points.empty()) {
    for (const auto& g : t.geo_points) {
      coords.push_back(position(g));
    }
  } else {
    for (const auto& p : t.points) {
      coords.push_back(position(proj.unproject(p)));
    }
  }
  nlohmann::json props{{"kind", "trajectory"}, {"id", t.id}};
  if (label > 0) {
    props["label"] = label;
  }
  features_.push_back(feature({{"type", "LineString"}, {"coordinates", std::move(coords)}}, std::move(props)));
}

void GeoJsonWriter::add_component_ellipse(const GaussianComponent& c, const LocalProjection& proj, int cluster,
                                          int component, double sigma, int vertices) {
  auto ring = nlohmann::json::array();
  for (const auto& p : covariance_ellipse(c, sigma, vertices)) {
    ring.push_back(position(proj.unproject(p)));
  }
  features_.push_back(feature({{"type", "Polygon"}, {"coordinates", nlohmann::json::array({std::move(ring)})}},
                              {{"kind", "component"},
                               {"cluster", cluster},
                               {"component", component},
                               {"sigma", sigma},
                               {"weight", c.weight}}));
}

void GeoJsonWriter::add_mixture_ellipses(const FlowModel& f, std::span<const double> sigmas, int vertices) {
  for (int m = 1; m <= f.k(); ++m) {
    const auto& mix = f.cluster(m).mixture;
    for (std::size_t j = 0; j < mix.k(); ++j) {
      for (double s : sigmas) {
        add_component_ellipse(mix.components[j], f.projection, m, static_cast<int>(j) + 1, s, vertices);
      }
    }
  }
}

void GeoJsonWriter::add_prediction(const std::string& id, double completion, int rule, const Prediction& p) {
  if (rule != 1 && rule != 2) {
    throw std::invalid_argument{"prediction rule must be 1 or 2"};
  }
  nlohmann::json props{{"kind", "prediction"},
                       {"id", id},
                       {"completion", completion},
                       {"rule", rule},
                       {"label", p.classification.label},
                       {"scores", p.classification.scores.normalized}};
  features_.push_back(feature({{"type", "Point"}, {"coordinates", position(p.geo[rule - 1])}}, std::move(props)));
}

nlohmann::json GeoJsonWriter::collection() const {
  return {{"type", "FeatureCollection"}, {"features", features_}};
}

}  // namespace trajflow
