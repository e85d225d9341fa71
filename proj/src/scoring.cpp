#include <trajflow/scoring.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace trajflow {

ScoreVector normalize(std::vector<double> log_scores) {
  ScoreVector s;
  s.log_scores = std::move(log_scores);
  const std::size_t k = s.log_scores.size();
  s.normalized.assign(k, 0.0);
  if (k == 0) {
    return s;
  }
  const double top = *std::max_element(s.log_scores.begin(), s.log_scores.end());
  if (top == -std::numeric_limits<double>::infinity()) {
    std::fill(s.normalized.begin(), s.normalized.end(), 1.0 / static_cast<double>(k));
    return s;
  }
  double sum = 0.0;
  for (double v : s.log_scores) {
    sum += std::exp(v - top);
  }
  const double lse = top + std::log(sum);
  for (std::size_t m = 0; m < k; ++m) {
    s.normalized[m] = std::exp(s.log_scores[m] - lse);
  }
  return s;
}

double simple_log_score(const Trajectory& t, const ClusterModel& m) {
  if (t.points.empty()) {
    throw std::invalid_argument{"cannot score an empty trajectory"};
  }
  return log_likelihood(t.points, m.mixture);
}

double auxiliary_weight(int label, int hour, int weekday, WeightFlags flags, const FlowModel& f) {
  if (label < 1 || label > f.k() || hour < 0 || hour > 23 || weekday < 1 || weekday > 7) {
    throw std::out_of_range{"auxiliary_weight: index out of range"};
  }
  const auto m = static_cast<std::size_t>(label - 1);
  double w = 1.0;
  if (flags.empiric) {
    w *= f.weights.emp.at(m);
  }
  if (flags.weekday) {
    w *= f.weights.weekday[static_cast<std::size_t>(weekday - 1)].at(m);
  }
  if (flags.hour) {
    w *= f.weights.hour[static_cast<std::size_t>(hour)].at(m);
  }
  return w;
}

double complete_log_score(const Trajectory& t, int label, WeightFlags flags, const FlowModel& f) {
  const double simple = simple_log_score(t, f.cluster(label));
  if (flags.none()) {
    return simple;
  }
  return std::log(auxiliary_weight(label, t.start_hour, t.start_weekday, flags, f)) + simple;
}

Classification classify_scores(std::vector<double> log_scores) {
  if (log_scores.empty()) {
    throw std::invalid_argument{"classify: no clusters"};
  }
  Classification c;
  c.ranked.resize(log_scores.size());
  std::iota(c.ranked.begin(), c.ranked.end(), 1);
  std::stable_sort(c.ranked.begin(), c.ranked.end(), [&](int a, int b) {
    return log_scores[static_cast<std::size_t>(a - 1)] > log_scores[static_cast<std::size_t>(b - 1)];
  });
  c.label = c.ranked.front();
  c.scores = normalize(std::move(log_scores));
  return c;
}

Classification classify(const Trajectory& t, const FlowModel& f, WeightFlags flags) {
  if (f.k() < 1) {
    throw std::invalid_argument{"classify: model has no clusters"};
  }
  std::vector<double> log_scores(static_cast<std::size_t>(f.k()));
  for (int m = 1; m <= f.k(); ++m) {
    log_scores[static_cast<std::size_t>(m - 1)] = complete_log_score(t, m, flags, f);
  }
  return classify_scores(std::move(log_scores));
}

PlanarPoint destination_top_cluster(const Classification& c, const FlowModel& f) {
  return f.cluster(c.label).mean_destination;
}

PlanarPoint destination_weighted(const ScoreVector& s, const FlowModel& f) {
  if (s.normalized.size() != f.clusters.size()) {
    throw std::invalid_argument{"score vector does not match the model"};
  }
  double x = 0.0;
  double y = 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < f.clusters.size(); ++m) {
    const double w = s.normalized[m];
    x += w * f.clusters[m].mean_destination.x;
    y += w * f.clusters[m].mean_destination.y;
    total += w;
  }
  return {x / total, y / total};
}

Prediction predict(const Trajectory& t, const FlowModel& f, WeightFlags flags) {
  Prediction p;
  p.classification = classify(t, f, flags);
  p.planar[0] = destination_top_cluster(p.classification, f);
  p.planar[1] = destination_weighted(p.classification.scores, f);
  p.geo[0] = f.projection.unproject(p.planar[0]);
  p.geo[1] = f.projection.unproject(p.planar[1]);
  return p;
}

GeoPoint predict_destination_1(const Trajectory& t, const FlowModel& f, WeightFlags flags) {
  return f.projection.unproject(destination_top_cluster(classify(t, f, flags), f));
}

GeoPoint predict_destination_2(const Trajectory& t, const FlowModel& f, WeightFlags flags) {
  return f.projection.unproject(destination_weighted(classify(t, f, flags).scores, f));
}

}  // namespace trajflow
