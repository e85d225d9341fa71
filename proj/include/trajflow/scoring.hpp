#pragma once

#include <vector>

#include <trajflow/flow_model.hpp>

namespace trajflow {

struct ScoreVector {
  std::vector<double> log_scores;
  std::vector<double> normalized;
};

/// Softmax of log-scores via log-sum-exp. All -inf gives the uniform vector.
ScoreVector normalize(std::vector<double> log_scores);

struct Classification {
  int label = 1;            // best cluster, 1-based
  std::vector<int> ranked;  // all labels, best first
  ScoreVector scores;
};

/// Log of the product of mixture densities over the trajectory points.
double simple_log_score(const Trajectory& t, const ClusterModel& m);

double auxiliary_weight(int label, int hour, int weekday, WeightFlags flags, const FlowModel& f);
double complete_log_score(const Trajectory& t, int label, WeightFlags flags, const FlowModel& f);

/// Scores every cluster; ties in the ranking go to the smaller label.
Classification classify(const Trajectory& t, const FlowModel& f, WeightFlags flags = {});
Classification classify_scores(std::vector<double> log_scores);

PlanarPoint destination_top_cluster(const Classification& c, const FlowModel& f);
PlanarPoint destination_weighted(const ScoreVector& s, const FlowModel& f);

GeoPoint predict_destination_1(const Trajectory& t, const FlowModel& f, WeightFlags flags = {});
GeoPoint predict_destination_2(const Trajectory& t, const FlowModel& f, WeightFlags flags = {});

struct Prediction {
  Classification classification;
  PlanarPoint planar[2];  // rule 1, rule 2
  GeoPoint geo[2];
};

/// Both prediction rules from a single classification pass.
Prediction predict(const Trajectory& t, const FlowModel& f, WeightFlags flags = {});

}  // namespace trajflow
