#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <trajflow/clustering.hpp>
#include <trajflow/flow_model.hpp>
#include <trajflow/geometry.hpp>

namespace trajflow {

struct FoldPlan {
  int folds = 10;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;  // fold index per trajectory

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
};

/// Seeded uniform partition of n items into `folds` folds whose sizes differ
/// by at most one. Throws std::domain_error when n < folds.
FoldPlan kfold(std::size_t n, std::uint64_t seed, int folds = 10);

/// Reference cluster of a held-out trajectory: the cluster with the smallest
/// mean SSPD between the complete trajectory and the cluster members. Ties go
/// to the smaller label.
int true_label(const Trajectory& t_full, std::span<const Trajectory> train, const ClusterAssignment& labels);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> curve;
  std::optional<double> auc;  // empty when a class is absent
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// One-vs-all ROC: the curve sweeps every observed score as a threshold
/// (score >= threshold is called positive); the AUC is the Mann-Whitney
/// statistic with midranks for ties.
RocResult roc_auc(std::span<const double> scores, std::span<const char> positive);

/// Outcome of one test trajectory under one (flags, completion) setting.
struct TrialRecord {
  int true_label = 0;
  int rank = 0;  // 1-based position of the true label in the ranking
  double error_km[2] = {0.0, 0.0};
};

struct SweepConfig {
  std::vector<double> p_grid;
  std::vector<WeightFlags> flag_sets;

  /// Completion grid 0, 0.05, ..., 1 and the flag sets none, emp, weekday,
  /// hour and emp+weekday+hour.
  static SweepConfig defaults();
};

struct ClusterRoc {
  int fold = 0;
  int cluster = 0;
  RocResult roc;
};

struct FoldResult {
  int fold = 0;
  std::vector<double> p_grid;
  std::vector<WeightFlags> flag_sets;
  std::size_t n_test = 0;
  std::vector<TrialRecord> records;  // [flag][p][trajectory]
  std::vector<ClusterRoc> roc;       // complete trajectories, simple score

  const TrialRecord& at(std::size_t flag_index, std::size_t p_index, std::size_t i) const;
};

/// Scores every test trajectory at every completion level and flag set.
FoldResult completion_sweep(const FlowModel& f, std::span<const Trajectory> test, std::span<const int> true_labels,
                            const SweepConfig& cfg, int fold = 0);

std::size_t grid_index(std::span<const double> grid, double p);

/// Fraction of test p-trajectories whose true label is ranked within the top
/// `k` (k = 1 is Q_class), averaged over folds.
double best_k_rate(std::span<const FoldResult> folds, double p, WeightFlags flags, int k);
double q_class(std::span<const FoldResult> folds, double p, WeightFlags flags = {});
/// Mean Haversine error in km of prediction rule 1 or 2, averaged over folds.
double q_pred(std::span<const FoldResult> folds, double p, WeightFlags flags, int rule);

struct ReportRow {
  double p = 0.0;
  std::string metric;  // q_class, best2, best3, q_pred
  std::string flags;
  int rule = 0;  // 0 when the metric does not depend on the prediction rule
  double value = 0.0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<ClusterRoc> roc;

  /// Long format: p,metric,flags,rule,value.
  void write_csv(std::ostream& out) const;
  void write_auc_csv(std::ostream& out) const;
  void write_roc_csv(std::ostream& out, const ClusterRoc& r) const;
  /// report.csv, auc.csv and roc_fold<f>_cluster<m>.csv under `dir`.
  void write_files(const std::filesystem::path& dir) const;

  std::optional<double> value(double p, std::string_view metric, WeightFlags flags, int rule = 0) const;
};

EvalReport assemble_report(std::span<const FoldResult> folds);

struct EvalConfig {
  int folds = 10;
  std::uint64_t seed = 0;
  int clusters = 25;
  FlowFitConfig fit;
  SweepConfig sweep = SweepConfig::defaults();
  /// false reuses one clustering of the whole set for every fold; faster but
  /// the training folds then see structure learned from the test folds.
  bool refit_clustering = true;
  unsigned threads = 0;
};

struct Evaluation {
  std::vector<FoldResult> folds;
  EvalReport report;
};

/// Cross-validated evaluation: per fold, cluster and fit on the training part
/// and sweep the held-out part.
Evaluation evaluate(std::span<const Trajectory> ts, const LocalProjection& projection, const EvalConfig& cfg);

}  // namespace trajflow
