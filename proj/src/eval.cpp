#include <trajflow/eval.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <trajflow/parallel.hpp>
#include <trajflow/scoring.hpp>

namespace trajflow {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

GeoPoint final_geo(const Trajectory& t, const FlowModel& f) {
  return t.geo_points.empty() ? f.projection.unproject(t.last()) : t.geo_points.back();
}

std::size_t flag_index(std::span<const WeightFlags> sets, WeightFlags flags) {
  const auto it = std::find(sets.begin(), sets.end(), flags);
  if (it == sets.end()) {
    throw std::invalid_argument{"flag set " + flags.to_string() + " was not evaluated"};
  }
  return static_cast<std::size_t>(it - sets.begin());
}

template <class Fn>
double fold_average(std::span<const FoldResult> folds, Fn&& per_fold) {
  double sum = 0.0;
  int used = 0;
  for (const auto& f : folds) {
    if (f.n_test == 0) {
      continue;
    }
    sum += per_fold(f);
    ++used;
  }
  if (used == 0) {
    throw std::invalid_argument{"no evaluated folds"};
  }
  return sum / used;
}

template <typename Distance>
int closest_mean_cluster(const ClusterAssignment& labels, Distance&& distance_to) {
  if (labels.k < 1) {
    throw std::invalid_argument{"true_label: labels do not match the training set"};
  }
  const auto k = static_cast<std::size_t>(labels.k);
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const auto m = static_cast<std::size_t>(labels.labels[i] - 1);
    sum[m] += distance_to(i);
    ++count[m];
  }
  int best = 0;
  double best_mean = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < k; ++m) {
    if (count[m] == 0) {
      continue;
    }
    const double mean = sum[m] / static_cast<double>(count[m]);
    if (mean < best_mean) {
      best_mean = mean;
      best = static_cast<int>(m) + 1;
    }
  }
  return best;
}

DistanceMatrix submatrix(const DistanceMatrix& d, std::span<const std::size_t> idx) {
  DistanceMatrix out(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      out.set(a, b, d(idx[a], idx[b]));
    }
  }
  return out;
}

template <class T>
std::vector<T> pick(std::span<const T> all, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) {
    out.push_back(all[i]);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) {
      out.push_back(i);
    }
  }
  return out;
}

FoldPlan kfold(std::size_t n, std::uint64_t seed, int folds) {
  if (folds < 2) {
    throw std::domain_error{"kfold: need at least two folds"};
  }
  if (n < static_cast<std::size_t>(folds)) {
    throw std::domain_error{"kfold: fewer items than folds"};
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng{seed};
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan;
  plan.folds = folds;
  plan.seed = seed;
  plan.fold_of.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    plan.fold_of[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
  }
  return plan;
}

int true_label(const Trajectory& t_full, std::span<const Trajectory> train, const ClusterAssignment& labels) {
  if (labels.labels.size() != train.size()) {
    throw std::invalid_argument{"true_label: labels do not match the training set"};
  }
  return closest_mean_cluster(labels, [&](std::size_t i) { return sspd(t_full, train[i]); });
}

RocResult roc_auc(std::span<const double> scores, std::span<const char> positive) {
  if (scores.size() != positive.size()) {
    throw std::invalid_argument{"roc_auc: scores and labels differ in length"};
  }
  const std::size_t n = scores.size();
  RocResult r;
  for (char p : positive) {
    (p ? r.positives : r.negatives) += 1;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Threshold sweep, highest score first.
  const double pos = static_cast<double>(r.positives);
  const double neg = static_cast<double>(r.negatives);
  r.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < n;) {
    const double threshold = scores[order[i]];
    while (i < n && scores[order[i]] == threshold) {
      (positive[order[i]] ? tp : fp) += 1;
      ++i;
    }
    r.curve.push_back({threshold, neg > 0 ? fp / neg : 0.0, pos > 0 ? tp / pos : 0.0});
  }

  if (r.positives == 0 || r.negatives == 0) {
    return r;
  }
  // Midranks in ascending score order.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      ++j;
    }
    // order is descending: positions i..j-1 hold ascending ranks n-j+1 .. n-i.
    const double midrank = (static_cast<double>(n - j + 1) + static_cast<double>(n - i)) / 2.0;
    for (std::size_t q = i; q < j; ++q) {
      if (positive[order[q]]) {
        rank_sum += midrank;
      }
    }
    i = j;
  }
  r.auc = (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
  return r;
}

SweepConfig SweepConfig::defaults() {
  SweepConfig cfg;
  for (int i = 0; i <= 20; ++i) {
    cfg.p_grid.push_back(i / 20.0);
  }
  cfg.flag_sets = {WeightFlags{}, WeightFlags{true, false, false}, WeightFlags{false, true, false},
                   WeightFlags{false, false, true}, WeightFlags{true, true, true}};
  return cfg;
}

const TrialRecord& FoldResult::at(std::size_t flag_index, std::size_t p_index, std::size_t i) const {
  return records.at((flag_index * p_grid.size() + p_index) * n_test + i);
}

FoldResult completion_sweep(const FlowModel& f, std::span<const Trajectory> test, std::span<const int> true_labels,
                            const SweepConfig& cfg, int fold) {
  if (test.size() != true_labels.size()) {
    throw std::invalid_argument{"completion_sweep: one true label per test trajectory required"};
  }
  FoldResult out;
  out.fold = fold;
  out.p_grid = cfg.p_grid;
  out.flag_sets = cfg.flag_sets;
  out.n_test = test.size();
  out.records.resize(cfg.flag_sets.size() * cfg.p_grid.size() * test.size());

  for (std::size_t pi = 0; pi < cfg.p_grid.size(); ++pi) {
    for (std::size_t i = 0; i < test.size(); ++i) {
      const Trajectory partial = prefix(test[i], cfg.p_grid[pi]);
      const GeoPoint truth = final_geo(test[i], f);
      std::vector<double> simple(static_cast<std::size_t>(f.k()));
      for (int m = 1; m <= f.k(); ++m) {
        simple[static_cast<std::size_t>(m - 1)] = simple_log_score(partial, f.cluster(m));
      }
      for (std::size_t fi = 0; fi < cfg.flag_sets.size(); ++fi) {
        const WeightFlags flags = cfg.flag_sets[fi];
        std::vector<double> scores = simple;
        if (!flags.none()) {
          for (int m = 1; m <= f.k(); ++m) {
            scores[static_cast<std::size_t>(m - 1)] +=
                std::log(auxiliary_weight(m, partial.start_hour, partial.start_weekday, flags, f));
          }
        }
        const auto cls = classify_scores(std::move(scores));
        auto& rec = out.records[(fi * cfg.p_grid.size() + pi) * test.size() + i];
        rec.true_label = true_labels[i];
        const auto it = std::find(cls.ranked.begin(), cls.ranked.end(), true_labels[i]);
        rec.rank = it == cls.ranked.end() ? 0 : static_cast<int>(it - cls.ranked.begin()) + 1;
        rec.error_km[0] = haversine_km(f.projection.unproject(destination_top_cluster(cls, f)), truth);
        rec.error_km[1] = haversine_km(f.projection.unproject(destination_weighted(cls.scores, f)), truth);
      }
    }
  }

  // One-vs-all ROC on complete trajectories with the simple score.
  std::vector<std::vector<double>> normalized(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    normalized[i] = classify(test[i], f).scores.normalized;
  }
  for (int m = 1; m <= f.k(); ++m) {
    std::vector<double> s(test.size());
    std::vector<char> positive(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      s[i] = normalized[i][static_cast<std::size_t>(m - 1)];
      positive[i] = true_labels[i] == m ? 1 : 0;
    }
    out.roc.push_back({fold, m, roc_auc(s, positive)});
  }
  return out;
}

std::size_t grid_index(std::span<const double> grid, double p) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - p) <= 1e-12) {
      return i;
    }
  }
  throw std::invalid_argument{"completion " + num(p) + " is not on the evaluated grid"};
}

double best_k_rate(std::span<const FoldResult> folds, double p, WeightFlags flags, int k) {
  return fold_average(folds, [&](const FoldResult& f) {
    const std::size_t pi = grid_index(f.p_grid, p);
    const std::size_t fi = flag_index(f.flag_sets, flags);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < f.n_test; ++i) {
      const int rank = f.at(fi, pi, i).rank;
      hits += (rank >= 1 && rank <= k) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(f.n_test);
  });
}

double q_class(std::span<const FoldResult> folds, double p, WeightFlags flags) {
  return best_k_rate(folds, p, flags, 1);
}

double q_pred(std::span<const FoldResult> folds, double p, WeightFlags flags, int rule) {
  if (rule != 1 && rule != 2) {
    throw std::invalid_argument{"prediction rule must be 1 or 2"};
  }
  return fold_average(folds, [&](const FoldResult& f) {
    const std::size_t pi = grid_index(f.p_grid, p);
    const std::size_t fi = flag_index(f.flag_sets, flags);
    double sum = 0.0;
    for (std::size_t i = 0; i < f.n_test; ++i) {
      sum += f.at(fi, pi, i).error_km[rule - 1];
    }
    return sum / static_cast<double>(f.n_test);
  });
}

EvalReport assemble_report(std::span<const FoldResult> folds) {
  if (folds.empty()) {
    throw std::invalid_argument{"assemble_report: no folds"};
  }
  EvalReport report;
  const auto& first = folds.front();
  for (const auto flags : first.flag_sets) {
    const std::string name = flags.to_string();
    for (double p : first.p_grid) {
      report.rows.push_back({p, "q_class", name, 0, q_class(folds, p, flags)});
      report.rows.push_back({p, "best2", name, 0, best_k_rate(folds, p, flags, 2)});
      report.rows.push_back({p, "best3", name, 0, best_k_rate(folds, p, flags, 3)});
      report.rows.push_back({p, "q_pred", name, 1, q_pred(folds, p, flags, 1)});
      report.rows.push_back({p, "q_pred", name, 2, q_pred(folds, p, flags, 2)});
    }
  }
  for (const auto& f : folds) {
    report.roc.insert(report.roc.end(), f.roc.begin(), f.roc.end());
  }
  return report;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "p,metric,flags,rule,value\n";
  for (const auto& r : rows) {
    out << num(r.p) << ',' << r.metric << ',' << r.flags << ',' << (r.rule == 0 ? std::string{"-"} : std::to_string(r.rule))
        << ',' << num(r.value) << '\n';
  }
}

void EvalReport::write_auc_csv(std::ostream& out) const {
  out << "fold,cluster,positives,negatives,auc\n";
  for (const auto& r : roc) {
    out << r.fold << ',' << r.cluster << ',' << r.roc.positives << ',' << r.roc.negatives << ','
        << (r.roc.auc ? num(*r.roc.auc) : std::string{"undefined"}) << '\n';
  }
}

void EvalReport::write_roc_csv(std::ostream& out, const ClusterRoc& r) const {
  out << "threshold,fpr,tpr\n";
  for (const auto& pt : r.roc.curve) {
    out << (std::isinf(pt.threshold) ? std::string{"inf"} : num(pt.threshold)) << ',' << num(pt.fpr) << ','
        << num(pt.tpr) << '\n';
  }
}

void EvalReport::write_files(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const auto open = [](const std::filesystem::path& p) {
    std::ofstream out{p};
    if (!out) {
      throw std::runtime_error{"cannot write " + p.string()};
    }
    return out;
  };
  {
    auto out = open(dir / "report.csv");
    write_csv(out);
  }
  {
    auto out = open(dir / "auc.csv");
    write_auc_csv(out);
  }
  for (const auto& r : roc) {
    auto out = open(dir / ("roc_fold" + std::to_string(r.fold) + "_cluster" + std::to_string(r.cluster) + ".csv"));
    write_roc_csv(out, r);
  }
}

std::optional<double> EvalReport::value(double p, std::string_view metric, WeightFlags flags, int rule) const {
  const std::string name = flags.to_string();
  for (const auto& r : rows) {
    if (std::abs(r.p - p) <= 1e-12 && r.metric == metric && r.flags == name && r.rule == rule) {
      return r.value;
    }
  }
  return std::nullopt;
}

Evaluation evaluate(std::span<const Trajectory> ts, const LocalProjection& projection, const EvalConfig& cfg) {
  const FoldPlan plan = kfold(ts.size(), cfg.seed, cfg.folds);
  const unsigned threads = cfg.threads == 0 ? default_threads() : cfg.threads;
  const unsigned outer = std::min<unsigned>(threads, static_cast<unsigned>(cfg.folds));
  const unsigned inner = outer > 1 ? 1 : threads;

  // Every SSPD the folds need is an entry of the full matrix.
  const DistanceMatrix all = pairwise_distances(ts, threads);
  ClusterAssignment global;
  if (!cfg.refit_clustering) {
    global = cut(ward_linkage(all), cfg.clusters);
  }

  Evaluation ev;
  ev.folds.resize(static_cast<std::size_t>(cfg.folds));
  parallel_for(static_cast<std::size_t>(cfg.folds), outer, [&](std::size_t fold_idx) {
    const int fold = static_cast<int>(fold_idx);
    const auto train_idx = plan.train_indices(fold);
    const auto test_idx = plan.test_indices(fold);
    const auto train = pick(ts, std::span<const std::size_t>{train_idx});
    const auto test = pick(ts, std::span<const std::size_t>{test_idx});

    ClusterAssignment labels;
    if (cfg.refit_clustering) {
      labels = cut(ward_linkage(submatrix(all, train_idx)), cfg.clusters);
    } else {
      // Restrict the global clustering and renumber away clusters that have
      // no training member in this fold.
      std::vector<int> remap(static_cast<std::size_t>(global.k) + 1, 0);
      for (auto i : train_idx) {
        remap[static_cast<std::size_t>(global.labels[i])] = 1;
      }
      int next = 0;
      for (auto& r : remap) {
        r = r ? ++next : 0;
      }
      labels.k = next;
      for (auto i : train_idx) {
        labels.labels.push_back(remap[static_cast<std::size_t>(global.labels[i])]);
      }
    }

    FlowFitConfig fit = cfg.fit;
    fit.threads = inner;
    const FlowModel model = fit_flow_model(train, labels, projection, fit);

    std::vector<int> truth(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      truth[i] = closest_mean_cluster(labels, [&](std::size_t j) { return all(test_idx[i], train_idx[j]); });
    }
    ev.folds[fold_idx] = completion_sweep(model, test, truth, cfg.sweep, fold);
  });
  ev.report = assemble_report(ev.folds);
  return ev;
}

}  // namespace trajflow
