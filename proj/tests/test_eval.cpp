#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <trajflow/eval.hpp>
#include <trajflow/ingest.hpp>
#include <trajflow/synth.hpp>

#include "oracles.hpp"
#include "support.hpp"

using namespace trajflow;

namespace {

Trajectory straight(const std::string& id, PlanarPoint from, PlanarPoint to, int n, const LocalProjection& proj) {
  Trajectory t;
  t.id = id;
  for (int j = 0; j < n; ++j) {
    const double s = static_cast<double>(j) / (n - 1);
    t.points.push_back({from.x + s * (to.x - from.x), from.y + s * (to.y - from.y)});
    t.geo_points.push_back(proj.unproject(t.points.back()));
    t.times.push_back(15.0 * j);
  }
  return t;
}

/// Two flows from the origin: east and north. Cluster 1 is east.
FlowModel east_north_model(const LocalProjection& proj) {
  FlowModel f;
  f.projection = proj;
  for (PlanarPoint dir : {PlanarPoint{1.0, 0.0}, PlanarPoint{0.0, 1.0}}) {
    ClusterModel c;
    for (int j = 0; j <= 4; ++j) {
      c.mixture.components.push_back({0.2, {dir.x * 250.0 * j, dir.y * 250.0 * j}, {150.0 * 150.0, 0.0, 150.0 * 150.0}});
    }
    c.mean_destination = {dir.x * 1000.0, dir.y * 1000.0};
    c.member_count = 10;
    f.clusters.push_back(c);
  }
  WeightCounts counts;
  counts.emp = {10, 10};
  for (auto& row : counts.weekday) {
    row = {0, 0};
  }
  for (auto& row : counts.hour) {
    row = {0, 0};
  }
  f.weights = weight_tables(counts, 1.0);
  return f;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in{p, std::ios::binary};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("k-fold plan partitions the items evenly") {
  for (std::size_t n : {10u, 11u, 37u, 600u}) {
    const auto plan = kfold(n, 3, 10);
    REQUIRE(plan.fold_of.size() == n);
    std::size_t smallest = n;
    std::size_t largest = 0;
    std::set<std::size_t> seen;
    for (int f = 0; f < 10; ++f) {
      const auto test = plan.test_indices(f);
      const auto train = plan.train_indices(f);
      CHECK(test.size() + train.size() == n);
      smallest = std::min(smallest, test.size());
      largest = std::max(largest, test.size());
      for (auto i : test) {
        CHECK(seen.insert(i).second);
        CHECK(std::find(train.begin(), train.end(), i) == train.end());
      }
    }
    CHECK(seen.size() == n);
    CHECK(largest - smallest <= 1);
  }
  CHECK(kfold(100, 5).fold_of == kfold(100, 5).fold_of);
  CHECK(kfold(100, 5).fold_of != kfold(100, 6).fold_of);
  CHECK_THROWS_AS(kfold(9, 1, 10), std::domain_error);
}

TEST_CASE("roc and auc on a hand example") {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  const std::vector<char> pos{1, 0, 1, 0};
  const auto r = roc_auc(s, pos);
  REQUIRE(r.auc);
  CHECK(*r.auc == 0.75);
  CHECK(r.positives == 2);
  CHECK(r.negatives == 2);
  REQUIRE(r.curve.size() == 5);
  CHECK(r.curve[0].fpr == 0.0);
  CHECK(r.curve[0].tpr == 0.0);
  CHECK(r.curve[1].tpr == 0.5);
  CHECK(r.curve[2].fpr == 0.5);
  CHECK(r.curve[4].fpr == 1.0);
  CHECK(r.curve[4].tpr == 1.0);

  // Ties count one half.
  const auto tied = roc_auc(std::vector<double>{0.5, 0.5}, std::vector<char>{1, 0});
  CHECK(*tied.auc == 0.5);
  CHECK(tied.curve.size() == 2);

  CHECK_FALSE(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<char>{1, 1}).auc);
  CHECK_FALSE(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<char>{0, 0}).auc);
}

TEST_CASE("rank-statistic auc equals exhaustive pair counting") {
  testing::Gen gen{1};
  for (int trial = 0; trial < 500; ++trial) {
    const int n = gen.integer(2, 40);
    std::vector<double> s;
    std::vector<char> pos;
    const int levels = gen.integer(1, 6);  // few distinct values force ties
    for (int i = 0; i < n; ++i) {
      s.push_back(gen.coin(0.5) ? gen.integer(0, levels) / 4.0 : gen.uniform(0.0, 1.0));
      pos.push_back(gen.coin(0.4) ? 1 : 0);
    }
    pos[0] = 1;
    pos[1] = 0;
    const auto r = roc_auc(s, pos);
    REQUIRE(r.auc);
    CHECK(*r.auc == doctest::Approx(oracle::auc_pairs(s, pos)).epsilon(1e-12));
    for (std::size_t i = 1; i < r.curve.size(); ++i) {
      CHECK(r.curve[i].fpr >= r.curve[i - 1].fpr);
      CHECK(r.curve[i].tpr >= r.curve[i - 1].tpr);
      CHECK(r.curve[i].threshold < r.curve[i - 1].threshold);
    }
    CHECK(r.curve.back().fpr == 1.0);
    CHECK(r.curve.back().tpr == 1.0);
  }
}

TEST_CASE("true label is the cluster nearest on average") {
  const LocalProjection proj{{-8.61, 41.15}};
  const std::vector<Trajectory> train{straight("a", {0, 0}, {1000, 0}, 5, proj),
                                      straight("b", {0, 0}, {1000, 100}, 5, proj),
                                      straight("c", {0, 0}, {0, 1000}, 5, proj)};
  const ClusterAssignment labels{{1, 1, 2}, 2};
  CHECK(true_label(straight("q", {0, 0}, {900, 30}, 6, proj), train, labels) == 1);
  CHECK(true_label(straight("q", {0, 0}, {50, 900}, 6, proj), train, labels) == 2);
  CHECK_THROWS(true_label(train[0], train, ClusterAssignment{{1, 2}, 2}));
}

TEST_CASE("completion sweep records ranks and errors") {
  const LocalProjection proj{{-8.61, 41.15}};
  const auto f = east_north_model(proj);
  const std::vector<Trajectory> test{straight("e", {0, 0}, {1000, 0}, 11, proj),
                                     straight("n", {0, 0}, {0, 1000}, 11, proj)};
  const std::vector<int> truth{1, 2};
  SweepConfig cfg;
  cfg.p_grid = {0.0, 0.5, 1.0};
  cfg.flag_sets = {WeightFlags{}, WeightFlags{true, false, false}};
  const auto r = completion_sweep(f, test, truth, cfg, 4);
  CHECK(r.fold == 4);
  CHECK(r.n_test == 2);
  CHECK(r.records.size() == 2 * 3 * 2);
  for (std::size_t fi = 0; fi < 2; ++fi) {
    for (std::size_t pi = 1; pi < 3; ++pi) {
      CHECK(r.at(fi, pi, 0).rank == 1);
      CHECK(r.at(fi, pi, 1).rank == 1);
      CHECK(r.at(fi, pi, 0).true_label == 1);
      // Rule 1 lands exactly on the true end point here.
      CHECK(r.at(fi, pi, 0).error_km[0] == doctest::Approx(0.0).epsilon(1e-9));
    }
  }
  // At p = 0 only the shared origin is seen: both clusters score alike.
  const auto& start = r.at(0, 0, 1);
  CHECK(start.error_km[1] == doctest::Approx(haversine_km(proj.unproject({500, 500}), proj.unproject({0, 1000})))
                                 .epsilon(1e-6));
  REQUIRE(r.roc.size() == 2);
  CHECK(r.roc[0].cluster == 1);
  CHECK(r.roc[0].fold == 4);
  CHECK(*r.roc[0].roc.auc == 1.0);

  const std::vector<FoldResult> folds{r};
  CHECK(q_class(folds, 1.0) == 1.0);
  CHECK(best_k_rate(folds, 0.0, {}, 2) == 1.0);
  CHECK(q_pred(folds, 1.0, {}, 1) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(q_pred(folds, 0.3, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(q_pred(folds, 1.0, {}, 3), std::invalid_argument);
  CHECK_THROWS(q_class(folds, 1.0, WeightFlags{false, false, true}));
  CHECK_THROWS(completion_sweep(f, test, std::vector<int>{1}, cfg));
}

TEST_CASE("fold metrics are averages of per-fold rates") {
  FoldResult a;
  a.p_grid = {1.0};
  a.flag_sets = {WeightFlags{}};
  a.n_test = 2;
  a.records = {{1, 1, {1.0, 2.0}}, {2, 3, {3.0, 4.0}}};
  FoldResult b = a;
  b.n_test = 1;
  b.records = {{1, 2, {5.0, 6.0}}};
  const std::vector<FoldResult> folds{a, b};
  CHECK(q_class(folds, 1.0) == doctest::Approx((0.5 + 0.0) / 2.0));
  CHECK(best_k_rate(folds, 1.0, {}, 2) == doctest::Approx((0.5 + 1.0) / 2.0));
  CHECK(best_k_rate(folds, 1.0, {}, 3) == 1.0);
  CHECK(q_pred(folds, 1.0, {}, 1) == doctest::Approx((2.0 + 5.0) / 2.0));
  CHECK(q_pred(folds, 1.0, {}, 2) == doctest::Approx((3.0 + 6.0) / 2.0));

  const auto report = assemble_report(folds);
  CHECK(report.rows.size() == 5);
  CHECK(*report.value(1.0, "best2", {}) == doctest::Approx(0.75));
  CHECK(*report.value(1.0, "q_pred", {}, 2) == doctest::Approx(4.5));
  CHECK_FALSE(report.value(0.5, "q_class", {}));
  std::ostringstream csv;
  report.write_csv(csv);
  CHECK(csv.str().rfind("p,metric,flags,rule,value\n1,q_class,none,-,0.25\n", 0) == 0);
}

TEST_CASE("best-k rates grow with k and reach one at K") {
  const auto city = synth_city(SyntheticCitySpec{3, 30, 4, 20.0, 100.0, 800.0, 5});
  const auto data = make_dataset(city.trips);
  EvalConfig cfg;
  cfg.folds = 3;
  cfg.clusters = 3;
  cfg.seed = 2;
  cfg.fit.k_max = 3;
  cfg.fit.em.n_restarts = 1;
  cfg.sweep.p_grid = {0.0, 0.3, 1.0};
  const auto ev = evaluate(data.trajectories, data.projection, cfg);
  for (double p : cfg.sweep.p_grid) {
    for (const auto& flags : cfg.sweep.flag_sets) {
      const double b1 = best_k_rate(ev.folds, p, flags, 1);
      const double b2 = best_k_rate(ev.folds, p, flags, 2);
      const double b3 = best_k_rate(ev.folds, p, flags, 3);
      CHECK(b1 <= b2);
      CHECK(b2 <= b3);
      CHECK(b3 == 1.0);
    }
  }
  CHECK(q_class(ev.folds, 1.0) >= 0.9);
  CHECK(ev.report.roc.size() == 9);
}

TEST_CASE("evaluation is deterministic and thread-count independent") {
  const auto city = synth_city(SyntheticCitySpec{3, 20, 3, 20.0, 100.0, 600.0, 9});
  const auto data = make_dataset(city.trips);
  EvalConfig cfg;
  cfg.folds = 4;
  cfg.clusters = 3;
  cfg.seed = 11;
  cfg.fit.k_max = 3;
  cfg.fit.em.n_restarts = 1;
  cfg.sweep.p_grid = {0.25, 1.0};
  auto render = [&](unsigned threads, bool refit) {
    auto c = cfg;
    c.threads = threads;
    c.refit_clustering = refit;
    std::ostringstream s;
    const auto ev = evaluate(data.trajectories, data.projection, c);
    ev.report.write_csv(s);
    ev.report.write_auc_csv(s);
    return s.str();
  };
  const auto one = render(1, true);
  CHECK(one == render(1, true));
  CHECK(one == render(4, true));
  const auto fast = render(1, false);
  CHECK(fast == render(3, false));
}

TEST_CASE("report files") {
  FoldResult a;
  a.p_grid = {1.0};
  a.flag_sets = {WeightFlags{}};
  a.n_test = 1;
  a.records = {{1, 1, {0.5, 0.25}}};
  a.roc = {{0, 1, roc_auc(std::vector<double>{0.9, 0.1}, std::vector<char>{1, 0})},
           {0, 2, roc_auc(std::vector<double>{0.9}, std::vector<char>{1})}};
  const std::vector<FoldResult> folds{a};
  const auto report = assemble_report(folds);
  const auto dir = std::filesystem::temp_directory_path() / "trajflow_test_report";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  report.write_files(dir);
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(slurp(dir / "auc.csv") == "fold,cluster,positives,negatives,auc\n0,1,1,1,1\n0,2,1,0,undefined\n");
  CHECK(std::filesystem::exists(dir / "roc_fold0_cluster1.csv"));
  CHECK(std::filesystem::exists(dir / "roc_fold0_cluster2.csv"));
  std::filesystem::remove_all(dir);
}
