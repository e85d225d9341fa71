#pragma once

// Seeded generators shared by the unit, property and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <trajflow/flow_model.hpp>
#include <trajflow/geometry.hpp>
#include <trajflow/gmm.hpp>

namespace testing {

using trajflow::PlanarPoint;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_{seed} {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>{lo, hi}(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>{lo, hi}(rng_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>{mean, sd}(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return rng_; }

  PlanarPoint point(double extent) { return {uniform(-extent, extent), uniform(-extent, extent)}; }

  /// Random walk of n points; consecutive duplicates appear with probability
  /// `dup` to exercise degenerate segments.
  std::vector<PlanarPoint> walk(std::size_t n, double extent = 1000.0, double step = 200.0, double dup = 0.0) {
    std::vector<PlanarPoint> pts{point(extent)};
    while (pts.size() < n) {
      if (coin(dup)) {
        pts.push_back(pts.back());
      } else {
        pts.push_back({pts.back().x + normal(0.0, step), pts.back().y + normal(0.0, step)});
      }
    }
    return pts;
  }

  trajflow::Trajectory trajectory(std::size_t n, double extent = 1000.0, double step = 200.0, double dup = 0.0) {
    trajflow::Trajectory t;
    t.id = "t" + std::to_string(counter_++);
    t.points = walk(n, extent, step, dup);
    for (std::size_t i = 0; i < n; ++i) {
      t.times.push_back(15.0 * static_cast<double>(i));
    }
    t.start_hour = integer(0, 23);
    t.start_weekday = integer(1, 7);
    return t;
  }

  /// Covariance with eigenvalues in [lo, hi] and a random orientation.
  trajflow::Cov2 covariance(double lo, double hi) {
    const double a = uniform(lo, hi);
    const double b = uniform(lo, hi);
    const double th = uniform(0.0, 3.141592653589793);
    const double c = std::cos(th);
    const double s = std::sin(th);
    return {a * c * c + b * s * s, (a - b) * c * s, a * s * s + b * c * c};
  }

  /// One draw from N(mean, cov) through the Cholesky factor.
  PlanarPoint gaussian(PlanarPoint mean, const trajflow::Cov2& cov) {
    const double l11 = std::sqrt(cov.xx);
    const double l21 = cov.xy / l11;
    const double l22 = std::sqrt(cov.yy - l21 * l21);
    const double u = normal();
    const double v = normal();
    return {mean.x + l11 * u, mean.y + l21 * u + l22 * v};
  }

  std::vector<PlanarPoint> sample(const trajflow::MixtureModel& m, std::size_t n) {
    std::vector<double> w;
    for (const auto& c : m.components) {
      w.push_back(c.weight);
    }
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::vector<PlanarPoint> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = m.components[pick(rng_)];
      pts.push_back(gaussian(c.mean, c.cov));
    }
    return pts;
  }

  trajflow::MixtureModel mixture(int k, double extent, double var_lo, double var_hi) {
    trajflow::MixtureModel m;
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      trajflow::GaussianComponent c;
      c.weight = uniform(0.2, 1.0);
      total += c.weight;
      c.mean = point(extent);
      c.cov = covariance(var_lo, var_hi);
      m.components.push_back(c);
    }
    for (auto& c : m.components) {
      c.weight /= total;
    }
    return m;
  }

  /// A model with K random clusters, each a small random mixture, random mean
  /// destinations and random (normalized) context weight tables.
  trajflow::FlowModel flow_model(int k) {
    trajflow::FlowModel f;
    f.projection = trajflow::LocalProjection{{-8.61, 41.15}};
    for (int m = 0; m < k; ++m) {
      trajflow::ClusterModel c;
      c.mixture = mixture(integer(1, 3), 2000.0, 1e4, 1e5);
      c.mean_destination = point(3000.0);
      c.member_count = static_cast<std::size_t>(integer(1, 50));
      f.clusters.push_back(c);
    }
    auto table = [&] {
      std::vector<double> v(static_cast<std::size_t>(k));
      double s = 0.0;
      for (auto& x : v) {
        x = uniform(0.05, 1.0);
        s += x;
      }
      for (auto& x : v) {
        x /= s;
      }
      return v;
    };
    f.weights.emp = table();
    for (auto& row : f.weights.weekday) {
      row = table();
    }
    for (auto& row : f.weights.hour) {
      row = table();
    }
    return f;
  }

 private:
  std::mt19937_64 rng_;
  int counter_ = 0;
};

}  // namespace testing
