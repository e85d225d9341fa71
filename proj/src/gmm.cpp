#include <trajflow/gmm.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <trajflow/parallel.hpp>

namespace trajflow {

namespace {

constexpr double k_log_2pi = 1.8378770664093453;  // ln(2 pi)
constexpr double k_neg_inf = -std::numeric_limits<double>::infinity();

/// Per-component constants for fast density evaluation.
struct Evaluator {
  double log_weight;
  double mx, my;
  double ixx, ixy, iyy;  // inverse covariance
  double log_norm;       // -ln(2 pi) - ln|S| / 2

  explicit Evaluator(const GaussianComponent& c) {
    const double det = c.cov.det();
    log_weight = c.weight > 0.0 ? std::log(c.weight) : k_neg_inf;
    mx = c.mean.x;
    my = c.mean.y;
    ixx = c.cov.yy / det;
    ixy = -c.cov.xy / det;
    iyy = c.cov.xx / det;
    log_norm = -k_log_2pi - 0.5 * std::log(det);
  }

  double log_pdf(PlanarPoint p) const noexcept {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    return log_norm - 0.5 * (ixx * dx * dx + 2.0 * ixy * dx * dy + iyy * dy * dy);
  }
};

std::vector<Evaluator> evaluators(const MixtureModel& m) {
  std::vector<Evaluator> ev;
  ev.reserve(m.components.size());
  for (const auto& c : m.components) {
    if (!c.cov.positive_definite()) {
      throw std::domain_error{"covariance matrix is not positive definite"};
    }
    ev.emplace_back(c);
  }
  return ev;
}

/// Fills `log_resp` with log(w_k phi_k(p)) and returns their log-sum-exp.
double joint_log(PlanarPoint p, std::span<const Evaluator> ev, std::span<double> log_joint) {
  double top = k_neg_inf;
  for (std::size_t k = 0; k < ev.size(); ++k) {
    log_joint[k] = ev[k].log_weight == k_neg_inf ? k_neg_inf : ev[k].log_weight + ev[k].log_pdf(p);
    top = std::max(top, log_joint[k]);
  }
  if (top == k_neg_inf) {
    return k_neg_inf;
  }
  double sum = 0.0;
  for (double v : log_joint) {
    sum += std::exp(v - top);
  }
  return top + std::log(sum);
}

struct Moments {
  PlanarPoint mean;
  Cov2 scatter;
};

Moments moments(std::span<const PlanarPoint> pts) {
  Moments m;
  const auto n = static_cast<double>(pts.size());
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& p : pts) {
    sx += p.x;
    sy += p.y;
  }
  m.mean = {sx / n, sy / n};
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
  for (const auto& p : pts) {
    const double dx = p.x - m.mean.x;
    const double dy = p.y - m.mean.y;
    xx += dx * dx;
    xy += dx * dy;
    yy += dy * dy;
  }
  m.scatter = {xx / n, xy / n, yy / n};
  return m;
}

double squared(PlanarPoint a, PlanarPoint b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// k-means++ seeding followed by one hard assignment pass for weights and
/// covariances.
MixtureModel seed_mixture(std::span<const PlanarPoint> pts, int k, double floor, const Cov2& global,
                          std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  std::vector<PlanarPoint> centers;
  centers.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  centers.push_back(pts[pick(rng)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared(pts[i], centers.front());
  }
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double v : d2) {
      total += v;
    }
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = pick(rng);
    } else {
      double target = unit(rng) * total;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.push_back(pts[chosen]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared(pts[i], centers.back()));
    }
  }

  std::vector<std::vector<PlanarPoint>> groups(static_cast<std::size_t>(k));
  for (const auto& p : pts) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = squared(p, centers[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    groups[best].push_back(p);
  }

  MixtureModel m;
  m.n_train = n;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    GaussianComponent g;
    g.weight = (static_cast<double>(groups[c].size()) + 1.0) / (static_cast<double>(n) + k);
    g.mean = centers[c];
    if (groups[c].size() >= 2) {
      Cov2 s{};
      for (const auto& p : groups[c]) {
        const double dx = p.x - g.mean.x;
        const double dy = p.y - g.mean.y;
        s.xx += dx * dx;
        s.xy += dx * dy;
        s.yy += dy * dy;
      }
      const auto cnt = static_cast<double>(groups[c].size());
      g.cov = Cov2{s.xx / cnt, s.xy / cnt, s.yy / cnt}.floored(floor);
    } else {
      g.cov = global;
    }
    m.components.push_back(g);
  }
  return m;
}

struct EmRun {
  MixtureModel model;
  std::vector<double> trace;
};

EmRun run_em(std::span<const PlanarPoint> pts, MixtureModel m, const EmConfig& cfg) {
  const std::size_t n = pts.size();
  const std::size_t k = m.components.size();
  std::vector<double> resp(n * k);

  const auto e_step = [&](const MixtureModel& model) {
    const auto ev = evaluators(model);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> row{resp.data() + i * k, k};
      const double lse = joint_log(pts[i], ev, row);
      ll += lse;
      for (auto& r : row) {
        r = r == k_neg_inf ? 0.0 : std::exp(r - lse);
      }
    }
    return ll;
  };

  const auto m_step = [&](MixtureModel& model) {
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0;
      double sx = 0.0;
      double sy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * k + c];
        nk += r;
        sx += r * pts[i].x;
        sy += r * pts[i].y;
      }
      auto& g = model.components[c];
      g.weight = nk / static_cast<double>(n);
      if (!(nk > 0.0)) {
        continue;
      }
      g.mean = {sx / nk, sy / nk};
      Cov2 s{0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i * k + c];
        const double dx = pts[i].x - g.mean.x;
        const double dy = pts[i].y - g.mean.y;
        s.xx += r * dx * dx;
        s.xy += r * dx * dy;
        s.yy += r * dy * dy;
      }
      g.cov = Cov2{s.xx / nk, s.xy / nk, s.yy / nk}.floored(cfg.cov_floor);
    }
  };

  EmRun run;
  double ll = e_step(m);
  run.trace.push_back(ll);
  for (int it = 0; it < cfg.max_iter; ++it) {
    m_step(m);
    const double next = e_step(m);
    run.trace.push_back(next);
    assert(next >= ll - 1e-8 * std::max(1.0, std::abs(ll)));
    const bool done = std::abs(next - ll) <= cfg.tol * std::abs(ll);
    ll = next;
    if (done) {
      break;
    }
  }
  m.train_log_likelihood = ll;
  run.model = std::move(m);
  return run;
}

void prune_empty(MixtureModel& m) {
  std::erase_if(m.components, [](const GaussianComponent& c) { return !(c.weight > 0.0); });
  double total = 0.0;
  for (const auto& c : m.components) {
    total += c.weight;
  }
  for (auto& c : m.components) {
    c.weight /= total;
  }
}

}  // namespace

std::pair<double, double> Cov2::eigenvalues() const noexcept {
  const double mid = 0.5 * (xx + yy);
  const double rad = std::hypot(0.5 * (xx - yy), xy);
  return {mid + rad, mid - rad};
}

Cov2 Cov2::floored(double floor) const noexcept {
  const auto [l1, l2] = eigenvalues();
  if (l2 >= floor) {
    return *this;
  }
  if (xy == 0.0) {
    return {std::max(xx, floor), 0.0, std::max(yy, floor)};
  }
  // Unit eigenvector of the larger eigenvalue.
  double vx = 0.0;
  double vy = 0.0;
  if (xx >= yy) {
    vx = l1 - yy;
    vy = xy;
  } else {
    vx = xy;
    vy = l1 - xx;
  }
  const double norm = std::hypot(vx, vy);
  vx /= norm;
  vy /= norm;
  const double a = std::max(l1, floor);
  const double b = std::max(l2, floor);
  // S = a v v^T + b w w^T with w = (-vy, vx).
  return {a * vx * vx + b * vy * vy, (a - b) * vx * vy, a * vy * vy + b * vx * vx};
}

double gaussian_log_pdf(PlanarPoint p, const GaussianComponent& c) {
  if (!c.cov.positive_definite()) {
    throw std::domain_error{"covariance matrix is not positive definite"};
  }
  return Evaluator{c}.log_pdf(p);
}

double mixture_log_pdf(PlanarPoint p, const MixtureModel& m) {
  const auto ev = evaluators(m);
  std::vector<double> scratch(ev.size());
  return joint_log(p, ev, scratch);
}

double log_likelihood(std::span<const PlanarPoint> points, const MixtureModel& m) {
  const auto ev = evaluators(m);
  std::vector<double> scratch(ev.size());
  double ll = 0.0;
  for (const auto& p : points) {
    ll += joint_log(p, ev, scratch);
  }
  return ll;
}

std::vector<double> responsibilities(PlanarPoint p, const MixtureModel& m) {
  const auto ev = evaluators(m);
  std::vector<double> r(ev.size());
  const double lse = joint_log(p, ev, r);
  for (auto& v : r) {
    v = v == k_neg_inf ? 0.0 : std::exp(v - lse);
  }
  return r;
}

MixtureModel fit_single(std::span<const PlanarPoint> points, double cov_floor) {
  if (points.empty()) {
    throw std::domain_error{"cannot fit a Gaussian to zero points"};
  }
  const auto mom = moments(points);
  MixtureModel m;
  m.components.push_back({1.0, mom.mean, mom.scatter.floored(cov_floor)});
  m.n_train = points.size();
  m.train_log_likelihood = log_likelihood(points, m);
  return m;
}

MixtureModel em_fit(std::span<const PlanarPoint> points, int k, const EmConfig& cfg, std::vector<double>* trace) {
  if (k < 1) {
    throw std::domain_error{"em_fit: k must be positive"};
  }
  if (points.size() < static_cast<std::size_t>(k)) {
    throw std::domain_error{"em_fit: fewer points than components"};
  }
  if (cfg.max_iter < 1 || cfg.n_restarts < 1 || !(cfg.tol > 0.0) || !(cfg.cov_floor > 0.0)) {
    throw std::invalid_argument{"em_fit: invalid EM configuration"};
  }
  if (k == 1) {
    auto m = fit_single(points, cfg.cov_floor);
    if (trace) {
      *trace = {m.train_log_likelihood};
    }
    return m;
  }

  const Cov2 global = moments(points).scatter.floored(cfg.cov_floor);
  EmRun best;
  bool have_best = false;
  for (int r = 0; r < cfg.n_restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng{seq};
    auto run = run_em(points, seed_mixture(points, k, cfg.cov_floor, global, rng), cfg);
    if (!have_best || run.model.train_log_likelihood > best.model.train_log_likelihood) {
      best = std::move(run);
      have_best = true;
    }
  }
  prune_empty(best.model);
  best.model.n_train = points.size();
  if (trace) {
    *trace = std::move(best.trace);
  }
  return best.model;
}

int bic_parameter_count(int k, BicPenalty penalty) noexcept {
  return penalty == BicPenalty::bare_k ? k : 6 * k - 1;
}

double bic(double log_likelihood, int k, std::size_t n, BicPenalty penalty) {
  if (n < 1) {
    throw std::domain_error{"bic: sample size must be positive"};
  }
  return -2.0 * log_likelihood + bic_parameter_count(k, penalty) * std::log(static_cast<double>(n));
}

MixtureModel select_k(std::span<const PlanarPoint> points, int k_min, int k_max, const EmConfig& cfg,
                      unsigned threads) {
  if (k_min < 1 || k_max < k_min) {
    throw std::domain_error{"select_k: empty component range"};
  }
  if (static_cast<std::size_t>(k_max) > points.size()) {
    throw std::domain_error{"select_k: more components than points"};
  }
  const auto count = static_cast<std::size_t>(k_max - k_min + 1);
  std::vector<MixtureModel> fits(count);
  parallel_for(count, threads, [&](std::size_t i) { fits[i] = em_fit(points, k_min + static_cast<int>(i), cfg); });

  std::size_t best = 0;
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    const double b = bic(fits[i].train_log_likelihood, static_cast<int>(fits[i].k()), points.size(), cfg.penalty);
    if (b < best_bic) {
      best_bic = b;
      best = i;
    }
  }
  return std::move(fits[best]);
}

}  // namespace trajflow
