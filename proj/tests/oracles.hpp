#pragma once

// From-scratch reference computations the library results are checked against.
// They share no code with the library and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <trajflow/clustering.hpp>
#include <trajflow/geometry.hpp>

namespace oracle {

using trajflow::PlanarPoint;

/// Distance from p to segment ab via the clamped projection parameter.
inline double segment_distance(PlanarPoint p, PlanarPoint a, PlanarPoint b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  }
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

inline double polyline_distance(PlanarPoint p, std::span<const PlanarPoint> line) {
  if (line.size() == 1) {
    return std::hypot(p.x - line[0].x, p.y - line[0].y);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < line.size(); ++j) {
    best = std::min(best, oracle::segment_distance(p, line[j], line[j + 1]));
  }
  return best;
}

inline double spd(std::span<const PlanarPoint> from, std::span<const PlanarPoint> to) {
  double sum = 0.0;
  for (const auto& p : from) {
    sum += oracle::polyline_distance(p, to);
  }
  return sum / static_cast<double>(from.size());
}

inline double sspd(std::span<const PlanarPoint> a, std::span<const PlanarPoint> b) {
  return 0.5 * (oracle::spd(a, b) + oracle::spd(b, a));
}

/// Ward agglomeration recomputing every inter-cluster distance from the raw
/// dissimilarities at every step:
///   d^2(A,B) = 2 nA nB / (nA + nB) * (mean_AB d^2 - mean_AA d^2 / 2 - mean_BB d^2 / 2)
/// with the means over all ordered pairs (diagonal included). Ties go to the
/// pair with the lexicographically lowest (min member of A, min member of B).
inline trajflow::Dendrogram ward_brute_force(const trajflow::DistanceMatrix& d) {
  const std::size_t n = d.size();
  auto d2 = [&](std::size_t i, std::size_t j) {
    const double v = i == j ? 0.0 : d(i, j);
    return v * v;
  };
  auto mean_sq = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double s = 0.0;
    for (auto i : a) {
      for (auto j : b) {
        s += d2(i, j);
      }
    }
    return s / static_cast<double>(a.size() * b.size());
  };
  struct Node {
    std::vector<std::size_t> members;  // sorted
    std::size_t id;
  };
  std::vector<Node> active;
  for (std::size_t i = 0; i < n; ++i) {
    active.push_back({{i}, i});
  }
  trajflow::Dendrogram dend;
  dend.n = n;
  while (active.size() > 1) {
    std::size_t bi = 0;
    std::size_t bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const auto& A = active[i].members;
        const auto& B = active[j].members;
        const double na = static_cast<double>(A.size());
        const double nb = static_cast<double>(B.size());
        const double v =
            2.0 * na * nb / (na + nb) * (mean_sq(A, B) - 0.5 * mean_sq(A, A) - 0.5 * mean_sq(B, B));
        // `active` stays ordered by smallest member, so scanning order is the
        // tie-break order.
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    auto& A = active[bi];
    auto& B = active[bj];
    trajflow::Merge m;
    m.left = A.id;
    m.right = B.id;
    m.height = std::sqrt(std::max(best, 0.0));
    m.size = A.members.size() + B.members.size();
    dend.merges.push_back(m);
    A.members.insert(A.members.end(), B.members.begin(), B.members.end());
    std::sort(A.members.begin(), A.members.end());
    A.id = n + dend.merges.size() - 1;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return dend;
}

/// AUC as the fraction of (positive, negative) pairs ranked correctly, ties
/// counting one half.
inline double auc_pairs(std::span<const double> scores, std::span<const char> positive) {
  double good = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) {
      continue;
    }
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) {
        continue;
      }
      ++pairs;
      if (scores[i] > scores[j]) {
        good += 1.0;
      } else if (scores[i] == scores[j]) {
        good += 0.5;
      }
    }
  }
  return good / static_cast<double>(pairs);
}

/// Orientation of (a, b, c) evaluated in quad precision, where the products
/// of double differences are exact.
inline int orientation(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  using q = __float128;
  const q v = (q(b.x) - q(a.x)) * (q(c.y) - q(a.y)) - (q(b.y) - q(a.y)) * (q(c.x) - q(a.x));
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

/// Counter-clockwise convex hull (Andrew's monotone chain).
inline std::vector<PlanarPoint> convex_hull(std::vector<PlanarPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](PlanarPoint a, PlanarPoint b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (pts.size() < 3) {
    return pts;
  }
  std::vector<PlanarPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && orientation(hull[k - 2], hull[k - 1], p) <= 0) {
      --k;
    }
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && orientation(hull[k - 2], hull[k - 1], pts[i]) <= 0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Closed-set membership of p in the convex hull of `pts`.
inline bool in_convex_hull(PlanarPoint p, const std::vector<PlanarPoint>& pts) {
  const auto hull = convex_hull(pts);
  if (hull.size() == 1) {
    return p.x == hull[0].x && p.y == hull[0].y;
  }
  if (hull.size() == 2) {
    return orientation(hull[0], hull[1], p) == 0 && std::min(hull[0].x, hull[1].x) <= p.x &&
           p.x <= std::max(hull[0].x, hull[1].x) && std::min(hull[0].y, hull[1].y) <= p.y &&
           p.y <= std::max(hull[0].y, hull[1].y);
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (orientation(hull[i], hull[(i + 1) % hull.size()], p) < 0) {
      return false;
    }
  }
  return true;
}

}  // namespace oracle
