#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <trajflow/clustering.hpp>

#include "oracles.hpp"
#include "support.hpp"

using namespace trajflow;

namespace {

DistanceMatrix random_matrix(testing::Gen& gen, std::size_t n) {
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d.set(i, j, gen.uniform(0.1, 100.0));
    }
  }
  return d;
}

DistanceMatrix euclidean_matrix(const std::vector<PlanarPoint>& pts) {
  DistanceMatrix d(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      d.set(i, j, euclidean(pts[i], pts[j]));
    }
  }
  return d;
}

void check_same_merges(const Dendrogram& got, const Dendrogram& want) {
  REQUIRE(got.merges.size() == want.merges.size());
  for (std::size_t k = 0; k < got.merges.size(); ++k) {
    CHECK(got.merges[k].left == want.merges[k].left);
    CHECK(got.merges[k].right == want.merges[k].right);
    CHECK(got.merges[k].size == want.merges[k].size);
    CHECK(got.merges[k].height == doctest::Approx(want.merges[k].height).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("distance matrix indexing") {
  DistanceMatrix d(4);
  CHECK(d.size() == 4);
  CHECK(d.condensed().size() == 6);
  d.set(2, 1, 7.5);
  CHECK(d(1, 2) == 7.5);
  CHECK(d(2, 1) == 7.5);
  CHECK(d(3, 3) == 0.0);
  CHECK(d.condensed()[3] == 7.5);  // (1,2) follows (0,1), (0,2), (0,3)
  CHECK_THROWS(d.set(1, 1, 2.0));
  CHECK_THROWS(d.set(0, 1, -1.0));
  CHECK_THROWS(d.set(0, 1, std::nan("")));
  CHECK_THROWS(DistanceMatrix(3, std::vector<double>{1.0, 2.0}));
  CHECK_THROWS(DistanceMatrix(2, std::vector<double>{-1.0}));
}

TEST_CASE("distance matrix binary round trip") {
  testing::Gen gen{1};
  const auto d = random_matrix(gen, 7);
  const auto path = std::filesystem::temp_directory_path() / "trajflow_test_matrix.bin";
  d.save(path);
  CHECK(std::filesystem::file_size(path) == 8 + 4 + 4 + 8 + 21 * 8);
  {
    std::ifstream in{path, std::ios::binary};
    char magic[8];
    in.read(magic, 8);
    CHECK(std::string(magic, 7) == "TRJSSPD");
    CHECK(magic[7] == '\0');
  }
  CHECK(DistanceMatrix::load(path) == d);

  std::ofstream{path, std::ios::binary} << "garbage";
  CHECK_THROWS(DistanceMatrix::load(path));
  std::filesystem::remove(path);
}

TEST_CASE("pairwise distances are the pairwise sspd") {
  testing::Gen gen{2};
  std::vector<Trajectory> ts;
  for (int i = 0; i < 9; ++i) {
    ts.push_back(gen.trajectory(static_cast<std::size_t>(gen.integer(2, 10))));
  }
  const auto d1 = pairwise_distances(ts, 1);
  const auto d4 = pairwise_distances(ts, 4);
  CHECK(d1 == d4);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      CHECK(d1(i, j) == sspd(ts[i], ts[j]));
    }
  }
  CHECK_THROWS_AS(pairwise_distances(std::span{ts}.first(1)), std::domain_error);
}

TEST_CASE("ward on four points of a line") {
  // 0, 1, 5, 6: two tied pairs, then the pair of pairs at
  // sqrt(2 * 2 * 2 / 4) * |0.5 - 5.5|.
  const auto d = euclidean_matrix({{0, 0}, {1, 0}, {5, 0}, {6, 0}});
  const auto dend = ward_linkage(d);
  REQUIRE(dend.merges.size() == 3);
  CHECK(dend.merges[0] == Merge{0, 1, 1.0, 2});
  CHECK(dend.merges[1] == Merge{2, 3, 1.0, 2});
  CHECK(dend.merges[2].left == 4);
  CHECK(dend.merges[2].right == 5);
  CHECK(dend.merges[2].size == 4);
  CHECK(dend.merges[2].height == doctest::Approx(5.0 * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("ward matches the centroid formula on euclidean input") {
  // For points, the Ward height of A and B is sqrt(2 nA nB / (nA + nB)) |cA - cB|.
  testing::Gen gen{9};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PlanarPoint> pts;
    const auto n = static_cast<std::size_t>(gen.integer(2, 12));
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back(gen.point(100.0));
    }
    const auto dend = ward_linkage(euclidean_matrix(pts));
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
      members[i] = {i};
    }
    for (std::size_t k = 0; k < dend.merges.size(); ++k) {
      const auto& m = dend.merges[k];
      auto centroid = [&](const std::vector<std::size_t>& idx) {
        PlanarPoint c{0, 0};
        for (auto i : idx) {
          c.x += pts[i].x / static_cast<double>(idx.size());
          c.y += pts[i].y / static_cast<double>(idx.size());
        }
        return c;
      };
      const auto& a = members[m.left];
      const auto& b = members[m.right];
      const double na = static_cast<double>(a.size());
      const double nb = static_cast<double>(b.size());
      const double want = std::sqrt(2.0 * na * nb / (na + nb)) * euclidean(centroid(a), centroid(b));
      CHECK(m.height == doctest::Approx(want).epsilon(1e-9));
      auto merged = a;
      merged.insert(merged.end(), b.begin(), b.end());
      members[n + k] = merged;
    }
  }
}

TEST_CASE("ward agrees with the brute-force agglomerator") {
  testing::Gen gen{4};
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(gen.integer(2, 9));
    const auto d = random_matrix(gen, n);
    check_same_merges(ward_linkage(d), oracle::ward_brute_force(d));
  }
}

TEST_CASE("ward breaks exact ties toward the lowest member indices") {
  // All pairwise distances equal: every first merge ties.
  DistanceMatrix d(5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) {
      d.set(i, j, 1.0);
    }
  }
  const auto dend = ward_linkage(d);
  CHECK(dend.merges[0].left == 0);
  CHECK(dend.merges[0].right == 1);
}

TEST_CASE("ward merge heights never decrease") {
  testing::Gen gen{6};
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_matrix(gen, static_cast<std::size_t>(gen.integer(2, 40)));
    CHECK(ward_linkage(d).monotone());
  }
}

TEST_CASE("merges reference existing nodes once and sizes add up") {
  testing::Gen gen{12};
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::size_t>(gen.integer(2, 30));
    const auto dend = ward_linkage(random_matrix(gen, n));
    REQUIRE(dend.merges.size() == n - 1);
    std::vector<std::size_t> size(n, 1);
    std::set<std::size_t> used;
    for (std::size_t k = 0; k < dend.merges.size(); ++k) {
      const auto& m = dend.merges[k];
      CHECK(m.left < n + k);
      CHECK(m.right < n + k);
      CHECK(used.insert(m.left).second);
      CHECK(used.insert(m.right).second);
      CHECK(m.size == size[m.left] + size[m.right]);
      size.push_back(m.size);
    }
    CHECK(dend.merges.back().size == n);
  }
}

TEST_CASE("cut labels") {
  const auto dend = ward_linkage(euclidean_matrix({{0, 0}, {10, 0}, {1, 0}, {11, 0}, {50, 0}}));
  const auto k1 = cut(dend, 1);
  CHECK(k1.labels == std::vector<int>{1, 1, 1, 1, 1});
  const auto k2 = cut(dend, 2);
  CHECK(k2.labels == std::vector<int>{1, 1, 1, 1, 2});
  const auto k3 = cut(dend, 3);
  CHECK(k3.labels == std::vector<int>{1, 2, 1, 2, 3});
  CHECK(k3.k == 3);
  CHECK(k3.members(2) == std::vector<std::size_t>{1, 3});
  const auto k5 = cut(dend, 5);
  CHECK(k5.labels == std::vector<int>{1, 2, 3, 4, 5});
  CHECK_THROWS_AS(cut(dend, 0), std::domain_error);
  CHECK_THROWS_AS(cut(dend, 6), std::domain_error);
}

TEST_CASE("cuts are nested partitions with exactly k groups") {
  testing::Gen gen{21};
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<std::size_t>(gen.integer(2, 25));
    const auto dend = ward_linkage(random_matrix(gen, n));
    for (int k = 1; k < static_cast<int>(n); ++k) {
      const auto coarse = cut(dend, k);
      const auto fine = cut(dend, k + 1);
      CHECK(std::set<int>(coarse.labels.begin(), coarse.labels.end()).size() == static_cast<std::size_t>(k));
      CHECK(coarse.labels.front() == 1);
      // Items sharing a fine label share the coarse label.
      std::map<int, int> parent;
      for (std::size_t i = 0; i < n; ++i) {
        auto [it, fresh] = parent.emplace(fine.labels[i], coarse.labels[i]);
        CHECK(it->second == coarse.labels[i]);
      }
    }
  }
}
