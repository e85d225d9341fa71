#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <trajflow/geometry.hpp>

namespace trajflow {

/// Condensed symmetric dissimilarity matrix: the n(n-1)/2 entries above the
/// diagonal in row-major order. The diagonal is implicitly zero.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n);
  DistanceMatrix(std::size_t n, std::vector<double> condensed);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const;
  /// Throws std::invalid_argument unless value is finite and non-negative.
  void set(std::size_t i, std::size_t j, double value);

  std::span<const double> condensed() const noexcept { return values_; }

  /// Binary layout: 8-byte magic "TRJSSPD\0", uint32 version, uint32 reserved,
  /// uint64 n, then n(n-1)/2 little-endian IEEE doubles.
  void save(const std::filesystem::path& path) const;
  static DistanceMatrix load(const std::filesystem::path& path);

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const noexcept;

  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Pairwise SSPD over the trajectory set; throws std::domain_error for n < 2.
DistanceMatrix pairwise_distances(std::span<const Trajectory> ts, unsigned threads = 0);

/// One agglomeration step. Nodes 0..n-1 are the input items; the node created
/// by merge k has id n + k. `left` is the node whose smallest member index is
/// lower.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
  std::size_t n = 0;
  std::vector<Merge> merges;

  /// True when merge heights never decrease.
  bool monotone() const noexcept;
};

/// Ward agglomeration through the Lance-Williams recurrence on squared
/// dissimilarities. Ties go to the pair whose (smallest member index of each
/// cluster) is lexicographically lowest.
Dendrogram ward_linkage(const DistanceMatrix& d);

struct ClusterAssignment {
  std::vector<int> labels;  // 1..k, one per item
  int k = 0;

  std::vector<std::size_t> members(int label) const;
};

/// Undoes the last k-1 merges; groups are labelled 1..k in order of their
/// first member. Throws std::domain_error unless 1 <= k <= n.
ClusterAssignment cut(const Dendrogram& dend, int k);

}  // namespace trajflow
