#include <trajflow/clustering.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <trajflow/parallel.hpp>

namespace trajflow {

namespace {

constexpr std::array<char, 8> k_magic{'T', 'R', 'J', 'S', 'S', 'P', 'D', '\0'};
constexpr std::uint32_t k_version = 1;

template <class T>
void write_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFFu);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw std::runtime_error{"distance matrix file truncated"};
  }
  std::uint64_t bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  }
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

constexpr double k_inf = std::numeric_limits<double>::infinity();

}  // namespace

DistanceMatrix::DistanceMatrix(std::size_t n) : n_{n}, values_(n < 2 ? 0 : n * (n - 1) / 2, 0.0) {}

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> condensed) : n_{n}, values_{std::move(condensed)} {
  if (values_.size() != (n < 2 ? 0 : n * (n - 1) / 2)) {
    throw std::invalid_argument{"condensed matrix size does not match n"};
  }
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument{"distance matrix entries must be finite and non-negative"};
    }
  }
}

std::size_t DistanceMatrix::index(std::size_t i, std::size_t j) const noexcept {
  if (i > j) {
    std::swap(i, j);
  }
  // Row i starts after rows 0..i-1, which hold (n-1) + ... + (n-i) entries.
  return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
}

double DistanceMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) {
    throw std::out_of_range{"distance matrix index"};
  }
  return i == j ? 0.0 : values_[index(i, j)];
}

void DistanceMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_ || i == j) {
    throw std::out_of_range{"distance matrix index"};
  }
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument{"distance must be finite and non-negative"};
  }
  values_[index(i, j)] = value;
}

void DistanceMatrix::save(const std::filesystem::path& path) const {
  std::ofstream out{path, std::ios::binary};
  if (!out) {
    throw std::runtime_error{"cannot open " + path.string() + " for writing"};
  }
  out.write(k_magic.data(), k_magic.size());
  write_le<std::uint32_t>(out, k_version);
  write_le<std::uint32_t>(out, 0);
  write_le<std::uint64_t>(out, n_);
  for (double v : values_) {
    write_le<double>(out, v);
  }
  if (!out) {
    throw std::runtime_error{"failed writing " + path.string()};
  }
}

DistanceMatrix DistanceMatrix::load(const std::filesystem::path& path) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    throw std::runtime_error{"cannot open " + path.string()};
  }
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != k_magic) {
    throw std::runtime_error{path.string() + " is not a distance matrix file"};
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != k_version) {
    throw std::runtime_error{"unsupported distance matrix version " + std::to_string(version)};
  }
  read_le<std::uint32_t>(in);
  const auto n = static_cast<std::size_t>(read_le<std::uint64_t>(in));
  std::vector<double> values(n < 2 ? 0 : n * (n - 1) / 2);
  for (auto& v : values) {
    v = read_le<double>(in);
  }
  return DistanceMatrix{n, std::move(values)};
}

DistanceMatrix pairwise_distances(std::span<const Trajectory> ts, unsigned threads) {
  const std::size_t n = ts.size();
  if (n < 2) {
    throw std::domain_error{"pairwise_distances needs at least two trajectories"};
  }
  DistanceMatrix d{n};
  parallel_for(n - 1, threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d.set(i, j, sspd(ts[i], ts[j]));
    }
  });
  return d;
}

bool Dendrogram::monotone() const noexcept {
  for (std::size_t k = 1; k < merges.size(); ++k) {
    if (merges[k].height < merges[k - 1].height) {
      return false;
    }
  }
  return true;
}

Dendrogram ward_linkage(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  Dendrogram dend;
  dend.n = n;
  if (n < 2) {
    return dend;
  }
  dend.merges.reserve(n - 1);

  // Working copy of squared dissimilarities. A merged cluster keeps the lower
  // of its two slots, so slot index == smallest member index.
  std::vector<double> sq(d.condensed().begin(), d.condensed().end());
  for (auto& v : sq) {
    v *= v;
  }
  const auto at = [n](std::size_t i, std::size_t j) { return i * (2 * n - i - 1) / 2 + (j - i - 1); };

  std::vector<char> alive(n, 1);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> node(n);
  std::iota(node.begin(), node.end(), std::size_t{0});
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nn_dist(n, k_inf);

  const auto refresh = [&](std::size_t i) {
    nn[i] = n;
    nn_dist[i] = k_inf;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (alive[j] && sq[at(i, j)] < nn_dist[i]) {
        nn_dist[i] = sq[at(i, j)];
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    refresh(i);
  }

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    double best = k_inf;
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i] && nn[i] < n && nn_dist[i] < best) {
        best = nn_dist[i];
        a = i;
      }
    }
    const std::size_t b = nn[a];
    const double ab = sq[at(a, b)];
    const auto na = static_cast<double>(size[a]);
    const auto nb = static_cast<double>(size[b]);

    dend.merges.push_back({node[a], node[b], std::sqrt(ab), size[a] + size[b]});

    for (std::size_t c = 0; c < n; ++c) {
      if (!alive[c] || c == a || c == b) {
        continue;
      }
      const auto nc = static_cast<double>(size[c]);
      const std::size_t ac = c < a ? at(c, a) : at(a, c);
      const std::size_t bc = c < b ? at(c, b) : at(b, c);
      sq[ac] = ((na + nc) * sq[ac] + (nb + nc) * sq[bc] - nc * ab) / (na + nb + nc);
    }
    alive[b] = 0;
    size[a] += size[b];
    node[a] = n + step;

    for (std::size_t c = 0; c < b; ++c) {
      if (!alive[c] || c == a) {
        continue;
      }
      if (nn[c] == a || nn[c] == b) {
        refresh(c);
      } else if (c < a) {
        const double v = sq[at(c, a)];
        if (v < nn_dist[c] || (v == nn_dist[c] && a < nn[c])) {
          nn_dist[c] = v;
          nn[c] = a;
        }
      }
    }
    refresh(a);
  }
  return dend;
}

std::vector<std::size_t> ClusterAssignment::members(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) {
      out.push_back(i);
    }
  }
  return out;
}

ClusterAssignment cut(const Dendrogram& dend, int k) {
  const std::size_t n = dend.n;
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw std::domain_error{"cut: cluster count out of range"};
  }
  if (dend.merges.size() + 1 != n) {
    throw std::invalid_argument{"cut: dendrogram is incomplete"};
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  // Representative leaf of every node created so far.
  std::vector<std::size_t> rep(2 * n - 1);
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
  const std::size_t applied = n - static_cast<std::size_t>(k);
  for (std::size_t m = 0; m < dend.merges.size(); ++m) {
    const auto& mg = dend.merges[m];
    if (mg.left >= n + m || mg.right >= n + m) {
      throw std::invalid_argument{"cut: merge references a node that does not exist yet"};
    }
    rep[n + m] = rep[mg.left];
    if (m < applied) {
      const std::size_t ra = find(rep[mg.left]);
      const std::size_t rb = find(rep[mg.right]);
      parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }

  ClusterAssignment out;
  out.k = k;
  out.labels.assign(n, 0);
  std::vector<int> root_label(n, 0);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_label[r] == 0) {
      root_label[r] = ++next;
    }
    out.labels[i] = root_label[r];
  }
  return out;
}

}  // namespace trajflow
