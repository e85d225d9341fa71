#include <trajflow/flow_model.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <trajflow/parallel.hpp>

namespace trajflow {

namespace {

constexpr std::string_view k_header = "trajflow-flow-model";
constexpr int k_format_version = 1;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class Table>
void resize_all(Table& t, std::size_t k) {
  for (auto& row : t) {
    row.assign(k, {});
  }
}

std::vector<double> ratios(std::span<const std::size_t> counts, double smoothing) {
  const auto k = static_cast<double>(counts.size());
  double total = 0.0;
  for (auto c : counts) {
    total += static_cast<double>(c);
  }
  std::vector<double> out(counts.size());
  const double denom = total + k * smoothing;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    out[m] = denom > 0.0 ? (static_cast<double>(counts[m]) + smoothing) / denom : 1.0 / k;
  }
  return out;
}

[[noreturn]] void bad_model(const std::string& what) { throw std::runtime_error{"malformed flow model: " + what}; }

}  // namespace

std::string WeightFlags::to_string() const {
  if (none()) {
    return "none";
  }
  std::string out;
  const auto add = [&out](std::string_view name) {
    if (!out.empty()) {
      out += '+';
    }
    out += name;
  };
  if (empiric) {
    add("emp");
  }
  if (weekday) {
    add("weekday");
  }
  if (hour) {
    add("hour");
  }
  return out;
}

WeightFlags WeightFlags::parse(std::string_view text) {
  WeightFlags f;
  if (text.empty() || text == "none") {
    return f;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find_first_of(",+", start);
    const auto token = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (token == "emp" || token == "empiric") {
      f.empiric = true;
    } else if (token == "weekday" || token == "wd") {
      f.weekday = true;
    } else if (token == "hour" || token == "h") {
      f.hour = true;
    } else {
      throw std::invalid_argument{"unknown weight flag '" + std::string{token} + "'"};
    }
    if (end == std::string_view::npos) {
      break;
    }
    start = end + 1;
  }
  return f;
}

WeightCounts count_context(std::span<const Trajectory> ts, const ClusterAssignment& labels) {
  if (labels.labels.size() != ts.size()) {
    throw std::invalid_argument{"label count does not match trajectory count"};
  }
  const auto k = static_cast<std::size_t>(labels.k);
  WeightCounts c;
  c.emp.assign(k, 0);
  resize_all(c.weekday, k);
  resize_all(c.hour, k);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int label = labels.labels[i];
    if (label < 1 || label > labels.k) {
      throw std::invalid_argument{"cluster label out of range"};
    }
    const auto m = static_cast<std::size_t>(label - 1);
    ++c.emp[m];
    ++c.weekday.at(static_cast<std::size_t>(ts[i].start_weekday - 1))[m];
    ++c.hour.at(static_cast<std::size_t>(ts[i].start_hour))[m];
  }
  return c;
}

WeightTables weight_tables(const WeightCounts& counts, double smoothing) {
  if (!(smoothing >= 0.0)) {
    throw std::invalid_argument{"smoothing must be non-negative"};
  }
  WeightTables t;
  t.emp = ratios(counts.emp, smoothing);
  for (std::size_t d = 0; d < 7; ++d) {
    t.weekday[d] = ratios(counts.weekday[d], smoothing);
  }
  for (std::size_t h = 0; h < 24; ++h) {
    t.hour[h] = ratios(counts.hour[h], smoothing);
  }
  return t;
}

FlowModel fit_flow_model(std::span<const Trajectory> ts, const ClusterAssignment& labels,
                         const LocalProjection& projection, const FlowFitConfig& cfg) {
  if (labels.k < 1) {
    throw std::domain_error{"fit_flow_model: no clusters"};
  }
  if (cfg.k_min < 1 || cfg.k_max < cfg.k_min) {
    throw std::domain_error{"fit_flow_model: empty component range"};
  }
  const auto counts = count_context(ts, labels);
  const auto k = static_cast<std::size_t>(labels.k);

  std::vector<std::vector<PlanarPoint>> pooled(k);
  std::vector<PlanarPoint> dest_sum(k);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto m = static_cast<std::size_t>(labels.labels[i] - 1);
    pooled[m].insert(pooled[m].end(), ts[i].points.begin(), ts[i].points.end());
    dest_sum[m].x += ts[i].last().x;
    dest_sum[m].y += ts[i].last().y;
  }
  for (std::size_t m = 0; m < k; ++m) {
    if (counts.emp[m] == 0) {
      throw std::domain_error{"fit_flow_model: cluster " + std::to_string(m + 1) + " is empty"};
    }
  }

  FlowModel model;
  model.projection = projection;
  model.smoothing = cfg.smoothing;
  model.weights = weight_tables(counts, cfg.smoothing);
  model.clusters.resize(k);
  parallel_for(k, cfg.threads, [&](std::size_t m) {
    const auto n_points = static_cast<int>(std::min<std::size_t>(pooled[m].size(), 1u << 30));
    const int hi = std::min(cfg.k_max, n_points);
    const int lo = std::min(cfg.k_min, hi);
    auto& cm = model.clusters[m];
    cm.mixture = select_k(pooled[m], lo, hi, cfg.em, 1);
    const auto members = static_cast<double>(counts.emp[m]);
    cm.mean_destination = {dest_sum[m].x / members, dest_sum[m].y / members};
    cm.member_count = counts.emp[m];
  });
  return model;
}

void save_flow_model(const FlowModel& model, std::ostream& out) {
  const auto origin = model.projection.origin();
  out << k_header << ' ' << k_format_version << '\n';
  out << "origin " << g17(origin.lon) << ' ' << g17(origin.lat) << '\n';
  out << "smoothing " << g17(model.smoothing) << '\n';
  out << "clusters " << model.clusters.size() << '\n';
  for (std::size_t m = 0; m < model.clusters.size(); ++m) {
    const auto& c = model.clusters[m];
    out << "cluster " << m + 1 << ' ' << c.member_count << ' ' << g17(c.mean_destination.x) << ' '
        << g17(c.mean_destination.y) << ' ' << c.mixture.k() << ' ' << g17(c.mixture.train_log_likelihood) << ' '
        << c.mixture.n_train << '\n';
    for (std::size_t j = 0; j < c.mixture.k(); ++j) {
      const auto& g = c.mixture.components[j];
      out << "component " << m + 1 << ' ' << j + 1 << ' ' << g17(g.weight) << ' ' << g17(g.mean.x) << ' '
          << g17(g.mean.y) << ' ' << g17(g.cov.xx) << ' ' << g17(g.cov.xy) << ' ' << g17(g.cov.yy) << '\n';
    }
  }
  for (std::size_t m = 0; m < model.weights.emp.size(); ++m) {
    out << "emp " << m + 1 << ' ' << g17(model.weights.emp[m]) << '\n';
  }
  for (std::size_t d = 0; d < 7; ++d) {
    for (std::size_t m = 0; m < model.weights.weekday[d].size(); ++m) {
      out << "weekday " << d + 1 << ' ' << m + 1 << ' ' << g17(model.weights.weekday[d][m]) << '\n';
    }
  }
  for (std::size_t h = 0; h < 24; ++h) {
    for (std::size_t m = 0; m < model.weights.hour[h].size(); ++m) {
      out << "hour " << h << ' ' << m + 1 << ' ' << g17(model.weights.hour[h][m]) << '\n';
    }
  }
  out << "end\n";
}

FlowModel load_flow_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    bad_model("empty input");
  }
  {
    std::istringstream hs{line};
    std::string magic;
    int version = 0;
    if (!(hs >> magic >> version) || magic != k_header) {
      bad_model("missing header");
    }
    if (version != k_format_version) {
      bad_model("unsupported version " + std::to_string(version));
    }
  }

  FlowModel model;
  std::size_t k = 0;
  bool have_k = false;
  bool ended = false;
  std::vector<std::size_t> expected_components;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') {
      continue;
    }
    std::istringstream ls{line};
    std::string tag;
    ls >> tag;
    const auto need = [&](bool ok) {
      if (!ok || ls.fail()) {
        bad_model("bad record '" + line + "'");
      }
    };
    const auto cluster_index = [&](std::size_t label) {
      need(have_k && label >= 1 && label <= k);
      return label - 1;
    };
    if (tag == "origin") {
      GeoPoint o;
      ls >> o.lon >> o.lat;
      need(true);
      model.projection = LocalProjection{o};
    } else if (tag == "smoothing") {
      ls >> model.smoothing;
      need(true);
    } else if (tag == "clusters") {
      ls >> k;
      need(k >= 1);
      have_k = true;
      model.clusters.resize(k);
      expected_components.assign(k, 0);
      model.weights.emp.assign(k, 0.0);
      resize_all(model.weights.weekday, k);
      resize_all(model.weights.hour, k);
    } else if (tag == "cluster") {
      std::size_t label = 0;
      std::size_t ncomp = 0;
      ls >> label;
      auto& c = model.clusters[cluster_index(label)];
      ls >> c.member_count >> c.mean_destination.x >> c.mean_destination.y >> ncomp >>
          c.mixture.train_log_likelihood >> c.mixture.n_train;
      need(c.member_count >= 1 && ncomp >= 1);
      expected_components[label - 1] = ncomp;
    } else if (tag == "component") {
      std::size_t label = 0;
      std::size_t j = 0;
      GaussianComponent g;
      ls >> label >> j >> g.weight >> g.mean.x >> g.mean.y >> g.cov.xx >> g.cov.xy >> g.cov.yy;
      auto& c = model.clusters[cluster_index(label)];
      need(j == c.mixture.components.size() + 1 && g.cov.positive_definite() && g.weight > 0.0);
      c.mixture.components.push_back(g);
    } else if (tag == "emp") {
      std::size_t label = 0;
      double v = 0.0;
      ls >> label >> v;
      model.weights.emp[cluster_index(label)] = v;
      need(true);
    } else if (tag == "weekday" || tag == "hour") {
      std::size_t key = 0;
      std::size_t label = 0;
      double v = 0.0;
      ls >> key >> label >> v;
      const std::size_t m = cluster_index(label);
      need(true);
      if (tag == "weekday") {
        need(key >= 1 && key <= 7);
        model.weights.weekday[key - 1][m] = v;
      } else {
        need(key <= 23);
        model.weights.hour[key][m] = v;
      }
    } else if (tag == "end") {
      ended = true;
      break;
    } else {
      bad_model("unknown record '" + tag + "'");
    }
  }
  if (!have_k || !ended) {
    bad_model("truncated");
  }
  for (std::size_t m = 0; m < k; ++m) {
    if (model.clusters[m].mixture.components.size() != expected_components[m] || expected_components[m] == 0) {
      bad_model("component count mismatch for cluster " + std::to_string(m + 1));
    }
  }
  return model;
}

}  // namespace trajflow
