// trajflow: command-line driver for the destination-prediction pipeline.
//
//   trajflow ingest    --format porto|cabspotting --input PATH --output trips.tsv
//   trajflow synth     --output trips.tsv [--labels flows.csv]
//   trajflow distances --trips trips.tsv --output sspd.bin
//   trajflow cluster   --trips trips.tsv --distances sspd.bin --k K --output labels.csv
//   trajflow fit       --trips trips.tsv --labels labels.csv --k-range A..B --output model.txt
//   trajflow predict   --trips trips.tsv --model model.txt --completion p --flags emp,hour --rule 2
//   trajflow evaluate  --trips trips.tsv --folds 10 --seed S --output-dir report/
//   trajflow export    --trips trips.tsv [--labels ...] [--model ...] --output map.geojson
//
// Every flag may also come from `--config FILE` (key = value lines, keys are
// long flag names); flags on the command line win.
// Exit codes: 0 ok, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <trajflow/clustering.hpp>
#include <trajflow/eval.hpp>
#include <trajflow/flow_model.hpp>
#include <trajflow/geojson.hpp>
#include <trajflow/ingest.hpp>
#include <trajflow/scoring.hpp>
#include <trajflow/synth.hpp>

namespace {

using namespace trajflow;

constexpr int k_exit_usage = 1;
constexpr int k_exit_data = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<double> parse_numbers(const std::string& text, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto token = trim(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
      throw UsageError{what + ": expected " + std::to_string(expected) + " comma-separated numbers, got '" + text +
                       "'"};
    }
    out.push_back(v);
    if (comma == std::string::npos) {
      break;
    }
    pos = comma + 1;
  }
  if (out.size() != expected) {
    throw UsageError{what + ": expected " + std::to_string(expected) + " comma-separated numbers, got '" + text + "'"};
  }
  return out;
}

std::optional<GeoPoint> parse_origin(const std::string& text) {
  if (text.empty()) {
    return std::nullopt;
  }
  const auto v = parse_numbers(text, 2, "--origin");
  return GeoPoint{v[0], v[1]};
}

std::pair<int, int> parse_k_range(const std::string& text) {
  const auto dots = text.find("..");
  auto to_int = [&](std::string s) {
    s = trim(std::move(s));
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
      throw UsageError{"--k-range: expected A..B, got '" + text + "'"};
    }
    return v;
  };
  const int lo = dots == std::string::npos ? to_int(text) : to_int(text.substr(0, dots));
  const int hi = dots == std::string::npos ? lo : to_int(text.substr(dots + 2));
  if (lo < 1 || hi < lo) {
    throw UsageError{"--k-range: need 1 <= A <= B, got '" + text + "'"};
  }
  return {lo, hi};
}

WeightFlags parse_flags(const std::string& text) {
  try {
    return WeightFlags::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError{std::string{"--flags: "} + e.what()};
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out{path, std::ios::binary};
  if (!out) {
    throw std::runtime_error{"cannot write " + path};
  }
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    throw std::runtime_error{"cannot read " + path};
  }
  return in;
}

Dataset load_dataset(const std::string& trips, const std::string& origin) {
  return make_dataset(read_trips(std::filesystem::path{trips}), parse_origin(origin));
}

ClusterAssignment load_labels(const std::string& path, std::span<const Trajectory> ts) {
  auto in = open_input(path);
  return read_labels(in, ts);
}

FlowModel load_model(const std::string& path) {
  auto in = open_input(path);
  return load_flow_model(in);
}

void report(const ParseStats& s) {
  std::cerr << "rows " << s.rows << ", kept " << s.kept << ", missing " << s.missing << ", too short "
            << s.too_short << ", malformed " << s.malformed << '\n';
  for (const auto& w : s.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
}

// ---------------------------------------------------------------------------
// Options shared by the fitting stages.

struct EmOptions {
  int restarts = 5;
  int max_iter = 300;
  double tol = 1e-6;
  double cov_floor = 1.0;
  std::uint64_t seed = 0;
  std::string penalty = "params";

  void add(CLI::App* app, bool with_seed = true) {
    if (with_seed) {
      app->add_option("--seed", seed, "EM seed")->capture_default_str();
    }
    app->add_option("--restarts", restarts, "EM restarts per k")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--max-iter", max_iter, "EM iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--tol", tol, "relative log-likelihood tolerance")->capture_default_str();
    app->add_option("--cov-floor", cov_floor, "covariance eigenvalue floor (m^2)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--penalty", penalty, "BIC penalty: params (6k-1) or k")
        ->capture_default_str()
        ->check(CLI::IsMember({"params", "k"}));
  }

  EmConfig config() const {
    EmConfig cfg;
    cfg.n_restarts = restarts;
    cfg.max_iter = max_iter;
    cfg.tol = tol;
    cfg.cov_floor = cov_floor;
    cfg.seed = seed;
    cfg.penalty = penalty == "k" ? BicPenalty::bare_k : BicPenalty::free_parameters;
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// Subcommands.

struct IngestCmd {
  std::string format = "porto";
  std::string input;
  std::string output;
  std::string origin;
  double radius = 300.0;
  std::string box;
  std::size_t min_points = 2;
  std::size_t max_points = 0;
  double interval = 15.0;
  double utc_offset = 0.0;
  bool strict = false;

  void add(CLI::App* app) {
    app->add_option("--format", format, "source format")
        ->capture_default_str()
        ->check(CLI::IsMember({"porto", "cabspotting"}));
    app->add_option("--input", input, "Porto CSV file or cabspotting directory")->required();
    app->add_option("--output", output, "canonical trajectory file")->required();
    app->add_option("--origin", origin, "keep trips starting near lon,lat");
    app->add_option("--radius", radius, "origin radius in meters")->capture_default_str();
    app->add_option("--box", box, "keep trips ending in min_lon,min_lat,max_lon,max_lat");
    app->add_option("--min-points", min_points, "minimum fixes per trip")->capture_default_str();
    app->add_option("--max-points", max_points, "maximum fixes per trip (0 = unlimited)")->capture_default_str();
    app->add_option("--interval", interval, "Porto sampling interval in seconds")->capture_default_str();
    app->add_option("--utc-offset", utc_offset, "local clock offset in hours")->capture_default_str();
    app->add_flag("--strict", strict, "abort on the first malformed record");
  }

  int run() const {
    DatasetSpec spec;
    spec.origin = parse_origin(origin);
    spec.radius_m = radius;
    if (!box.empty()) {
      const auto v = parse_numbers(box, 4, "--box");
      spec.box = BoundingBox{v[0], v[1], v[2], v[3]};
    }
    spec.min_points = min_points;
    if (max_points > 0) {
      spec.max_points = max_points;
    }
    try {
      validate(spec);
    } catch (const std::invalid_argument& e) {
      throw UsageError{e.what()};
    }

    ParseStats stats;
    TripSet set;
    set.utc_offset_hours = utc_offset;
    std::vector<RawTrip> raw;
    if (format == "porto") {
      spec.format = SourceFormat::porto_csv;
      raw = parse_porto(std::filesystem::path{input}, PortoOptions{interval, strict}, &stats);
    } else {
      spec.format = SourceFormat::cabspotting_dir;
      raw = parse_cabspotting(std::filesystem::path{input}, CabspottingOptions{strict}, &stats);
    }
    report(stats);
    set.trips = filter(raw, spec);
    std::cerr << "after filter: " << set.trips.size() << " trips\n";
    write_trips(std::filesystem::path{output}, set);
    return 0;
  }
};

struct SynthCmd {
  SyntheticCitySpec spec;
  std::string output;
  std::string labels;

  void add(CLI::App* app) {
    app->add_option("--output", output, "canonical trajectory file")->required();
    app->add_option("--labels", labels, "write generating flow labels (id,label)");
    app->add_option("--flows", spec.flows, "number of flows")->capture_default_str();
    app->add_option("--per-flow", spec.per_flow, "trajectories per flow")->capture_default_str();
    app->add_option("--waypoints", spec.waypoints, "path vertices after the origin")->capture_default_str();
    app->add_option("--noise", spec.noise_m, "GPS noise sigma in meters")->capture_default_str();
    app->add_option("--step", spec.step_m, "sampling step in meters")->capture_default_str();
    app->add_option("--leg", spec.leg_m, "waypoint spacing in meters")->capture_default_str();
    app->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  }

  int run() const {
    SyntheticCity city;
    try {
      city = synth_city(spec);
    } catch (const std::invalid_argument& e) {
      throw UsageError{e.what()};
    }
    write_trips(std::filesystem::path{output}, city.trips);
    if (!labels.empty()) {
      const auto data = make_dataset(city.trips, spec.origin);
      auto out = open_output(labels);
      write_labels(out, data.trajectories, ClusterAssignment{city.flow, spec.flows});
    }
    return 0;
  }
};

struct DistancesCmd {
  std::string trips;
  std::string output;
  std::string origin;
  unsigned threads = 0;

  void add(CLI::App* app) {
    app->add_option("--trips", trips, "canonical trajectory file")->required();
    app->add_option("--output", output, "binary SSPD matrix")->required();
    app->add_option("--origin", origin, "projection origin lon,lat (default: centroid)");
    app->add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();
  }

  int run() const {
    const auto data = load_dataset(trips, origin);
    pairwise_distances(data.trajectories, threads).save(output);
    return 0;
  }
};

struct ClusterCmd {
  std::string trips;
  std::string distances;
  int k = 25;
  std::string output;
  std::string dendrogram;

  void add(CLI::App* app) {
    app->add_option("--trips", trips, "canonical trajectory file (for ids)")->required();
    app->add_option("--distances", distances, "binary SSPD matrix")->required();
    app->add_option("--k", k, "number of clusters")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--output", output, "cluster label file")->required();
    app->add_option("--dendrogram", dendrogram, "also write the merge sequence as CSV");
  }

  int run() const {
    const auto data = load_dataset(trips, "");
    const auto d = DistanceMatrix::load(distances);
    if (d.size() != data.trajectories.size()) {
      throw std::runtime_error{"distance matrix has " + std::to_string(d.size()) + " items, trip file has " +
                               std::to_string(data.trajectories.size())};
    }
    if (static_cast<std::size_t>(k) > d.size()) {
      throw UsageError{"--k exceeds the number of trajectories"};
    }
    const auto dend = ward_linkage(d);
    if (!dend.monotone()) {
      std::cerr << "warning: Ward merge heights are not monotone on this dissimilarity\n";
    }
    const auto labels = cut(dend, k);
    {
      auto out = open_output(output);
      write_labels(out, data.trajectories, labels);
    }
    if (!dendrogram.empty()) {
      auto out = open_output(dendrogram);
      out << "left,right,height,size\n";
      char buf[64];
      for (const auto& m : dend.merges) {
        std::snprintf(buf, sizeof buf, "%.17g", m.height);
        out << m.left << ',' << m.right << ',' << buf << ',' << m.size << '\n';
      }
    }
    return 0;
  }
};

struct FitCmd {
  std::string trips;
  std::string labels;
  std::string k_range = "1..40";
  std::string output;
  std::string origin;
  double smoothing = 1.0;
  unsigned threads = 0;
  EmOptions em;

  void add(CLI::App* app) {
    app->add_option("--trips", trips, "canonical trajectory file")->required();
    app->add_option("--labels", labels, "cluster label file")->required();
    app->add_option("--k-range", k_range, "mixture component range A..B")->capture_default_str();
    app->add_option("--output", output, "flow model file")->required();
    app->add_option("--origin", origin, "projection origin lon,lat (default: centroid)");
    app->add_option("--smoothing", smoothing, "pseudo-count of the context weights")->capture_default_str();
    app->add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();
    em.add(app);
  }

  int run() const {
    const auto [lo, hi] = parse_k_range(k_range);
    const auto data = load_dataset(trips, origin);
    const auto assignment = load_labels(labels, data.trajectories);
    FlowFitConfig cfg;
    cfg.em = em.config();
    cfg.k_min = lo;
    cfg.k_max = hi;
    cfg.smoothing = smoothing;
    cfg.threads = threads;
    const auto model = fit_flow_model(data.trajectories, assignment, data.projection, cfg);
    auto out = open_output(output);
    save_flow_model(model, out);
    return 0;
  }
};

struct PredictCmd {
  std::string trips;
  std::string model;
  double completion = 1.0;
  std::string flags = "none";
  int rule = 2;
  std::string output;
  std::string geojson;

  void add(CLI::App* app) {
    app->add_option("--trips", trips, "trajectories to complete")->required();
    app->add_option("--model", model, "flow model file")->required();
    app->add_option("--completion", completion, "observed fraction p of each trajectory")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--flags", flags, "context weights: none or emp,weekday,hour")->capture_default_str();
    app->add_option("--rule", rule, "prediction rule")->capture_default_str()->check(CLI::IsMember({1, 2}));
    app->add_option("--output", output, "prediction CSV")->required();
    app->add_option("--geojson", geojson, "also write predictions as GeoJSON");
  }

  int run() const {
    const auto w = parse_flags(flags);
    const auto f = load_model(model);
    // Project the query trips in the model's own frame.
    const auto data = make_dataset(read_trips(std::filesystem::path{trips}), f.projection.origin());
    auto out = open_output(output);
    out << "id,p,rule,lon,lat,top1,score1,top2,score2,top3,score3\n";
    GeoJsonWriter gj;
    char buf[96];
    for (const auto& t : data.trajectories) {
      const auto pred = predict(prefix(t, completion), f, w);
      const auto& c = pred.classification;
      const auto g = pred.geo[rule - 1];
      out << t.id;
      std::snprintf(buf, sizeof buf, ",%.12g,%d,%.8f,%.8f", completion, rule, g.lon, g.lat);
      out << buf;
      for (std::size_t r = 0; r < 3; ++r) {
        if (r < c.ranked.size()) {
          const int label = c.ranked[r];
          std::snprintf(buf, sizeof buf, ",%d,%.12g", label,
                        c.scores.normalized[static_cast<std::size_t>(label - 1)]);
          out << buf;
        } else {
          out << ",,";
        }
      }
      out << '\n';
      if (!geojson.empty()) {
        gj.add_prediction(t.id, completion, rule, pred);
      }
    }
    if (!geojson.empty()) {
      auto gout = open_output(geojson);
      gout << gj.dump() << '\n';
    }
    return 0;
  }
};

struct EvaluateCmd {
  std::string trips;
  int folds = 10;
  std::uint64_t seed = 0;
  int clusters = 25;
  std::string k_range = "1..40";
  std::string output_dir;
  std::string origin;
  double smoothing = 1.0;
  bool fast = false;
  unsigned threads = 0;
  EmOptions em;

  void add(CLI::App* app) {
    app->add_option("--trips", trips, "canonical trajectory file")->required();
    app->add_option("--folds", folds, "cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000));
    app->add_option("--seed", seed, "fold and EM seed")->capture_default_str();
    app->add_option("--clusters", clusters, "trajectory clusters K")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--k-range", k_range, "mixture component range A..B")->capture_default_str();
    app->add_option("--output-dir", output_dir, "report directory")->required();
    app->add_option("--origin", origin, "projection origin lon,lat (default: centroid)");
    app->add_option("--smoothing", smoothing, "pseudo-count of the context weights")->capture_default_str();
    app->add_flag("--fast", fast, "cluster once on the whole set instead of per fold");
    app->add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();
    em.add(app, false);
  }

  int run() const {
    const auto [lo, hi] = parse_k_range(k_range);
    const auto data = load_dataset(trips, origin);
    EvalConfig cfg;
    cfg.folds = folds;
    cfg.seed = seed;
    cfg.clusters = clusters;
    cfg.fit.em = em.config();
    cfg.fit.em.seed = seed;
    cfg.fit.k_min = lo;
    cfg.fit.k_max = hi;
    cfg.fit.smoothing = smoothing;
    cfg.refit_clustering = !fast;
    cfg.threads = threads;
    const auto result = evaluate(data.trajectories, data.projection, cfg);
    std::filesystem::create_directories(output_dir);
    result.report.write_files(output_dir);
    const auto q = result.report.value(1.0, "q_class", WeightFlags{});
    if (q) {
      std::cerr << "Q_class(1.0) = " << *q << '\n';
    }
    return 0;
  }
};

struct ExportCmd {
  std::string trips;
  std::string labels;
  std::string model;
  std::string output;
  std::string origin;
  double completion = -1.0;
  std::string flags = "none";
  int rule = 2;
  int vertices = 64;

  void add(CLI::App* app) {
    app->add_option("--trips", trips, "canonical trajectory file");
    app->add_option("--labels", labels, "cluster label file (colors trajectories)");
    app->add_option("--model", model, "flow model file (component ellipses)");
    app->add_option("--output", output, "GeoJSON file")->required();
    app->add_option("--origin", origin, "projection origin lon,lat (default: centroid)");
    app->add_option("--completion", completion, "also add predicted destinations at this completion")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--flags", flags, "context weights for predictions")->capture_default_str();
    app->add_option("--rule", rule, "prediction rule")->capture_default_str()->check(CLI::IsMember({1, 2}));
    app->add_option("--vertices", vertices, "ellipse polygon vertices")->capture_default_str()->check(
        CLI::Range(3, 100000));
  }

  int run() const {
    const auto w = parse_flags(flags);
    if (!labels.empty() && trips.empty()) {
      throw UsageError{"--labels requires --trips"};
    }
    if (completion >= 0.0 && (trips.empty() || model.empty())) {
      throw UsageError{"--completion requires --trips and --model"};
    }
    GeoJsonWriter gj;
    std::optional<FlowModel> f;
    if (!model.empty()) {
      f = load_model(model);
      gj.add_mixture_ellipses(*f, GeoJsonWriter::k_default_sigmas, vertices);
    }
    if (!trips.empty()) {
      const auto set = read_trips(std::filesystem::path{trips});
      const auto data = f ? make_dataset(set, f->projection.origin()) : make_dataset(set, parse_origin(origin));
      std::optional<ClusterAssignment> assignment;
      if (!labels.empty()) {
        assignment = load_labels(labels, data.trajectories);
      }
      for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
        gj.add_trajectory(data.trajectories[i], data.projection, assignment ? assignment->labels[i] : 0);
      }
      if (completion >= 0.0) {
        for (const auto& t : data.trajectories) {
          gj.add_prediction(t.id, completion, rule, predict(prefix(t, completion), *f, w));
        }
      }
    }
    auto out = open_output(output);
    out << gj.dump() << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------------------
// Config file support.

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in{path};
  if (!in) {
    throw UsageError{"cannot read config file " + path};
  }
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError{path + ":" + std::to_string(lineno) + ": expected key = value"};
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    std::replace(key.begin(), key.end(), '_', '-');
    kv[key] = value;
  }
  return kv;
}

/// Rewrites argv so that config entries known to the selected subcommand come
/// right after its name, unless the same flag is already given.
std::vector<std::string> apply_config(const CLI::App& app, std::vector<std::string> args) {
  std::string config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config.empty()) {
    return args;
  }
  const auto kv = read_config(config);
  std::size_t sub_pos = 0;
  const CLI::App* sub = nullptr;
  for (std::size_t i = 1; i < args.size() && sub == nullptr; ++i) {
    for (const auto* s : app.get_subcommands({})) {
      if (s->get_name() == args[i]) {
        sub = s;
        sub_pos = i;
        break;
      }
    }
  }
  if (sub == nullptr) {
    return args;
  }
  std::set<std::string> given;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i].rfind("--", 0) == 0) {
      given.insert(args[i].substr(2, args[i].find('=') == std::string::npos ? std::string::npos
                                                                             : args[i].find('=') - 2));
    }
  }
  std::vector<std::string> injected;
  for (const auto& [key, value] : kv) {
    if (given.contains(key)) {
      continue;
    }
    const auto* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      continue;
    }
    injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory clustering and destination prediction"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value file mirroring the subcommand flags");

  IngestCmd ingest;
  SynthCmd synth;
  DistancesCmd distances;
  ClusterCmd cluster;
  FitCmd fit;
  PredictCmd predict_cmd;
  EvaluateCmd evaluate_cmd;
  ExportCmd export_cmd;

  std::vector<std::pair<CLI::App*, std::function<int()>>> commands;
  auto add = [&](const char* name, const char* help, auto& cmd) {
    auto* sub = app.add_subcommand(name, help);
    cmd.add(sub);
    commands.emplace_back(sub, [&cmd] { return cmd.run(); });
  };
  add("ingest", "parse a raw corpus into the canonical trajectory file", ingest);
  add("synth", "generate a synthetic city", synth);
  add("distances", "pairwise SSPD matrix", distances);
  add("cluster", "Ward clustering cut at K clusters", cluster);
  add("fit", "per-cluster mixture models and context weights", fit);
  add("predict", "destination of partial trajectories", predict_cmd);
  add("evaluate", "k-fold cross-validated evaluation", evaluate_cmd);
  add("export", "GeoJSON of trajectories, mixtures and predictions", export_cmd);

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = apply_config(app, std::move(args));
    std::vector<const char*> cargs;
    for (const auto& a : args) {
      cargs.push_back(a.c_str());
    }
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : k_exit_usage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return k_exit_usage;
  }

  try {
    for (const auto& [sub, run] : commands) {
      if (sub->parsed()) {
        return run();
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return k_exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return k_exit_data;
  }
  return k_exit_usage;
}
