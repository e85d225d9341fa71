#include <trajflow/ingest.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace trajflow {

namespace {

constexpr std::string_view k_trips_header = "# trajflow-trips 1";

/// Splits one CSV record; double quotes group fields and "" is a literal quote.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  if (s.empty()) {
    return false;
  }
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

/// "[[lon,lat],[lon,lat],...]" -> points. Returns false on malformed input.
bool parse_polyline(std::string_view text, std::vector<GeoPoint>& out) {
  std::vector<double> numbers;
  std::string token;
  int depth = 0;
  for (char c : text) {
    if (c == '[') {
      ++depth;
    } else if (c == ']' || c == ',') {
      if (!token.empty()) {
        double v = 0.0;
        if (!parse_double(token, v)) {
          return false;
        }
        numbers.push_back(v);
        token.clear();
      }
      if (c == ']') {
        --depth;
      }
    } else if (c != ' ') {
      token += c;
    }
    if (depth < 0 || depth > 2) {
      return false;
    }
  }
  if (depth != 0 || !token.empty() || numbers.size() % 2 != 0) {
    return false;
  }
  for (std::size_t i = 0; i < numbers.size(); i += 2) {
    const GeoPoint g{numbers[i], numbers[i + 1]};
    if (g.lon < -180.0 || g.lon > 180.0 || g.lat < -90.0 || g.lat > 90.0) {
      return false;
    }
    out.push_back(g);
  }
  return true;
}

void note(ParseStats* stats, std::string message) {
  if (stats && stats->warnings.size() < 100) {
    stats->warnings.push_back(std::move(message));
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::vector<RawTrip> parse_porto(std::istream& in, const PortoOptions& opt, ParseStats* stats) {
  ParseStats local;
  ParseStats& st = stats ? *stats : local;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error{"porto: empty input"};
  }
  const auto header = split_csv(line);
  const auto column = [&](std::string_view name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw std::runtime_error{"porto: missing column " + std::string{name}};
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_id = column("TRIP_ID");
  const std::size_t c_time = column("TIMESTAMP");
  const std::size_t c_missing = column("MISSING_DATA");
  const std::size_t c_poly = column("POLYLINE");
  const std::size_t needed = std::max({c_id, c_time, c_missing, c_poly}) + 1;

  std::vector<RawTrip> trips;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") {
      continue;
    }
    ++st.rows;
    const auto fields = split_csv(line);
    const auto malformed = [&](const std::string& why) {
      ++st.malformed;
      const std::string msg = "porto line " + std::to_string(line_no) + ": " + why;
      if (opt.strict) {
        throw std::runtime_error{msg};
      }
      note(&st, msg);
    };
    if (fields.size() < needed) {
      malformed("too few columns");
      continue;
    }
    if (fields[c_missing] == "True" || fields[c_missing] == "true" || fields[c_missing] == "1") {
      ++st.missing;
      continue;
    }
    double start = 0.0;
    if (!parse_double(fields[c_time], start)) {
      malformed("bad TIMESTAMP");
      continue;
    }
    RawTrip trip;
    trip.id = fields[c_id];
    if (!parse_polyline(fields[c_poly], trip.points)) {
      malformed("bad POLYLINE");
      continue;
    }
    if (trip.points.size() < 2) {
      ++st.too_short;
      continue;
    }
    trip.times.reserve(trip.points.size());
    for (std::size_t j = 0; j < trip.points.size(); ++j) {
      trip.times.push_back(start + static_cast<double>(j) * opt.sample_interval_s);
    }
    trips.push_back(std::move(trip));
    ++st.kept;
  }
  return trips;
}

std::vector<RawTrip> parse_porto(const std::filesystem::path& path, const PortoOptions& opt, ParseStats* stats) {
  std::ifstream in{path};
  if (!in) {
    throw std::runtime_error{"cannot open " + path.string()};
  }
  return parse_porto(in, opt, stats);
}

std::vector<RawTrip> parse_cabspotting_file(std::istream& in, const std::string& taxi, const CabspottingOptions& opt,
                                            ParseStats* stats) {
  ParseStats local;
  ParseStats& st = stats ? *stats : local;
  struct Fix {
    GeoPoint g;
    bool occupied;
    double t;
  };
  std::vector<Fix> fixes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    ++st.rows;
    std::istringstream ls{line};
    double lat = 0.0;
    double lon = 0.0;
    int flag = 0;
    double t = 0.0;
    if (!(ls >> lat >> lon >> flag >> t) || lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) {
      ++st.malformed;
      const std::string msg = taxi + " line " + std::to_string(line_no) + ": malformed fix";
      if (opt.strict) {
        throw std::runtime_error{msg};
      }
      note(&st, msg);
      continue;
    }
    fixes.push_back({{lon, lat}, flag == 1, t});
  }
  std::stable_sort(fixes.begin(), fixes.end(), [](const Fix& a, const Fix& b) { return a.t < b.t; });

  std::vector<RawTrip> trips;
  std::size_t run = 0;
  for (std::size_t i = 0; i < fixes.size();) {
    if (!fixes[i].occupied) {
      ++i;
      continue;
    }
    RawTrip trip;
    trip.id = taxi + "_" + std::to_string(run++);
    while (i < fixes.size() && fixes[i].occupied) {
      trip.points.push_back(fixes[i].g);
      trip.times.push_back(fixes[i].t);
      ++i;
    }
    if (trip.points.size() < 2) {
      ++st.too_short;
      continue;
    }
    trips.push_back(std::move(trip));
    ++st.kept;
  }
  return trips;
}

std::vector<RawTrip> parse_cabspotting(const std::filesystem::path& dir, const CabspottingOptions& opt,
                                       ParseStats* stats) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error{dir.string() + " is not a directory"};
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator{dir}) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && entry.path().extension() == ".txt" && !name.starts_with('_')) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<RawTrip> trips;
  for (const auto& f : files) {
    std::ifstream in{f};
    if (!in) {
      throw std::runtime_error{"cannot open " + f.string()};
    }
    auto part = parse_cabspotting_file(in, f.stem().string(), opt, stats);
    std::move(part.begin(), part.end(), std::back_inserter(trips));
  }
  return trips;
}

void validate(const DatasetSpec& spec) {
  if (!(spec.radius_m > 0.0)) {
    throw std::invalid_argument{"origin radius must be positive"};
  }
  if (spec.box && (spec.box->min_lon > spec.box->max_lon || spec.box->min_lat > spec.box->max_lat)) {
    throw std::invalid_argument{"bounding box minimum exceeds maximum"};
  }
  if (spec.min_points > spec.max_points) {
    throw std::invalid_argument{"min_points exceeds max_points"};
  }
}

std::vector<RawTrip> filter(std::span<const RawTrip> trips, const DatasetSpec& spec) {
  validate(spec);
  std::vector<RawTrip> kept;
  for (const auto& t : trips) {
    if (t.points.size() < spec.min_points || t.points.size() > spec.max_points || t.points.empty()) {
      continue;
    }
    if (spec.origin && haversine_km(t.points.front(), *spec.origin) * 1000.0 > spec.radius_m) {
      continue;
    }
    if (spec.box && !spec.box->contains(t.points.back())) {
      continue;
    }
    kept.push_back(t);
  }
  return kept;
}

GeoPoint centroid(std::span<const RawTrip> trips) {
  double lon = 0.0;
  double lat = 0.0;
  std::size_t n = 0;
  for (const auto& t : trips) {
    for (const auto& g : t.points) {
      lon += g.lon;
      lat += g.lat;
      ++n;
    }
  }
  if (n == 0) {
    throw std::invalid_argument{"centroid of an empty trip set"};
  }
  return {lon / static_cast<double>(n), lat / static_cast<double>(n)};
}

Dataset make_dataset(const TripSet& set, std::optional<GeoPoint> origin) {
  Dataset ds;
  ds.projection = LocalProjection{origin ? *origin : centroid(set.trips)};
  ds.trajectories.reserve(set.trips.size());
  for (const auto& t : set.trips) {
    ds.trajectories.push_back(make_trajectory(t.id, t.points, t.times, ds.projection, set.utc_offset_hours));
  }
  return ds;
}

void write_trips(std::ostream& out, const TripSet& set) {
  out << k_trips_header << " utc_offset_hours=" << fixed(set.utc_offset_hours, 3) << '\n';
  for (const auto& t : set.trips) {
    if (t.id.find_first_of("\t\n\r") != std::string::npos) {
      throw std::invalid_argument{"trip id contains a tab or newline"};
    }
    if (t.points.empty() || t.points.size() != t.times.size()) {
      throw std::invalid_argument{"trip '" + t.id + "' has mismatched points and times"};
    }
    const double start = t.times.front();
    out << t.id << '\t' << fixed(start, 3) << '\t';
    for (std::size_t j = 0; j < t.points.size(); ++j) {
      if (j > 0) {
        out << ';';
      }
      out << fixed(t.points[j].lon, 8) << ',' << fixed(t.points[j].lat, 8) << ',' << fixed(t.times[j] - start, 3);
    }
    out << '\n';
  }
}

TripSet read_trips(std::istream& in) {
  TripSet set;
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(k_trips_header)) {
    throw std::runtime_error{"not a trajflow trips file"};
  }
  if (const auto pos = line.find("utc_offset_hours="); pos != std::string::npos) {
    if (!parse_double(std::string_view{line}.substr(pos + 17), set.utc_offset_hours)) {
      throw std::runtime_error{"bad utc offset in trips header"};
    }
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fail = [&](const char* why) {
      throw std::runtime_error{"trips line " + std::to_string(line_no) + ": " + why};
    };
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      fail("expected three tab-separated fields");
    }
    RawTrip t;
    t.id = line.substr(0, tab1);
    double start = 0.0;
    if (!parse_double(std::string_view{line}.substr(tab1 + 1, tab2 - tab1 - 1), start)) {
      fail("bad start epoch");
    }
    std::string_view rest{line};
    rest.remove_prefix(tab2 + 1);
    while (!rest.empty()) {
      const auto semi = rest.find(';');
      const auto triple = rest.substr(0, semi);
      const auto c1 = triple.find(',');
      const auto c2 = c1 == std::string_view::npos ? c1 : triple.find(',', c1 + 1);
      GeoPoint g;
      double dt = 0.0;
      if (c2 == std::string_view::npos || !parse_double(triple.substr(0, c1), g.lon) ||
          !parse_double(triple.substr(c1 + 1, c2 - c1 - 1), g.lat) || !parse_double(triple.substr(c2 + 1), dt)) {
        fail("bad lon,lat,dt triple");
      }
      t.points.push_back(g);
      t.times.push_back(start + dt);
      if (semi == std::string_view::npos) {
        break;
      }
      rest.remove_prefix(semi + 1);
    }
    if (t.points.empty()) {
      fail("trip without points");
    }
    set.trips.push_back(std::move(t));
  }
  return set;
}

void write_trips(const std::filesystem::path& path, const TripSet& set) {
  std::ofstream out{path};
  if (!out) {
    throw std::runtime_error{"cannot write " + path.string()};
  }
  write_trips(out, set);
}

TripSet read_trips(const std::filesystem::path& path) {
  std::ifstream in{path};
  if (!in) {
    throw std::runtime_error{"cannot open " + path.string()};
  }
  return read_trips(in);
}

void write_labels(std::ostream& out, std::span<const Trajectory> ts, const ClusterAssignment& labels) {
  if (labels.labels.size() != ts.size()) {
    throw std::invalid_argument{"label count does not match trajectory count"};
  }
  out << "id,label\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out << ts[i].id << ',' << labels.labels[i] << '\n';
  }
}

ClusterAssignment read_labels(std::istream& in, std::span<const Trajectory> ts) {
  std::unordered_map<std::string, int> by_id;
  std::string line;
  std::getline(in, line);
  if (line.rfind("id,label", 0) != 0) {
    throw std::runtime_error{"labels file lacks the id,label header"};
  }
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const auto comma = line.rfind(',');
    int label = 0;
    const char* first = line.data() + comma + 1;
    const char* last = line.data() + line.size();
    if (comma == std::string::npos || std::from_chars(first, last, label).ec != std::errc{} || label < 1) {
      throw std::runtime_error{"bad labels record '" + line + "'"};
    }
    by_id[line.substr(0, comma)] = label;
  }
  ClusterAssignment a;
  a.labels.reserve(ts.size());
  for (const auto& t : ts) {
    const auto it = by_id.find(t.id);
    if (it == by_id.end()) {
      throw std::runtime_error{"no label for trajectory '" + t.id + "'"};
    }
    a.labels.push_back(it->second);
    a.k = std::max(a.k, it->second);
  }
  for (int m = 1; m <= a.k; ++m) {
    if (std::find(a.labels.begin(), a.labels.end(), m) == a.labels.end()) {
      throw std::runtime_error{"cluster " + std::to_string(m) + " has no member"};
    }
  }
  return a;
}

}  // namespace trajflow
