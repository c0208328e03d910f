#include "mmtrack/stream_io.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace mmtrack {

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty, non-comment line as a stream; false at end of input.
  bool next(std::istringstream& ss) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      ss.clear();
      ss.str(line);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

template <typename T>
T take(std::istringstream& ss, const LineReader& r, const char* what) {
  T v{};
  if (!(ss >> v)) r.fail(std::string("expected ") + what);
  return v;
}

void put_ego(std::ostream& out, const EgoPose& e) {
  out << ' ' << e.x << ' ' << e.y << ' ' << e.yaw << ' ' << e.vx << ' ' << e.vy;
}

EgoPose take_ego(std::istringstream& ss, const LineReader& r) {
  EgoPose e;
  e.x = take<double>(ss, r, "ego x");
  e.y = take<double>(ss, r, "ego y");
  e.yaw = take<double>(ss, r, "ego yaw");
  e.vx = take<double>(ss, r, "ego vx");
  e.vy = take<double>(ss, r, "ego vy");
  return e;
}

}  // namespace

void write_measurements(std::ostream& out, const std::vector<Measurement>& ms) {
  out << "# t sensor kind n z[n] R[n*n] ego_x ego_y ego_yaw ego_vx ego_vy heading_precision label label_precision\n";
  out << std::setprecision(17);
  for (const auto& m : ms) {
    const auto n = m.z.size();
    out << m.t << ' ' << m.sensor_id << ' ' << to_string(m.kind) << ' ' << n;
    for (Eigen::Index i = 0; i < n; ++i) out << ' ' << m.z[i];
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) out << ' ' << m.noise_cov(i, j);
    put_ego(out, m.ego);
    out << ' ' << m.heading_precision << ' ' << (m.label ? std::string(to_string(*m.label)) : "-") << ' '
        << m.label_precision << '\n';
  }
}

std::vector<Measurement> read_measurements(std::istream& in) {
  std::vector<Measurement> out;
  LineReader reader(in);
  std::istringstream ss;
  while (reader.next(ss)) {
    Measurement m;
    m.t = take<double>(ss, reader, "time");
    m.sensor_id = take<int>(ss, reader, "sensor id");
    try {
      m.kind = parse_measurement_kind(take<std::string>(ss, reader, "kind"));
    } catch (const std::exception& e) {
      reader.fail(e.what());
    }
    const int n = take<int>(ss, reader, "dimension");
    if (n < 2 || n > 3) reader.fail("measurement dimension must be 2 or 3");
    m.z.resize(n);
    for (int i = 0; i < n; ++i) m.z[i] = take<double>(ss, reader, "measurement value");
    m.noise_cov.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m.noise_cov(i, j) = take<double>(ss, reader, "covariance entry");
    m.ego = take_ego(ss, reader);
    m.heading_precision = take<double>(ss, reader, "heading precision");
    const std::string label = take<std::string>(ss, reader, "label");
    m.label_precision = take<double>(ss, reader, "label precision");
    if (label != "-") {
      try {
        m.label = parse_object_class(label);
      } catch (const std::exception& e) {
        reader.fail(e.what());
      }
    }
    m.has_heading = m.kind == MeasurementKind::Camera && n == 3;
    try {
      m.model().validate();
    } catch (const std::exception& e) {
      reader.fail(e.what());
    }
    out.push_back(std::move(m));
  }
  return out;
}

void write_truth(std::ostream& out, const std::vector<TruthSample>& truth) {
  out << "# t id class x y vx vy heading ego_x ego_y ego_yaw ego_vx ego_vy\n";
  out << std::setprecision(17);
  for (const auto& s : truth) {
    out << s.t << ' ' << s.id << ' ' << to_string(s.cls) << ' ' << s.position[0] << ' ' << s.position[1] << ' '
        << s.velocity[0] << ' ' << s.velocity[1] << ' ' << s.heading;
    put_ego(out, s.ego);
    out << '\n';
  }
}

std::vector<TruthSample> read_truth(std::istream& in) {
  std::vector<TruthSample> out;
  LineReader reader(in);
  std::istringstream ss;
  while (reader.next(ss)) {
    TruthSample s;
    s.t = take<double>(ss, reader, "time");
    s.id = take<int>(ss, reader, "id");
    try {
      s.cls = parse_object_class(take<std::string>(ss, reader, "class"));
    } catch (const std::exception& e) {
      reader.fail(e.what());
    }
    s.position[0] = take<double>(ss, reader, "x");
    s.position[1] = take<double>(ss, reader, "y");
    s.velocity[0] = take<double>(ss, reader, "vx");
    s.velocity[1] = take<double>(ss, reader, "vy");
    s.heading = take<double>(ss, reader, "heading");
    s.ego = take_ego(ss, reader);
    out.push_back(s);
  }
  return out;
}

void write_snapshots(std::ostream& out, const std::vector<SnapshotFrame>& frames) {
  out << "# t id class x y vx vy heading P00 P11 P22 P33 hits probs\n";
  out << std::setprecision(12);
  for (const auto& f : frames)
    for (const auto& s : f.tracks) {
      out << f.t << ' ' << s.id << ' ' << to_string(s.cls) << ' ' << s.position[0] << ' ' << s.position[1] << ' '
          << s.velocity[0] << ' ' << s.velocity[1] << ' ' << s.heading;
      for (int i = 0; i < 4; ++i) out << ' ' << s.cov_diag[i];
      out << ' ' << s.hits << ' ';
      for (std::size_t j = 0; j < s.probs.size(); ++j) out << (j ? "," : "") << s.probs[j];
      out << '\n';
    }
}

std::vector<SnapshotFrame> read_snapshots(std::istream& in) {
  std::vector<SnapshotFrame> frames;
  LineReader reader(in);
  std::istringstream ss;
  while (reader.next(ss)) {
    const double t = take<double>(ss, reader, "time");
    TrackSnapshot s;
    s.id = take<std::uint64_t>(ss, reader, "id");
    try {
      s.cls = parse_object_class(take<std::string>(ss, reader, "class"));
    } catch (const std::exception& e) {
      reader.fail(e.what());
    }
    s.position[0] = take<double>(ss, reader, "x");
    s.position[1] = take<double>(ss, reader, "y");
    s.velocity[0] = take<double>(ss, reader, "vx");
    s.velocity[1] = take<double>(ss, reader, "vy");
    s.heading = take<double>(ss, reader, "heading");
    for (int i = 0; i < 4; ++i) s.cov_diag[i] = take<double>(ss, reader, "covariance diagonal");
    s.hits = take<int>(ss, reader, "hits");
    std::string probs = take<std::string>(ss, reader, "class probabilities");
    std::istringstream ps(probs);
    for (std::string item; std::getline(ps, item, ',');) {
      try {
        s.probs.push_back(std::stod(item));
      } catch (const std::exception&) {
        reader.fail("bad class probability '" + item + "'");
      }
    }
    if (frames.empty() || frames.back().t != t) frames.push_back({t, {}});
    frames.back().tracks.push_back(std::move(s));
  }
  return frames;
}

}  // namespace mmtrack
