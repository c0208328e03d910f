#include "mmtrack/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace mmtrack {

PointCloud2D read_point_cloud(std::istream& in, double ground_clearance) {
  PointCloud2D cloud;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    CloudPoint p;
    if (!(ss >> p.east)) continue;
    if (!(ss >> p.north >> p.height))
      throw std::runtime_error("point cloud line " + std::to_string(line_no) + ": expected 3 numbers");
    if (!std::isfinite(p.east) || !std::isfinite(p.north) || !std::isfinite(p.height))
      throw std::runtime_error("point cloud line " + std::to_string(line_no) + ": non-finite value");
    p.above_ground = p.height >= ground_clearance;
    cloud.points.push_back(p);
  }
  return cloud;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

std::vector<Eigen::Vector2d> horizontal(const PointCloud2D& cloud, std::vector<const CloudPoint*>& src) {
  std::vector<Eigen::Vector2d> pts;
  for (const auto& p : cloud.points) {
    if (!p.above_ground) continue;
    pts.emplace_back(p.east, p.north);
    src.push_back(&p);
  }
  return pts;
}

}  // namespace

std::vector<std::vector<std::size_t>> single_linkage(std::span<const Eigen::Vector2d> pts,
                                                     double threshold) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const double t2 = threshold * threshold;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((pts[i] - pts[j]).squaredNorm() <= t2) {
        const std::size_t a = find_root(parent, i);
        const std::size_t b = find_root(parent, j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }

  std::vector<std::vector<std::size_t>> groups;
  std::vector<long> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find_root(parent, i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return groups;
}

std::vector<Cluster> cluster_cars(const PointCloud2D& cloud, const CarClusterParams& params) {
  std::vector<const CloudPoint*> src;
  const std::vector<Eigen::Vector2d> pts = horizontal(cloud, src);
  const auto fine = single_linkage(pts, params.fine_link);
  const auto coarse = single_linkage(pts, params.coarse_link);

  std::vector<std::size_t> coarse_size_of(pts.size());
  for (const auto& g : coarse)
    for (std::size_t i : g) coarse_size_of[i] = g.size();

  std::vector<Cluster> out;
  for (const auto& g : fine) {
    if (coarse_size_of[g.front()] != g.size()) continue;  // merged with something at the coarse distance
    if (g.size() < params.min_points) continue;
    const bool tall = std::any_of(g.begin(), g.end(),
                                  [&](std::size_t i) { return src[i]->height > params.min_top_height; });
    if (!tall) continue;
    double extent = 0.0;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (std::size_t a = 0; a < g.size(); ++a) {
      centroid += pts[g[a]];
      for (std::size_t b = a + 1; b < g.size(); ++b) extent = std::max(extent, (pts[g[a]] - pts[g[b]]).norm());
    }
    if (extent >= params.max_extent) continue;
    std::vector<std::size_t> members;
    members.reserve(g.size());
    for (std::size_t i : g) members.push_back(static_cast<std::size_t>(src[i] - cloud.points.data()));
    std::sort(members.begin(), members.end());
    out.push_back({centroid / static_cast<double>(g.size()), extent, SizeClass::Car, g.size(), std::move(members)});
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    return a.centroid[0] != b.centroid[0] ? a.centroid[0] < b.centroid[0] : a.centroid[1] < b.centroid[1];
  });
  return out;
}

double log_kernel(double r, double sigma, LogKernelForm form) {
  const double s2 = sigma * sigma;
  const double r2 = r * r;
  const double g = std::exp(-r2 / (2.0 * s2)) / (std::numbers::pi * s2);
  const double quartic_den = form == LogKernelForm::Corrected ? 2.0 * s2 * s2 : 2.0 * s2;
  return g * (1.0 - r2 / (2.0 * s2)) + 0.15 * g * (1.0 - r2 * r2 / quartic_den);
}

Eigen::Vector2d LoGGrid::cell_center(int ix, int iy) const {
  return {(static_cast<double>(first_x + ix) + 0.5) * cell_size,
          (static_cast<double>(first_y + iy) + 0.5) * cell_size};
}

LoGGrid log_response_on(const PointCloud2D& cloud, long first_x, long first_y, int nx, int ny,
                        const LogParams& params) {
  if (!(params.cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
  LoGGrid grid;
  grid.cell_size = params.cell_size;
  grid.first_x = first_x;
  grid.first_y = first_y;
  grid.nx = nx;
  grid.ny = ny;
  grid.responses.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0.0);
  const double reach = params.support_sigmas * params.sigma;
  for (const auto& p : cloud.points) {
    if (!p.above_ground) continue;
    const long x0 = static_cast<long>(std::floor((p.east - reach) / params.cell_size)) - first_x;
    const long x1 = static_cast<long>(std::floor((p.east + reach) / params.cell_size)) - first_x;
    const long y0 = static_cast<long>(std::floor((p.north - reach) / params.cell_size)) - first_y;
    const long y1 = static_cast<long>(std::floor((p.north + reach) / params.cell_size)) - first_y;
    for (long iy = std::max(0L, y0); iy <= std::min<long>(ny - 1, y1); ++iy)
      for (long ix = std::max(0L, x0); ix <= std::min<long>(nx - 1, x1); ++ix) {
        const Eigen::Vector2d c = grid.cell_center(static_cast<int>(ix), static_cast<int>(iy));
        const double r = std::hypot(c[0] - p.east, c[1] - p.north);
        if (r > reach) continue;
        grid.responses[static_cast<std::size_t>(iy * nx + ix)] += log_kernel(r, params.sigma, params.form);
      }
  }
  return grid;
}

LoGGrid log_response(const PointCloud2D& cloud, const LogParams& params) {
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const auto& p : cloud.points) {
    if (!p.above_ground) continue;
    min_x = std::min(min_x, p.east);
    max_x = std::max(max_x, p.east);
    min_y = std::min(min_y, p.north);
    max_y = std::max(max_y, p.north);
  }
  if (!std::isfinite(min_x)) {
    LoGGrid empty;
    empty.cell_size = params.cell_size;
    return empty;
  }
  const double pad = params.pad_sigmas * params.sigma;
  const long fx = static_cast<long>(std::floor((min_x - pad) / params.cell_size));
  const long fy = static_cast<long>(std::floor((min_y - pad) / params.cell_size));
  const long lx = static_cast<long>(std::floor((max_x + pad) / params.cell_size));
  const long ly = static_cast<long>(std::floor((max_y + pad) / params.cell_size));
  return log_response_on(cloud, fx, fy, static_cast<int>(lx - fx + 1), static_cast<int>(ly - fy + 1), params);
}

double default_person_threshold(const LogParams& params) {
  return 0.5 * log_kernel(0.0, params.sigma, params.form);
}

std::vector<Cluster> extract_person_peaks(const LoGGrid& grid, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("peak threshold must be positive");
  std::vector<Cluster> out;
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double v = grid.at(ix, iy);
      if (v <= threshold) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int jx = ix + dx, jy = iy + dy;
          if (jx < 0 || jy < 0 || jx >= grid.nx || jy >= grid.ny) continue;
          if (grid.at(jx, jy) >= v) {
            is_max = false;
            break;
          }
        }
      if (is_max) out.push_back({grid.cell_center(ix, iy), grid.cell_size, SizeClass::Person, 1});
    }
  return out;
}

std::vector<Measurement> clusters_to_measurements(std::span<const Cluster> clusters, double t,
                                                  const EgoPose& ego, int sensor_id,
                                                  const ClusterMeasurementParams& params) {
  const double c = std::cos(ego.yaw), s = std::sin(ego.yaw);
  std::vector<Measurement> out;
  for (const auto& cl : clusters) {
    const Eigen::Vector2d d = cl.centroid - Eigen::Vector2d(ego.x, ego.y);
    Measurement m;
    m.t = t;
    m.sensor_id = sensor_id;
    m.kind = MeasurementKind::LidarCluster;
    m.z = Eigen::Vector2d(c * d[0] + s * d[1], -s * d[0] + c * d[1]);
    m.noise_cov = Eigen::Matrix2d::Identity() * params.position_sd * params.position_sd;
    const bool car = cl.size_class == SizeClass::Car;
    m.label = car ? ObjectClass::Car : ObjectClass::Pedestrian;
    m.label_precision = car ? params.car_precision : params.person_precision;
    m.ego = ego;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace mmtrack
