#pragma once

#include "mmtrack/measurement.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace mmtrack {

struct CloudPoint {
  double east = 0.0;
  double north = 0.0;
  double height = 0.0;
  bool above_ground = true;
};

struct PointCloud2D {
  std::vector<CloudPoint> points;
};

/// Reads `east north height` lines; '#' starts a comment. Points lower than
/// ground_clearance are kept but flagged as ground.
PointCloud2D read_point_cloud(std::istream& in, double ground_clearance = 0.3);

enum class SizeClass { Car, Person };

struct Cluster {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  double extent = 0.0;  // largest pairwise horizontal distance, m
  SizeClass size_class = SizeClass::Car;
  std::size_t point_count = 0;
  std::vector<std::size_t> members;  // indices into the source cloud, car clusters only
};

/// Connected components of the graph linking points closer than `threshold`.
/// Each component is sorted, components are ordered by their first index.
std::vector<std::vector<std::size_t>> single_linkage(std::span<const Eigen::Vector2d> pts,
                                                     double threshold);

struct CarClusterParams {
  double fine_link = 0.5;    // m
  double coarse_link = 1.0;  // m
  std::size_t min_points = 7;
  double min_top_height = 1.0;  // at least one point above this, m
  double max_extent = 15.0;     // m
};

/// Car-sized clusters that come out identical at both linkage distances.
/// Output is sorted by centroid so it does not depend on point order.
std::vector<Cluster> cluster_cars(const PointCloud2D& cloud, const CarClusterParams& params = {});

enum class LogKernelForm {
  Corrected,  // quartic term r^4 / (2 sigma^4)
  AsPrinted,  // quartic term r^4 / (2 sigma^2), sigma in metres
};

double log_kernel(double r, double sigma = 0.45, LogKernelForm form = LogKernelForm::Corrected);

struct LogParams {
  double sigma = 0.45;      // m
  double cell_size = 0.25;  // m
  double pad_sigmas = 3.0;      // grid margin around the points
  double support_sigmas = 6.0;  // kernel truncation radius
  LogKernelForm form = LogKernelForm::Corrected;
};

/// Grid whose cell (ix, iy) is centred at ((first_x + ix + 0.5) * cell, (first_y + iy + 0.5) * cell),
/// so the lattice is fixed in world coordinates.
struct LoGGrid {
  double cell_size = 0.25;
  long first_x = 0;
  long first_y = 0;
  int nx = 0;
  int ny = 0;
  std::vector<double> responses;  // row-major, iy * nx + ix

  double at(int ix, int iy) const { return responses[static_cast<std::size_t>(iy) * nx + ix]; }
  Eigen::Vector2d cell_center(int ix, int iy) const;
};

LoGGrid log_response(const PointCloud2D& cloud, const LogParams& params = {});

/// Response of `cloud` sampled on an explicitly given lattice.
LoGGrid log_response_on(const PointCloud2D& cloud, long first_x, long first_y, int nx, int ny,
                        const LogParams& params = {});

double default_person_threshold(const LogParams& params = {});

/// Strict 8-neighbour local maxima above `threshold`, as person-sized clusters at the cell centre.
std::vector<Cluster> extract_person_peaks(const LoGGrid& grid, double threshold);

struct ClusterMeasurementParams {
  double position_sd = 0.3;        // m
  double car_precision = 0.51;
  double person_precision = 0.55;
};

/// Lidar cluster measurements in the ego frame, labelled by cluster size.
std::vector<Measurement> clusters_to_measurements(std::span<const Cluster> clusters, double t,
                                                  const EgoPose& ego, int sensor_id,
                                                  const ClusterMeasurementParams& params = {});

}  // namespace mmtrack
