#pragma once

#include "mmtrack/sim.hpp"
#include "mmtrack/track.hpp"

#include <iosfwd>
#include <vector>

namespace mmtrack {

struct SnapshotFrame {
  double t = 0.0;
  std::vector<TrackSnapshot> tracks;
};

// Line-oriented text formats; '#' starts a comment line.
//
// measurements: t sensor kind n z[0..n) R[0..n*n) ego_x ego_y ego_yaw ego_vx ego_vy
//               heading_precision label label_precision
//               (label is a class name or '-')
// truth:        t id class x y vx vy heading ego_x ego_y ego_yaw ego_vx ego_vy
// snapshots:    t id class x y vx vy heading P00 P11 P22 P33 hits probs(comma separated)

void write_measurements(std::ostream& out, const std::vector<Measurement>& ms);
std::vector<Measurement> read_measurements(std::istream& in);

void write_truth(std::ostream& out, const std::vector<TruthSample>& truth);
std::vector<TruthSample> read_truth(std::istream& in);

void write_snapshots(std::ostream& out, const std::vector<SnapshotFrame>& frames);
std::vector<SnapshotFrame> read_snapshots(std::istream& in);

}  // namespace mmtrack
