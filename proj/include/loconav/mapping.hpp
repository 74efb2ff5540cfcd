#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "loconav/geometry.hpp"
#include "loconav/scenario.hpp"
#include "loconav/sensors.hpp"

namespace loconav {

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

enum Channel : int { kOccupied = 0, kExplored = 1 };

/// Square two-channel grid. `origin` is the world position of the centre of
/// cell (0, 0); x indexes columns, y indexes rows, both growing with the world axes.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int side, double resolution, Point2 origin);

  int side() const { return side_; }
  double resolution() const { return resolution_; }
  Point2 origin() const { return origin_; }

  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < side_ && c.y < side_; }
  float get(int channel, Cell c) const { return cells_[offset(channel, c)]; }
  void set(int channel, Cell c, float value) { cells_[offset(channel, c)] = value; }
  /// Max-fuses `value` into the cell.
  void raise(int channel, Cell c, float value);

  bool occupied(Cell c) const { return get(kOccupied, c) >= 0.5f; }
  bool explored(Cell c) const { return get(kExplored, c) >= 0.5f; }

  Cell cell_of(Point2 p) const;
  Point2 center_of(Cell c) const;

  const std::vector<float>& data() const { return cells_; }
  std::vector<float>& data() { return cells_; }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  std::size_t offset(int channel, Cell c) const {
    return (static_cast<std::size_t>(channel) * side_ + c.y) * side_ + c.x;
  }

  int side_ = 0;
  double resolution_ = 0.05;
  Point2 origin_;
  std::vector<float> cells_;
};

/// Agent-centric map: agent in cell ((side-1)/2, 0) facing +y, +x to its right.
struct EgoMap {
  OccupancyGrid grid;

  Cell agent_cell() const { return {(grid.side() - 1) / 2, 0}; }
};

/// Episode-frame map; the episode origin sits at the centre of cell (side/2, side/2).
struct GlobalMap {
  OccupancyGrid grid;
  std::vector<std::uint8_t> visited;
  Cell agent_cell;
  bool has_agent = false;
  /// Cells dropped because registration landed outside the grid.
  std::size_t clipped_writes = 0;

  bool is_visited(Cell c) const { return visited[static_cast<std::size_t>(c.y) * grid.side() + c.x] != 0; }
  /// Moves the agent to `c`, marking a 4-connected trail from the previous cell.
  void mark_visited(Cell c);

  friend bool operator==(const GlobalMap&, const GlobalMap&) = default;
};

using GroundTruthMap = OccupancyGrid;

struct HeightThresholds {
  double min = 0.3;
  double max = 0.6;
};

struct MapConfig {
  int ego_side = 101;
  int global_side = 480;
  int policy_side = 240;
  double resolution = 0.05;

  void validate() const;
};

EgoMap make_ego_map(int side, double resolution);
GlobalMap make_global_map(int side, double resolution);

/// Back-projects every valid pixel. Hits within the height band are obstacles,
/// hits below it are floor; cells traversed before a hit are marked explored.
EgoMap project_depth(const DepthImage& img, const CameraIntrinsics& intrinsics, HeightThresholds thresholds,
                     int ego_side, double resolution);

/// Rotates and translates the egocentric map to `pose` and fuses it by per-cell max.
void register_ego(const EgoMap& ego, const Pose& pose, GlobalMap& global);

/// Analytic map of the scenario expressed in the episode frame anchored at `episode_origin`.
GroundTruthMap rasterize_ground_truth(const Scenario& scenario, const Pose& episode_origin,
                                      HeightThresholds thresholds, int side, double resolution);

/// Number of (cell, channel) entries on which the binarized maps agree.
std::int64_t accuracy(const OccupancyGrid& m, const OccupancyGrid& gt);
std::int64_t accuracy(const GlobalMap& m, const GroundTruthMap& gt);

/// Increase in map accuracy between two consecutive maps; may be negative.
std::int64_t global_reward(const GlobalMap& current, const GlobalMap& previous, const GroundTruthMap& gt);

/// 8 x G x G global-policy input: a crop of [occupied, explored, visited,
/// agent one-hot] centred on the agent, then the same four channels max-pooled
/// over the whole map by W / G.
struct PolicyInput {
  int side = 0;
  std::vector<float> data;

  float at(int channel, int x, int y) const {
    return data[(static_cast<std::size_t>(channel) * side + y) * side + x];
  }
};

PolicyInput featurize(const GlobalMap& global, const Pose& pose, int policy_side);

/// Geometric agreement of an observed map with the analytic one.
struct FidelityReport {
  std::size_t observed_occupied = 0;
  std::size_t within_one_cell = 0;
  /// Largest Chebyshev distance (cells) from an occupied cell lying in analytic
  /// free space to the nearest analytic obstacle.
  int max_intrusion_cells = 0;

  double fraction_within_one() const {
    return observed_occupied == 0 ? 0.0 : static_cast<double>(within_one_cell) / observed_occupied;
  }
  bool passed() const { return observed_occupied > 0 && fraction_within_one() >= 0.95 && max_intrusion_cells <= 2; }
};

FidelityReport map_fidelity(const OccupancyGrid& observed, const GroundTruthMap& gt);

// Map file: "LCMP" magic, u32 side, f64 resolution, f64 origin x, f64 origin y,
// then the payload of encode_map_payload.
// Payload: occupied plane and explored plane as row-major little-endian
// float32, then one visited byte per cell.
std::vector<std::uint8_t> encode_map_payload(const OccupancyGrid& grid, const std::vector<std::uint8_t>& visited);
void write_map(std::ostream& out, const GlobalMap& map);
GlobalMap read_map(std::istream& in);
/// Debug raster: white free, black occupied, grey unknown; +y points up.
void write_map_png(const std::string& path, const OccupancyGrid& grid);

/// Square window of `side` cells centred on `center`; cells outside the map are unknown.
GlobalMap viewport(const GlobalMap& map, Cell center, int side);

}  // namespace loconav
