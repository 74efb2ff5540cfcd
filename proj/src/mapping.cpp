#include "loconav/mapping.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>

#include <fmt/core.h>
#include <png.h>

#include "loconav/errors.hpp"

namespace loconav {

OccupancyGrid::OccupancyGrid(int side, double resolution, Point2 origin)
    : side_(side), resolution_(resolution), origin_(origin), cells_(2 * static_cast<std::size_t>(side) * side, 0.0f) {
  if (side <= 0 || !(resolution > 0.0)) throw ContractError("occupancy grid needs positive side and resolution");
}

void OccupancyGrid::raise(int channel, Cell c, float value) {
  float& v = cells_[offset(channel, c)];
  v = std::max(v, value);
}

Cell OccupancyGrid::cell_of(Point2 p) const {
  return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_ + 0.5)),
          static_cast<int>(std::floor((p.y - origin_.y) / resolution_ + 0.5))};
}

Point2 OccupancyGrid::center_of(Cell c) const {
  return {origin_.x + c.x * resolution_, origin_.y + c.y * resolution_};
}

void MapConfig::validate() const {
  if (ego_side <= 0 || ego_side % 2 == 0) throw ConfigError(fmt::format("ego_map_size must be odd and > 0 (got {})", ego_side));
  if (global_side <= ego_side)
    throw ConfigError(fmt::format("global_map_size must exceed ego_map_size (got {} <= {})", global_side, ego_side));
  if (policy_side <= 0 || policy_side > global_side || global_side % policy_side != 0)
    throw ConfigError(fmt::format("policy_map_size must divide global_map_size (got {} / {})", global_side, policy_side));
  if (!(resolution > 0.0)) throw ConfigError(fmt::format("map_resolution must be > 0 (got {})", resolution));
}

void GlobalMap::mark_visited(Cell c) {
  auto mark = [&](Cell p) {
    if (grid.contains(p)) visited[static_cast<std::size_t>(p.y) * grid.side() + p.x] = 1;
  };
  if (has_agent) {
    // 4-connected walk: step along whichever axis keeps closest to the segment.
    Cell p = agent_cell;
    const int dx = std::abs(c.x - p.x);
    const int dy = std::abs(c.y - p.y);
    const int sx = c.x > p.x ? 1 : -1;
    const int sy = c.y > p.y ? 1 : -1;
    int ix = 0;
    int iy = 0;
    while (ix < dx || iy < dy) {
      if ((1 + 2 * ix) * dy < (1 + 2 * iy) * dx) {
        p.x += sx;
        ++ix;
      } else {
        p.y += sy;
        ++iy;
      }
      mark(p);
    }
  }
  mark(c);
  agent_cell = c;
  has_agent = true;
}

EgoMap make_ego_map(int side, double resolution) {
  if (side % 2 == 0) throw ContractError("ego map side must be odd");
  return {OccupancyGrid(side, resolution, {-(side - 1) / 2 * resolution, 0.0})};
}

GlobalMap make_global_map(int side, double resolution) {
  GlobalMap m;
  const double half = (side / 2) * resolution;
  m.grid = OccupancyGrid(side, resolution, {-half, -half});
  m.visited.assign(static_cast<std::size_t>(side) * side, 0);
  return m;
}

namespace {

int round_cell(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Marks explored every cell of the Bresenham line from `from` up to, but not
// including, `to`; stops at the grid edge.
void carve(OccupancyGrid& g, Cell from, Cell to) {
  int x = from.x;
  int y = from.y;
  const int dx = std::abs(to.x - x);
  const int dy = -std::abs(to.y - y);
  const int sx = x < to.x ? 1 : -1;
  const int sy = y < to.y ? 1 : -1;
  int err = dx + dy;
  while (!(x == to.x && y == to.y)) {
    if (!g.contains({x, y})) return;
    g.raise(kExplored, {x, y}, 1.0f);
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

}  // namespace

EgoMap project_depth(const DepthImage& img, const CameraIntrinsics& cam, HeightThresholds thresholds, int ego_side,
                     double resolution) {
  if (img.width != cam.width || img.height != cam.height)
    throw ContractError(fmt::format("depth image is {}x{} but intrinsics describe {}x{}", img.width, img.height,
                                    cam.width, cam.height));
  EgoMap ego = make_ego_map(ego_side, resolution);
  OccupancyGrid& g = ego.grid;
  const Cell agent = ego.agent_cell();
  for (int v = 0; v < img.height; ++v) {
    const double down = cam.ray_down(v);
    for (int u = 0; u < img.width; ++u) {
      if (!img.is_valid(u, v)) continue;
      const double z = img.at(u, v);
      const double right = cam.ray_right(u) * z;
      const double h = cam.camera_height - down * z;
      const Cell hit{agent.x + round_cell(right / resolution), round_cell(z / resolution)};
      carve(g, agent, hit);
      if (!g.contains(hit) || h > thresholds.max) continue;
      g.raise(kExplored, hit, 1.0f);
      if (h >= thresholds.min) g.raise(kOccupied, hit, 1.0f);
    }
  }
  return ego;
}

void register_ego(const EgoMap& ego, const Pose& pose, GlobalMap& global) {
  OccupancyGrid& dst = global.grid;
  const OccupancyGrid& src = ego.grid;
  const Cell agent = ego.agent_cell();
  const double res = src.resolution();
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);

  // Ego cell (x right of agent, y ahead) -> episode frame.
  auto to_world = [&](double right, double ahead) {
    return Point2{pose.x + c * ahead + s * right, pose.y + s * ahead - c * right};
  };

  // Forward splat keeps every nonzero ego cell (thin walls stay 8-connected).
  for (int y = 0; y < src.side(); ++y) {
    for (int x = 0; x < src.side(); ++x) {
      const Cell e{x, y};
      const float occ = src.get(kOccupied, e);
      const float exp = src.get(kExplored, e);
      if (occ == 0.0f && exp == 0.0f) continue;
      const Cell g = dst.cell_of(to_world((x - agent.x) * res, y * res));
      if (!dst.contains(g)) {
        ++global.clipped_writes;
        continue;
      }
      dst.raise(kOccupied, g, occ);
      dst.raise(kExplored, g, exp);
    }
  }

  // Inverse nearest-neighbour sampling fills the gaps rotation leaves behind.
  const double reach_right = (src.side() - 1 - agent.x) * res;
  const double reach_left = agent.x * res;
  const double reach_ahead = (src.side() - 1) * res;
  const std::array<Point2, 4> corners{to_world(-reach_left, 0.0), to_world(reach_right, 0.0),
                                      to_world(-reach_left, reach_ahead), to_world(reach_right, reach_ahead)};
  double min_x = corners[0].x, max_x = corners[0].x, min_y = corners[0].y, max_y = corners[0].y;
  for (const Point2& p : corners) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const Cell lo = dst.cell_of({min_x, min_y});
  const Cell hi = dst.cell_of({max_x, max_y});
  for (int gy = std::max(0, lo.y - 1); gy <= std::min(dst.side() - 1, hi.y + 1); ++gy) {
    for (int gx = std::max(0, lo.x - 1); gx <= std::min(dst.side() - 1, hi.x + 1); ++gx) {
      const Point2 p = dst.center_of({gx, gy});
      const double dx = p.x - pose.x;
      const double dy = p.y - pose.y;
      const double ahead = c * dx + s * dy;
      const double right = s * dx - c * dy;
      const Cell e{agent.x + round_cell(right / res), round_cell(ahead / res)};
      if (!src.contains(e)) continue;
      dst.raise(kOccupied, {gx, gy}, src.get(kOccupied, e));
      dst.raise(kExplored, {gx, gy}, src.get(kExplored, e));
    }
  }

  const Cell here = dst.cell_of(pose.position());
  if (dst.contains(here)) {
    global.mark_visited(here);
  } else {
    ++global.clipped_writes;
  }
}

namespace {

double point_rect_distance(Point2 p, double min_x, double min_y, double max_x, double max_y) {
  const double dx = std::max({min_x - p.x, 0.0, p.x - max_x});
  const double dy = std::max({min_y - p.y, 0.0, p.y - max_y});
  return std::hypot(dx, dy);
}

}  // namespace

GroundTruthMap rasterize_ground_truth(const Scenario& scenario, const Pose& episode_origin,
                                      HeightThresholds thresholds, int side, double resolution) {
  GroundTruthMap gt = make_global_map(side, resolution).grid;
  const double tol = 0.5 * resolution;
  const Bounds& b = scenario.bounds;
  std::vector<const Box*> solid;
  for (const Box& box : scenario.obstacles)
    if (box.height >= thresholds.min) solid.push_back(&box);

  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const Point2 w = local_to_world(episode_origin, gt.center_of({x, y}));
      const double outside = point_rect_distance(w, b.min_x, b.min_y, b.max_x, b.max_y);
      if (outside > tol) continue;
      gt.set(kExplored, {x, y}, 1.0f);
      bool occ = outside > 0.0 ||
                 std::min({w.x - b.min_x, b.max_x - w.x, w.y - b.min_y, b.max_y - w.y}) <= tol;
      for (std::size_t i = 0; !occ && i < solid.size(); ++i)
        occ = point_rect_distance(w, solid[i]->min_x, solid[i]->min_y, solid[i]->max_x, solid[i]->max_y) <= tol;
      if (occ) gt.set(kOccupied, {x, y}, 1.0f);
    }
  }
  return gt;
}

std::int64_t accuracy(const OccupancyGrid& m, const OccupancyGrid& gt) {
  if (m.side() != gt.side())
    throw ContractError(fmt::format("map sides differ ({} vs {})", m.side(), gt.side()));
  const auto& a = m.data();
  const auto& b = gt.data();
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += (a[i] >= 0.5f) == (b[i] >= 0.5f);
  return agree;
}

std::int64_t accuracy(const GlobalMap& m, const GroundTruthMap& gt) { return accuracy(m.grid, gt); }

std::int64_t global_reward(const GlobalMap& current, const GlobalMap& previous, const GroundTruthMap& gt) {
  if (current.grid.side() != previous.grid.side())
    throw ContractError("global_reward needs maps of equal size");
  return accuracy(current, gt) - accuracy(previous, gt);
}

PolicyInput featurize(const GlobalMap& global, const Pose& pose, int policy_side) {
  const int w = global.grid.side();
  if (policy_side <= 0 || policy_side > w || w % policy_side != 0)
    throw ContractError(fmt::format("policy size {} must divide map size {}", policy_side, w));
  const Cell agent = global.grid.cell_of(pose.position());
  if (!global.grid.contains(agent)) throw ContractError("agent lies outside the global map");

  auto enriched = [&](int ch, Cell c) -> float {
    switch (ch) {
      case 0: return global.grid.get(kOccupied, c);
      case 1: return global.grid.get(kExplored, c);
      case 2: return global.is_visited(c) ? 1.0f : 0.0f;
      default: return c == agent ? 1.0f : 0.0f;
    }
  };

  const int g = policy_side;
  PolicyInput out{g, std::vector<float>(8 * static_cast<std::size_t>(g) * g, 0.0f)};
  auto put = [&](int ch, int x, int y, float v) { out.data[(static_cast<std::size_t>(ch) * g + y) * g + x] = v; };

  for (int ch = 0; ch < 4; ++ch) {
    for (int y = 0; y < g; ++y) {
      for (int x = 0; x < g; ++x) {
        const Cell c{agent.x - g / 2 + x, agent.y - g / 2 + y};
        if (global.grid.contains(c)) put(ch, x, y, enriched(ch, c));
      }
    }
  }
  const int k = w / g;
  for (int ch = 0; ch < 4; ++ch) {
    for (int y = 0; y < g; ++y) {
      for (int x = 0; x < g; ++x) {
        float m = 0.0f;
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) m = std::max(m, enriched(ch, {x * k + dx, y * k + dy}));
        put(4 + ch, x, y, m);
      }
    }
  }
  return out;
}

namespace {

// Exact Chebyshev distance (in cells) to the nearest cell flagged in `seed`.
std::vector<int> chebyshev_distance(const std::vector<std::uint8_t>& seed, int side) {
  const int inf = std::numeric_limits<int>::max() / 2;
  std::vector<int> d(seed.size(), inf);
  auto at = [&](int x, int y) -> int& { return d[static_cast<std::size_t>(y) * side + x]; };
  for (std::size_t i = 0; i < seed.size(); ++i)
    if (seed[i]) d[i] = 0;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      int& v = at(x, y);
      if (x > 0) v = std::min(v, at(x - 1, y) + 1);
      if (y > 0) {
        v = std::min(v, at(x, y - 1) + 1);
        if (x > 0) v = std::min(v, at(x - 1, y - 1) + 1);
        if (x + 1 < side) v = std::min(v, at(x + 1, y - 1) + 1);
      }
    }
  }
  for (int y = side - 1; y >= 0; --y) {
    for (int x = side - 1; x >= 0; --x) {
      int& v = at(x, y);
      if (x + 1 < side) v = std::min(v, at(x + 1, y) + 1);
      if (y + 1 < side) {
        v = std::min(v, at(x, y + 1) + 1);
        if (x + 1 < side) v = std::min(v, at(x + 1, y + 1) + 1);
        if (x > 0) v = std::min(v, at(x - 1, y + 1) + 1);
      }
    }
  }
  return d;
}

}  // namespace

FidelityReport map_fidelity(const OccupancyGrid& observed, const GroundTruthMap& gt) {
  if (observed.side() != gt.side()) throw ContractError("fidelity needs maps of equal size");
  const int side = gt.side();
  std::vector<std::uint8_t> gt_occ(static_cast<std::size_t>(side) * side, 0);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) gt_occ[static_cast<std::size_t>(y) * side + x] = gt.occupied({x, y});
  const std::vector<int> dist = chebyshev_distance(gt_occ, side);

  FidelityReport r;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      if (!observed.occupied({x, y})) continue;
      const int d = dist[static_cast<std::size_t>(y) * side + x];
      ++r.observed_occupied;
      if (d <= 1) ++r.within_one_cell;
      if (gt.explored({x, y}) && !gt.occupied({x, y})) r.max_intrusion_cells = std::max(r.max_intrusion_cells, d);
    }
  }
  return r;
}

std::vector<std::uint8_t> encode_map_payload(const OccupancyGrid& grid, const std::vector<std::uint8_t>& visited) {
  static_assert(std::endian::native == std::endian::little, "payload layout assumes a little-endian host");
  const std::size_t n = static_cast<std::size_t>(grid.side()) * grid.side();
  if (visited.size() != n) throw ContractError("visited mask does not match grid size");
  std::vector<std::uint8_t> buf(n * 2 * 4 + n);
  std::memcpy(buf.data(), grid.data().data(), n * 2 * 4);
  std::memcpy(buf.data() + n * 8, visited.data(), n);
  return buf;
}

namespace {

template <typename T>
void put_raw(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ContractError("truncated map file");
  return v;
}

}  // namespace

void write_map(std::ostream& out, const GlobalMap& map) {
  out.write("LCMP", 4);
  put_raw(out, static_cast<std::uint32_t>(map.grid.side()));
  put_raw(out, map.grid.resolution());
  put_raw(out, map.grid.origin().x);
  put_raw(out, map.grid.origin().y);
  const auto payload = encode_map_payload(map.grid, map.visited);
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
}

GlobalMap read_map(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LCMP", 4) != 0) throw ContractError("not a map file (bad magic)");
  const int side = static_cast<int>(get_raw<std::uint32_t>(in));
  const double res = get_raw<double>(in);
  const double ox = get_raw<double>(in);
  const double oy = get_raw<double>(in);
  GlobalMap m;
  m.grid = OccupancyGrid(side, res, {ox, oy});
  const std::size_t n = static_cast<std::size_t>(side) * side;
  in.read(reinterpret_cast<char*>(m.grid.data().data()), static_cast<std::streamsize>(n * 8));
  m.visited.resize(n);
  in.read(reinterpret_cast<char*>(m.visited.data()), static_cast<std::streamsize>(n));
  if (!in) throw ContractError("truncated map payload");
  return m;
}

void write_map_png(const std::string& path, const OccupancyGrid& grid) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(fmt::format("libpng failed writing '{}'", path));
  }
  const int side = grid.side();
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, side, side, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(side));
  for (int y = side - 1; y >= 0; --y) {
    for (int x = 0; x < side; ++x) {
      const Cell c{x, y};
      row[static_cast<std::size_t>(x)] = grid.occupied(c) ? 0 : grid.explored(c) ? 255 : 128;
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GlobalMap viewport(const GlobalMap& map, Cell center, int side) {
  const double res = map.grid.resolution();
  GlobalMap out;
  const Cell corner{center.x - side / 2, center.y - side / 2};
  const Point2 origin = map.grid.center_of(corner);
  out.grid = OccupancyGrid(side, res, origin);
  out.visited.assign(static_cast<std::size_t>(side) * side, 0);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const Cell src{corner.x + x, corner.y + y};
      if (!map.grid.contains(src)) continue;
      out.grid.set(kOccupied, {x, y}, map.grid.get(kOccupied, src));
      out.grid.set(kExplored, {x, y}, map.grid.get(kExplored, src));
      out.visited[static_cast<std::size_t>(y) * side + x] = map.is_visited(src);
    }
  }
  out.agent_cell = {side / 2, side / 2};
  out.has_agent = map.has_agent;
  return out;
}

}  // namespace loconav
