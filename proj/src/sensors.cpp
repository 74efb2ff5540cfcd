#include "loconav/sensors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <fmt/core.h>

#include "loconav/errors.hpp"

namespace loconav {

double CameraIntrinsics::fx() const { return 0.5 * width / std::tan(0.5 * hfov); }
double CameraIntrinsics::fy() const { return 0.5 * height / std::tan(0.5 * vfov); }
double CameraIntrinsics::ray_right(int u) const { return (u + 0.5 - 0.5 * width) / fx(); }
double CameraIntrinsics::ray_down(int v) const { return (v + 0.5 - 0.5 * height) / fy(); }

void CameraIntrinsics::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("image dimensions must be positive");
  if (!(hfov > 0.0 && hfov < kPi) || !(vfov > 0.0 && vfov < kPi))
    throw ConfigError(fmt::format("fields of view must lie in (0, 180) degrees (got {}, {})", rad_to_deg(hfov),
                                  rad_to_deg(vfov)));
  if (!(depth_min >= 0.0) || !(depth_max > depth_min))
    throw ConfigError(fmt::format("depth range must satisfy 0 <= min < max (got [{}, {}])", depth_min, depth_max));
  if (!(camera_height > 0.0))
    throw ConfigError(fmt::format("camera_height must be > 0 (got {})", camera_height));
}

DepthImage::DepthImage(int w, int h, double dmin, double dmax)
    : width(w),
      height(h),
      depth_min(dmin),
      depth_max(dmax),
      values(static_cast<std::size_t>(w) * h, kInvalid),
      valid(static_cast<std::size_t>(w) * h, 0) {}

void DepthImage::set(int u, int v, float z) {
  values[index(u, v)] = z;
  valid[index(u, v)] = 1;
}

void DepthImage::invalidate(int u, int v) {
  values[index(u, v)] = kInvalid;
  valid[index(u, v)] = 0;
}

std::size_t DepthImage::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Parameter interval [lo, hi] over which origin + t * dir lies in [min, max].
bool slab(double origin, double dir, double min, double max, double& lo, double& hi) {
  if (dir == 0.0) return origin >= min && origin <= max;
  double t0 = (min - origin) / dir;
  double t1 = (max - origin) / dir;
  if (t0 > t1) std::swap(t0, t1);
  lo = std::max(lo, t0);
  hi = std::min(hi, t1);
  return lo <= hi;
}

// Earliest z > 0 at which the ray enters the solid prism of `box`. The ray is
// parametrized by z-depth: ground point o + z * d, height h0 - down * z.
double hit_box(Point2 o, Point2 d, double h0, double down, const Box& box) {
  double lo = 0.0;
  double hi = kInf;
  if (!slab(o.x, d.x, box.min_x, box.max_x, lo, hi)) return kInf;
  if (!slab(o.y, d.y, box.min_y, box.max_y, lo, hi)) return kInf;
  if (!slab(h0, -down, 0.0, box.height, lo, hi)) return kInf;
  return lo > 0.0 ? lo : kInf;
}

// Depth at which the ray leaves the bounds rectangle (the wall surface).
double hit_bounds(Point2 o, Point2 d, const Bounds& b) {
  double t = kInf;
  if (d.x > 0.0) t = std::min(t, (b.max_x - o.x) / d.x);
  if (d.x < 0.0) t = std::min(t, (b.min_x - o.x) / d.x);
  if (d.y > 0.0) t = std::min(t, (b.max_y - o.y) / d.y);
  if (d.y < 0.0) t = std::min(t, (b.min_y - o.y) / d.y);
  return t;
}

}  // namespace

DepthImage render_depth(const Pose& pose, const CameraIntrinsics& cam, const Scenario& scenario) {
  DepthImage img(cam.width, cam.height, cam.depth_min, cam.depth_max);
  const Point2 o = pose.position();
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  // Right-hand axis of the camera in the world frame.
  const double rx = s;
  const double ry = -c;

  for (int u = 0; u < cam.width; ++u) {
    const double right = cam.ray_right(u);
    const Point2 d{c + right * rx, s + right * ry};
    double wall = hit_bounds(o, d, scenario.bounds);
    double nearest_box = kInf;
    for (const Box& box : scenario.obstacles) {
      // Column-constant part: footprint interval along the ray.
      double lo = 0.0;
      double hi = kInf;
      if (!slab(o.x, d.x, box.min_x, box.max_x, lo, hi) || !slab(o.y, d.y, box.min_y, box.max_y, lo, hi)) continue;
      nearest_box = std::min(nearest_box, lo);
    }
    for (int v = 0; v < cam.height; ++v) {
      const double down = cam.ray_down(v);
      double z = kInf;
      if (nearest_box < kInf) {
        for (const Box& box : scenario.obstacles) z = std::min(z, hit_box(o, d, cam.camera_height, down, box));
      }
      const double wall_height = cam.camera_height - down * wall;
      if (wall_height >= 0.0) z = std::min(z, wall);
      if (scenario.floor && down > 0.0) z = std::min(z, cam.camera_height / down);
      if (z >= cam.depth_min && z <= cam.depth_max) img.set(u, v, static_cast<float>(z));
    }
  }
  return img;
}

DepthImage apply_depth_noise(const DepthImage& img, const DepthNoiseConfig& cfg, Rng& rng) {
  if (cfg.is_zero()) return img;
  DepthImage out = img;
  const float lo = static_cast<float>(img.depth_min);
  const float hi = static_cast<float>(img.depth_max);
  auto is_edge = [&](int u, int v) {
    const float z = img.at(u, v);
    const std::array<std::array<int, 2>, 4> nbrs{{{u - 1, v}, {u + 1, v}, {u, v - 1}, {u, v + 1}}};
    for (const auto& n : nbrs) {
      if (n[0] < 0 || n[1] < 0 || n[0] >= img.width || n[1] >= img.height || !img.is_valid(n[0], n[1])) continue;
      if (std::abs(img.at(n[0], n[1]) - z) > cfg.edge_jump) return true;
    }
    return false;
  };
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      if (!img.is_valid(u, v)) continue;
      double p_drop = cfg.dropout_base;
      if (cfg.dropout_edge > 0.0 && is_edge(u, v)) p_drop = std::max(p_drop, cfg.dropout_edge);
      if (p_drop > 0.0 && uniform01(rng) < p_drop) {
        out.invalidate(u, v);
        continue;
      }
      const double z = img.at(u, v);
      const double sigma = cfg.sigma0 + cfg.sigma2 * z * z;
      if (sigma > 0.0) out.set(u, v, std::clamp(static_cast<float>(z + gaussian(rng, sigma)), lo, hi));
    }
  }
  return out;
}

namespace {

// Invalid pixels 8-connected to the image border: open space beyond range,
// not holes.
std::vector<std::uint8_t> open_regions(const DepthImage& img) {
  std::vector<std::uint8_t> open(img.values.size(), 0);
  std::vector<std::pair<int, int>> stack;
  auto seed = [&](int u, int v) {
    if (img.is_valid(u, v) || open[img.index(u, v)]) return;
    open[img.index(u, v)] = 1;
    stack.emplace_back(u, v);
  };
  for (int u = 0; u < img.width; ++u) {
    seed(u, 0);
    seed(u, img.height - 1);
  }
  for (int v = 0; v < img.height; ++v) {
    seed(0, v);
    seed(img.width - 1, v);
  }
  while (!stack.empty()) {
    const auto [u, v] = stack.back();
    stack.pop_back();
    for (int dv = -1; dv <= 1; ++dv)
      for (int du = -1; du <= 1; ++du) {
        const int nu = u + du;
        const int nv = v + dv;
        if (nu >= 0 && nv >= 0 && nu < img.width && nv < img.height) seed(nu, nv);
      }
  }
  return open;
}

}  // namespace

DepthImage fill_holes(const DepthImage& img) {
  DepthImage cur = img;
  const std::vector<std::uint8_t> open = open_regions(img);
  std::vector<std::pair<std::size_t, float>> updates;
  for (;;) {
    updates.clear();
    for (int v = 0; v < cur.height; ++v) {
      for (int u = 0; u < cur.width; ++u) {
        if (cur.is_valid(u, v) || open[cur.index(u, v)]) continue;
        double sum = 0.0;
        int n = 0;
        for (int dv = -1; dv <= 1; ++dv) {
          for (int du = -1; du <= 1; ++du) {
            const int nu = u + du;
            const int nv = v + dv;
            if ((du == 0 && dv == 0) || nu < 0 || nv < 0 || nu >= cur.width || nv >= cur.height) continue;
            if (!cur.is_valid(nu, nv)) continue;
            sum += cur.at(nu, nv);
            ++n;
          }
        }
        if (n > 0) updates.emplace_back(cur.index(u, v), static_cast<float>(sum / n));
      }
    }
    if (updates.empty()) break;
    // Each pass reads only the previous front, so the result is scan-order independent.
    for (const auto& [idx, z] : updates) {
      cur.values[idx] = z;
      cur.valid[idx] = 1;
    }
  }
  return cur;
}

DepthImage median_filter3(const DepthImage& img) {
  DepthImage out = img;
  std::array<float, 9> window{};
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      if (!img.is_valid(u, v)) continue;
      std::size_t n = 0;
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const int nu = u + du;
          const int nv = v + dv;
          if (nu < 0 || nv < 0 || nu >= img.width || nv >= img.height || !img.is_valid(nu, nv)) continue;
          window[n++] = img.at(nu, nv);
        }
      }
      const auto mid = window.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2);
      std::nth_element(window.begin(), mid, window.begin() + static_cast<std::ptrdiff_t>(n));
      out.values[out.index(u, v)] = *mid;
    }
  }
  return out;
}

DepthImage restore_depth(const DepthImage& img) { return median_filter3(fill_holes(img)); }

DepthImage downsample(const DepthImage& img, int max_w, int max_h) {
  const int factor = std::max({1, (img.width + max_w - 1) / max_w, (img.height + max_h - 1) / max_h});
  if (factor == 1) return img;
  const int w = img.width / factor;
  const int h = img.height / factor;
  DepthImage out(w, h, img.depth_min, img.depth_max);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      double sum = 0.0;
      int n = 0;
      for (int dv = 0; dv < factor; ++dv) {
        for (int du = 0; du < factor; ++du) {
          const int su = u * factor + du;
          const int sv = v * factor + dv;
          if (!img.is_valid(su, sv)) continue;
          sum += img.at(su, sv);
          ++n;
        }
      }
      if (n > 0) out.set(u, v, static_cast<float>(sum / n));
    }
  }
  return out;
}

namespace {

void put_f32(std::vector<std::uint8_t>& buf, float f) {
  static_assert(std::endian::native == std::endian::little, "payload layout assumes a little-endian host");
  std::uint8_t bytes[4];
  std::memcpy(bytes, &f, 4);
  buf.insert(buf.end(), bytes, bytes + 4);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ContractError("truncated depth image header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_depth_payload(const DepthImage& img) {
  std::vector<std::uint8_t> buf;
  buf.reserve(img.values.size() * 5);
  for (float z : img.values) put_f32(buf, z);
  buf.insert(buf.end(), img.valid.begin(), img.valid.end());
  return buf;
}

DepthImage decode_depth_payload(const std::uint8_t* data, std::size_t size, int width, int height,
                                double depth_min, double depth_max) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (size != n * 5) throw ContractError(fmt::format("depth payload has {} bytes, expected {}", size, n * 5));
  DepthImage img(width, height, depth_min, depth_max);
  std::memcpy(img.values.data(), data, n * 4);
  std::memcpy(img.valid.data(), data + n * 4, n);
  return img;
}

void write_depth(std::ostream& out, const DepthImage& img) {
  out.write("LCDP", 4);
  put_u32(out, static_cast<std::uint32_t>(img.width));
  put_u32(out, static_cast<std::uint32_t>(img.height));
  const float range[2] = {static_cast<float>(img.depth_min), static_cast<float>(img.depth_max)};
  out.write(reinterpret_cast<const char*>(range), sizeof range);
  const auto payload = encode_depth_payload(img);
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
}

DepthImage read_depth(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LCDP", 4) != 0) throw ContractError("not a depth image (bad magic)");
  const int w = static_cast<int>(get_u32(in));
  const int h = static_cast<int>(get_u32(in));
  float range[2];
  in.read(reinterpret_cast<char*>(range), sizeof range);
  std::vector<std::uint8_t> payload(static_cast<std::size_t>(w) * h * 5);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!in) throw ContractError("truncated depth image payload");
  return decode_depth_payload(payload.data(), payload.size(), w, h, range[0], range[1]);
}

void write_depth_pgm(const std::string& path, const DepthImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  const double span = img.depth_max - img.depth_min;
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    // Near is bright, invalid is black.
    unsigned char px = 0;
    if (img.valid[i]) px = static_cast<unsigned char>(255.0 - 254.0 * (img.values[i] - img.depth_min) / span);
    out.put(static_cast<char>(px));
  }
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path));
}

}  // namespace loconav
