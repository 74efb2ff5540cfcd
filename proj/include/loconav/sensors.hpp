#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "loconav/geometry.hpp"
#include "loconav/noise.hpp"
#include "loconav/rng.hpp"
#include "loconav/scenario.hpp"

namespace loconav {

/// Pinhole depth camera with a horizontal optical axis.
struct CameraIntrinsics {
  int width = 128;
  int height = 96;
  double hfov = deg_to_rad(57.0);
  double vfov = deg_to_rad(86.0);
  double depth_min = 0.0;
  double depth_max = 5.0;
  double camera_height = 0.6;

  double fx() const;
  double fy() const;
  /// Normalized image-plane offsets of pixel (u, v): right and down per meter of z.
  double ray_right(int u) const;
  double ray_down(int v) const;
  void validate() const;
};

/// Row-major z-depth image in meters with a validity mask.
struct DepthImage {
  static constexpr float kInvalid = -1.0f;

  int width = 0;
  int height = 0;
  double depth_min = 0.0;
  double depth_max = 0.0;
  std::vector<float> values;
  std::vector<std::uint8_t> valid;

  DepthImage() = default;
  DepthImage(int w, int h, double dmin, double dmax);

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
  bool is_valid(int u, int v) const { return valid[index(u, v)] != 0; }
  float at(int u, int v) const { return values[index(u, v)]; }
  void set(int u, int v, float z);
  void invalidate(int u, int v);
  std::size_t valid_count() const;

  friend bool operator==(const DepthImage&, const DepthImage&) = default;
};

/// Raycasts the scenario from a camera at (x, y, camera_height) looking along
/// pose.theta. Boxes are solid prisms, the bounds are infinitely tall walls and
/// (when enabled) the floor plane returns depth too.
DepthImage render_depth(const Pose& pose, const CameraIntrinsics& intrinsics, const Scenario& scenario);

DepthImage apply_depth_noise(const DepthImage& img, const DepthNoiseConfig& cfg, Rng& rng);

/// Fills holes by repeated boundary-inward averaging of valid 8-neighbours,
/// then applies a 3x3 lower-median filter over valid pixels. Invalid regions
/// that reach the image border are open space (nothing within range) and stay
/// invalid.
DepthImage restore_depth(const DepthImage& img);

/// Hole filling stage of restore_depth on its own.
DepthImage fill_holes(const DepthImage& img);
DepthImage median_filter3(const DepthImage& img);

/// Block-average reduction so the result fits within max_w x max_h.
DepthImage downsample(const DepthImage& img, int max_w, int max_h);

// Flat layout: width*height little-endian float32 (row-major, invalid = -1)
// followed by width*height mask bytes (1 = valid).
std::vector<std::uint8_t> encode_depth_payload(const DepthImage& img);
DepthImage decode_depth_payload(const std::uint8_t* data, std::size_t size, int width, int height, double depth_min,
                                double depth_max);

/// File form: "LCDP" magic, u32 width, u32 height, f32 depth_min, f32 depth_max, then the payload.
void write_depth(std::ostream& out, const DepthImage& img);
DepthImage read_depth(std::istream& in);
void write_depth_pgm(const std::string& path, const DepthImage& img);

}  // namespace loconav
