#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <numbers>
#include <vector>

#include "omninav/config.hpp"
#include "omninav/image.hpp"
#include "omninav/panorama.hpp"

namespace omninav {

enum class Projection { kEquidistant };

enum class LensSide { kFront, kRear };

struct LensModel {
  Projection projection = Projection::kEquidistant;
  double fov = 200.0 * std::numbers::pi / 180.0;  // full field of view, radians
  double focal = 0.0;  // pixels per radian; 0 fits the field of view to the image

  /// Effective focal length for a square image of side `size`.
  double focal_for(int size) const;
};

/// Radial gain g(r) = 1 + c2 r^2 + c4 r^4 with r normalised to the lens disc radius.
struct VignetteParams {
  double c2 = 0.0;
  double c4 = 0.0;
  double gain(double r) const { return 1.0 + c2 * r * r + c4 * r * r * r * r; }
};

struct FisheyePair {
  Image front;
  Image rear;
  LensModel lens;
  VignetteParams vignette;

  /// Throws GeometryError / ParameterError when the invariants do not hold.
  void validate() const;
};

/// Unwarped single-lens view on the full equirectangular canvas.
/// `margin` is the angular distance (rad) to the edge of the lens field of
/// view; pixels with margin <= 0 carry no data.
struct HalfPanorama {
  Image image;
  std::vector<float> margin;

  int width() const noexcept { return image.width(); }
  int height() const noexcept { return image.height(); }
  float margin_at(int x, int y) const {
    return margin[static_cast<std::size_t>(y) * image.width() + x];
  }
  bool valid(int x, int y) const { return margin_at(x, y) > 0.0f; }
  std::vector<bool> mask() const;
};

struct ControlPointPair {
  Eigen::Vector2d front;  // pixel in the front unwarp
  Eigen::Vector2d rear;   // pixel in the rear unwarp
};

struct ControlPointSet {
  std::vector<ControlPointPair> pairs;
};

/// Plain text, one pair per line: `fx fy rx ry`. `#` starts a comment.
ControlPointSet load_control_points(const std::filesystem::path& path);
ControlPointSet parse_control_points(const std::string& text);
void save_control_points(const ControlPointSet& cps, const std::filesystem::path& path);

struct Alignment {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // rear sphere -> front sphere
  double residual_rms = 0.0;  // great-circle residual, radians
  bool degenerate = false;    // true when only yaw could be fitted

  double yaw() const;
};

// Sphere <-> equirectangular helpers shared by stitching and its tests.
Eigen::Vector3d direction_of_pixel(double x, double y, int width, int height);
Eigen::Vector2d pixel_of_direction(const Eigen::Vector3d& d, int width, int height);

/// Optical axis and image right/up vectors for one lens in the robot frame
/// (x forward, y left, z up).
struct LensFrame {
  Eigen::Vector3d axis;
  Eigen::Vector3d right;
  Eigen::Vector3d up;
};
LensFrame lens_frame(LensSide side);

Image compensate_vignette(const Image& fisheye, const VignetteParams& params);

HalfPanorama unwarp_fisheye(const Image& fisheye, const LensModel& lens, LensSide side,
                            int out_width = 2000, int out_height = 1000);

/// Least-squares rotation of the rear sphere onto the front sphere.
Alignment align_halves(const HalfPanorama& front, const HalfPanorama& rear,
                       const ControlPointSet& cps);
Alignment align_control_points(const ControlPointSet& cps, int width, int height);

Panorama blend_halves(const HalfPanorama& front, const HalfPanorama& rear,
                      const Eigen::Matrix3d& rear_rotation);

struct StitchOptions {
  LensModel lens;
  VignetteParams vignette;
  int out_width = 2000;
  int out_height = 1000;
  int crop_top = -1;     // -1 selects the centred band
  int crop_height = -1;  // -1 selects half the height

  static StitchOptions from_config(const Config& config);
};

struct StitchResult {
  Panorama full;
  Panorama band;
  Alignment alignment;
};

StitchResult stitch(const Image& front, const Image& rear, const ControlPointSet& cps,
                    const StitchOptions& options);

}  // namespace omninav
