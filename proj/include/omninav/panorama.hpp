#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "omninav/image.hpp"

namespace omninav {

/// Equirectangular panorama with a cyclic horizontal axis.
///
/// Column c maps to azimuth pi - 2*pi*c/W: column W/2 looks forward (0 rad),
/// column 0 looks straight back (+pi), and azimuth decreases to the right,
/// so image x runs clockwise while robot yaw runs counterclockwise.
/// Row r of the full 2:1 sphere maps to elevation pi/2 - pi*r/H; cropped
/// panoramas keep the elevation of their source rows via `first_row`.
class Panorama {
 public:
  Panorama() = default;
  explicit Panorama(Image pixels, int first_row = 0, int full_height = 0);

  const Image& pixels() const noexcept { return pixels_; }
  int width() const noexcept { return pixels_.width(); }
  int height() const noexcept { return pixels_.height(); }
  bool cyclic() const noexcept { return true; }

  double azimuth_of_column(double column) const;
  double column_of_azimuth(double azimuth) const;  // in [0, W)
  double elevation_of_row(double row) const;

  int first_row() const noexcept { return first_row_; }
  int full_height() const noexcept { return full_height_; }

 private:
  Image pixels_;
  int first_row_ = 0;
  int full_height_ = 0;
};

double azimuth_of_column(double column, int width);
double column_of_azimuth(double azimuth, int width);

/// Contiguous half-open column interval [begin, end).
struct ColumnSpan {
  int begin = 0;
  int end = 0;
  int size() const noexcept { return end - begin; }
  friend bool operator==(const ColumnSpan&, const ColumnSpan&) = default;
};

struct Slice {
  int index = 0;                 // 0-based
  std::vector<ColumnSpan> spans; // one span, or two when the window wraps
  int first_column = 0;          // unwrapped start column (may be negative)
  int width = 0;                 // columns covered
  double center_column = 0.0;
  double center_azimuth = 0.0;   // radians, robot frame
  std::array<double, 2> direction{1.0, 0.0};

  bool contains_column(double column, int panorama_width) const;
};

struct SliceSet {
  std::vector<Slice> slices;
  int n_split = 0;
  double overlap_frac = 0.0;
  int panorama_width = 0;

  /// Angular width of every slice window in radians.
  double angular_width() const;
  std::size_t size() const noexcept { return slices.size(); }
  const Slice& operator[](std::size_t i) const { return slices[i]; }
};

inline constexpr double kDefaultOverlap = 0.25;

/// Slices depend only on the panorama width; pixel content is ignored.
SliceSet make_slices(int panorama_width, int n_split, double overlap_frac = kDefaultOverlap);
SliceSet make_slices(const Panorama& p, int n_split, double overlap_frac = kDefaultOverlap);

/// Rows [top, top+height). The azimuth map is unchanged.
Panorama crop_band(const Panorama& p, int top, int height);
/// Vertically centred band covering half of the rows.
Panorama crop_band(const Panorama& p);

Image extract_slice(const Panorama& p, const Slice& slice);

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi;
}

}  // namespace omninav
