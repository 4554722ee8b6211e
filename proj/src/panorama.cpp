#include "omninav/panorama.hpp"

#include <cmath>

#include "omninav/error.hpp"

namespace omninav {

namespace {
constexpr double kPi = std::numbers::pi;
}

double azimuth_of_column(double column, int width) {
  return kPi - 2.0 * kPi * column / width;
}

double column_of_azimuth(double azimuth, int width) {
  double c = (0.5 - azimuth / (2.0 * kPi)) * width;
  c = std::fmod(c, static_cast<double>(width));
  if (c < 0) c += width;
  return c < width ? c : 0.0;
}

Panorama::Panorama(Image pixels, int first_row, int full_height)
    : pixels_(std::move(pixels)),
      first_row_(first_row),
      full_height_(full_height > 0 ? full_height : pixels_.height()) {}

double Panorama::azimuth_of_column(double column) const {
  return omninav::azimuth_of_column(column, width());
}

double Panorama::column_of_azimuth(double azimuth) const {
  return omninav::column_of_azimuth(azimuth, width());
}

double Panorama::elevation_of_row(double row) const {
  return kPi / 2.0 - kPi * (row + first_row_) / full_height_;
}

bool Slice::contains_column(double column, int panorama_width) const {
  double c = std::fmod(column, static_cast<double>(panorama_width));
  if (c < 0) c += panorama_width;
  for (const auto& span : spans) {
    if (c >= span.begin && c < span.end) return true;
  }
  return false;
}

double SliceSet::angular_width() const {
  return 2.0 * kPi * (1.0 + overlap_frac) / n_split;
}

SliceSet make_slices(int panorama_width, int n_split, double overlap_frac) {
  if (panorama_width <= 0) throw GeometryError("panorama width must be positive");
  if (n_split < 2) throw ParameterError("n_split must be at least 2");
  if (!(overlap_frac >= 0.0 && overlap_frac < 1.0)) {
    throw ParameterError("overlap fraction must lie in [0, 1)");
  }
  const double base = static_cast<double>(panorama_width) / n_split;
  const double width = base * (1.0 + overlap_frac);
  if (width > panorama_width) throw ParameterError("slice wider than panorama");

  SliceSet set;
  set.n_split = n_split;
  set.overlap_frac = overlap_frac;
  set.panorama_width = panorama_width;
  set.slices.reserve(n_split);
  for (int i = 0; i < n_split; ++i) {
    Slice s;
    s.index = i;
    s.center_column = (i + 0.5) * base;
    const auto begin = static_cast<int>(std::lround(s.center_column - width / 2.0));
    const auto end = static_cast<int>(std::lround(s.center_column + width / 2.0));
    s.first_column = begin;
    s.width = end - begin;
    const int wrapped_begin = ((begin % panorama_width) + panorama_width) % panorama_width;
    if (wrapped_begin + s.width <= panorama_width) {
      s.spans.push_back({wrapped_begin, wrapped_begin + s.width});
    } else {
      s.spans.push_back({wrapped_begin, panorama_width});
      s.spans.push_back({0, wrapped_begin + s.width - panorama_width});
    }
    s.center_azimuth = azimuth_of_column(s.center_column, panorama_width);
    s.direction = {std::cos(s.center_azimuth), std::sin(s.center_azimuth)};
    set.slices.push_back(std::move(s));
  }
  return set;
}

SliceSet make_slices(const Panorama& p, int n_split, double overlap_frac) {
  return make_slices(p.width(), n_split, overlap_frac);
}

Panorama crop_band(const Panorama& p, int top, int height) {
  if (height <= 0) throw ParameterError("crop band is empty");
  if (top < 0 || top + height > p.height()) throw ParameterError("crop band outside panorama");
  return Panorama(p.pixels().crop_wrapped(0, top, p.width(), height), p.first_row() + top,
                  p.full_height());
}

Panorama crop_band(const Panorama& p) {
  const int height = p.height() / 2;
  return crop_band(p, (p.height() - height) / 2, height);
}

Image extract_slice(const Panorama& p, const Slice& slice) {
  return p.pixels().crop_wrapped(slice.first_column, 0, slice.width, p.height());
}

}  // namespace omninav
