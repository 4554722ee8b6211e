#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace omninav {

/// Interleaved RGB image with float intensities in [0,1], row-major.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  float& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::span<float> pixel(int x, int y) { return {data_.data() + index(x, y, 0), kChannels}; }
  std::span<const float> pixel(int x, int y) const {
    return {data_.data() + index(x, y, 0), kChannels};
  }

  void set_pixel(int x, int y, float r, float g, float b);
  void fill(float value);

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  /// Bilinear sample at continuous pixel coordinates (pixel centers at integers).
  /// Caller guarantees 0 <= x <= width-1 and 0 <= y <= height-1.
  void sample_bilinear(double x, double y, std::span<float, kChannels> out) const;

  /// Columns [x0, x0+w) with horizontal wraparound, rows [y0, y0+h).
  Image crop_wrapped(int x0, int y0, int w, int h) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

/// 8-bit RGB PNG encoding to / from memory.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);

/// Peak signal-to-noise ratio in dB over pixels where `include(x, y)` holds.
template <typename Predicate>
double psnr(const Image& a, const Image& b, Predicate include);

double mean_squared_error(const Image& a, const Image& b, const std::vector<bool>& include);

template <typename Predicate>
double psnr(const Image& a, const Image& b, Predicate include) {
  std::vector<bool> mask(static_cast<std::size_t>(a.width()) * a.height());
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) mask[static_cast<std::size_t>(y) * a.width() + x] = include(x, y);
  const double mse = mean_squared_error(a, b, mask);
  if (mse <= 0.0) return 1e9;
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace omninav
