#include "omninav/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "omninav/error.hpp"

namespace omninav {

Image::Image(int width, int height, float fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * height * kChannels, fill) {
  if (width < 0 || height < 0) throw GeometryError("negative image dimensions");
}

void Image::set_pixel(int x, int y, float r, float g, float b) {
  auto p = pixel(x, y);
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

void Image::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

void Image::sample_bilinear(double x, double y, std::span<float, kChannels> out) const {
  const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, width_ - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, height_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = std::clamp(x - x0, 0.0, 1.0);
  const double fy = std::clamp(y - y0, 0.0, 1.0);
  for (int c = 0; c < kChannels; ++c) {
    const double top = at(x0, y0, c) * (1.0 - fx) + at(x1, y0, c) * fx;
    const double bottom = at(x0, y1, c) * (1.0 - fx) + at(x1, y1, c) * fx;
    out[c] = static_cast<float>(top * (1.0 - fy) + bottom * fy);
  }
}

Image Image::crop_wrapped(int x0, int y0, int w, int h) const {
  if (h <= 0 || w <= 0 || y0 < 0 || y0 + h > height_) {
    throw GeometryError("crop rectangle outside image");
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = ((x0 + x) % width_ + width_) % width_;
      const auto src = pixel(sx, y0 + y);
      std::copy(src.begin(), src.end(), out.pixel(x, y).begin());
    }
  }
  return out;
}

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

struct PngReadSource {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->offset + count > src->bytes.size()) png_error(png, "truncated PNG data");
  std::memcpy(out, src->bytes.data() + src->offset, count);
  src->offset += count;
}

void write_to_memory(png_structp png, png_bytep data, png_size_t count) {
  auto* dst = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  dst->insert(dst->end(), data, data + count);
}

void flush_noop(png_structp) {}

[[noreturn]] void png_fail(png_structp, png_const_charp message) { throw IoError(message); }

void png_warn(png_structp, png_const_charp) {}

// libpng stores its own longjmp state; routing errors through a throwing
// callback keeps the C++ unwinding path and avoids setjmp.
Image decode_with(png_structp png, png_infop info) {
  png_read_info(png, info);
  const auto width = static_cast<int>(png_get_image_width(png, info));
  const auto height = static_cast<int>(png_get_image_height(png, info));
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
  Image image(width, height);
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        image.at(x, y, c) = row[static_cast<std::size_t>(x) * 3 + c] / 255.0f;
      }
    }
  }
  png_read_end(png, nullptr);
  return image;
}

void encode_with(png_structp png, png_infop info, const Image& image) {
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        row[static_cast<std::size_t>(x) * 3 + c] = to_byte(image.at(x, y, c));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

struct ReadHandles {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ReadHandles() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw IoError("libpng initialisation failed");
  }
  ~ReadHandles() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct WriteHandles {
  png_structp png = nullptr;
  png_infop info = nullptr;
  WriteHandles() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw IoError("libpng initialisation failed");
  }
  ~WriteHandles() { png_destroy_write_struct(&png, &info); }
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> out;
  WriteHandles h;
  png_set_write_fn(h.png, &out, write_to_memory, flush_noop);
  encode_with(h.png, h.info, image);
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError("not a PNG stream");
  PngReadSource source{bytes};
  ReadHandles h;
  png_set_read_fn(h.png, &source, read_from_memory);
  return decode_with(h.png, h.info);
}

Image read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  std::uint8_t header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }
  ReadHandles h;
  png_init_io(h.png, file.get());
  png_set_sig_bytes(h.png, 8);
  return decode_with(h.png, h.info);
}

void write_png(const Image& image, const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  WriteHandles h;
  png_init_io(h.png, file.get());
  encode_with(h.png, h.info, image);
}

double mean_squared_error(const Image& a, const Image& b, const std::vector<bool>& include) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw GeometryError("image sizes differ");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!include[static_cast<std::size_t>(y) * a.width() + x]) continue;
      for (int c = 0; c < Image::kChannels; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        sum += d * d;
      }
      count += Image::kChannels;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace omninav
