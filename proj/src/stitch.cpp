#include "omninav/stitch.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "omninav/error.hpp"

namespace omninav {

namespace {

constexpr double kPi = std::numbers::pi;

void require_square(const Image& img) {
  if (img.empty() || img.width() != img.height()) {
    throw GeometryError("fisheye image must be square and non-empty");
  }
}

// Samples an equirectangular image with horizontal wraparound.
void sample_cyclic(const Image& img, double x, double y, std::span<float, 3> out) {
  const int w = img.width();
  const int h = img.height();
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const double fx0 = std::floor(x);
  const int y0 = static_cast<int>(std::floor(y));
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - fx0;
  const double fy = y - y0;
  const int x0 = ((static_cast<int>(fx0) % w) + w) % w;
  const int x1 = (x0 + 1) % w;
  for (int c = 0; c < 3; ++c) {
    const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
    const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
    out[c] = static_cast<float>(top * (1.0 - fy) + bottom * fy);
  }
}

float sample_margin(const HalfPanorama& half, double x, double y) {
  const int w = half.width();
  const int h = half.height();
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const double fx0 = std::floor(x);
  const int y0 = static_cast<int>(std::floor(y));
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - fx0;
  const double fy = y - y0;
  const int x0 = ((static_cast<int>(fx0) % w) + w) % w;
  const int x1 = (x0 + 1) % w;
  // Any invalid corner invalidates the sample so no black pixels leak in.
  const float m00 = half.margin_at(x0, y0), m10 = half.margin_at(x1, y0);
  const float m01 = half.margin_at(x0, y1), m11 = half.margin_at(x1, y1);
  if (m00 <= 0 || m10 <= 0 || m01 <= 0 || m11 <= 0) return std::min({m00, m10, m01, m11, 0.0f});
  const double top = m00 * (1.0 - fx) + m10 * fx;
  const double bottom = m01 * (1.0 - fx) + m11 * fx;
  return static_cast<float>(top * (1.0 - fy) + bottom * fy);
}

Eigen::Matrix3d skew_exp(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-15) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

double geodesic(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

struct SpherePairs {
  std::vector<Eigen::Vector3d> rear;
  std::vector<Eigen::Vector3d> front;
};

double rms_residual(const SpherePairs& pts, const Eigen::Matrix3d& r) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pts.rear.size(); ++i) {
    const double t = geodesic(r * pts.rear[i], pts.front[i]);
    sum += t * t;
  }
  return std::sqrt(sum / static_cast<double>(pts.rear.size()));
}

// Gauss-Newton on the great-circle residuals; `yaw_only` restricts updates to z.
Eigen::Matrix3d refine(const SpherePairs& pts, Eigen::Matrix3d r, bool yaw_only) {
  // Gauss-Newton on the tangent-plane error: a small rotation w moves x by w x x.
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < pts.rear.size(); ++i) {
      const Eigen::Vector3d x = r * pts.rear[i];
      normal += Eigen::Matrix3d::Identity() - x * x.transpose();
      const Eigen::Vector3d axis = x.cross(pts.front[i]);
      const double s = axis.norm();
      if (s < 1e-14) continue;
      rhs += axis / s * geodesic(x, pts.front[i]);
    }
    if (yaw_only) {
      if (normal(2, 2) < 1e-18) break;
      const double step = rhs.z() / normal(2, 2);
      r = skew_exp({0, 0, step}) * r;
      if (std::abs(step) < 1e-14) break;
      continue;
    }
    const Eigen::Vector3d step = normal.ldlt().solve(rhs);
    r = skew_exp(step) * r;
    if (step.norm() < 1e-14) break;
  }
  return r;
}

}  // namespace

double LensModel::focal_for(int size) const {
  if (focal > 0.0) return focal;
  return (size / 2.0) / (fov / 2.0);
}

void FisheyePair::validate() const {
  require_square(front);
  require_square(rear);
  if (front.width() != rear.width()) throw GeometryError("fisheye images differ in resolution");
  if (!(lens.fov > kPi && lens.fov < 2.0 * kPi)) {
    throw ParameterError("lens field of view must lie in (pi, 2pi)");
  }
  if (vignette.gain(0.0) != 1.0) throw ParameterError("vignette gain at the centre must be 1");
}

std::vector<bool> HalfPanorama::mask() const {
  std::vector<bool> m(margin.size());
  for (std::size_t i = 0; i < margin.size(); ++i) m[i] = margin[i] > 0.0f;
  return m;
}

double Alignment::yaw() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

Eigen::Vector3d direction_of_pixel(double x, double y, int width, int height) {
  const double az = azimuth_of_column(x, width);
  const double el = kPi / 2.0 - kPi * y / height;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

Eigen::Vector2d pixel_of_direction(const Eigen::Vector3d& d, int width, int height) {
  const double az = std::atan2(d.y(), d.x());
  const double el = std::asin(std::clamp(d.z() / d.norm(), -1.0, 1.0));
  return {column_of_azimuth(az, width), (kPi / 2.0 - el) * height / kPi};
}

LensFrame lens_frame(LensSide side) {
  if (side == LensSide::kFront) return {{1, 0, 0}, {0, -1, 0}, {0, 0, 1}};
  return {{-1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
}

Image compensate_vignette(const Image& fisheye, const VignetteParams& params) {
  require_square(fisheye);
  constexpr int kSamples = 512;
  double previous = params.gain(0.0);
  if (previous != 1.0) throw ParameterError("vignette gain at the centre must be 1");
  for (int i = 1; i <= kSamples; ++i) {
    const double g = params.gain(static_cast<double>(i) / kSamples);
    if (g <= 0.0) throw ParameterError("vignette gain must stay positive inside the lens disc");
    if (g > previous + 1e-12) throw ParameterError("vignette gain must not increase with radius");
    previous = g;
  }

  Image out = fisheye;
  const int size = fisheye.width();
  const double centre = (size - 1) / 2.0;
  const double disc = size / 2.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double r = std::hypot(x - centre, y - centre) / disc;
      if (r > 1.0) continue;
      const double g = params.gain(r);
      for (auto& v : out.pixel(x, y)) v = static_cast<float>(std::clamp(v / g, 0.0, 1.0));
    }
  }
  return out;
}

HalfPanorama unwarp_fisheye(const Image& fisheye, const LensModel& lens, LensSide side,
                            int out_width, int out_height) {
  require_square(fisheye);
  if (!(lens.fov > kPi && lens.fov < 2.0 * kPi)) {
    throw ParameterError("lens field of view must lie in (pi, 2pi)");
  }
  if (out_width <= 0 || out_height <= 0) throw GeometryError("output size must be positive");

  const int size = fisheye.width();
  const double centre = (size - 1) / 2.0;
  const double focal = lens.focal_for(size);
  const double half_fov = lens.fov / 2.0;
  const LensFrame frame = lens_frame(side);

  HalfPanorama half{Image(out_width, out_height),
                    std::vector<float>(static_cast<std::size_t>(out_width) * out_height, 0.0f)};
  std::array<float, 3> rgb{};
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Eigen::Vector3d d = direction_of_pixel(x, y, out_width, out_height);
      const double alpha = std::acos(std::clamp(d.dot(frame.axis), -1.0, 1.0));
      float margin = static_cast<float>(half_fov - alpha);
      const double px = d.dot(frame.right);
      const double py = d.dot(frame.up);
      const double n = std::hypot(px, py);
      const double rho = focal * alpha;
      const double sx = n < 1e-12 ? centre : centre + rho * px / n;
      const double sy = n < 1e-12 ? centre : centre - rho * py / n;
      const bool inside = sx >= 0.0 && sy >= 0.0 && sx <= size - 1 && sy <= size - 1;
      if (!inside) margin = std::min(margin, 0.0f);
      half.margin[static_cast<std::size_t>(y) * out_width + x] = margin;
      if (margin <= 0.0f) continue;
      fisheye.sample_bilinear(sx, sy, rgb);
      half.image.set_pixel(x, y, rgb[0], rgb[1], rgb[2]);
    }
  }
  return half;
}

ControlPointSet parse_control_points(const std::string& text) {
  ControlPointSet cps;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> values;
    double v = 0.0;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) throw ParseError("non-numeric control point field", line_no);
    if (values.empty()) continue;
    if (values.size() != 4) throw ParseError("expected `fx fy rx ry`", line_no);
    cps.pairs.push_back({{values[0], values[1]}, {values[2], values[3]}});
  }
  return cps;
}

ControlPointSet load_control_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open control point file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_control_points(buffer.str());
}

void save_control_points(const ControlPointSet& cps, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write control point file " + path.string());
  out.precision(17);
  for (const auto& p : cps.pairs) {
    out << p.front.x() << ' ' << p.front.y() << ' ' << p.rear.x() << ' ' << p.rear.y() << '\n';
  }
}

Alignment align_control_points(const ControlPointSet& cps, int width, int height) {
  if (cps.pairs.size() < 3) throw ParameterError("alignment needs at least 3 control point pairs");
  SpherePairs pts;
  for (const auto& p : cps.pairs) {
    pts.rear.push_back(direction_of_pixel(p.rear.x(), p.rear.y(), width, height));
    pts.front.push_back(direction_of_pixel(p.front.x(), p.front.y(), width, height));
  }

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < pts.rear.size(); ++i) cov += pts.rear[i] * pts.front[i].transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();

  Alignment result;
  // Rank < 2 means every pair sits on one line through the sphere centre.
  result.degenerate = sv(1) < 1e-6 * std::max(sv(0), 1e-300);
  if (result.degenerate) {
    double sin_sum = 0.0, cos_sum = 0.0;
    for (std::size_t i = 0; i < pts.rear.size(); ++i) {
      const auto& p = pts.rear[i];
      const auto& q = pts.front[i];
      cos_sum += q.x() * p.x() + q.y() * p.y();
      sin_sum += q.y() * p.x() - q.x() * p.y();
    }
    const double yaw = std::atan2(sin_sum, cos_sum);
    result.rotation = refine(pts, skew_exp({0, 0, yaw}), true);
  } else {
    const Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
    fix(2, 2) = (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0;
    result.rotation = refine(pts, v * fix * u.transpose(), false);
  }
  result.residual_rms = rms_residual(pts, result.rotation);
  return result;
}

Alignment align_halves(const HalfPanorama& front, const HalfPanorama& rear,
                       const ControlPointSet& cps) {
  if (front.width() != rear.width() || front.height() != rear.height()) {
    throw GeometryError("unwarped halves differ in size");
  }
  for (const auto& p : cps.pairs) {
    const auto inside = [](const HalfPanorama& h, const Eigen::Vector2d& px) {
      const int x = static_cast<int>(std::lround(px.x())) % h.width();
      const int y = static_cast<int>(std::lround(px.y()));
      return px.x() >= 0 && px.x() < h.width() && y >= 0 && y < h.height() && h.valid(x, y);
    };
    // both points must be seen by both lenses
    if (!inside(front, p.front) || !inside(rear, p.front) || !inside(front, p.rear) || !inside(rear, p.rear)) {
      throw ParameterError("control point outside the overlap band");
    }
  }
  return align_control_points(cps, front.width(), front.height());
}

Panorama blend_halves(const HalfPanorama& front, const HalfPanorama& rear,
                      const Eigen::Matrix3d& rear_rotation) {
  if (front.width() != rear.width() || front.height() != rear.height()) {
    throw GeometryError("unwarped halves differ in size");
  }
  const int w = front.width();
  const int h = front.height();
  const Eigen::Matrix3d inverse = rear_rotation.transpose();
  const bool identity = rear_rotation.isIdentity(1e-15);

  Image out(w, h);
  std::size_t overlap = 0;
  std::array<float, 3> rear_rgb{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float mf = front.margin_at(x, y);
      float mr = 0.0f;
      if (identity) {
        mr = rear.margin_at(x, y);
        if (mr > 0.0f) {
          const auto p = rear.image.pixel(x, y);
          std::copy(p.begin(), p.end(), rear_rgb.begin());
        }
      } else {
        const Eigen::Vector2d src =
            pixel_of_direction(inverse * direction_of_pixel(x, y, w, h), w, h);
        mr = sample_margin(rear, src.x(), src.y());
        if (mr > 0.0f) sample_cyclic(rear.image, src.x(), src.y(), rear_rgb);
      }
      const auto f = front.image.pixel(x, y);
      if (mf > 0.0f && mr > 0.0f) {
        ++overlap;
        const float wf = mf / (mf + mr);
        out.set_pixel(x, y, wf * f[0] + (1 - wf) * rear_rgb[0], wf * f[1] + (1 - wf) * rear_rgb[1],
                      wf * f[2] + (1 - wf) * rear_rgb[2]);
      } else if (mf > 0.0f) {
        out.set_pixel(x, y, f[0], f[1], f[2]);
      } else if (mr > 0.0f) {
        out.set_pixel(x, y, rear_rgb[0], rear_rgb[1], rear_rgb[2]);
      }
    }
  }
  if (overlap == 0) throw StitchError("the two halves do not overlap after alignment");
  return Panorama(std::move(out));
}

StitchOptions StitchOptions::from_config(const Config& config) {
  StitchOptions o;
  o.lens.fov = config.get_double("lens.fov_deg", 200.0) * kPi / 180.0;
  o.lens.focal = config.get_double("lens.focal", 0.0);
  o.vignette.c2 = config.get_double("vignette.c2", 0.0);
  o.vignette.c4 = config.get_double("vignette.c4", 0.0);
  o.crop_top = config.get_int("crop.top", -1);
  o.crop_height = config.get_int("crop.height", -1);
  return o;
}

StitchResult stitch(const Image& front, const Image& rear, const ControlPointSet& cps,
                    const StitchOptions& options) {
  FisheyePair pair{front, rear, options.lens, options.vignette};
  pair.validate();
  const Image front_flat = compensate_vignette(front, options.vignette);
  const Image rear_flat = compensate_vignette(rear, options.vignette);
  const HalfPanorama front_half =
      unwarp_fisheye(front_flat, options.lens, LensSide::kFront, options.out_width, options.out_height);
  const HalfPanorama rear_half =
      unwarp_fisheye(rear_flat, options.lens, LensSide::kRear, options.out_width, options.out_height);
  StitchResult result;
  result.alignment = align_halves(front_half, rear_half, cps);
  result.full = blend_halves(front_half, rear_half, result.alignment.rotation);
  const int height = options.crop_height > 0 ? options.crop_height : result.full.height() / 2;
  const int top = options.crop_top >= 0 ? options.crop_top : (result.full.height() - height) / 2;
  result.band = crop_band(result.full, top, height);
  return result;
}

}  // namespace omninav
