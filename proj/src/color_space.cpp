#include "cea/color_space.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cea::color {

namespace {

constexpr double kSrgbEncodedKnee = 0.04045;
constexpr double kSrgbSlope = 12.92;
// Linear-side knee chosen as the image of the encoded knee so that
// encode(decode(v)) == v holds on the linear segment.
constexpr double kSrgbLinearKnee = kSrgbEncodedKnee / kSrgbSlope;
constexpr double kSrgbGamma = 2.4;
constexpr double kSrgbOffset = 0.055;

constexpr double kFourOver29 = 4.0 / 29.0;

ConversionMatrix make_rgb_xyz_matrix() {
  ConversionMatrix cm;
  cm.forward = Mat3{{41.24646450488705, 35.75832479856282, 18.044110696550128,
                     21.26728787327121, 71.51521284847871, 7.217499278250072,
                     1.933407756582754, 11.919309467961023, 95.03128277545623}};
  cm.inverse = inverse(cm.forward);
  return cm;
}

}  // namespace

Mat3 operator*(const Mat3& lhs, const Mat3& rhs) {
  Mat3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += lhs(i, k) * rhs(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

std::array<double, 3> operator*(const Mat3& lhs, const std::array<double, 3>& v) {
  return {lhs(0, 0) * v[0] + lhs(0, 1) * v[1] + lhs(0, 2) * v[2],
          lhs(1, 0) * v[0] + lhs(1, 1) * v[1] + lhs(1, 2) * v[2],
          lhs(2, 0) * v[0] + lhs(2, 1) * v[1] + lhs(2, 2) * v[2]};
}

Mat3 transpose(const Mat3& a) {
  Mat3 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = a(j, i);
  return out;
}

Mat3 inverse(const Mat3& a) {
  Mat3 adj;
  adj(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  adj(0, 1) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
  adj(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
  adj(1, 0) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
  adj(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
  adj(1, 2) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
  adj(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
  adj(2, 1) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
  adj(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double det = a(0, 0) * adj(0, 0) + a(0, 1) * adj(1, 0) + a(0, 2) * adj(2, 0);
  if (det == 0.0 || !std::isfinite(det)) throw std::domain_error("singular 3x3 matrix");
  for (double& v : adj.m) v /= det;
  return adj;
}

const ConversionMatrix& rgb_xyz_matrix() {
  static const ConversionMatrix cm = make_rgb_xyz_matrix();
  return cm;
}

const char* to_string(Convention convention) {
  return convention == Convention::Srgb ? "srgb" : "linear";
}

Convention parse_convention(const char* name) {
  const std::string_view s(name);
  if (s == "srgb") return Convention::Srgb;
  if (s == "linear") return Convention::Linear;
  throw std::invalid_argument("unknown color convention '" + std::string(s) + "'");
}

double lab_f(double t) {
  constexpr double knee = kLabDelta * kLabDelta * kLabDelta;
  if (t > knee) return std::cbrt(t);
  return t / (3.0 * kLabDelta * kLabDelta) + kFourOver29;
}

double lab_f_derivative(double t) {
  constexpr double knee = kLabDelta * kLabDelta * kLabDelta;
  if (t > knee) {
    const double c = std::cbrt(t);
    return 1.0 / (3.0 * c * c);
  }
  return 1.0 / (3.0 * kLabDelta * kLabDelta);
}

double lab_f_inverse(double t) {
  if (t > kLabDelta) return t * t * t;
  return 3.0 * kLabDelta * kLabDelta * (t - kFourOver29);
}

double lab_f_inverse_derivative(double t) {
  if (t > kLabDelta) return 3.0 * t * t;
  return 3.0 * kLabDelta * kLabDelta;
}

double srgb_decode(double encoded) {
  const double mag = std::abs(encoded);
  const double out = mag <= kSrgbEncodedKnee
                         ? mag / kSrgbSlope
                         : std::pow((mag + kSrgbOffset) / (1.0 + kSrgbOffset), kSrgbGamma);
  return std::copysign(out, encoded);
}

double srgb_encode(double linear) {
  const double mag = std::abs(linear);
  const double out = mag <= kSrgbLinearKnee
                         ? mag * kSrgbSlope
                         : (1.0 + kSrgbOffset) * std::pow(mag, 1.0 / kSrgbGamma) - kSrgbOffset;
  return std::copysign(out, linear);
}

double srgb_decode_derivative(double encoded) {
  const double mag = std::abs(encoded);
  if (mag <= kSrgbEncodedKnee) return 1.0 / kSrgbSlope;
  return kSrgbGamma / (1.0 + kSrgbOffset) *
         std::pow((mag + kSrgbOffset) / (1.0 + kSrgbOffset), kSrgbGamma - 1.0);
}

double srgb_encode_derivative(double linear) {
  const double mag = std::abs(linear);
  if (mag <= kSrgbLinearKnee) return kSrgbSlope;
  return (1.0 + kSrgbOffset) / kSrgbGamma * std::pow(mag, 1.0 / kSrgbGamma - 1.0);
}

XyzPixel rgb_to_xyz(const RgbPixel& linear) {
  const auto v = rgb_xyz_matrix().forward * std::array<double, 3>{linear.r, linear.g, linear.b};
  return {v[0], v[1], v[2]};
}

RgbPixel xyz_to_rgb(const XyzPixel& p) {
  const auto v = rgb_xyz_matrix().inverse * std::array<double, 3>{p.x, p.y, p.z};
  return {v[0], v[1], v[2]};
}

LabPixel xyz_to_lab(const XyzPixel& p) {
  const double fx = lab_f(p.x / WhitePoint::kXn);
  const double fy = lab_f(p.y / WhitePoint::kYn);
  const double fz = lab_f(p.z / WhitePoint::kZn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

XyzPixel lab_to_xyz(const LabPixel& p) {
  const double fy = (p.l + 16.0) / 116.0;
  const double fx = fy + p.a / 500.0;
  const double fz = fy - p.b / 200.0;
  return {WhitePoint::kXn * lab_f_inverse(fx), WhitePoint::kYn * lab_f_inverse(fy),
          WhitePoint::kZn * lab_f_inverse(fz)};
}

LabPixel rgb_to_lab(const RgbPixel& p, Convention convention) {
  RgbPixel linear = p;
  if (convention == Convention::Srgb) {
    linear = {srgb_decode(p.r), srgb_decode(p.g), srgb_decode(p.b)};
  }
  return xyz_to_lab(rgb_to_xyz(linear));
}

RgbPixel lab_to_rgb(const LabPixel& p, Convention convention) {
  const RgbPixel linear = xyz_to_rgb(lab_to_xyz(p));
  if (convention == Convention::Linear) return linear;
  return {srgb_encode(linear.r), srgb_encode(linear.g), srgb_encode(linear.b)};
}

Mat3 lab_to_rgb_jacobian(const LabPixel& p, Convention convention) {
  const double fy = (p.l + 16.0) / 116.0;
  const double fx = fy + p.a / 500.0;
  const double fz = fy - p.b / 200.0;

  // d(X,Y,Z)/d(L,a,b)
  const double dx = WhitePoint::kXn * lab_f_inverse_derivative(fx);
  const double dy = WhitePoint::kYn * lab_f_inverse_derivative(fy);
  const double dz = WhitePoint::kZn * lab_f_inverse_derivative(fz);
  const Mat3 dxyz{{dx / 116.0, dx / 500.0, 0.0,
                   dy / 116.0, 0.0, 0.0,
                   dz / 116.0, 0.0, -dz / 200.0}};

  Mat3 jac = rgb_xyz_matrix().inverse * dxyz;
  if (convention == Convention::Srgb) {
    const auto linear = rgb_xyz_matrix().inverse *
                        std::array<double, 3>{WhitePoint::kXn * lab_f_inverse(fx),
                                              WhitePoint::kYn * lab_f_inverse(fy),
                                              WhitePoint::kZn * lab_f_inverse(fz)};
    for (int row = 0; row < 3; ++row) {
      const double s = srgb_encode_derivative(linear[row]);
      for (int col = 0; col < 3; ++col) jac(row, col) *= s;
    }
  }
  return jac;
}

Mat3 rgb_to_lab_jacobian(const RgbPixel& p, Convention convention) {
  RgbPixel linear = p;
  std::array<double, 3> decode_slope{1.0, 1.0, 1.0};
  if (convention == Convention::Srgb) {
    linear = {srgb_decode(p.r), srgb_decode(p.g), srgb_decode(p.b)};
    decode_slope = {srgb_decode_derivative(p.r), srgb_decode_derivative(p.g),
                    srgb_decode_derivative(p.b)};
  }
  const XyzPixel xyz = rgb_to_xyz(linear);
  const double gx = lab_f_derivative(xyz.x / WhitePoint::kXn) / WhitePoint::kXn;
  const double gy = lab_f_derivative(xyz.y / WhitePoint::kYn) / WhitePoint::kYn;
  const double gz = lab_f_derivative(xyz.z / WhitePoint::kZn) / WhitePoint::kZn;
  const Mat3 dlab{{0.0, 116.0 * gy, 0.0,
                   500.0 * gx, -500.0 * gy, 0.0,
                   0.0, 200.0 * gy, -200.0 * gz}};
  Mat3 jac = dlab * rgb_xyz_matrix().forward;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) jac(row, col) *= decode_slope[col];
  return jac;
}

double delta_e(const LabPixel& p, const LabPixel& q) {
  const double dl = p.l - q.l;
  const double da = p.a - q.a;
  const double db = p.b - q.b;
  return std::sqrt(dl * dl + da * da + db * db);
}

}  // namespace cea::color
