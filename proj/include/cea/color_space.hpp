#pragma once

#include <array>

namespace cea::color {

struct RgbPixel {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

struct XyzPixel {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct LabPixel {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{};

  constexpr double operator()(int row, int col) const { return m[row * 3 + col]; }
  constexpr double& operator()(int row, int col) { return m[row * 3 + col]; }

  static constexpr Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
};

Mat3 operator*(const Mat3& lhs, const Mat3& rhs);
std::array<double, 3> operator*(const Mat3& lhs, const std::array<double, 3>& v);
Mat3 transpose(const Mat3& a);
Mat3 inverse(const Mat3& a);

/// D65 reference white on the 0..100 XYZ scale.
struct WhitePoint {
  static constexpr double kXn = 95.0489;
  static constexpr double kYn = 100.0;
  static constexpr double kZn = 108.8840;
};

/// Linear RGB -> XYZ matrix and its inverse.
///
/// The forward matrix is the IEC 61966-2-1 (sRGB primaries, D65) matrix with
/// each row rescaled so that (1,1,1) lands exactly on the white point:
///
///   41.24646450488705  35.75832479856282  18.044110696550128
///   21.26728787327121  71.51521284847871   7.217499278250072
///    1.933407756582754 11.919309467961023 95.03128277545623
struct ConversionMatrix {
  Mat3 forward;
  Mat3 inverse;
};

const ConversionMatrix& rgb_xyz_matrix();

/// How stored RGB values relate to the linear light fed to the XYZ matrix.
enum class Convention {
  Linear,  ///< stored values are already linear
  Srgb,    ///< stored values are sRGB-encoded and decoded before the matrix
};

/// Pinned by the blue-patch calibration (see `calibrate_blue_patch`): sRGB
/// decoding reproduces the published 3.04 and 17.23 distances, linear RGB
/// reproduces none of them.
inline constexpr Convention kDefaultConvention = Convention::Srgb;

const char* to_string(Convention convention);
Convention parse_convention(const char* name);

// Piecewise cube-root nonlinearity of the XYZ -> LAB map and its inverse.
inline constexpr double kLabDelta = 6.0 / 29.0;
double lab_f(double t);
double lab_f_derivative(double t);
double lab_f_inverse(double t);
double lab_f_inverse_derivative(double t);

// sRGB transfer curve, extended oddly to negative inputs so that
// out-of-gamut LAB values still map somewhere finite.
double srgb_decode(double encoded);
double srgb_encode(double linear);
double srgb_decode_derivative(double encoded);
double srgb_encode_derivative(double linear);

/// Pure matrix product; the input is linear light.
XyzPixel rgb_to_xyz(const RgbPixel& linear);
RgbPixel xyz_to_rgb(const XyzPixel& p);

LabPixel xyz_to_lab(const XyzPixel& p);
XyzPixel lab_to_xyz(const LabPixel& p);

LabPixel rgb_to_lab(const RgbPixel& p, Convention convention = kDefaultConvention);

/// Exact inverse of rgb_to_lab. Never clips.
RgbPixel lab_to_rgb(const LabPixel& p, Convention convention = kDefaultConvention);

/// d(r,g,b)/d(L,a,b); rows index RGB, columns index LAB.
Mat3 lab_to_rgb_jacobian(const LabPixel& p, Convention convention = kDefaultConvention);

/// d(L,a,b)/d(r,g,b); rows index LAB, columns index RGB.
Mat3 rgb_to_lab_jacobian(const RgbPixel& p, Convention convention = kDefaultConvention);

double delta_e(const LabPixel& p, const LabPixel& q);

}  // namespace cea::color
