#include "betacantor/moments.hpp"

#include <cmath>

namespace betacantor {

double abs_pow(double u, double p) {
  double a = std::abs(u);
  double twice = 2.0 * p;
  if (twice == std::floor(twice) && twice <= 10.0) {
    int n = static_cast<int>(twice);
    double r = (n % 2 == 1) ? std::sqrt(a) : 1.0;
    for (int i = 0; i < n / 2; ++i) r *= a;
    return r;
  }
  return std::pow(a, p);
}

namespace {

// Below this ratio |half-width / midpoint| the antiderivative difference
// loses digits and the Taylor expansion about the midpoint takes over.
constexpr double series_switch = 1e-3;

double signed_pow(double u, double q) {
  if (u == 0.0) return 0.0;
  return u > 0 ? abs_pow(u, q) : -abs_pow(u, q);
}

}  // namespace

double segment_moment(double alpha, double beta, double t0, double t1, double p) {
  double len = t1 - t0;
  if (!(len > 0.0)) return 0.0;
  double u0 = alpha * t0 + beta;
  double u1 = alpha * t1 + beta;
  double um = 0.5 * (u0 + u1);
  double half = 0.5 * alpha * len;
  if (std::abs(half) <= series_switch * std::abs(um) || half == 0.0) {
    if (um == 0.0) return 0.0;
    double s = half / um;
    double s2 = s * s;
    double c2 = p * (p - 1) / 6.0;
    double c4 = p * (p - 1) * (p - 2) * (p - 3) / 120.0;
    double c6 = c4 * (p - 4) * (p - 5) / 42.0;
    return len * abs_pow(um, p) * (1.0 + s2 * (c2 + s2 * (c4 + s2 * c6)));
  }
  double q = p + 1.0;
  return (signed_pow(u1, q) - signed_pow(u0, q)) / (q * alpha);
}

double segment_moment_slope(double alpha, double beta, double t0, double t1, double p) {
  double len = t1 - t0;
  if (!(len > 0.0)) return 0.0;
  double u0 = alpha * t0 + beta;
  double u1 = alpha * t1 + beta;
  double um = 0.5 * (u0 + u1);
  double half = 0.5 * alpha * len;
  if (std::abs(half) <= series_switch * std::abs(um) || half == 0.0) {
    if (um == 0.0) return 0.0;
    double s = half / um;
    double s2 = s * s;
    double q = p - 1.0;
    double c2 = q * (q - 1) / 6.0;
    double c4 = q * (q - 1) * (q - 2) * (q - 3) / 120.0;
    double c6 = c4 * (q - 4) * (q - 5) / 42.0;
    double base = um > 0 ? abs_pow(um, q) : -abs_pow(um, q);
    return len * base * (1.0 + s2 * (c2 + s2 * (c4 + s2 * c6)));
  }
  return (abs_pow(u1, p) - abs_pow(u0, p)) / (p * alpha);
}

}  // namespace betacantor
