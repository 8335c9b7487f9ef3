#pragma once

namespace betacantor {

// |u|^p, with fast paths for the exponents used in practice.
double abs_pow(double u, double p);

// Integral over [t0, t1] of |alpha t + beta|^p dt, p >= 1, t0 <= t1.
double segment_moment(double alpha, double beta, double t0, double t1, double p);

// Integral over [t0, t1] of sign(u)|u|^(p-1) dt with u = alpha t + beta. This
// is -(1/p) times the derivative of segment_moment in beta.
double segment_moment_slope(double alpha, double beta, double t0, double t1, double p);

}  // namespace betacantor
