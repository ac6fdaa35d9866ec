#include "chainid/kernels/kernels.hpp"

namespace chainid::kernels {

namespace {

void central_diff4(const double* x, double* y, std::size_t n, double dt) {
  const double den = 12.0 * dt;
  for (std::size_t i = 2; i + 2 < n; ++i)
    y[i] = ((x[i - 2] - x[i + 2]) + 8.0 * (x[i + 1] - x[i - 1])) / den;
}

void biquad_cascade4(const Biquad* sec, int n_sec, double* state, double* data, std::size_t n) {
  for (int s = 0; s < n_sec; ++s) {
    const Biquad& q = sec[s];
    double* z1 = state + (s * 2) * kLanes;
    double* z2 = state + (s * 2 + 1) * kLanes;
    for (std::size_t t = 0; t < n; ++t) {
      double* v = data + t * kLanes;
      for (int c = 0; c < kLanes; ++c) {
        const double x = v[c];
        const double y = q.b0 * x + z1[c];
        z1[c] = (q.b1 * x - q.a1 * y) + z2[c];
        z2[c] = q.b2 * x - q.a2 * y;
        v[c] = y;
      }
    }
  }
}

double sum_squares(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Table& scalar_table() {
  static const Table t{central_diff4, biquad_cascade4, sum_squares, sum_sq_diff};
  return t;
}

}  // namespace chainid::kernels
