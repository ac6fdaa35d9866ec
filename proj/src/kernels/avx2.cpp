#include "chainid/kernels/kernels.hpp"

#if defined(CHAINID_HAVE_AVX2)
#include <immintrin.h>

namespace chainid::kernels {

namespace {

void central_diff4(const double* x, double* y, std::size_t n, double dt) {
  if (n < 5) return;
  const __m256d den = _mm256_set1_pd(12.0 * dt);
  const __m256d eight = _mm256_set1_pd(8.0);
  std::size_t i = 2;
  for (; i + 4 + 2 <= n; i += 4) {
    const __m256d xm2 = _mm256_loadu_pd(x + i - 2);
    const __m256d xm1 = _mm256_loadu_pd(x + i - 1);
    const __m256d xp1 = _mm256_loadu_pd(x + i + 1);
    const __m256d xp2 = _mm256_loadu_pd(x + i + 2);
    const __m256d outer = _mm256_sub_pd(xm2, xp2);
    const __m256d inner = _mm256_mul_pd(eight, _mm256_sub_pd(xp1, xm1));
    _mm256_storeu_pd(y + i, _mm256_div_pd(_mm256_add_pd(outer, inner), den));
  }
  const double d = 12.0 * dt;
  for (; i + 2 < n; ++i) y[i] = ((x[i - 2] - x[i + 2]) + 8.0 * (x[i + 1] - x[i - 1])) / d;
}

void biquad_cascade4(const Biquad* sec, int n_sec, double* state, double* data, std::size_t n) {
  for (int s = 0; s < n_sec; ++s) {
    const Biquad& q = sec[s];
    const __m256d b0 = _mm256_set1_pd(q.b0), b1 = _mm256_set1_pd(q.b1), b2 = _mm256_set1_pd(q.b2);
    const __m256d a1 = _mm256_set1_pd(q.a1), a2 = _mm256_set1_pd(q.a2);
    double* pz1 = state + (s * 2) * kLanes;
    double* pz2 = state + (s * 2 + 1) * kLanes;
    __m256d z1 = _mm256_loadu_pd(pz1);
    __m256d z2 = _mm256_loadu_pd(pz2);
    for (std::size_t t = 0; t < n; ++t) {
      double* v = data + t * kLanes;
      const __m256d x = _mm256_loadu_pd(v);
      const __m256d yv = _mm256_add_pd(_mm256_mul_pd(b0, x), z1);
      z1 = _mm256_add_pd(_mm256_sub_pd(_mm256_mul_pd(b1, x), _mm256_mul_pd(a1, yv)), z2);
      z2 = _mm256_sub_pd(_mm256_mul_pd(b2, x), _mm256_mul_pd(a2, yv));
      _mm256_storeu_pd(v, yv);
    }
    _mm256_storeu_pd(pz1, z1);
    _mm256_storeu_pd(pz2, z2);
  }
}

double hsum(__m256d v) {
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, v);
  return (tmp[0] + tmp[1]) + (tmp[2] + tmp[3]);
}

double sum_squares(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Table& avx2_table() {
  static const Table t{central_diff4, biquad_cascade4, sum_squares, sum_sq_diff};
  return t;
}

}  // namespace chainid::kernels

#else

namespace chainid::kernels {
const Table& avx2_table() { return scalar_table(); }
}  // namespace chainid::kernels

#endif
