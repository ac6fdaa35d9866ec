#pragma once

#include <cstddef>

// Hot loops of the signal pipeline and the metric reductions. Each kernel has
// a scalar reference and an AVX2 variant; the dispatcher selects one at
// runtime. Element-wise kernels return bitwise-identical results on both paths.
namespace chainid::kernels {

enum class Isa { Scalar, Avx2 };

/// Selected once: AVX2 when the CPU supports it unless CHAINID_SIMD=scalar.
Isa active_isa();
const char* isa_name(Isa isa);
bool avx2_available();

/// Transposed direct form II second-order section.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

inline constexpr int kLanes = 4;

/// Interior of the 4th-order central difference:
/// y[i] = ((x[i-2] - x[i+2]) + 8 (x[i+1] - x[i-1])) / (12 dt) for 2 <= i < n-2.
using CentralDiffFn = void (*)(const double* x, double* y, std::size_t n, double dt);

/// Cascade of `n_sec` biquads over `n` frames of 4 interleaved channels
/// (data[t * 4 + c]), in place. `state` holds z1, z2 per section and lane:
/// state[(s * 2 + k) * 4 + c].
using BiquadCascadeFn = void (*)(const Biquad* sec, int n_sec, double* state, double* data, std::size_t n);

using SumSquaresFn = double (*)(const double* x, std::size_t n);
using SumSqDiffFn = double (*)(const double* a, const double* b, std::size_t n);

struct Table {
  CentralDiffFn central_diff4;
  BiquadCascadeFn biquad_cascade4;
  SumSquaresFn sum_squares;
  SumSqDiffFn sum_sq_diff;
};

const Table& scalar_table();
/// Falls back to the scalar table when AVX2 is not compiled in.
const Table& avx2_table();
const Table& active();

}  // namespace chainid::kernels
