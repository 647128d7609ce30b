// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel arithmetic kernels used by the allocator and channel code.
//
// Every kernel exists in a scalar reference version (namespace scalar) and,
// on x86-64 hosts with AVX2+FMA, a vectorized version (namespace avx2).
// The top-level functions dispatch at runtime; the backend can be pinned
// through force_backend() or the ISAC_KERNELS environment variable
// ("scalar" / "avx2"). Scalar and SIMD variants are equivalence-tested.

#pragma once

#include <complex>
#include <cstddef>

namespace isac::kernels {

enum class Backend { scalar, avx2 };

// True when the running CPU can execute the avx2 kernels.
bool avx2_supported();

// Backend in effect for the dispatched entry points below.
Backend active_backend();

// Pin the backend (Backend::avx2 requires avx2_supported()). Intended for
// tests and benchmarking; the default is the best supported backend.
void force_backend(Backend b);
void reset_backend(); // back to auto-detection

// --- dispatched entry points -------------------------------------------

double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);

// Base-2 logarithm, elementwise. Inputs must be positive normal doubles.
void vlog2(const double* x, double* out, std::size_t n);

// Complex inner products over interleaved std::complex<double> arrays.
// cdot:      sum_i a_i * b_i          (no conjugation)
// cdot_conj: sum_i conj(a_i) * b_i
std::complex<double> cdot(const std::complex<double>* a,
                          const std::complex<double>* b, std::size_t n);
std::complex<double> cdot_conj(const std::complex<double>* a,
                               const std::complex<double>* b, std::size_t n);

// Shannon-rate sum over per-mini-slot RB counts:
//   rate_sum(o, n, bw, s) = sum_i o_i*bw * log2(1 + s/(o_i*bw))
// with s >= 0 and o_i*bw positive.
double rate_sum(const double* o, std::size_t n, double bw, double s);

// rate_sum plus its partial derivatives. For x_i = s/(o_i*bw):
//   grad_o[i]        = bw*(log2(1+x_i) - x_i/((1+x_i) ln 2))
//   *inv_one_plus_x  = sum_i 1/(1+x_i)   (the p-derivative is this / (N0 ln2) scale)
// Returns the rate sum. grad_o may be null.
double rate_sum_grad(const double* o, std::size_t n, double bw, double s,
                     double* grad_o, double* inv_one_plus_x);

// sum_i clamp(x_i - shift, lo_i, hi_i); used by the simplex-box projection.
double sum_shift_clamped(const double* x, const double* lo, const double* hi,
                         std::size_t n, double shift);
// x_i <- clamp(x_i - shift, lo_i, hi_i)
void shift_clamp(double* x, const double* lo, const double* hi,
                 std::size_t n, double shift);

inline double cdot_abs2(const std::complex<double>* a,
                        const std::complex<double>* b, std::size_t n) {
  const std::complex<double> v = cdot(a, b, n);
  return v.real() * v.real() + v.imag() * v.imag();
}

// --- per-backend implementations ----------------------------------------

namespace scalar {
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void vlog2(const double* x, double* out, std::size_t n);
std::complex<double> cdot(const std::complex<double>* a,
                          const std::complex<double>* b, std::size_t n);
std::complex<double> cdot_conj(const std::complex<double>* a,
                               const std::complex<double>* b, std::size_t n);
double rate_sum(const double* o, std::size_t n, double bw, double s);
double rate_sum_grad(const double* o, std::size_t n, double bw, double s,
                     double* grad_o, double* inv_one_plus_x);
double sum_shift_clamped(const double* x, const double* lo, const double* hi,
                         std::size_t n, double shift);
void shift_clamp(double* x, const double* lo, const double* hi,
                 std::size_t n, double shift);
} // namespace scalar

namespace avx2 {
// Callable only when avx2_supported() is true.
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void vlog2(const double* x, double* out, std::size_t n);
std::complex<double> cdot(const std::complex<double>* a,
                          const std::complex<double>* b, std::size_t n);
std::complex<double> cdot_conj(const std::complex<double>* a,
                               const std::complex<double>* b, std::size_t n);
double rate_sum(const double* o, std::size_t n, double bw, double s);
double rate_sum_grad(const double* o, std::size_t n, double bw, double s,
                     double* grad_o, double* inv_one_plus_x);
double sum_shift_clamped(const double* x, const double* lo, const double* hi,
                         std::size_t n, double shift);
void shift_clamp(double* x, const double* lo, const double* hi,
                 std::size_t n, double shift);
} // namespace avx2

} // namespace isac::kernels
