// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 and must only be entered after a cpuid check
// (see dispatch.cpp). On other architectures the functions forward to
// the scalar reference so the library still links.

#include "isac/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#define ISAC_KERNELS_X86 1
#include <immintrin.h>
#else
#define ISAC_KERNELS_X86 0
#endif

namespace isac::kernels::avx2 {

#if ISAC_KERNELS_X86

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// log2 for positive normal doubles, Cephes rational approximation.
// Mantissa is reduced to [sqrt(1/2), sqrt(2)); log(1+z) is evaluated as
// z - z^2/2 + z^3 P(z)/Q(z) and converted to base 2 with the split
// constant log2(e) = 1 + LOG2EA to keep the leading term exact.
const __m256d kLogP0 = _mm256_set1_pd(1.01875663804580931796e-4);
const __m256d kLogP1 = _mm256_set1_pd(4.97494994976747001425e-1);
const __m256d kLogP2 = _mm256_set1_pd(4.70579119878881725854e0);
const __m256d kLogP3 = _mm256_set1_pd(1.44989225341610930846e1);
const __m256d kLogP4 = _mm256_set1_pd(1.79368678507819816313e1);
const __m256d kLogP5 = _mm256_set1_pd(7.70838733755885391666e0);
const __m256d kLogQ0 = _mm256_set1_pd(1.12873587189167450590e1);
const __m256d kLogQ1 = _mm256_set1_pd(4.52279145837532221105e1);
const __m256d kLogQ2 = _mm256_set1_pd(8.29875266912776603211e1);
const __m256d kLogQ3 = _mm256_set1_pd(7.11544750618563894466e1);
const __m256d kLogQ4 = _mm256_set1_pd(2.31251620126765340583e1);
const __m256d kSqrtHalf = _mm256_set1_pd(0.70710678118654752440);
const __m256d kLog2EA = _mm256_set1_pd(4.4269504088896340735992e-1);
const __m256d kOne = _mm256_set1_pd(1.0);
const __m256d kHalf = _mm256_set1_pd(0.5);

inline __m256d v_log2(__m256d x) {
  // exponent and mantissa in [0.5, 1)
  const __m256i bits = _mm256_castpd_si256(x);
  __m256i e_i = _mm256_srli_epi64(bits, 52);
  e_i = _mm256_sub_epi64(e_i, _mm256_set1_epi64x(1022));
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll);
  const __m256i half_bits = _mm256_set1_epi64x(0x3FE0000000000000ll);
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, mant_mask), half_bits));

  // int64 exponent -> double (|e| < 2^51)
  const __m256i magic = _mm256_set1_epi64x(0x4338000000000000ll);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_add_epi64(e_i, magic)),
      _mm256_set1_pd(6755399441055744.0));

  // if m < sqrt(1/2): m <- 2m, e <- e-1
  const __m256d lt = _mm256_cmp_pd(m, kSqrtHalf, _CMP_LT_OQ);
  m = _mm256_add_pd(m, _mm256_and_pd(lt, m));
  e = _mm256_sub_pd(e, _mm256_and_pd(lt, kOne));

  const __m256d z = _mm256_sub_pd(m, kOne);
  const __m256d z2 = _mm256_mul_pd(z, z);

  __m256d p = kLogP0;
  p = _mm256_fmadd_pd(p, z, kLogP1);
  p = _mm256_fmadd_pd(p, z, kLogP2);
  p = _mm256_fmadd_pd(p, z, kLogP3);
  p = _mm256_fmadd_pd(p, z, kLogP4);
  p = _mm256_fmadd_pd(p, z, kLogP5);
  __m256d q = _mm256_add_pd(z, kLogQ0);
  q = _mm256_fmadd_pd(q, z, kLogQ1);
  q = _mm256_fmadd_pd(q, z, kLogQ2);
  q = _mm256_fmadd_pd(q, z, kLogQ3);
  q = _mm256_fmadd_pd(q, z, kLogQ4);

  __m256d y = _mm256_mul_pd(_mm256_mul_pd(z, z2), _mm256_div_pd(p, q));
  y = _mm256_fnmadd_pd(kHalf, z2, y); // y - z^2/2

  // result = e + z + y + (z+y)*LOG2EA, large term added last
  __m256d r = _mm256_mul_pd(_mm256_add_pd(z, y), kLog2EA);
  r = _mm256_add_pd(r, y);
  r = _mm256_add_pd(r, z);
  r = _mm256_add_pd(r, e);
  return r;
}

} // namespace

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double total = hsum(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

void vlog2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, v_log2(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::log2(x[i]);
}

namespace {

// One 256-bit lane holds two complex doubles (re0, im0, re1, im1).
// Accumulates a*b into (re, im) pairs; conj negates the cross term.
template <bool ConjA>
inline std::complex<double> cdot_impl(const std::complex<double>* a,
                                      const std::complex<double>* b,
                                      std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
    const __m256d re_a = _mm256_movedup_pd(va);          // (ar, ar)
    const __m256d im_a = _mm256_permute_pd(va, 0xF);     // (ai, ai)
    const __m256d vb_sw = _mm256_permute_pd(vb, 0x5);    // (bi, br)
    const __m256d t1 = _mm256_mul_pd(re_a, vb);          // (ar*br, ar*bi)
    __m256d t2 = _mm256_mul_pd(im_a, vb_sw);             // (ai*bi, ai*br)
    if constexpr (ConjA) t2 = _mm256_sub_pd(_mm256_setzero_pd(), t2);
    // addsub: (t1.re - t2.re, t1.im + t2.im)
    acc = _mm256_add_pd(acc, _mm256_addsub_pd(t1, t2));
  }
  __m128d lo = _mm256_castpd256_pd128(acc);
  __m128d hi = _mm256_extractf128_pd(acc, 1);
  lo = _mm_add_pd(lo, hi);
  double re = _mm_cvtsd_f64(lo);
  double im = _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  for (; i < n; ++i) {
    if constexpr (ConjA) {
      re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
      im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    } else {
      re += a[i].real() * b[i].real() - a[i].imag() * b[i].imag();
      im += a[i].real() * b[i].imag() + a[i].imag() * b[i].real();
    }
  }
  return {re, im};
}

} // namespace

std::complex<double> cdot(const std::complex<double>* a,
                          const std::complex<double>* b, std::size_t n) {
  return cdot_impl<false>(a, b, n);
}

std::complex<double> cdot_conj(const std::complex<double>* a,
                               const std::complex<double>* b, std::size_t n) {
  return cdot_impl<true>(a, b, n);
}

double rate_sum(const double* o, std::size_t n, double bw, double s) {
  const __m256d vbw = _mm256_set1_pd(bw);
  const __m256d vs = _mm256_set1_pd(s);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d w = _mm256_mul_pd(_mm256_loadu_pd(o + i), vbw);
    const __m256d arg = _mm256_add_pd(kOne, _mm256_div_pd(vs, w));
    acc = _mm256_fmadd_pd(w, v_log2(arg), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    const double w = o[i] * bw;
    total += w * std::log2(1.0 + s / w);
  }
  return total;
}

double rate_sum_grad(const double* o, std::size_t n, double bw, double s,
                     double* grad_o, double* inv_one_plus_x) {
  constexpr double kInvLn2 = 1.4426950408889634074;
  const __m256d vbw = _mm256_set1_pd(bw);
  const __m256d vs = _mm256_set1_pd(s);
  const __m256d vinvln2 = _mm256_set1_pd(kInvLn2);
  __m256d acc = _mm256_setzero_pd();
  __m256d dacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d w = _mm256_mul_pd(_mm256_loadu_pd(o + i), vbw);
    const __m256d x = _mm256_div_pd(vs, w);
    const __m256d one_px = _mm256_add_pd(kOne, x);
    const __m256d l = v_log2(one_px);
    const __m256d r = _mm256_div_pd(x, one_px);
    acc = _mm256_fmadd_pd(w, l, acc);
    dacc = _mm256_add_pd(dacc, _mm256_div_pd(kOne, one_px));
    if (grad_o) {
      const __m256d g = _mm256_mul_pd(vbw, _mm256_fnmadd_pd(r, vinvln2, l));
      _mm256_storeu_pd(grad_o + i, g);
    }
  }
  double total = hsum(acc), dinv = hsum(dacc);
  for (; i < n; ++i) {
    const double w = o[i] * bw;
    const double x = s / w;
    const double l = std::log2(1.0 + x);
    total += w * l;
    dinv += 1.0 / (1.0 + x);
    if (grad_o) grad_o[i] = bw * (l - (x / (1.0 + x)) * kInvLn2);
  }
  if (inv_one_plus_x) *inv_one_plus_x = dinv;
  return total;
}

double sum_shift_clamped(const double* x, const double* lo, const double* hi,
                         std::size_t n, double shift) {
  const __m256d vshift = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x + i), vshift);
    v = _mm256_max_pd(v, _mm256_loadu_pd(lo + i));
    v = _mm256_min_pd(v, _mm256_loadu_pd(hi + i));
    acc = _mm256_add_pd(acc, v);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    const double v = x[i] - shift;
    total += v < lo[i] ? lo[i] : (v > hi[i] ? hi[i] : v);
  }
  return total;
}

void shift_clamp(double* x, const double* lo, const double* hi, std::size_t n,
                 double shift) {
  const __m256d vshift = _mm256_set1_pd(shift);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x + i), vshift);
    v = _mm256_max_pd(v, _mm256_loadu_pd(lo + i));
    v = _mm256_min_pd(v, _mm256_loadu_pd(hi + i));
    _mm256_storeu_pd(x + i, v);
  }
  for (; i < n; ++i) {
    const double v = x[i] - shift;
    x[i] = v < lo[i] ? lo[i] : (v > hi[i] ? hi[i] : v);
  }
}

#else // !ISAC_KERNELS_X86 — forward to the reference kernels

double sum(const double* x, std::size_t n) { return scalar::sum(x, n); }
double dot(const double* x, const double* y, std::size_t n) {
  return scalar::dot(x, y, n);
}
void vlog2(const double* x, double* out, std::size_t n) {
  scalar::vlog2(x, out, n);
}
std::complex<double> cdot(const std::complex<double>* a,
                          const std::complex<double>* b, std::size_t n) {
  return scalar::cdot(a, b, n);
}
std::complex<double> cdot_conj(const std::complex<double>* a,
                               const std::complex<double>* b, std::size_t n) {
  return scalar::cdot_conj(a, b, n);
}
double rate_sum(const double* o, std::size_t n, double bw, double s) {
  return scalar::rate_sum(o, n, bw, s);
}
double rate_sum_grad(const double* o, std::size_t n, double bw, double s,
                     double* grad_o, double* inv_one_plus_x) {
  return scalar::rate_sum_grad(o, n, bw, s, grad_o, inv_one_plus_x);
}
double sum_shift_clamped(const double* x, const double* lo, const double* hi,
                         std::size_t n, double shift) {
  return scalar::sum_shift_clamped(x, lo, hi, n, shift);
}
void shift_clamp(double* x, const double* lo, const double* hi, std::size_t n,
                 double shift) {
  scalar::shift_clamp(x, lo, hi, n, shift);
}

#endif

} // namespace isac::kernels::avx2
