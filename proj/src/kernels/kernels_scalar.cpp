// SPDX-License-Identifier: Apache-2.0

#include "isac/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace isac::kernels::scalar {

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void vlog2(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log2(x[i]);
}

std::complex<double> cdot(const std::complex<double>* a,
                          const std::complex<double>* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() - a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() + a[i].imag() * b[i].real();
  }
  return {re, im};
}

std::complex<double> cdot_conj(const std::complex<double>* a,
                               const std::complex<double>* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

double rate_sum(const double* o, std::size_t n, double bw, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = o[i] * bw;
    acc += w * std::log2(1.0 + s / w);
  }
  return acc;
}

double rate_sum_grad(const double* o, std::size_t n, double bw, double s,
                     double* grad_o, double* inv_one_plus_x) {
  constexpr double kInvLn2 = 1.4426950408889634074; // log2(e)
  double acc = 0.0, dinv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = o[i] * bw;
    const double x = s / w;
    const double l = std::log2(1.0 + x);
    const double r = x / (1.0 + x);
    acc += w * l;
    dinv += 1.0 / (1.0 + x);
    if (grad_o) grad_o[i] = bw * (l - r * kInvLn2);
  }
  if (inv_one_plus_x) *inv_one_plus_x = dinv;
  return acc;
}

double sum_shift_clamped(const double* x, const double* lo, const double* hi,
                         std::size_t n, double shift) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += std::clamp(x[i] - shift, lo[i], hi[i]);
  return acc;
}

void shift_clamp(double* x, const double* lo, const double* hi,
                 std::size_t n, double shift) {
  for (std::size_t i = 0; i < n; ++i)
    x[i] = std::clamp(x[i] - shift, lo[i], hi[i]);
}

} // namespace isac::kernels::scalar
