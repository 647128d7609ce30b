// SPDX-License-Identifier: Apache-2.0

#include "isac/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace isac::kernels {

namespace {

bool detect_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_backend() {
  if (const char* env = std::getenv("ISAC_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2") {
      if (!detect_avx2())
        throw std::runtime_error("ISAC_KERNELS=avx2 but CPU lacks AVX2/FMA");
      return Backend::avx2;
    }
  }
  return detect_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = detect_backend();

} // namespace

bool avx2_supported() { return detect_avx2(); }

Backend active_backend() { return g_backend; }

void force_backend(Backend b) {
  if (b == Backend::avx2 && !detect_avx2())
    throw std::runtime_error("cannot force avx2 backend: unsupported CPU");
  g_backend = b;
}

void reset_backend() { g_backend = detect_backend(); }

double sum(const double* x, std::size_t n) {
  return g_backend == Backend::avx2 ? avx2::sum(x, n) : scalar::sum(x, n);
}

double dot(const double* x, const double* y, std::size_t n) {
  return g_backend == Backend::avx2 ? avx2::dot(x, y, n)
                                    : scalar::dot(x, y, n);
}

void vlog2(const double* x, double* out, std::size_t n) {
  if (g_backend == Backend::avx2)
    avx2::vlog2(x, out, n);
  else
    scalar::vlog2(x, out, n);
}

std::complex<double> cdot(const std::complex<double>* a,
                          const std::complex<double>* b, std::size_t n) {
  return g_backend == Backend::avx2 ? avx2::cdot(a, b, n)
                                    : scalar::cdot(a, b, n);
}

std::complex<double> cdot_conj(const std::complex<double>* a,
                               const std::complex<double>* b, std::size_t n) {
  return g_backend == Backend::avx2 ? avx2::cdot_conj(a, b, n)
                                    : scalar::cdot_conj(a, b, n);
}

double rate_sum(const double* o, std::size_t n, double bw, double s) {
  return g_backend == Backend::avx2 ? avx2::rate_sum(o, n, bw, s)
                                    : scalar::rate_sum(o, n, bw, s);
}

double rate_sum_grad(const double* o, std::size_t n, double bw, double s,
                     double* grad_o, double* inv_one_plus_x) {
  return g_backend == Backend::avx2
             ? avx2::rate_sum_grad(o, n, bw, s, grad_o, inv_one_plus_x)
             : scalar::rate_sum_grad(o, n, bw, s, grad_o, inv_one_plus_x);
}

double sum_shift_clamped(const double* x, const double* lo, const double* hi,
                         std::size_t n, double shift) {
  return g_backend == Backend::avx2
             ? avx2::sum_shift_clamped(x, lo, hi, n, shift)
             : scalar::sum_shift_clamped(x, lo, hi, n, shift);
}

void shift_clamp(double* x, const double* lo, const double* hi, std::size_t n,
                 double shift) {
  if (g_backend == Backend::avx2)
    avx2::shift_clamp(x, lo, hi, n, shift);
  else
    scalar::shift_clamp(x, lo, hi, n, shift);
}

} // namespace isac::kernels
