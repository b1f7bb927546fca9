#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tvvar/error.hpp"

namespace tvvar {

/// Kernels supported on [-1,1] of the form K(u) = c0 + c2*u^2. The uniform
/// kernel exists so local fits can be compared against global least squares.
enum class KernelFamily { Epanechnikov, Uniform };

inline std::string to_string(KernelFamily f) {
  return f == KernelFamily::Epanechnikov ? "epanechnikov" : "uniform";
}

struct KernelSpec {
  KernelFamily family = KernelFamily::Epanechnikov;
  double h = 0.1;

  void validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("bandwidth must be positive and finite");
  }
};

/// Coefficients (c0, c2) of K(u) = c0 + c2*u^2 on |u| <= 1.
inline std::array<double, 2> kernel_polynomial(KernelFamily family) {
  switch (family) {
  case KernelFamily::Epanechnikov: return {0.75, -0.75};
  case KernelFamily::Uniform: return {0.5, 0.0};
  }
  return {0.0, 0.0};
}

inline double kernel_eval(double u, KernelFamily family = KernelFamily::Epanechnikov) {
  if (std::abs(u) > 1.0) return 0.0;
  const auto [c0, c2] = kernel_polynomial(family);
  return c0 + c2 * u * u;
}

/// K_h(v) = K(v/h)/h.
inline double kernel_scaled(double v, const KernelSpec& spec) {
  return kernel_eval(v / spec.h, spec.family) / spec.h;
}

struct KernelMoments {
  std::array<double, 5> c_tilde{}; ///< int u^k K(u) du, k = 0..4
  std::array<double, 3> v_tilde{}; ///< int u^k K(u)^2 du, k = 0..2
};

inline KernelMoments kernel_moments(const KernelSpec& spec) {
  const auto [c0, c2] = kernel_polynomial(spec.family);
  KernelMoments m;
  for (int k = 0; k < 5; ++k) {
    m.c_tilde[static_cast<std::size_t>(k)] = (k % 2) ? 0.0 : 2.0 * (c0 / (k + 1) + c2 / (k + 3));
  }
  for (int k = 0; k < 3; ++k) {
    m.v_tilde[static_cast<std::size_t>(k)] =
        (k % 2) ? 0.0 : 2.0 * (c0 * c0 / (k + 1) + 2.0 * c0 * c2 / (k + 3) + c2 * c2 / (k + 5));
  }
  return m;
}

/// Normalized weights K((t/T - tau)/h) over t = 1..T (index t-1 in the result).
inline std::vector<double> local_weights(int T, double tau, const KernelSpec& spec) {
  if (T < 2) throw ConfigError("local_weights: need T >= 2");
  spec.validate();
  std::vector<double> w(static_cast<std::size_t>(T), 0.0);
  double sum = 0.0;
  for (int t = 1; t <= T; ++t) {
    const double k = kernel_eval((static_cast<double>(t) / T - tau) / spec.h, spec.family);
    w[static_cast<std::size_t>(t - 1)] = k;
    sum += k;
  }
  if (!(sum > 0.0)) throw BandwidthTooSmall(tau, spec.h);
  for (double& x : w) x /= sum;
  return w;
}

} // namespace tvvar
