#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tvvar/algebra.hpp"
#include "tvvar/error.hpp"
#include "tvvar/irf.hpp"
#include "tvvar/rng.hpp"
#include "tvvar/series.hpp"

namespace tvvar {

/// Coefficients of a VAR(p) at one point in rescaled time.
struct VarCoefficients {
  Vec a;                 ///< intercept, length d
  std::vector<Mat> lags; ///< A_1..A_p
  Mat omega;             ///< lower-triangular innovation loading

  int d() const { return static_cast<int>(a.size()); }
  int p() const { return static_cast<int>(lags.size()); }

  /// d x (1+dp) stacking [a, A_1, ..., A_p].
  Mat stacked() const {
    Mat m(d(), 1 + d() * p());
    m.col(0) = a;
    for (int j = 0; j < p(); ++j) m.block(0, 1 + j * d(), d(), d()) = lags[static_cast<std::size_t>(j)];
    return m;
  }
  Mat Omega() const { return omega * omega.transpose(); }
};

/// What to do when the companion matrix leaves the unit circle somewhere on
/// the validation grid.
enum class StabilityPolicy { Reject, Flag };

/// tau -> VarCoefficients, checked for stability and triangular loading on a
/// 1000-point grid at construction.
class CoefficientPath {
public:
  CoefficientPath(std::string name, int d, int p, std::function<VarCoefficients(double)> fn,
                  StabilityPolicy policy = StabilityPolicy::Reject)
      : name_(std::move(name)), d_(d), p_(p), fn_(std::move(fn)) {
    validate(policy);
  }

  const std::string& name() const { return name_; }
  int d() const { return d_; }
  int p() const { return p_; }
  /// Largest companion spectral radius seen on the validation grid.
  double max_radius() const { return max_radius_; }
  /// True when the path was accepted under StabilityPolicy::Flag despite max_radius() >= 1.
  bool locally_explosive() const { return !(max_radius_ < 1.0); }

  /// Coefficients at tau; tau < 0 is frozen at tau = 0.
  VarCoefficients operator()(double tau) const { return fn_(std::max(0.0, tau)); }

private:
  void validate(StabilityPolicy policy) {
    for (int i = 0; i < 1000; ++i) {
      const double tau = i / 999.0;
      const VarCoefficients c = fn_(tau);
      if (c.d() != d_ || c.p() != p_ || c.omega.rows() != d_ || c.omega.cols() != d_) {
        throw ConfigError("coefficient path '" + name_ + "' has inconsistent dimensions at tau=" + std::to_string(tau));
      }
      const double rho = spectral_radius(build_companion(c.lags).mat);
      max_radius_ = std::max(max_radius_, rho);
      if (!(rho < 1.0) && policy == StabilityPolicy::Reject) throw NonStationary(tau, rho);
      for (int r = 0; r < d_; ++r) {
        if (c.omega(r, r) < 0.0) throw ConfigError("omega must have a non-negative diagonal");
        for (int col = r + 1; col < d_; ++col) {
          if (c.omega(r, col) != 0.0) throw ConfigError("omega must be lower triangular");
        }
      }
    }
  }

  std::string name_;
  int d_;
  int p_;
  std::function<VarCoefficients(double)> fn_;
  double max_radius_ = 0.0;
};

/// The bivariate VAR(2) design with smoothly varying intercept, lag matrices
/// and Cholesky loading used for the simulation tables. As printed, its
/// companion radius exceeds one for tau above roughly 0.947 (peaking near
/// 1.105 at tau = 1), so it is accepted with StabilityPolicy::Flag.
inline CoefficientPath appendix_b1_path() {
  using std::numbers::pi;
  return CoefficientPath("appendix-b1", 2, 2, [](double tau) {
    VarCoefficients c;
    c.a = Vec(2);
    c.a << 0.5 * std::sin(2 * pi * tau), 0.5 * std::cos(2 * pi * tau);
    const double e = std::exp(-0.5 + tau);
    const double q = tau - 0.5;
    Mat a1(2, 2), a2(2, 2), om(2, 2);
    a1 << 0.8 * e, 0.8 * q * q * q, 0.8 * q * q * q, 0.8 + 0.3 * std::sin(pi * tau);
    a2 << -0.2 * e, 0.8 * q * q, 0.8 * q * q, -0.4 + 0.3 * std::cos(pi * tau);
    const double w11 = 1.5 + 0.2 * std::exp(0.5 - tau);
    const double w22 = 1.5 + 0.5 * q * q;
    om << w11, 0.0, 0.2 * w22 * w11, w22;
    c.lags = {a1, a2};
    c.omega = om;
    return c;
  }, StabilityPolicy::Flag);
}

inline CoefficientPath constant_path(VarCoefficients c, std::string name = "constant") {
  const int d = c.d(), p = c.p();
  return CoefficientPath(std::move(name), d, p, [c](double) { return c; });
}

/// Piecewise-linear interpolation between coefficient sets on an increasing grid.
inline CoefficientPath tabulated_path(std::vector<double> grid, std::vector<VarCoefficients> values,
                                      std::string name = "tabulated") {
  if (grid.size() != values.size() || grid.empty()) throw ConfigError("tabulated path: grid/value size mismatch");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("tabulated path: grid must be strictly increasing");
  }
  const int d = values.front().d(), p = values.front().p();
  return CoefficientPath(std::move(name), d, p, [grid, values](double tau) {
    if (tau <= grid.front()) return values.front();
    if (tau >= grid.back()) return values.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), tau) - grid.begin());
    const std::size_t lo = hi - 1;
    const double w = (tau - grid[lo]) / (grid[hi] - grid[lo]);
    VarCoefficients c;
    c.a = (1 - w) * values[lo].a + w * values[hi].a;
    for (std::size_t j = 0; j < values[lo].lags.size(); ++j) {
      c.lags.push_back((1 - w) * values[lo].lags[j] + w * values[hi].lags[j]);
    }
    c.omega = (1 - w) * values[lo].omega + w * values[hi].omega;
    return c;
  });
}

/// Unit-variance innovation laws.
enum class InnovationLaw { Normal, StudentT5, Uniform };

inline double draw_innovation(std::mt19937_64& rng, InnovationLaw law) {
  switch (law) {
  case InnovationLaw::Normal: return std::normal_distribution<double>()(rng);
  case InnovationLaw::StudentT5: return std::student_t_distribution<double>(5.0)(rng) * std::sqrt(3.0 / 5.0);
  case InnovationLaw::Uniform: return std::uniform_real_distribution<double>(-std::sqrt(3.0), std::sqrt(3.0))(rng);
  }
  return 0.0;
}

struct SimulateOptions {
  int burn_in = 200;
  InnovationLaw law = InnovationLaw::Normal;
  Vec initial; ///< stacked (x_0, x_{-1}, ..., x_{-p+1}) before burn-in; empty = zeros
};

/// x_1..x_T from x_t = a(tau_t) + sum_j A_j(tau_t) x_{t-j} + omega(tau_t) eps_t.
/// The burn-in runs with the coefficients frozen at tau = 0. `stream`
/// selects an independent random stream under the same seed.
inline SeriesMatrix simulate_tvvar(const CoefficientPath& path, int T, std::uint64_t seed,
                                   const SimulateOptions& opt = {}, std::uint64_t stream = 0) {
  if (T < 1) throw ConfigError("simulate: T must be positive");
  if (opt.burn_in < 100) throw ConfigError("simulate: burn-in must be at least 100");
  const int d = path.d(), p = path.p();
  auto rng = stream_engine(seed, stream);
  std::vector<Vec> hist(static_cast<std::size_t>(p), Vec::Zero(d)); // hist[0] = x_{t-1}
  if (opt.initial.size() > 0) {
    if (opt.initial.size() != d * p) throw ConfigError("simulate: initial state must have length d*p");
    for (int j = 0; j < p; ++j) hist[static_cast<std::size_t>(j)] = opt.initial.segment(j * d, d);
  }
  Mat out(T, d);
  Vec eps(d);
  const VarCoefficients frozen = path(0.0);
  for (int t = -opt.burn_in + 1; t <= T; ++t) {
    const VarCoefficients c = t <= 0 ? frozen : path(static_cast<double>(t) / T);
    for (int i = 0; i < d; ++i) eps(i) = draw_innovation(rng, opt.law);
    Vec x = c.a + c.omega * eps;
    for (int j = 0; j < p; ++j) x += c.lags[static_cast<std::size_t>(j)] * hist[static_cast<std::size_t>(j)];
    for (int j = p - 1; j > 0; --j) hist[static_cast<std::size_t>(j)] = hist[static_cast<std::size_t>(j - 1)];
    if (p > 0) hist[0] = x;
    if (t >= 1) out.row(t - 1) = x.transpose();
  }
  std::vector<std::string> names;
  for (int i = 0; i < d; ++i) names.push_back("x" + std::to_string(i + 1));
  return SeriesMatrix(std::move(out), std::move(names));
}

/// VMA coefficients B_0..B_L of a stable VAR, with L the smallest length whose
/// tail sum_{j>L} j ||B_j|| falls below `tail_tol` (tail measured up to the
/// point where the terms underflow).
inline std::vector<Mat> truncated_vma(const VarCoefficients& c, double tail_tol = 1e-10, int hard_cap = 20000) {
  const CompanionMatrix phi = build_companion(c.lags);
  if (!(spectral_radius(phi.mat) < 1.0)) throw NonStationary(0.0, spectral_radius(phi.mat));
  std::vector<Mat> b{c.omega};
  std::vector<double> weight{0.0};
  Mat power = Mat::Identity(phi.mat.rows(), phi.mat.cols());
  for (int j = 1; j <= hard_cap; ++j) {
    power = phi.mat * power;
    b.push_back(power.topLeftCorner(c.d(), c.d()) * c.omega);
    weight.push_back(j * b.back().norm());
    if (weight.back() < 1e-30 && j > 10) break;
  }
  double tail = 0.0;
  std::size_t L = b.size() - 1;
  for (std::size_t j = b.size() - 1; j > 0; --j) {
    tail += weight[j];
    if (tail >= tail_tol) break;
    L = j - 1;
  }
  b.resize(L + 1);
  return b;
}

/// Maximum absolute gap between the direct moving-average evaluation
/// sum_j B_j eps_{t-j} and its Beveridge-Nelson form
/// B(1) eps_t + Bt(L) eps_{t-1} - Bt(L) eps_t with Bt_j = sum_{k>j} B_k.
/// `eps` holds one innovation per row; t runs over rows with full history.
inline double bn_check(const std::vector<Mat>& b, const Mat& eps) {
  if (b.empty()) throw std::invalid_argument("bn_check: need at least B_0");
  const auto L = static_cast<int>(b.size()) - 1;
  const auto d = b.front().rows();
  if (eps.cols() != b.front().cols()) throw std::invalid_argument("bn_check: innovation dimension mismatch");
  Mat long_run = Mat::Zero(d, eps.cols());
  for (const Mat& m : b) long_run += m;
  std::vector<Mat> tilde(static_cast<std::size_t>(std::max(L, 0)));
  Mat acc = Mat::Zero(d, eps.cols());
  for (int j = L - 1; j >= 0; --j) {
    acc += b[static_cast<std::size_t>(j + 1)];
    tilde[static_cast<std::size_t>(j)] = acc;
  }
  double worst = 0.0;
  for (Eigen::Index t = L; t < eps.rows(); ++t) {
    Vec direct = Vec::Zero(d);
    for (int j = 0; j <= L; ++j) direct += b[static_cast<std::size_t>(j)] * eps.row(t - j).transpose();
    Vec bn = long_run * eps.row(t).transpose();
    for (int j = 0; j < L; ++j) {
      const Mat& bt = tilde[static_cast<std::size_t>(j)];
      if (t - 1 - j >= 0) bn += bt * eps.row(t - 1 - j).transpose();
      bn -= bt * eps.row(t - j).transpose();
    }
    worst = std::max(worst, (direct - bn).cwiseAbs().maxCoeff());
  }
  return worst;
}

} // namespace tvvar
