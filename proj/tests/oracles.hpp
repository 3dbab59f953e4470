// Copyright 2026 The phasebench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reference implementations used only by tests. They deliberately avoid the library's fast paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace phasebench::oracle {

using cplx = std::complex<double>;
using CMatrix = std::vector<std::vector<cplx>>;

inline CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  const std::size_t n = a.size();
  CMatrix c(n, std::vector<cplx>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

/// Explicit product F . diag(1, e^{i psi_1}, ...) . F.
inline CMatrix fourier_circuit(const std::vector<double>& psi) {
  const std::size_t d = psi.size() + 1;
  CMatrix f(d, std::vector<cplx>(d)), diag(d, std::vector<cplx>(d));
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k)
      f[j][k] = std::exp(cplx(0.0, 2.0 * std::numbers::pi * double(j * k) / double(d))) / std::sqrt(double(d));
  diag[0][0] = 1.0;
  for (std::size_t k = 1; k < d; ++k) diag[k][k] = std::exp(cplx(0.0, psi[k - 1]));
  return matmul(matmul(f, diag), f);
}

/// Permanent by brute-force sum over permutations (small matrices only).
inline cplx permanent(const CMatrix& a) {
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  cplx total = 0.0;
  do {
    cplx prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) prod *= a[i][perm[i]];
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

/// Probabilities of every unordered output pair (c <= e, lexicographic), photons entering modes 0 and 1:
/// |perm(U[rows={c,e}, cols={0,1}])|^2 / prod(occupation!).
inline std::vector<double> two_photon_probabilities(const std::vector<double>& psi) {
  const CMatrix u = fourier_circuit(psi);
  const std::size_t d = u.size();
  std::vector<double> out;
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t e = c; e < d; ++e) {
      const CMatrix sub = {{u[c][0], u[c][1]}, {u[e][0], u[e][1]}};
      const double occupation_factorials = c == e ? 2.0 : 1.0;
      out.push_back(std::norm(permanent(sub)) / occupation_factorials);
    }
  }
  return out;
}

/// Fisher matrix from a probability function, central differences at two steps combined by Richardson.
template <typename ProbFn>
std::vector<std::vector<double>> richardson_fisher(ProbFn probs, const std::vector<double>& psi, double h) {
  const std::size_t p = psi.size();
  const std::vector<double> center = probs(psi);
  const std::size_t outcomes = center.size();
  auto derivative = [&](std::size_t j, double step) {
    std::vector<double> up = psi, down = psi;
    up[j] += step;
    down[j] -= step;
    const auto pu = probs(up), pd = probs(down);
    std::vector<double> d(outcomes);
    for (std::size_t m = 0; m < outcomes; ++m) d[m] = (pu[m] - pd[m]) / (2.0 * step);
    return d;
  };
  std::vector<std::vector<double>> grad(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto coarse = derivative(j, h), fine = derivative(j, h / 2.0);
    grad[j].resize(outcomes);
    for (std::size_t m = 0; m < outcomes; ++m) grad[j][m] = (4.0 * fine[m] - coarse[m]) / 3.0;
  }
  std::vector<std::vector<double>> fisher(p, std::vector<double>(p, 0.0));
  for (std::size_t m = 0; m < outcomes; ++m) {
    if (center[m] < 1e-12) continue;
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < p; ++k) fisher[j][k] += grad[j][m] * grad[k][m] / center[m];
  }
  return fisher;
}

/// Single-qubit posterior on a dense uniform grid, updated by Bayes' rule.
class DenseGridPosterior {
 public:
  explicit DenseGridPosterior(std::size_t bins) : x_(bins), w_(bins, 1.0 / double(bins)) {
    for (std::size_t i = 0; i < bins; ++i) x_[i] = 2.0 * std::numbers::pi * (double(i) + 0.5) / double(bins);
  }

  void update(int outcome, double theta) {
    double total = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double c = std::cos(0.5 * (x_[i] + theta));
      w_[i] *= outcome == 0 ? c * c : 1.0 - c * c;
      total += w_[i];
    }
    for (double& v : w_) v /= total;
  }

  double circular_mean() const {
    double c = 0.0, s = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      c += w_[i] * std::cos(x_[i]);
      s += w_[i] * std::sin(x_[i]);
    }
    const double a = std::atan2(s, c);
    return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
  }

  double variance_about(double center) const {
    double v = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      double d = std::fmod(x_[i] - center + 3.0 * std::numbers::pi, 2.0 * std::numbers::pi) - std::numbers::pi;
      v += w_[i] * d * d;
    }
    return v;
  }

 private:
  std::vector<double> x_, w_;
};

/// Chi-squared CDF with three degrees of freedom in closed form.
inline double chi2_cdf_3(double x) {
  return std::erf(std::sqrt(x / 2.0)) - std::sqrt(2.0 * x / std::numbers::pi) * std::exp(-x / 2.0);
}

/// Chi-squared CDF with one degree of freedom in closed form.
inline double chi2_cdf_1(double x) { return std::erf(std::sqrt(x / 2.0)); }

template <typename Cdf>
double bisect_median(Cdf cdf, double hi) {
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace phasebench::oracle
