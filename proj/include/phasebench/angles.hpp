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

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <vector>

#include "phasebench/errors.hpp"

namespace phasebench {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into [0, 2pi).
inline double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number can round up to exactly 2pi
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Signed difference a - b mapped into (-pi, pi].
inline double wrapped_difference(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -std::numbers::pi) d += kTwoPi;
  return d;
}

/// Shortest arc length between two angles, in [0, pi].
inline double wrapped_distance(double a, double b) {
  return std::abs(wrapped_difference(a, b));
}

/// A fixed-length vector of angles, every component kept in [0, 2pi).
///
/// The tag parameter separates unknown phases from experimenter controls at the type level.
template <typename Tag>
class AngleVector {
 public:
  AngleVector() = default;
  explicit AngleVector(std::size_t p) : values_(p, 0.0) {}
  AngleVector(std::initializer_list<double> values) : AngleVector(std::span<const double>(values.begin(), values.size())) {}
  explicit AngleVector(std::span<const double> values) : values_(values.begin(), values.end()) {
    for (double& v : values_) v = wrap_angle(v);
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  void set(std::size_t k, double v) { values_[k] = wrap_angle(v); }

  std::span<const double> values() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const AngleVector&, const AngleVector&) = default;

 private:
  std::vector<double> values_;
};

struct PhaseTag {};
struct ControlTag {};

using PhaseVector = AngleVector<PhaseTag>;
using ControlVector = AngleVector<ControlTag>;

/// Per-mode sums phi_k + theta_k, wrapped. Every likelihood depends on its inputs only through these.
inline std::vector<double> effective_phase(const PhaseVector& phi, const ControlVector& theta) {
  if (phi.size() != theta.size()) throw DomainError("phase and control vectors differ in length");
  std::vector<double> out(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) out[k] = wrap_angle(phi[k] + theta[k]);
  return out;
}

}  // namespace phasebench
