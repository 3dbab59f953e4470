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

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phasebench/angles.hpp"
#include "phasebench/errors.hpp"
#include "phasebench/random.hpp"

namespace phasebench {

/// Index into a model's enumerated outcome set.
struct OutcomeId {
  std::size_t index = 0;
  friend bool operator==(OutcomeId, OutcomeId) = default;
};

/// p x p Fisher information matrix, units 1/rad^2.
using FisherMatrix = Eigen::MatrixXd;

/// Likelihood model p(m | phi, theta) with a finite outcome set.
///
/// Implementations see only the effective phase psi_k = phi_k + theta_k, which makes
/// the covariance property hold by construction.
class ProbeModel {
 public:
  virtual ~ProbeModel() = default;

  virtual std::string_view id() const noexcept = 0;
  virtual std::size_t parameter_count() const noexcept = 0;
  virtual std::size_t outcome_count() const noexcept = 0;

  /// Writes p(m | psi) for every outcome m into `out` (size outcome_count()).
  virtual void outcome_probabilities(std::span<const double> psi, std::span<double> out) const = 0;

  std::vector<double> probabilities(const PhaseVector& phi, const ControlVector& theta) const {
    check_lengths(phi, theta);
    std::vector<double> out(outcome_count());
    outcome_probabilities(effective_phase(phi, theta), out);
    return out;
  }

  double likelihood(OutcomeId m, const PhaseVector& phi, const ControlVector& theta) const {
    if (m.index >= outcome_count()) {
      throw DomainError("outcome index " + std::to_string(m.index) + " out of range for model " +
                        std::string(id()));
    }
    return probabilities(phi, theta)[m.index];
  }

 protected:
  void check_lengths(const PhaseVector& phi, const ControlVector& theta) const {
    if (phi.size() != parameter_count() || theta.size() != parameter_count()) {
      throw DomainError("model " + std::string(id()) + " expects " + std::to_string(parameter_count()) +
                        " parameters");
    }
  }
};

/// Qubit prepared in (|0> + e^{i phi}|1>)/sqrt(2), shifted by theta and measured in the +/- basis.
/// p(0) = cos^2(psi/2), p(1) = sin^2(psi/2).
class SingleQubitModel final : public ProbeModel {
 public:
  std::string_view id() const noexcept override { return "single_qubit"; }
  std::size_t parameter_count() const noexcept override { return 1; }
  std::size_t outcome_count() const noexcept override { return 2; }

  void outcome_probabilities(std::span<const double> psi, std::span<double> out) const override {
    const double c = std::cos(0.5 * psi[0]);
    out[0] = c * c;
    out[1] = 1.0 - c * c;
  }
};

/// Two photons injected into modes 0 and 1 of a (p+1)-mode interferometer F . D(psi) . F,
/// with F the discrete Fourier unitary and D = diag(1, e^{i psi_1}, ..., e^{i psi_p}).
///
/// Outcomes are unordered output-mode pairs (c, e), c <= e, enumerated lexicographically.
class FourierMultiportModel final : public ProbeModel {
 public:
  explicit FourierMultiportModel(std::size_t p) : p_(p), d_(p + 1) {
    if (p != 2 && p != 3) {
      throw UnsupportedModelError("Fourier multiport supports 2 or 3 phases, got " + std::to_string(p));
    }
    id_ = "fourier" + std::to_string(p);
    const double norm = 1.0 / std::sqrt(static_cast<double>(d_));
    for (std::size_t j = 0; j < d_; ++j) {
      for (std::size_t k = 0; k < d_; ++k) {
        fourier_[j * kMaxModes + k] = std::polar(norm, kTwoPi * static_cast<double>(j * k) / static_cast<double>(d_));
      }
    }
    for (std::size_t c = 0; c < d_; ++c) {
      for (std::size_t e = c; e < d_; ++e) pairs_.emplace_back(c, e);
    }
  }

  std::string_view id() const noexcept override { return id_; }
  std::size_t parameter_count() const noexcept override { return p_; }
  std::size_t outcome_count() const noexcept override { return pairs_.size(); }

  /// Output modes (c, e) of outcome m.
  std::pair<std::size_t, std::size_t> output_modes(OutcomeId m) const { return pairs_.at(m.index); }

  /// d x d unitary F . D(psi) . F.
  Eigen::MatrixXcd circuit(std::span<const double> psi) const {
    Eigen::MatrixXcd f(d_, d_);
    for (std::size_t j = 0; j < d_; ++j) {
      for (std::size_t k = 0; k < d_; ++k) f(j, k) = fourier_[j * kMaxModes + k];
    }
    Eigen::VectorXcd phases(d_);
    phases(0) = 1.0;
    for (std::size_t k = 0; k < p_; ++k) phases(k + 1) = std::polar(1.0, psi[k]);
    return f * phases.asDiagonal() * f;
  }

  void outcome_probabilities(std::span<const double> psi, std::span<double> out) const override {
    std::array<std::complex<double>, kMaxModes> phase{};
    phase[0] = 1.0;
    for (std::size_t k = 0; k < p_; ++k) phase[k + 1] = std::polar(1.0, psi[k]);

    // Only the two input columns of the circuit are needed.
    std::array<std::complex<double>, kMaxModes> col0{}, col1{};
    for (std::size_t c = 0; c < d_; ++c) {
      std::complex<double> a0 = 0.0, a1 = 0.0;
      for (std::size_t k = 0; k < d_; ++k) {
        const std::complex<double> t = fourier_[c * kMaxModes + k] * phase[k];
        a0 += t * fourier_[k * kMaxModes + 0];
        a1 += t * fourier_[k * kMaxModes + 1];
      }
      col0[c] = a0;
      col1[c] = a1;
    }

    for (std::size_t m = 0; m < pairs_.size(); ++m) {
      const auto [c, e] = pairs_[m];
      if (c == e) {
        out[m] = 2.0 * std::norm(col0[c] * col1[c]);
      } else {
        out[m] = std::norm(col0[c] * col1[e] + col1[c] * col0[e]);
      }
    }
  }

 private:
  static constexpr std::size_t kMaxModes = 4;

  std::size_t p_;
  std::size_t d_;
  std::string id_;
  std::array<std::complex<double>, kMaxModes * kMaxModes> fourier_{};
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

/// Builds a model from its identifier: single_qubit, fourier2 or fourier3.
inline std::shared_ptr<const ProbeModel> make_model(std::string_view model_id) {
  if (model_id == "single_qubit") return std::make_shared<SingleQubitModel>();
  if (model_id == "fourier2") return std::make_shared<FourierMultiportModel>(2);
  if (model_id == "fourier3") return std::make_shared<FourierMultiportModel>(3);
  throw UnsupportedModelError("unknown model '" + std::string(model_id) + "'");
}

/// Draws an outcome by inverse CDF over the enumerated outcomes.
inline OutcomeId sample_outcome(const ProbeModel& model, const PhaseVector& phi, const ControlVector& theta,
                                RandomEngine& rng) {
  const std::vector<double> probs = model.probabilities(phi, theta);
  const double u = uniform01(rng);
  double cdf = 0.0;
  std::size_t last_supported = 0;
  for (std::size_t m = 0; m < probs.size(); ++m) {
    if (probs[m] <= 0.0) continue;
    last_supported = m;
    cdf += probs[m];
    if (u < cdf) return OutcomeId{m};
  }
  // u landed in the rounding gap above the accumulated total
  return OutcomeId{last_supported};
}

inline constexpr double kFisherStep = 1e-5;
inline constexpr double kFisherProbabilityFloor = 1e-12;

/// Classical Fisher matrix at effective phase psi, by central differences of the outcome probabilities.
inline FisherMatrix fisher_matrix_at(const ProbeModel& model, std::span<const double> psi) {
  const std::size_t p = model.parameter_count();
  const std::size_t outcomes = model.outcome_count();
  std::vector<double> center(outcomes), plus(outcomes), minus(outcomes);
  model.outcome_probabilities(psi, center);

  Eigen::MatrixXd grad(outcomes, p);
  std::vector<double> shifted(psi.begin(), psi.end());
  for (std::size_t j = 0; j < p; ++j) {
    shifted[j] = psi[j] + kFisherStep;
    model.outcome_probabilities(shifted, plus);
    shifted[j] = psi[j] - kFisherStep;
    model.outcome_probabilities(shifted, minus);
    shifted[j] = psi[j];
    for (std::size_t m = 0; m < outcomes; ++m) grad(m, j) = (plus[m] - minus[m]) / (2.0 * kFisherStep);
  }

  FisherMatrix fisher = FisherMatrix::Zero(p, p);
  for (std::size_t m = 0; m < outcomes; ++m) {
    if (center[m] < kFisherProbabilityFloor) continue;
    fisher.noalias() += grad.row(m).transpose() * grad.row(m) / center[m];
  }
  return fisher;
}

inline FisherMatrix fisher_matrix(const ProbeModel& model, const PhaseVector& phi, const ControlVector& theta) {
  if (phi.size() != model.parameter_count() || theta.size() != model.parameter_count()) {
    throw DomainError("fisher_matrix: parameter count mismatch");
  }
  return fisher_matrix_at(model, effective_phase(phi, theta));
}

}  // namespace phasebench
