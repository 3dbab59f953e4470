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

#include <cstddef>
#include <string>
#include <vector>

#include "phasebench/angles.hpp"
#include "phasebench/probe_models.hpp"

namespace phasebench {

/// State after one probe.
struct ProbeRecord {
  std::size_t probe_index = 0;  ///< 1-based number of probes consumed so far
  ControlVector control;
  OutcomeId outcome;
  PhaseVector estimate;
  double variance_trace = 0.0;
  double quadratic_loss = 0.0;

  friend bool operator==(const ProbeRecord&, const ProbeRecord&) = default;
};

struct RunTrajectory {
  std::size_t phase_index = 0;
  std::size_t repetition_index = 0;
  PhaseVector true_phases;
  std::vector<ProbeRecord> records;
  std::size_t degenerate_restarts = 0;
  bool failed = false;
  std::string failure_reason;

  friend bool operator==(const RunTrajectory&, const RunTrajectory&) = default;
};

}  // namespace phasebench
