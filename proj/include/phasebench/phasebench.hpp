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

#include "phasebench/angles.hpp"
#include "phasebench/commands.hpp"
#include "phasebench/control_strategies.hpp"
#include "phasebench/errors.hpp"
#include "phasebench/experiment_runner.hpp"
#include "phasebench/heuristic_fit.hpp"
#include "phasebench/io.hpp"
#include "phasebench/loss_statistics.hpp"
#include "phasebench/particle_filter.hpp"
#include "phasebench/precision_bounds.hpp"
#include "phasebench/probe_models.hpp"
#include "phasebench/random.hpp"
#include "phasebench/trajectory.hpp"
