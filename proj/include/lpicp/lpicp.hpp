//
// Copyright 2026 The lpicp Authors
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
//

#pragma once

// Umbrella header for the label-powerset inductive conformal prediction
// library.

#include "lpicp/core.hpp"           // IWYU pragma: export
#include "lpicp/nonconformity.hpp"  // IWYU pragma: export
#include "lpicp/icp.hpp"            // IWYU pragma: export
#include "lpicp/enumeration.hpp"    // IWYU pragma: export
#include "lpicp/metrics.hpp"        // IWYU pragma: export
#include "lpicp/oracle.hpp"         // IWYU pragma: export
#include "lpicp/synth.hpp"          // IWYU pragma: export
