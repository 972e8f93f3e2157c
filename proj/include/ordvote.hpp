// Copyright 2026 The ordvote Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Umbrella header for the library (the CLI layer is in ordvote/cli.hpp).

#pragma once

#include "ordvote/analysis.hpp"
#include "ordvote/archive.hpp"
#include "ordvote/core_model.hpp"
#include "ordvote/csv.hpp"
#include "ordvote/diagnostics.hpp"
#include "ordvote/errors.hpp"
#include "ordvote/io.hpp"
#include "ordvote/mcmc.hpp"
#include "ordvote/random.hpp"
