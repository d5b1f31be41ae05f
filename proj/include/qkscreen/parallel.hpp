// Copyright 2026 The qkscreen Authors
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
#include <functional>

namespace qkscreen {

/// Worker count for internal data parallelism. Reads QKSCREEN_THREADS
/// (0 or unset = hardware concurrency).
unsigned worker_count();

/// Overrides the environment setting for this process (0 restores auto).
void set_worker_count(unsigned n);

/// Runs body(i) for i in [0, n). Iterations must be independent; results
/// are written by index so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace qkscreen
