// Copyright 2026 The mvedit Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <functional>

namespace mvedit {

// Worker cap shared by every parallel loop in the process. Defaults to the
// MVEDIT_THREADS environment variable, else 1.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; the
/// body must only write state owned by index i, so results never depend on
/// the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mvedit
