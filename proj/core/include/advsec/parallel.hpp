// Copyright 2026 The lora-advsec Authors.
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

namespace advsec {

/// Worker count for evaluation: LORA_ADVSEC_THREADS when set to a positive
/// integer, otherwise the hardware concurrency (at least 1).
std::size_t evaluation_threads();

/// Calls body(begin, end) over fixed-size chunks of [0, n). Chunk
/// boundaries do not depend on the thread count, so any per-chunk result
/// is reproducible. body must only write to state owned by its chunk.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& body);

/// Keeps freed training buffers in the heap instead of returning them to
/// the OS after every batch (glibc only; a no-op elsewhere). Call once
/// from main().
void tune_allocator_for_training();

}  // namespace advsec
