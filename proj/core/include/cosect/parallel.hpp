// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

namespace cosect {

// Worker count used by all parallel loops. Resolves to the hardware
// concurrency, capped by the COSECT_THREADS environment variable.
int worker_count();

// Parallel loop over [begin, end). The body must write only to locations
// owned by its index so results do not depend on the schedule.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& body);

// Chunked variant: body(chunk_begin, chunk_end) per contiguous range.
void parallel_chunks(int64_t begin, int64_t end,
                     const std::function<void(int64_t, int64_t)>& body);

}  // namespace cosect
