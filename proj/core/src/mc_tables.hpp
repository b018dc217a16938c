// Copyright (c) 2026 the cosect authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace cosect::detail {

extern const int kMcEdgeTable[256];
extern const int kMcTriTable[256][16];

}  // namespace cosect::detail
