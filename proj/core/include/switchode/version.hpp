// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

namespace switchode {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "switchode";

}  // namespace switchode
