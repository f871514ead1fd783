// Copyright 2026 The PVC Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

namespace pvc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pvc
