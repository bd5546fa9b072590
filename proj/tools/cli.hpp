// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lightfuse/tensor.hpp"

namespace lightfuse::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kValidation = 3,
};

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Edge-replicates the bottom and right borders up to the next multiple.
Image8 pad_to_multiple(const Image8& img, int multiple);

}  // namespace lightfuse::cli
