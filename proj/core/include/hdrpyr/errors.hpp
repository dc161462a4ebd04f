// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hdrpyr {

// Shape/contract violations between tensors or geometry descriptions.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File system and raster-format problems (missing file, corrupt image, ...).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint and model problems. Subclasses keep the failure modes distinct.
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointFormatError : ModelError {
    using ModelError::ModelError;
};
struct CheckpointVersionError : ModelError {
    using ModelError::ModelError;
};
struct CheckpointTruncatedError : ModelError {
    using ModelError::ModelError;
};
struct CheckpointShapeError : ModelError {
    using ModelError::ModelError;
};

// Raised when optimization cannot continue (non-finite loss or gradient).
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hdrpyr
