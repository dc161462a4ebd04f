// Copyright 2026 The hdrpyr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "hdrpyr/nets.hpp"

namespace hdrpyr {

inline constexpr char kCheckpointMagic[4] = {'L', 'P', 'Y', 'R'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: magic "LPYR", u32 version, one ordering byte, then one
/// record per parameter: u32 name length, name bytes, u32 rank, u32 dims,
/// raw float32 data. All integers and floats little-endian. Round trips are
/// bit-exact.
void save_checkpoint(const ModelBundle& bundle, const std::string& path);

/// Throws CheckpointFormatError (bad magic), CheckpointVersionError,
/// CheckpointTruncatedError or CheckpointShapeError; IoError if the file
/// cannot be opened.
ModelBundle load_checkpoint(const std::string& path);

}  // namespace hdrpyr
