#pragma once

#include "seed/gpm.hpp"
#include "seed/model.hpp"

#include <optional>
#include <string>

namespace seed {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams model;
  std::optional<GpmStore> gpm;
};

/// Little-endian binary container: magic, version, seed, layer widths, every
/// parameter group, batchnorm running statistics and (optionally) the GPM
/// store. Doubles are written bit-for-bit. Written atomically via rename.
void save_checkpoint(const std::string& path, const ModelParams& m, const GpmStore* gpm = nullptr);

/// Throws IoError when unreadable and CorruptCheckpoint on any format violation.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace seed
