#pragma once

#include <cstdint>
#include <filesystem>

#include "trainer.hpp"

namespace outpaint {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// Writes `<path>` (binary: header, JSON metadata, parameter and optimizer
// blocks, FNV-1a trailer) and `<path>.json` (iteration, schedule, format
// version). Both are written to temporaries and renamed into place.
void save_checkpoint(const Checkpoint& state, const std::filesystem::path& path);

// Reads a checkpoint written by save_checkpoint. Truncated, corrupted or
// version-mismatched files raise ErrorKind::kFormat; nothing partial is
// ever returned.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace outpaint
