#pragma once

#include <filesystem>

#include "ratebench/kernel/adam.hpp"

namespace ratebench::kernel {

// Checkpoint byte layout (little-endian):
//   bytes 0..7    magic "RBCP0001"
//   bytes 8..15   uint64 header length H
//   bytes 16..16+H-1 JSON header:
//     {"format":1,"tensors":[{"name":...,"shape":[...],"offset":N,"count":N},...]}
//     offsets are float32 element offsets into the payload
//   remainder     payload: float32 values, tensor order as listed in the header
//
// Only parameter values are stored; optimizer state is not checkpointed.

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path);

/// Restores values into an already-constructed store. Every tensor in the
/// store must be present in the file with a matching shape.
void load_checkpoint(ParameterStore& params, const std::filesystem::path& path);

}  // namespace ratebench::kernel
