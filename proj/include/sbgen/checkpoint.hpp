#pragma once

#include <string>

#include "sbgen/codec.hpp"
#include "sbgen/model.hpp"

namespace sbgen {

// Checkpoint container: "SBCK" magic, a u32 version, a u64-length JSON header
// (model config, vocabulary words and hash, tensor manifest with named
// shapes), then the raw little-endian float64 tensor data in manifest order.
void save_checkpoint(const std::string& path, const ModelParameters& params,
                     const Vocabulary& vocab);

struct LoadedCheckpoint {
    ModelParameters params;
    Vocabulary vocab;
};

// Throws std::runtime_error on a malformed file or when the stored vocabulary
// hash does not match the stored word list.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace sbgen
