#pragma once

#include <optional>
#include <string>

#include "amanda/model.hpp"

namespace amanda {

/// Writes `dir/model.json` (config, character vocabulary, and a manifest of
/// {name, shape, offset} with byte offsets) and `dir/model.bin` (little-endian
/// float32 values in manifest order). Creates `dir` if needed.
void save_checkpoint(const std::string& dir, const Model& model);

/// Reads a checkpoint back. Every manifest shape must equal what the stored
/// config implies, else ShapeMismatchError. Word vectors come from
/// `word_vectors` when given, otherwise from the config's path; an empty path
/// gives an all-OOV table.
Model load_checkpoint(const std::string& dir, const std::optional<std::string>& word_vectors = std::nullopt);

/// Word table for a config: loaded from its path, or empty of the right width.
std::shared_ptr<const WordTable> load_words_for(const Config& cfg);

}  // namespace amanda
