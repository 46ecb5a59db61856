#pragma once

#include <string>

#include "sspfield/params.hpp"

namespace sspfield {

/// Writes `bin_path` (flat little-endian IEEE-754 32-bit values, manifest
/// order) and the sibling manifest (same path with the extension replaced by
/// .manifest; one `name dtype shape byte_offset` line per entry, shape as
/// 'x'-joined dims). Writes are atomic: temp file then rename.
void save_checkpoint(const ParameterStore& store, const std::string& bin_path);

/// Loads into an already-constructed store: every manifest entry must exist
/// with the same shape, and every store entry must appear in the manifest.
void load_checkpoint(ParameterStore& store, const std::string& bin_path);

std::string manifest_path_for(const std::string& bin_path);

}  // namespace sspfield
