#pragma once

#include <cstdint>
#include <filesystem>

#include "icubench/neural/params.hpp"

namespace icubench::nn {

/// Flat binary checkpoint, little-endian:
///
///   "ICUCKPT1" | u64 schema_hash | u32 n_blocks
///   per block, in ParamSet order:
///     u32 name_len | name bytes | u32 rows | u32 cols | f64[rows*cols] row-major
///
/// `schema_hash` identifies the vocabularies the parameters were trained
/// against (Vocabularies::hash()).
void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, std::uint64_t schema_hash);

/// Loads values into an already-constructed model's parameter set. Throws
/// DataError if the schema hash differs from `expected_schema_hash`, or if
/// block names or shapes do not match, or the file is malformed. `params`
/// is left untouched on error.
void load_checkpoint(const std::filesystem::path& path, ParamSet& params, std::uint64_t expected_schema_hash);

}  // namespace icubench::nn
