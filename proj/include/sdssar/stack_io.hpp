#pragma once

#include <filesystem>

#include "sdssar/image_io.hpp"
#include "sdssar/sampler.hpp"

namespace sdssar {

/// Directory layout: sub_NN.{raw,pgm}, positions.bin holding (sub-image index,
/// row, col) as little-endian u32 triples in (j, p) order, and manifest.json.
void write_stack(const std::filesystem::path& dir, const SubImageStack& stack,
                 FileFormat format = FileFormat::raw_float);

/// Throws CorruptedStack when files are missing, truncated or inconsistent.
SubImageStack read_stack(const std::filesystem::path& dir);

}  // namespace sdssar
