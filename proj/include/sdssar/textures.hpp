#pragma once

#include <cstdint>
#include <string>

#include "sdssar/image.hpp"

namespace sdssar {

/// Procedural clean scenes for the synthetic track. Intensities lie in
/// roughly [0.1, 1].
enum class TextureKind { flat, checkerboard, ramp, smooth_noise, blocks, composite };

std::string to_string(TextureKind kind);
TextureKind texture_from_string(const std::string& name);

IntensityImage make_texture(TextureKind kind, std::size_t width, std::size_t height,
                            std::uint64_t seed);

/// Horizontal ramp: value(row, col) = offset + step * col.
IntensityImage make_ramp(std::size_t width, std::size_t height, double offset, double step);

/// Corpus of `count` scenes cycling through the non-flat kinds.
std::vector<IntensityImage> make_corpus(std::size_t count, std::size_t size, std::uint64_t seed);

/// Composite test scene with a flat block in the top-left quadrant of side
/// size*3/8, returned with that block's region via the out-parameters.
IntensityImage make_evaluation_scene(std::size_t size, std::uint64_t seed,
                                     std::size_t* flat_row, std::size_t* flat_col,
                                     std::size_t* flat_side);

}  // namespace sdssar
