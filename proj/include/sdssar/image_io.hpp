#pragma once

#include <filesystem>

#include "sdssar/image.hpp"

namespace sdssar {

enum class FileFormat {
    pgm8,
    pgm16,
    raw_float,  ///< little-endian float32 raster + JSON sidecar
};

struct LoadedImage {
    IntensityImage image;
    FileFormat format = FileFormat::raw_float;
    unsigned maxval = 0;  ///< PGM only
};

/// PGM (P5) pixels map to intensity one-to-one: a stored value v becomes
/// intensity v. Writing rounds and clamps to [0, maxval].
IntensityImage read_pgm(const std::filesystem::path& path, unsigned* maxval = nullptr);
void write_pgm(const std::filesystem::path& path, const IntensityImage& image,
               unsigned maxval = 255);

/// Sidecar of `foo.raw` is `foo.json` with {"width","height","looks"}.
std::filesystem::path raw_sidecar_path(const std::filesystem::path& raw_path);
IntensityImage read_raw(const std::filesystem::path& path);
void write_raw(const std::filesystem::path& path, const IntensityImage& image);
/// Raw writer for signed rasters (difference images). No looks field.
void write_raster_raw(const std::filesystem::path& path, const Raster& raster);
Raster read_raster_raw(const std::filesystem::path& path);

/// Dispatches on extension: .pgm -> PGM, anything else -> raw float.
LoadedImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const IntensityImage& image,
                 FileFormat format, unsigned maxval = 255);

bool is_image_path(const std::filesystem::path& path);

}  // namespace sdssar
