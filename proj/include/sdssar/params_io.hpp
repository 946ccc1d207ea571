#pragma once

#include <filesystem>

#include "sdssar/model.hpp"
#include "sdssar/training.hpp"

namespace sdssar {

inline constexpr std::uint32_t kParamsVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "SDSP" | u32 version | u32 json length | NetworkSpec JSON | f64 LE weights.
void write_params(const std::filesystem::path& path, const DespecklerParams& params);
DespecklerParams read_params(const std::filesystem::path& path);

/// "SDSC" | u32 version | u32 json length | JSON {next_epoch, adam_step, history}
/// | params block (as write_params) | f64 Adam m | f64 Adam v.
void write_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState read_checkpoint(const std::filesystem::path& path);

}  // namespace sdssar
