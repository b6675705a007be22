#pragma once

// Versioned little-endian binary checkpoints. Doubles are stored as raw
// IEEE-754 bits so a save/load round trip is bit-exact.

#include <filesystem>
#include <string>

#include "depts/training.hpp"

namespace depts {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace depts
