#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "intentrec/simulator.hpp"

namespace intentrec::sim {

/// One event per line, fixed column order, header row. Values are integers,
/// so the file is byte-stable under regeneration.
inline constexpr std::string_view kDatasetHeader =
    "user_id,step,item_id,topic_id,regime_id,switched,clicks,searches,tod_bucket,device";

/// Simulates n_users trajectories (user u gets seed derive_seed(seed, u))
/// and writes them as one dataset file.
void generate_dataset(const SimConfig& cfg, std::size_t n_users, std::uint64_t seed,
                      const std::filesystem::path& out_file);

void write_dataset(const std::vector<Trajectory>& users, const SimConfig& cfg,
                   const std::filesystem::path& out_file);

/// Strict parse: exact header, dense steps per user, every field validated
/// against the configuration.
std::vector<Trajectory> load_dataset(const std::filesystem::path& file, const SimConfig& cfg);

}  // namespace intentrec::sim
