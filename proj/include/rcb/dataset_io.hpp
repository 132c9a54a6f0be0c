#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "rcb/env.hpp"
#include "rcb/market.hpp"
#include "rcb/oracle.hpp"

namespace rcb::io {

// Day files: one file per day. The canonical interchange format is
// line-delimited JSON (a header record followed by auction records); the
// compact binary form is a little-endian columnar dump. Both round-trip
// doubles losslessly and load to identical in-memory days.
void save_day_text(const market::EnvironmentDay& day, const std::filesystem::path& file);
void save_day_binary(const market::EnvironmentDay& day, const std::filesystem::path& file);
market::EnvironmentDay load_day(const std::filesystem::path& file);  // auto-detects form

void save_dataset(const std::vector<market::EnvironmentDay>& days,
                  const std::filesystem::path& dir, bool binary = false);
std::vector<market::EnvironmentDay> load_dataset(const std::filesystem::path& dir);

// Expert solutions with their replayed demonstration trajectories.
void save_expert(const oracle::ExpertSolution& solution, const env::Trajectory& demo,
                 const std::filesystem::path& file);
std::pair<oracle::ExpertSolution, env::Trajectory> load_expert(
    const std::filesystem::path& file);

// Trajectory logs: a day header record then one record per slot.
void save_trajectories(const std::vector<env::Trajectory>& trajectories,
                       const std::filesystem::path& file);
std::vector<env::Trajectory> load_trajectories(const std::filesystem::path& file);

nlohmann::json trajectory_to_json_lines(const env::Trajectory& traj);

std::uint64_t file_hash(const std::filesystem::path& file);
// Combined hash over the lexicographically sorted day files of a directory.
std::uint64_t tree_hash(const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& dir, const nlohmann::json& fields);
nlohmann::json read_manifest(const std::filesystem::path& dir);

inline constexpr const char* kCodeVersion = "rcbench-0.1.0";

}  // namespace rcb::io
