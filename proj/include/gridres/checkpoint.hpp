#ifndef GRIDRES_CHECKPOINT_HPP_
#define GRIDRES_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridres/ppo.hpp"
#include "gridres/running_stats.hpp"

namespace gridres {

// Parameter file: "GRPW", u32 version, u32 ndims, u32 dims[ndims], u64 count,
// then count little-endian doubles.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
  bool operator==(const Tensor&) const = default;
};
void write_tensor(const std::filesystem::path& path, const Tensor& t);
// throws CheckpointError on a short, corrupt or mismatched file
Tensor read_tensor(const std::filesystem::path& path);

struct CheckpointMeta {
  int episode = 0;
  double average_reward = 0.0;
  double best_average = 0.0;
  VectorRunningStats strategic_norms;
  VectorRunningStats tactical_norms;
  RunningStats reward_stats;
};
std::string meta_to_text(const CheckpointMeta& m);
CheckpointMeta meta_from_text(std::string_view text);

struct SaveOptions {
  // invoked after each file lands in the staging directory and after the
  // previous generation is moved aside; throwing simulates a crash
  std::function<void(const std::filesystem::path&)> on_file_written;
};

// Writes into `<dir>.tmp`, then renames over `dir`.
void save_checkpoint(const std::filesystem::path& dir, const Agent& strategic,
                     const Agent& tactical, const CheckpointMeta& meta,
                     const SaveOptions& opts = {});

struct LoadResult {
  bool ok = false;
  std::optional<CheckpointMeta> meta;
  std::string error;
};

// All-or-nothing: the agents are only touched when every parameter file
// loads. Observation statistics come from the metadata when present.
LoadResult load_checkpoint(const std::filesystem::path& dir, Agent& strategic, Agent& tactical);

std::string checkpoint_name(int episode);
// ckpt_<n> directories under root, oldest first
std::vector<std::filesystem::path> list_checkpoints(const std::filesystem::path& root);
// removes all but the `keep` newest
void cleanup_checkpoints(const std::filesystem::path& root, int keep);

}  // namespace gridres

#endif  // GRIDRES_CHECKPOINT_HPP_
