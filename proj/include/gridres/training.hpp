#ifndef GRIDRES_TRAINING_HPP_
#define GRIDRES_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridres/checkpoint.hpp"
#include "gridres/economics.hpp"
#include "gridres/env.hpp"
#include "gridres/ppo.hpp"

namespace gridres {

struct TrainConfig {
  int episodes = 1200;
  int update_every = 25;
  int checkpoint_interval = 100;
  bool save_best_only = false;
  int keep_checkpoints = 3;
  std::filesystem::path resume_path;  // empty: fresh start
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints written
  std::uint64_t seed = 7;
  double strategic_share = 0.6;
  PpoHyperparams hp;

  void validate() const;
};

struct UpdateRecord {
  int update = 0;  // 1-based
  std::string agent;  // strategic | tactical
  UpdateStats stats;
};

struct TrainingMetrics {
  std::vector<double> episode_rewards;
  std::vector<UpdateRecord> updates;

  // trailing 50-episode mean ending at `index` (0-based), empty before episode 50
  std::optional<double> moving_average(size_t index) const;
  // moving average of the latest episodes, or the mean of all when fewer than 50
  double recent_average() const;
};

std::string rewards_csv(const TrainingMetrics& m);
std::string updates_csv(const TrainingMetrics& m);

struct RewardRow {
  int episode = 0;
  double reward = 0.0;
  std::optional<double> moving_avg;
};
struct UpdateRow {
  int update = 0;
  std::string agent;
  double approx_kl = 0.0;
  double entropy = 0.0;
};
// throw DataError with the line number on malformed rows
std::vector<RewardRow> parse_rewards_csv(std::string_view text);
std::vector<UpdateRow> parse_updates_csv(std::string_view text);

struct TrainResult {
  TrainingMetrics metrics;
  int start_episode = 0;
  bool resumed = false;
  std::string resume_error;
  int update_rounds = 0;
  std::vector<std::filesystem::path> checkpoints_written;
  size_t strategic_buffer_after = 0;
  size_t tactical_buffer_after = 0;
};

struct TrainHooks {
  // per step: normalized reward and the shares given to each agent
  std::function<void(double normalized, double strategic, double tactical)> on_step;
  std::function<void(int episode, double reward)> on_episode;
  SaveOptions save;
};

// Episode seed used by training and evaluation resets.
std::uint64_t episode_seed(std::uint64_t seed, int episode);

std::vector<double> tactical_input(const std::array<double, kObsDim>& obs, int config);

TrainResult train(const TrainConfig& cfg, GridEnv& env, Agent& strategic, Agent& tactical,
                  const TrainHooks& hooks = {});

// ---- greedy evaluation

struct EvalStep {
  TraceStep trace;
  SwitchVector switches{};
  int grid = 0;
  int scenario = -1;
};

// One deterministic episode with argmax / threshold-0.5 actions. Observation
// statistics are frozen.
std::vector<EvalStep> run_greedy_episode(GridEnv& env, Agent& strategic, Agent& tactical,
                                         const PpoHyperparams& hp, std::uint64_t seed,
                                         int length);

EpisodeTrace to_trace(const std::vector<EvalStep>& steps);

}  // namespace gridres

#endif  // GRIDRES_TRAINING_HPP_
