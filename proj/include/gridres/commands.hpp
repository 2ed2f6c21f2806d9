#ifndef GRIDRES_COMMANDS_HPP_
#define GRIDRES_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gridres/env.hpp"
#include "gridres/training.hpp"

namespace gridres {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitCheckpoint = 3 };

std::filesystem::path default_data_dir();

struct CommonOptions {
  std::filesystem::path feeder;      // empty: bundled feeder
  std::filesystem::path env_config;  // empty: bundled env.conf
  std::filesystem::path econ_config; // empty: bundled economics.conf
  std::uint64_t seed = 7;
  std::filesystem::path out_dir = ".";
};

// feeder, parameters and environment resolved from the common options
struct Workspace {
  std::shared_ptr<const GridNetwork> net;
  EnvConfig env_cfg;
  EconomicParameters econ;
  std::unique_ptr<GridEnv> env;
};
Workspace open_workspace(const CommonOptions& opts,
                         const std::vector<Scenario>& extra_scenarios = {});

struct TrainOptions {
  int episodes = 1200;
  int update_every = 25;
  int checkpoint_interval = 100;
  bool save_best = false;
  int keep = 3;
  std::filesystem::path resume;
};

struct EvaluateOptions {
  std::filesystem::path checkpoint;
  int episodes = 10;
};

struct RecommendOptions {
  std::filesystem::path checkpoint;
  // scenario files or library names; empty means the whole library
  std::vector<std::string> scenarios;
};

struct ReportOptions {
  std::filesystem::path rewards_csv;  // empty: <out>/metrics/rewards.csv
  std::filesystem::path updates_csv;  // empty: <out>/metrics/updates.csv
};

struct ContingencyRow {
  int contingency = 0;
  std::string weather;
  std::string recommendation;
  SwitchVector switches{};
  double total_cost = 0.0;
};

std::string recommendation_label(int config, const EconomicParameters& econ);
std::string switch_bits(const SwitchVector& s);  // "[1 0 1 ...]"
std::string format_row(const ContingencyRow& r);

struct EvaluationSummary {
  int episodes = 0;
  double resilience_mean = 0.0;
  double resilience_std = 0.0;
  double reward_mean = 0.0;
  int calamity_steps = 0;
  std::array<int, kNumConfigs> calamity_configs{};
  double high_der_fraction = 0.0;  // calamity steps on configurations with >= 4 DERs
  CostEffectiveness economics;
  double resilience_value = 0.0;
  double npv = 0.0;
};
EvaluationSummary summarize(const std::vector<EpisodeTrace>& traces, const EconomicParameters& p);
std::string summary_to_text(const EvaluationSummary& s);

// Each command prints progress to `log` and returns an ExitCode. Errors are
// reported through exceptions (DataError, DomainError, CheckpointError).
int cmd_train(const CommonOptions& c, const TrainOptions& o, std::ostream& log);
int cmd_evaluate(const CommonOptions& c, const EvaluateOptions& o, std::ostream& log);
int cmd_recommend(const CommonOptions& c, const RecommendOptions& o, std::ostream& log);
int cmd_report(const CommonOptions& c, const ReportOptions& o, std::ostream& log);

}  // namespace gridres

#endif  // GRIDRES_COMMANDS_HPP_
