#ifndef GRIDRES_ENV_HPP_
#define GRIDRES_ENV_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "gridres/economics.hpp"
#include "gridres/feeder.hpp"
#include "gridres/metrics.hpp"
#include "gridres/running_stats.hpp"

namespace gridres {

inline constexpr int kObsDim = 20;
inline constexpr int kTacticalObsDim = kObsDim + 1;

struct RewardConstants {
  double alpha1 = 100.0;  // resilience weight, normal
  double alpha2 = 1.0;    // cost weight, normal
  double alpha3 = 200.0;  // resilience weight, calamity
  double alpha4 = 0.5;    // cost weight, calamity
  double efficiency_bonus = 10.0;
  double efficiency_threshold = 50.0;  // dollars per step
  double adaptation_bonus = 20.0;
  int adaptation_window = 2;  // steps after the onset step
};

struct EnvConfig {
  int episode_length = 100;
  int eval_episode_length = 50;
  double budget = 5000.0;
  double p_enter = 0.10;
  double p_exit = 0.30;
  RewardConstants reward;
  double toggle_cost = 2.0;
  int percolation_trials = 200;
  std::uint64_t percolation_seed = 12345;
  double centrality_std = 1.0;
  std::filesystem::path scenario_dir;  // empty: no scenario library
  std::filesystem::path weights_file;  // AHP pairwise matrix, optional
  std::vector<double> metric_weights;  // explicit weights, optional

  void validate() const;
  // relative paths resolve against base_dir
  static EnvConfig from_text(std::string_view text,
                             const std::filesystem::path& base_dir = {});
  static EnvConfig load(const std::filesystem::path& path);
};

struct WeatherState {
  Weather w = Weather::kNormal;
  int scenario = -1;  // index into the library, -1 for none
  int fault_duration = 0;
};

// Two-state Markov chain; entering calamity draws a scenario uniformly.
WeatherState weather_transition(const WeatherState& current, double p_enter, double p_exit,
                                int num_scenarios, std::mt19937_64& rng);

double efficiency_bonus(double step_cost, const RewardConstants& k);
double resilience_tier_bonus(double rho);
double reward_normal(double rho, double step_cost, const RewardConstants& k = {});
double reward_calamity(double rho, double step_cost, bool adapted, const RewardConstants& k = {});

// (raw - mean) / max(std, eps) after pushing raw into the statistics
double normalize_reward(double raw, RunningStats& stats, double eps = 1e-8);

// C_config(c) + toggle_cost * toggles * mu_maint(c)
double step_cost(int config, int toggles, const EconomicParameters& econ, double toggle_cost);

struct EnvAction {
  int config = 0;
  SwitchVector switches{};
  int grid = 0;
};

struct TopologyEvaluation {
  MetricVector metrics;
  PathCounts paths;
  std::vector<int> served_critical;
  std::vector<int> energized_sources;  // node ids actually supplying
};

struct StepOutcome {
  std::array<double, kObsDim> observation{};
  double reward = 0.0;
  double normalized_reward = 0.0;
  bool done = false;
  // info
  Weather weather = Weather::kNormal;  // weather the action was taken under
  int scenario = -1;
  int config = 0;
  int closed_switches = 0;
  int toggles = 0;
  double rho = 0.0;
  double step_cost = 0.0;
  bool efficiency_bonus = false;
  bool adapted = false;
  MetricVector metrics;
};

enum class WeatherMode { kStochastic, kForcedNormal, kForcedCalamity };

class GridEnv {
 public:
  GridEnv(std::shared_ptr<const GridNetwork> net, EnvConfig cfg, EconomicParameters econ,
          std::vector<Scenario> library, AhpWeights weights);
  // loads the scenario library and weights named in cfg
  static GridEnv create(std::shared_ptr<const GridNetwork> net, const EnvConfig& cfg,
                        const EconomicParameters& econ);

  std::array<double, kObsDim> reset(std::uint64_t seed);
  StepOutcome step(const EnvAction& action);

  void set_episode_length(int length) { episode_length_ = length; }
  int episode_length() const { return episode_length_; }
  // forced modes pin the weather; `scenario` indexes the library
  void set_weather_mode(WeatherMode mode, int scenario = -1);

  // Raw metrics for one operating point; scenario -1 means undisturbed.
  TopologyEvaluation evaluate(const SwitchVector& switches, int config, int grid,
                              int scenario) const;
  // weighted score against the reference normalization set
  double resilience_of(const MetricVector& m) const;
  NormalizedMetrics normalized(const MetricVector& m) const;

  const GridNetwork& network() const { return *net_; }
  const EnvConfig& config() const { return cfg_; }
  const EconomicParameters& economics() const { return econ_; }
  const std::vector<Scenario>& scenarios() const { return library_; }
  const AhpWeights& weights() const { return weights_; }
  RunningStats& reward_stats() { return reward_stats_; }
  const RunningStats& reward_stats() const { return reward_stats_; }

  const WeatherState& weather() const { return weather_; }
  double budget_remaining() const { return budget_; }
  int step_index() const { return step_; }
  int current_config() const { return config_; }
  const SwitchVector& switches() const { return switches_; }
  std::array<double, kObsDim> observation() const;
  bool done() const;

  // number of distinct topologies analysed so far
  size_t cache_size() const { return cache_.size(); }

 private:
  struct TopologyInfo {
    Subgraph sub;
    double p_m = 0.0;
    double n_hc = 0.0;
  };
  const TopologyInfo& topology(const SwitchVector& switches, bool extra, int scenario) const;
  void build_reference();

  std::shared_ptr<const GridNetwork> net_;
  EnvConfig cfg_;
  EconomicParameters econ_;
  std::vector<Scenario> library_;
  AhpWeights weights_;
  std::vector<int> additional_switch_;  // fixed tie closed by configuration 5
  NormalizedMetrics ref_min_{};
  NormalizedMetrics ref_max_{};
  mutable std::map<std::tuple<unsigned, bool, int>, TopologyInfo> cache_;

  WeatherMode mode_ = WeatherMode::kStochastic;
  int forced_scenario_ = -1;
  int episode_length_ = 100;

  std::mt19937_64 rng_;
  WeatherState weather_;
  SwitchVector switches_{};
  int config_ = 0;
  int step_ = 0;
  double budget_ = 0.0;
  double cum_rho_ = 0.0;
  double cum_cost_ = 0.0;
  double last_cost_ = 0.0;
  std::array<double, 4> resilience_block_{};
  RunningStats reward_stats_;
};

}  // namespace gridres

#endif  // GRIDRES_ENV_HPP_
