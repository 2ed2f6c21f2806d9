#include "gridres/env.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gridres/error.hpp"
#include "gridres/kv_config.hpp"

namespace gridres {

// ---- config

void EnvConfig::validate() const {
  if (episode_length < 1 || eval_episode_length < 1) throw DataError("episode length must be >= 1");
  if (!(budget > 0.0)) throw DataError("budget must be positive");
  if (p_enter < 0.0 || p_enter > 1.0 || p_exit < 0.0 || p_exit > 1.0) {
    throw DataError("weather probabilities must lie in [0,1]");
  }
  if (toggle_cost < 0.0) throw DataError("toggle cost must be >= 0");
  if (percolation_trials < 1) throw DataError("percolation_trials must be >= 1");
  if (reward.adaptation_window < 0) throw DataError("adaptation_window must be >= 0");
  if (!metric_weights.empty() && metric_weights.size() != kNumMetrics) {
    throw DataError("metric_weights needs 5 values");
  }
}

EnvConfig EnvConfig::from_text(std::string_view text, const std::filesystem::path& base_dir) {
  auto kv = KeyValueConfig::parse(text);
  EnvConfig c;
  auto set = [&](const char* key, double& field) {
    if (kv.has(key)) field = kv.get_double(key);
  };
  auto set_int = [&](const char* key, int& field) {
    if (kv.has(key)) field = kv.get_int(key);
  };
  auto set_path = [&](const char* key, std::filesystem::path& field) {
    if (!kv.has(key)) return;
    std::filesystem::path p = kv.raw(key);
    field = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  set_int("episode_length", c.episode_length);
  set_int("eval_episode_length", c.eval_episode_length);
  set("budget", c.budget);
  set("p_enter", c.p_enter);
  set("p_exit", c.p_exit);
  set("alpha1", c.reward.alpha1);
  set("alpha2", c.reward.alpha2);
  set("alpha3", c.reward.alpha3);
  set("alpha4", c.reward.alpha4);
  set("efficiency_bonus", c.reward.efficiency_bonus);
  set("efficiency_threshold", c.reward.efficiency_threshold);
  set("adaptation_bonus", c.reward.adaptation_bonus);
  set_int("adaptation_window", c.reward.adaptation_window);
  set("toggle_cost", c.toggle_cost);
  set_int("percolation_trials", c.percolation_trials);
  if (kv.has("percolation_seed")) {
    int s = kv.get_int("percolation_seed");
    if (s < 0) throw DataError("percolation_seed must be >= 0");
    c.percolation_seed = static_cast<std::uint64_t>(s);
  }
  set("centrality_std", c.centrality_std);
  set_path("scenario_dir", c.scenario_dir);
  set_path("weights_file", c.weights_file);
  if (kv.has("metric_weights")) c.metric_weights = kv.get_doubles("metric_weights");
  kv.require_all_used();
  c.validate();
  return c;
}

EnvConfig EnvConfig::load(const std::filesystem::path& path) {
  auto text = read_text_file(path);
  try {
    return from_text(text, path.parent_path());
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// ---- dynamics and reward pieces

WeatherState weather_transition(const WeatherState& current, double p_enter, double p_exit,
                                int num_scenarios, std::mt19937_64& rng) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  WeatherState next = current;
  if (current.w == Weather::kNormal) {
    if (u < p_enter) {
      next.w = Weather::kCalamity;
      next.fault_duration = 1;
      next.scenario = -1;
      if (num_scenarios > 0) {
        next.scenario = std::uniform_int_distribution<int>(0, num_scenarios - 1)(rng);
      }
    } else {
      next.fault_duration = 0;
      next.scenario = -1;
    }
  } else {
    if (u < p_exit) {
      next.w = Weather::kNormal;
      next.fault_duration = 0;
      next.scenario = -1;
    } else {
      ++next.fault_duration;
    }
  }
  return next;
}

double efficiency_bonus(double cost, const RewardConstants& k) {
  return cost <= k.efficiency_threshold ? k.efficiency_bonus : 0.0;
}

double resilience_tier_bonus(double rho) {
  if (rho > 0.8) return 150.0;
  if (rho > 0.7) return 100.0;
  if (rho > 0.6) return 50.0;
  return -100.0;
}

double reward_normal(double rho, double cost, const RewardConstants& k) {
  return k.alpha1 * rho - k.alpha2 * cost + efficiency_bonus(cost, k);
}

double reward_calamity(double rho, double cost, bool adapted, const RewardConstants& k) {
  return k.alpha3 * rho - k.alpha4 * cost + resilience_tier_bonus(rho) +
         (adapted ? k.adaptation_bonus : 0.0);
}

double normalize_reward(double raw, RunningStats& stats, double eps) {
  stats.push(raw);
  return (raw - stats.mean) / std::max(stats.stddev(), eps);
}

double step_cost(int config, int toggles, const EconomicParameters& econ, double toggle_cost) {
  if (config < 0 || config >= kNumConfigs) throw DomainError("configuration outside 0..5");
  if (toggles < 0) throw DomainError("negative toggle count");
  return econ.c_config[config] + toggle_cost * toggles * econ.mu_maint[config];
}

// ---- environment

GridEnv::GridEnv(std::shared_ptr<const GridNetwork> net, EnvConfig cfg, EconomicParameters econ,
                 std::vector<Scenario> library, AhpWeights weights)
    : net_(std::move(net)),
      cfg_(std::move(cfg)),
      econ_(std::move(econ)),
      library_(std::move(library)),
      weights_(std::move(weights)) {
  cfg_.validate();
  econ_.validate();
  if (static_cast<int>(weights_.w.size()) != kNumMetrics) {
    throw DataError("resilience weights need 5 entries");
  }
  episode_length_ = cfg_.episode_length;
  for (const auto& b : net_->branches) {
    if (b.has_switch && !b.controllable() && !b.normally_closed) {
      additional_switch_.push_back(b.id);
      break;
    }
  }
  build_reference();
  reset(0);
}

GridEnv GridEnv::create(std::shared_ptr<const GridNetwork> net, const EnvConfig& cfg,
                        const EconomicParameters& econ) {
  std::vector<Scenario> library;
  if (!cfg.scenario_dir.empty()) library = load_scenario_library(cfg.scenario_dir, *net);
  AhpWeights w = default_metric_weights();
  if (!cfg.metric_weights.empty()) {
    w = metric_weights_from_values(cfg.metric_weights);
  } else if (!cfg.weights_file.empty()) {
    w = ahp_weights(parse_pairwise_matrix(read_text_file(cfg.weights_file)));
  }
  return GridEnv(std::move(net), cfg, econ, std::move(library), std::move(w));
}

const GridEnv::TopologyInfo& GridEnv::topology(const SwitchVector& switches, bool extra,
                                               int scenario) const {
  unsigned bits = 0;
  for (int i = 0; i < kNumSwitches; ++i) bits |= static_cast<unsigned>(switches[i] != 0) << i;
  auto key = std::make_tuple(bits, extra, scenario);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  static const Scenario kNone;
  const Scenario& sc = scenario >= 0 ? library_.at(scenario) : kNone;
  TopologyInfo info;
  info.sub = effective_topology(*net_, switches, sc,
                                extra ? std::span<const int>(additional_switch_)
                                      : std::span<const int>());
  auto grid = default_percolation_grid();
  info.p_m = percolation_threshold(info.sub.graph, grid, cfg_.percolation_trials,
                                   cfg_.percolation_seed);
  info.n_hc = high_centrality_count(info.sub.graph, CentralityRule{cfg_.centrality_std});
  return cache_.emplace(key, std::move(info)).first->second;
}

TopologyEvaluation GridEnv::evaluate(const SwitchVector& switches, int config, int grid,
                                     int scenario) const {
  if (config < 0 || config >= kNumConfigs) throw DomainError("configuration outside 0..5");
  const auto& topo = topology(switches, config == kNumConfigs - 1, scenario);
  const Subgraph& sub = topo.sub;
  auto label = connected_components(sub.graph);

  const int src_idx = sub.index_of(net_->source().id);
  const int src_comp = src_idx >= 0 ? label[src_idx] : -1;

  struct Candidate {
    SupplySource source;
    int comp;
    const DerRecord* der;
  };
  std::vector<Candidate> candidates;
  if (src_idx >= 0) candidates.push_back({{net_->source().id, net_->source_rating_kva}, src_comp, nullptr});
  const int n_active = std::min<int>(econ_.n_der[config], static_cast<int>(net_->ders.size()));
  for (int i = 0; i < n_active; ++i) {
    const auto& d = net_->ders[i];
    int idx = sub.index_of(d.node);
    if (idx < 0) continue;
    int comp = label[idx];
    // grid action 0 keeps DERs on the substation island in reserve
    if (grid == 0 && comp == src_comp) continue;
    candidates.push_back({{d.node, d.rating_kva}, comp, &d});
  }

  std::map<int, double> load_by_comp;
  for (const auto& n : net_->nodes) {
    int idx = sub.index_of(n.id);
    if (idx >= 0) load_by_comp[label[idx]] += n.demand_kva;
  }

  // capacity check per energized island; an overloaded island goes dark
  std::map<int, std::vector<const Candidate*>> by_comp;
  for (const auto& c : candidates) by_comp[c.comp].push_back(&c);
  TopologyEvaluation out;
  std::vector<SupplySource> sources;
  for (const auto& [comp, members] : by_comp) {
    double served = load_by_comp[comp];
    double capacity = 0.0;
    bool has_substation = false;
    for (const auto* m : members) {
      capacity += m->source.rating_kva;
      if (!m->der) has_substation = true;
    }
    std::vector<DerDispatch> dispatch;
    for (const auto* m : members) {
      if (!m->der) continue;
      double share = capacity > 0.0 ? served * m->der->rating_kva / capacity : 0.0;
      dispatch.push_back({m->der->node, std::clamp(share, m->der->p_min, m->der->p_max),
                          std::clamp(0.0, m->der->q_min, m->der->q_max)});
    }
    if (!dg_feasible(*net_, dispatch, served, has_substation)) continue;
    for (const auto* m : members) {
      sources.push_back(m->source);
      out.energized_sources.push_back(m->source.node_id);
    }
  }

  out.paths = classify_paths(sub, *net_, sources);
  auto supply = critical_supply(sub, *net_, sources);
  out.served_critical = supply.served_critical_ids;
  const int n_total = static_cast<int>(net_->critical_load_ids().size());
  out.metrics.pv_cl = path_variability(out.paths);
  out.metrics.n_cls = n_total > 0 ? cls_ratio(supply.served_critical_kva, net_->critical_demand_kva())
                                  : 0.0;
  if (n_total > 0 && !supply.ros_paths.empty()) {
    out.metrics.a_ros = average_ros(static_cast<int>(supply.served_critical_ids.size()), n_total,
                                    rating_of_service(supply.ros_paths),
                                    static_cast<int>(supply.ros_paths.size()));
  }
  out.metrics.p_m = topo.p_m;
  out.metrics.n_hc = topo.n_hc;
  return out;
}

void GridEnv::build_reference() {
  std::vector<SwitchVector> switch_sets = {all_switches(0), normal_switch_state(*net_),
                                           all_switches(1)};
  std::vector<MetricVector> ref;
  for (int sc = -1; sc < static_cast<int>(library_.size()); ++sc) {
    for (const auto& sv : switch_sets) {
      for (int c : {0, 1, 4, 5}) {
        for (int g : {0, 1}) ref.push_back(evaluate(sv, c, g, sc).metrics);
      }
    }
  }
  ref_min_ = ref.front().as_array();
  ref_max_ = ref_min_;
  for (const auto& m : ref) {
    auto a = m.as_array();
    for (int k = 0; k < kNumMetrics; ++k) {
      ref_min_[k] = std::min(ref_min_[k], a[k]);
      ref_max_[k] = std::max(ref_max_[k], a[k]);
    }
  }
}

NormalizedMetrics GridEnv::normalized(const MetricVector& m) const {
  auto a = m.as_array();
  NormalizedMetrics out{};
  for (int k = 0; k < kNumMetrics; ++k) {
    double lo = std::min(ref_min_[k], a[k]);
    double hi = std::max(ref_max_[k], a[k]);
    out[k] = hi > lo ? (a[k] - lo) / (hi - lo) : 0.5;
  }
  return out;
}

double GridEnv::resilience_of(const MetricVector& m) const {
  return resilience_score(normalized(m), weights_);
}

void GridEnv::set_weather_mode(WeatherMode mode, int scenario) {
  if (mode == WeatherMode::kForcedCalamity &&
      (scenario < -1 || scenario >= static_cast<int>(library_.size()))) {
    throw DomainError("scenario index outside the library");
  }
  mode_ = mode;
  forced_scenario_ = scenario;
}

std::array<double, kObsDim> GridEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  weather_ = {};
  if (mode_ == WeatherMode::kForcedCalamity) {
    weather_ = {Weather::kCalamity, forced_scenario_, 1};
  }
  switches_ = normal_switch_state(*net_);
  config_ = 0;
  step_ = 0;
  budget_ = cfg_.budget;
  cum_rho_ = 0.0;
  cum_cost_ = 0.0;
  last_cost_ = 0.0;
  auto ev = evaluate(switches_, config_, 0, weather_.w == Weather::kCalamity ? weather_.scenario : -1);
  auto norm = normalized(ev.metrics);
  resilience_block_ = {resilience_score(norm, weights_), norm[0], ev.metrics.n_cls, ev.metrics.a_ros};
  return observation();
}

bool GridEnv::done() const { return step_ >= episode_length_ || budget_ <= 0.0; }

std::array<double, kObsDim> GridEnv::observation() const {
  std::array<double, kObsDim> o{};
  o[0] = weather_.w == Weather::kCalamity ? 1.0 : 0.0;
  for (int i = 0; i < kNumSwitches; ++i) o[1 + i] = switches_[i];
  o[11] = std::clamp(budget_ / cfg_.budget, 0.0, 1.0);
  o[12] = std::clamp(static_cast<double>(step_) / episode_length_, 0.0, 1.0);
  for (int i = 0; i < 4; ++i) o[13 + i] = resilience_block_[i];
  double x = cum_rho_ / std::max(cum_cost_, 1.0);
  o[17] = x / (1.0 + x);
  o[18] = static_cast<double>(weather_.fault_duration) / episode_length_;
  o[19] = last_cost_ / cfg_.budget;
  return o;
}

StepOutcome GridEnv::step(const EnvAction& a) {
  if (a.config < 0 || a.config >= kNumConfigs) throw DomainError("configuration outside 0..5");
  if (a.grid != 0 && a.grid != 1) throw DomainError("grid action must be 0 or 1");
  for (auto s : a.switches) {
    if (s > 1) throw DomainError("switch action entries must be 0 or 1");
  }
  StepOutcome out;
  out.weather = weather_.w;
  out.scenario = weather_.scenario;
  if (done()) {
    out.done = true;
    out.observation = observation();
    out.config = config_;
    return out;
  }

  int toggles = 0, closed = 0;
  for (int i = 0; i < kNumSwitches; ++i) {
    toggles += a.switches[i] != switches_[i];
    closed += a.switches[i];
  }
  const double cost = step_cost(a.config, toggles, econ_, cfg_.toggle_cost);
  const bool calamity = weather_.w == Weather::kCalamity;
  auto ev = evaluate(a.switches, a.config, a.grid, calamity ? weather_.scenario : -1);
  auto norm = normalized(ev.metrics);
  const double rho = resilience_score(norm, weights_);

  double reward;
  if (calamity) {
    out.adapted = weather_.fault_duration <= cfg_.reward.adaptation_window + 1 && a.config != config_;
    reward = reward_calamity(rho, cost, out.adapted, cfg_.reward);
  } else {
    out.efficiency_bonus = cost <= cfg_.reward.efficiency_threshold;
    reward = reward_normal(rho, cost, cfg_.reward);
  }

  out.reward = reward;
  out.normalized_reward = normalize_reward(reward, reward_stats_);
  out.config = a.config;
  out.closed_switches = closed;
  out.toggles = toggles;
  out.rho = rho;
  out.step_cost = cost;
  out.metrics = ev.metrics;

  switches_ = a.switches;
  config_ = a.config;
  budget_ = std::max(0.0, budget_ - cost);
  ++step_;
  cum_rho_ += rho;
  cum_cost_ += cost;
  last_cost_ = cost;
  resilience_block_ = {rho, norm[0], ev.metrics.n_cls, ev.metrics.a_ros};

  switch (mode_) {
    case WeatherMode::kStochastic:
      weather_ = weather_transition(weather_, cfg_.p_enter, cfg_.p_exit,
                                    static_cast<int>(library_.size()), rng_);
      break;
    case WeatherMode::kForcedNormal:
      break;
    case WeatherMode::kForcedCalamity:
      ++weather_.fault_duration;
      break;
  }

  out.done = done();
  out.observation = observation();
  return out;
}

}  // namespace gridres
