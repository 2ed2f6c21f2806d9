#include "gridres/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "gridres/error.hpp"
#include "gridres/kv_config.hpp"

namespace fs = std::filesystem;

namespace gridres {
namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << text;
  os.flush();
  if (!os) throw DataError(fmt::format("{}: write failed", path.string()));
}

std::pair<Agent, Agent> fresh_agents(std::uint64_t seed, const PpoHyperparams& hp) {
  return {Agent::make(AgentKind::kStrategic, hp, seed * 2 + 1),
          Agent::make(AgentKind::kTactical, hp, seed * 2 + 2)};
}

std::pair<Agent, Agent> load_agents(const fs::path& dir, std::uint64_t seed,
                                    const PpoHyperparams& hp) {
  auto [s, t] = fresh_agents(seed, hp);
  auto r = load_checkpoint(dir, s, t);
  if (!r.ok) throw CheckpointError(r.error);
  return {std::move(s), std::move(t)};
}

std::string capitalize(std::string s) {
  bool start = true;
  for (auto& ch : s) {
    if (ch == '_') {
      ch = ' ';
      start = true;
    } else if (start) {
      ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      start = false;
    }
  }
  return s;
}

// evaluation episodes never share seeds with training episodes
std::uint64_t eval_seed(std::uint64_t seed, int episode) {
  return episode_seed(seed, 1'000'000 + episode);
}

}  // namespace

fs::path default_data_dir() { return fs::path(GRIDRES_DATA_DIR); }

Workspace open_workspace(const CommonOptions& opts, const std::vector<Scenario>& extra) {
  Workspace w;
  auto data = default_data_dir();
  auto feeder = opts.feeder.empty() ? data / "ieee123_simplified.feeder" : opts.feeder;
  w.net = std::make_shared<const GridNetwork>(load_feeder(feeder));
  w.env_cfg = EnvConfig::load(opts.env_config.empty() ? data / "env.conf" : opts.env_config);
  w.econ = EconomicParameters::load(opts.econ_config.empty() ? data / "economics.conf"
                                                             : opts.econ_config);
  std::vector<Scenario> library;
  if (!w.env_cfg.scenario_dir.empty()) {
    library = load_scenario_library(w.env_cfg.scenario_dir, *w.net);
  }
  for (const auto& s : extra) {
    bool known = std::any_of(library.begin(), library.end(),
                             [&](const Scenario& l) { return l.name == s.name; });
    if (!known) library.push_back(s);
  }
  AhpWeights weights = default_metric_weights();
  if (!w.env_cfg.metric_weights.empty()) {
    weights = metric_weights_from_values(w.env_cfg.metric_weights);
  } else if (!w.env_cfg.weights_file.empty()) {
    weights = ahp_weights(parse_pairwise_matrix(read_text_file(w.env_cfg.weights_file)));
  }
  w.env = std::make_unique<GridEnv>(w.net, w.env_cfg, w.econ, std::move(library), weights);
  return w;
}

std::string recommendation_label(int config, const EconomicParameters& econ) {
  if (config < 0 || config >= kNumConfigs) throw DomainError("configuration outside 0..5");
  std::string label = fmt::format("{} DER", econ.n_der[config]);
  if (config == kNumConfigs - 1) label += " + Additional Switch";
  return label;
}

std::string switch_bits(const SwitchVector& s) {
  std::string out = "[";
  for (int i = 0; i < kNumSwitches; ++i) {
    if (i) out += ' ';
    out += s[i] ? '1' : '0';
  }
  return out + "]";
}

std::string format_row(const ContingencyRow& r) {
  return fmt::format("{},{},{},{},{}", r.contingency, r.weather, r.recommendation,
                     switch_bits(r.switches), format_exact(r.total_cost));
}

EvaluationSummary summarize(const std::vector<EpisodeTrace>& traces, const EconomicParameters& p) {
  EvaluationSummary s;
  s.episodes = static_cast<int>(traces.size());
  std::vector<double> means;
  double reward_total = 0.0;
  int high = 0;
  for (const auto& tr : traces) {
    double rho = 0.0, reward = 0.0;
    for (const auto& st : tr) {
      rho += st.resilience;
      reward += st.reward;
      s.resilience_value += resilience_value(st.resilience, p);
      if (st.weather == Weather::kCalamity) {
        ++s.calamity_steps;
        ++s.calamity_configs[st.config];
        if (p.n_der[st.config] >= 4) ++high;
      }
    }
    means.push_back(tr.empty() ? 0.0 : rho / static_cast<double>(tr.size()));
    reward_total += reward;
  }
  if (!means.empty()) {
    s.resilience_mean = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double var = 0.0;
    for (double m : means) var += (m - s.resilience_mean) * (m - s.resilience_mean);
    s.resilience_std = std::sqrt(var / means.size());
    s.reward_mean = reward_total / static_cast<double>(means.size());
  }
  s.high_der_fraction = s.calamity_steps > 0 ? static_cast<double>(high) / s.calamity_steps : 0.0;
  s.economics = cost_effectiveness(std::span<const EpisodeTrace>(traces), p);
  std::vector<YearTrace> years;
  for (const auto& tr : traces) years.push_back({0, tr});
  s.npv = npv_from_traces(years, p);
  return s;
}

std::string summary_to_text(const EvaluationSummary& s) {
  std::string out;
  out += fmt::format("episodes={}\n", s.episodes);
  out += fmt::format("resilience_mean={}\n", format_exact(s.resilience_mean));
  out += fmt::format("resilience_std={}\n", format_exact(s.resilience_std));
  out += fmt::format("reward_mean={}\n", format_exact(s.reward_mean));
  out += fmt::format("calamity_steps={}\n", s.calamity_steps);
  for (int c = 0; c < kNumConfigs; ++c) {
    out += fmt::format("calamity_config_{}={}\n", c, s.calamity_configs[c]);
  }
  out += fmt::format("calamity_high_der_fraction={}\n", format_exact(s.high_der_fraction));
  out += fmt::format("total_cost={}\n", format_exact(s.economics.cost_total));
  out += fmt::format("revenue={}\n", format_exact(s.economics.revenue_total));
  out += fmt::format("risk_benefit={}\n", format_exact(s.economics.risk_benefit_total));
  out += fmt::format("resilience_value={}\n", format_exact(s.resilience_value));
  out += fmt::format("bcr={}\n", format_exact(s.economics.bcr));
  out += fmt::format("cpub={}\n", std::isinf(s.economics.cpub) ? std::string("inf")
                                                                 : format_exact(s.economics.cpub));
  out += fmt::format("nb={}\n", format_exact(s.economics.nb));
  out += fmt::format("npv={}\n", format_exact(s.npv));
  return out;
}

int cmd_train(const CommonOptions& c, const TrainOptions& o, std::ostream& log) {
  auto ws = open_workspace(c);
  TrainConfig tc;
  tc.episodes = o.episodes;
  tc.update_every = o.update_every;
  tc.checkpoint_interval = o.checkpoint_interval;
  tc.save_best_only = o.save_best;
  tc.keep_checkpoints = o.keep;
  tc.resume_path = o.resume;
  tc.checkpoint_dir = c.out_dir / "checkpoints";
  tc.seed = c.seed;
  tc.validate();
  auto [s, t] = fresh_agents(c.seed, tc.hp);

  TrainHooks hooks;
  hooks.on_episode = [&](int ep, double reward) {
    if (ep % 25 == 0) log << fmt::format("episode {} reward {:.2f}\n", ep, reward);
  };
  auto res = train(tc, *ws.env, s, t, hooks);
  if (!res.resume_error.empty()) log << "resume failed, trained from scratch\n";

  write_file(c.out_dir / "metrics" / "rewards.csv", rewards_csv(res.metrics));
  write_file(c.out_dir / "metrics" / "updates.csv", updates_csv(res.metrics));
  log << fmt::format("{} episodes, {} update rounds, checkpoints in {}\n",
                     res.metrics.episode_rewards.size(), res.update_rounds,
                     tc.checkpoint_dir.string());
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& c, const EvaluateOptions& o, std::ostream& log) {
  if (o.episodes < 1) throw DomainError("episodes must be >= 1");
  auto ws = open_workspace(c);
  PpoHyperparams hp;
  auto [s, t] = load_agents(o.checkpoint, c.seed, hp);
  std::vector<EpisodeTrace> traces;
  for (int e = 0; e < o.episodes; ++e) {
    auto steps = run_greedy_episode(*ws.env, s, t, hp, eval_seed(c.seed, e),
                                    ws.env_cfg.eval_episode_length);
    traces.push_back(to_trace(steps));
    write_file(c.out_dir / "eval" / fmt::format("episode_{}.csv", e + 1),
               trace_to_csv(traces.back()));
  }
  auto summary = summarize(traces, ws.econ);
  auto text = summary_to_text(summary);
  write_file(c.out_dir / "eval" / "summary.txt", text);
  log << text;
  return kExitOk;
}

int cmd_recommend(const CommonOptions& c, const RecommendOptions& o, std::ostream& log) {
  // resolve scenario arguments: existing files first, then library names
  CommonOptions base = c;
  auto probe = open_workspace(base);
  std::vector<Scenario> requested;
  std::vector<Scenario> extra;
  for (const auto& arg : o.scenarios) {
    if (fs::is_regular_file(arg)) {
      auto sc = load_scenario(arg, *probe.net);
      requested.push_back(sc);
      extra.push_back(sc);
      continue;
    }
    auto& lib = probe.env->scenarios();
    auto it = std::find_if(lib.begin(), lib.end(), [&](const Scenario& s) { return s.name == arg; });
    if (it == lib.end()) throw DataError(fmt::format("unknown scenario '{}'", arg));
    requested.push_back(*it);
  }
  auto ws = extra.empty() ? std::move(probe) : open_workspace(base, extra);
  if (o.scenarios.empty()) requested = ws.env->scenarios();
  if (requested.empty()) throw DataError("no scenarios to analyse");

  PpoHyperparams hp;
  auto [s, t] = load_agents(o.checkpoint, c.seed, hp);
  const int length = ws.env_cfg.eval_episode_length;
  auto& env = *ws.env;

  auto run = [&](WeatherMode mode, int scenario, const std::string& tag) {
    env.set_weather_mode(mode, scenario);
    auto steps = run_greedy_episode(env, s, t, hp, eval_seed(c.seed, 0), length);
    env.set_weather_mode(WeatherMode::kStochastic);
    auto trace = to_trace(steps);
    write_file(c.out_dir / "recommend" / fmt::format("{}_trace.csv", tag), trace_to_csv(trace));
    return std::make_pair(steps, trace);
  };

  std::vector<ContingencyRow> rows;
  auto [base_steps, base_trace] = run(WeatherMode::kForcedNormal, -1, "normal");
  int id = 0;
  for (const auto& sc : requested) {
    ++id;
    const auto& lib = env.scenarios();
    int index = static_cast<int>(
        std::find_if(lib.begin(), lib.end(), [&](const Scenario& l) { return l.name == sc.name; }) -
        lib.begin());
    ContingencyRow normal{id, "Normal", "Base Case", base_steps.front().switches,
                          total_cost(base_trace, ws.econ)};
    auto [steps, trace] = run(WeatherMode::kForcedCalamity, index, sc.name);
    ContingencyRow row{id, capitalize(sc.name),
                       recommendation_label(steps.front().trace.config, ws.econ),
                       steps.front().switches, total_cost(trace, ws.econ)};
    rows.push_back(normal);
    rows.push_back(row);
  }

  std::string csv = "contingency,weather,recommendation,switches,total_cost\n";
  for (const auto& r : rows) csv += format_row(r) + "\n";
  write_file(c.out_dir / "recommend" / "contingency_report.csv", csv);
  for (const auto& r : rows) {
    log << fmt::format("{:<4} {:<14} {:<26} {} ${:.2f}\n", r.contingency, r.weather,
                       r.recommendation, switch_bits(r.switches), r.total_cost);
  }
  return kExitOk;
}

int cmd_report(const CommonOptions& c, const ReportOptions& o, std::ostream& log) {
  auto rewards_path = o.rewards_csv.empty() ? c.out_dir / "metrics" / "rewards.csv" : o.rewards_csv;
  auto updates_path = o.updates_csv.empty() ? c.out_dir / "metrics" / "updates.csv" : o.updates_csv;
  if (!fs::exists(rewards_path)) throw DataError(fmt::format("{}: not found", rewards_path.string()));

  std::vector<RewardRow> rewards;
  try {
    rewards = parse_rewards_csv(read_text_file(rewards_path));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", rewards_path.string(), e.what()));
  }
  std::vector<UpdateRow> updates;
  if (fs::exists(updates_path)) {
    try {
      updates = parse_updates_csv(read_text_file(updates_path));
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}: {}", updates_path.string(), e.what()));
    }
  }

  std::string curve;
  for (const auto& r : rewards) {
    curve += fmt::format("{} {} {}\n", r.episode, format_exact(r.reward),
                         r.moving_avg ? format_exact(*r.moving_avg) : std::string("nan"));
  }
  std::map<std::string, std::string> per_agent{{"strategic", ""}, {"tactical", ""}};
  for (const auto& u : updates) {
    per_agent[u.agent] +=
        fmt::format("{} {} {}\n", u.update, format_exact(u.approx_kl), format_exact(u.entropy));
  }
  auto dir = c.out_dir / "plots";
  write_file(dir / "reward_curve.dat", curve);
  for (const auto& [agent, text] : per_agent) {
    write_file(dir / fmt::format("kl_entropy_{}.dat", agent), text);
  }
  log << fmt::format("{} reward rows, {} update rows written to {}\n", rewards.size(),
                     updates.size(), dir.string());
  return kExitOk;
}

}  // namespace gridres
