#include "gridres/training.hpp"

#include <iostream>
#include <numeric>

#include <fmt/format.h>

#include "gridres/error.hpp"
#include "gridres/kv_config.hpp"

namespace fs = std::filesystem;

namespace gridres {

void TrainConfig::validate() const {
  if (episodes < 1) throw DomainError("episodes must be >= 1");
  if (update_every < 1) throw DomainError("update interval must be >= 1");
  if (checkpoint_interval < 1) throw DomainError("checkpoint interval must be >= 1");
  if (keep_checkpoints < 1) throw DomainError("must keep at least one checkpoint");
  if (strategic_share < 0.0 || strategic_share > 1.0) throw DomainError("reward share outside [0,1]");
}

std::optional<double> TrainingMetrics::moving_average(size_t index) const {
  if (index + 1 < 50 || index >= episode_rewards.size()) return std::nullopt;
  double s = 0.0;
  for (size_t i = index + 1 - 50; i <= index; ++i) s += episode_rewards[i];
  return s / 50.0;
}

double TrainingMetrics::recent_average() const {
  if (episode_rewards.empty()) return 0.0;
  size_t n = std::min<size_t>(50, episode_rewards.size());
  double s = std::accumulate(episode_rewards.end() - n, episode_rewards.end(), 0.0);
  return s / static_cast<double>(n);
}

std::string rewards_csv(const TrainingMetrics& m) {
  std::string out = "episode,reward,moving_avg50\n";
  for (size_t i = 0; i < m.episode_rewards.size(); ++i) {
    auto ma = m.moving_average(i);
    out += fmt::format("{},{},{}\n", i + 1, format_exact(m.episode_rewards[i]),
                       ma ? format_exact(*ma) : std::string());
  }
  return out;
}

std::string updates_csv(const TrainingMetrics& m) {
  std::string out = "update,agent,approx_kl,entropy\n";
  for (const auto& u : m.updates) {
    out += fmt::format("{},{},{},{}\n", u.update, u.agent, format_exact(u.stats.approx_kl),
                       format_exact(u.stats.entropy));
  }
  return out;
}

namespace {

std::vector<std::pair<int, std::vector<std::string_view>>> csv_rows(std::string_view text,
                                                                    std::string_view header,
                                                                    size_t width) {
  std::vector<std::pair<int, std::vector<std::string_view>>> rows;
  int line_no = 0;
  size_t start = 0;
  bool seen_header = false;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header) throw DataError(fmt::format("expected header '{}'", header), line_no);
      seen_header = true;
      continue;
    }
    std::vector<std::string_view> f;
    size_t i = 0;
    while (true) {
      auto c = line.find(',', i);
      if (c == std::string_view::npos) {
        f.push_back(line.substr(i));
        break;
      }
      f.push_back(line.substr(i, c - i));
      i = c + 1;
    }
    if (f.size() != width) throw DataError(fmt::format("expected {} fields", width), line_no);
    rows.emplace_back(line_no, std::move(f));
  }
  return rows;
}

int parse_int_field(std::string_view s, int line) {
  try {
    double v = parse_exact(s);
    if (v != static_cast<int>(v)) throw DataError("not an integer");
    return static_cast<int>(v);
  } catch (const DataError&) {
    throw DataError(fmt::format("bad integer '{}'", s), line);
  }
}

double parse_double_field(std::string_view s, int line) {
  try {
    return parse_exact(s);
  } catch (const DataError&) {
    throw DataError(fmt::format("bad number '{}'", s), line);
  }
}

}  // namespace

std::vector<RewardRow> parse_rewards_csv(std::string_view text) {
  std::vector<RewardRow> out;
  for (auto& [line, f] : csv_rows(text, "episode,reward,moving_avg50", 3)) {
    RewardRow r;
    r.episode = parse_int_field(f[0], line);
    r.reward = parse_double_field(f[1], line);
    if (!f[2].empty()) r.moving_avg = parse_double_field(f[2], line);
    out.push_back(r);
  }
  return out;
}

std::vector<UpdateRow> parse_updates_csv(std::string_view text) {
  std::vector<UpdateRow> out;
  for (auto& [line, f] : csv_rows(text, "update,agent,approx_kl,entropy", 4)) {
    UpdateRow r;
    r.update = parse_int_field(f[0], line);
    if (f[1] != "strategic" && f[1] != "tactical") {
      throw DataError(fmt::format("unknown agent '{}'", f[1]), line);
    }
    r.agent = std::string(f[1]);
    r.approx_kl = parse_double_field(f[2], line);
    r.entropy = parse_double_field(f[3], line);
    out.push_back(r);
  }
  return out;
}

std::uint64_t episode_seed(std::uint64_t seed, int episode) {
  return seed * 1000003ull + static_cast<std::uint64_t>(episode);
}

std::vector<double> tactical_input(const std::array<double, kObsDim>& obs, int config) {
  std::vector<double> x(obs.begin(), obs.end());
  x.push_back(static_cast<double>(config) / (kNumConfigs - 1));
  return x;
}

TrainResult train(const TrainConfig& cfg, GridEnv& env, Agent& strategic, Agent& tactical,
                  const TrainHooks& hooks) {
  cfg.validate();
  TrainResult res;
  double best_average = -std::numeric_limits<double>::infinity();

  if (!cfg.resume_path.empty()) {
    auto lr = load_checkpoint(cfg.resume_path, strategic, tactical);
    if (lr.ok) {
      res.resumed = true;
      if (lr.meta) {
        res.start_episode = std::min(lr.meta->episode, cfg.episodes);
        env.reward_stats() = lr.meta->reward_stats;
        best_average = lr.meta->best_average;
      }
    } else {
      res.resume_error = lr.error;
      std::cerr << "warning: could not resume (" << lr.error << "), starting fresh\n";
    }
  }

  std::mt19937_64 act_rng(cfg.seed ^ 0x5deece66dull);
  std::mt19937_64 update_rng(cfg.seed ^ 0xb5ad4eceda1ce2a9ull);
  ExperienceBuffer sbuf, tbuf;
  env.set_episode_length(env.config().episode_length);

  auto save = [&](int episodes_done, bool best_only) {
    if (cfg.checkpoint_dir.empty()) return;
    double avg = res.metrics.recent_average();
    if (best_only && !(avg > best_average)) return;
    best_average = std::max(best_average, avg);
    CheckpointMeta meta;
    meta.episode = episodes_done;
    meta.average_reward = avg;
    meta.best_average = best_average;
    meta.strategic_norms = strategic.obs_stats;
    meta.tactical_norms = tactical.obs_stats;
    meta.reward_stats = env.reward_stats();
    fs::create_directories(cfg.checkpoint_dir);
    auto dir = cfg.checkpoint_dir / checkpoint_name(episodes_done);
    save_checkpoint(dir, strategic, tactical, meta, hooks.save);
    res.checkpoints_written.push_back(dir);
    cleanup_checkpoints(cfg.checkpoint_dir, cfg.keep_checkpoints);
  };

  for (int ep = res.start_episode; ep < cfg.episodes; ++ep) {
    auto obs = env.reset(episode_seed(cfg.seed, ep));
    double total = 0.0;
    while (!env.done()) {
      const double w = obs[0];
      std::vector<double> raw(obs.begin(), obs.end());
      auto ds = act(strategic, raw, w, cfg.hp, act_rng, false, true);
      const int config = ds.action[0];
      auto dt = act(tactical, tactical_input(obs, config), w, cfg.hp, act_rng, false, true);

      EnvAction a;
      a.config = config;
      for (int i = 0; i < kNumSwitches; ++i) a.switches[i] = static_cast<std::uint8_t>(dt.action[i]);
      a.grid = dt.action[10];
      auto out = env.step(a);
      total += out.reward;

      const double rs = cfg.strategic_share * out.normalized_reward;
      const double rt = (1.0 - cfg.strategic_share) * out.normalized_reward;
      if (hooks.on_step) hooks.on_step(out.normalized_reward, rs, rt);
      sbuf.add({std::move(ds.input), w, ds.action, ds.log_prob, rs, ds.value, out.done});
      tbuf.add({std::move(dt.input), w, dt.action, dt.log_prob, rt, dt.value, out.done});
      obs = out.observation;
    }
    res.metrics.episode_rewards.push_back(total);
    if (hooks.on_episode) hooks.on_episode(ep + 1, total);

    if ((ep + 1) % cfg.update_every == 0 && !sbuf.empty() && !tbuf.empty()) {
      ++res.update_rounds;
      auto ss = ppo_update(strategic, sbuf, cfg.hp, update_rng);
      auto ts = ppo_update(tactical, tbuf, cfg.hp, update_rng);
      res.metrics.updates.push_back({res.update_rounds, "strategic", std::move(ss)});
      res.metrics.updates.push_back({res.update_rounds, "tactical", std::move(ts)});
      sbuf.clear();
      tbuf.clear();
    }
    if ((ep + 1) % cfg.checkpoint_interval == 0 && ep + 1 < cfg.episodes) {
      save(ep + 1, cfg.save_best_only);
    }
  }
  save(cfg.episodes, false);
  res.strategic_buffer_after = sbuf.size();
  res.tactical_buffer_after = tbuf.size();
  return res;
}

std::vector<EvalStep> run_greedy_episode(GridEnv& env, Agent& strategic, Agent& tactical,
                                         const PpoHyperparams& hp, std::uint64_t seed,
                                         int length) {
  env.set_episode_length(length);
  auto obs = env.reset(seed);
  std::mt19937_64 unused(0);
  std::vector<EvalStep> steps;
  while (!env.done()) {
    const double w = obs[0];
    std::vector<double> raw(obs.begin(), obs.end());
    auto ds = act(strategic, raw, w, hp, unused, true, false);
    auto dt = act(tactical, tactical_input(obs, ds.action[0]), w, hp, unused, true, false);
    EnvAction a;
    a.config = ds.action[0];
    for (int i = 0; i < kNumSwitches; ++i) a.switches[i] = static_cast<std::uint8_t>(dt.action[i]);
    a.grid = dt.action[10];
    const int t = env.step_index();
    auto out = env.step(a);
    EvalStep s;
    s.trace = {t, out.weather, out.config, out.closed_switches, out.rho, out.reward, out.step_cost};
    s.switches = a.switches;
    s.grid = a.grid;
    s.scenario = out.scenario;
    steps.push_back(s);
    obs = out.observation;
  }
  return steps;
}

EpisodeTrace to_trace(const std::vector<EvalStep>& steps) {
  EpisodeTrace t;
  for (const auto& s : steps) t.push_back(s.trace);
  return t;
}

}  // namespace gridres
