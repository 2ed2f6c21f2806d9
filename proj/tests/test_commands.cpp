#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "gridres/commands.hpp"
#include "gridres/error.hpp"
#include "gridres/kv_config.hpp"

using namespace gridres;
namespace fs = std::filesystem;

namespace {

fs::path temp_root(const std::string& name) {
  auto p = fs::temp_directory_path() / ("gridres_cmd_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// a checkpoint with the default network sizes the commands expect
fs::path make_checkpoint(const fs::path& root, std::uint64_t seed) {
  PpoHyperparams hp;
  auto s = Agent::make(AgentKind::kStrategic, hp, seed);
  auto t = Agent::make(AgentKind::kTactical, hp, seed + 1);
  auto dir = root / "ckpt_1";
  save_checkpoint(dir, s, t, CheckpointMeta{1, 0, 0, VectorRunningStats(kObsDim),
                                            VectorRunningStats(kTacticalObsDim), {}});
  return dir;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(GRIDRES_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("recommendation labels and row format") {
  EconomicParameters e;
  CHECK(recommendation_label(0, e) == "0 DER");
  CHECK(recommendation_label(3, e) == "3 DER");
  CHECK(recommendation_label(4, e) == "4 DER");
  CHECK(recommendation_label(5, e) == "4 DER + Additional Switch");
  CHECK_THROWS_AS(recommendation_label(6, e), DomainError);

  SwitchVector s{1, 0, 1, 0, 0, 1, 1, 1, 0, 1};
  CHECK(switch_bits(s) == "[1 0 1 0 0 1 1 1 0 1]");
  ContingencyRow r{2, "Hurricane", "4 DER", s, 1234.5};
  CHECK(format_row(r) == "2,Hurricane,4 DER,[1 0 1 0 0 1 1 1 0 1],1234.5");
}

TEST_CASE("evaluation summary") {
  EconomicParameters p;
  std::vector<EpisodeTrace> traces(2);
  traces[0] = {{0, Weather::kCalamity, 4, 3, 0.8, 10.0, 50.0},
               {1, Weather::kNormal, 0, 5, 0.6, 5.0, 0.0}};
  traces[1] = {{0, Weather::kCalamity, 1, 2, 0.4, -3.0, 15.0},
               {1, Weather::kCalamity, 5, 9, 1.0, 7.0, 75.0}};
  auto s = summarize(traces, p);
  CHECK(s.episodes == 2);
  CHECK(s.calamity_steps == 3);
  CHECK(std::accumulate(s.calamity_configs.begin(), s.calamity_configs.end(), 0) == 3);
  CHECK(s.calamity_configs[4] == 1);
  CHECK(s.calamity_configs[5] == 1);
  CHECK(s.high_der_fraction == doctest::Approx(2.0 / 3.0));
  CHECK(s.resilience_mean == doctest::Approx(0.7));
  CHECK(s.resilience_std == doctest::Approx(0.0));
  CHECK(s.reward_mean == doctest::Approx(9.5));
  CHECK(s.resilience_value == doctest::Approx(5000.0 * 2.8));
  CHECK(s.economics.bcr * s.economics.cpub == doctest::Approx(1.0));
  auto text = summary_to_text(s);
  CHECK(text.find("calamity_steps=3\n") != std::string::npos);
  CHECK(text.find("bcr=") != std::string::npos);
}

TEST_CASE("evaluate is deterministic") {
  auto root = temp_root("eval");
  auto ckpt = make_checkpoint(root, 31);
  std::ostringstream log;
  CommonOptions c;
  c.out_dir = root / "a";
  EvaluateOptions o{ckpt, 2};
  CHECK(cmd_evaluate(c, o, log) == kExitOk);
  c.out_dir = root / "b";
  CHECK(cmd_evaluate(c, o, log) == kExitOk);
  auto a = read_text_file(root / "a" / "eval" / "summary.txt");
  CHECK(a == read_text_file(root / "b" / "eval" / "summary.txt"));
  CHECK(a.find("episodes=2\n") == 0);
  auto trace = trace_from_csv(read_text_file(root / "a" / "eval" / "episode_1.csv"));
  CHECK(trace.size() == 50);
  EvaluateOptions missing{root / "nope", 1};
  CHECK_THROWS_AS(cmd_evaluate(c, missing, log), CheckpointError);
  fs::remove_all(root);
}

TEST_CASE("recommend report agrees with its traces") {
  auto root = temp_root("recommend");
  auto ckpt = make_checkpoint(root, 41);
  std::ostringstream log;
  CommonOptions c;
  c.out_dir = root;
  RecommendOptions o{ckpt, {"hurricane", "wildfire"}};
  REQUIRE(cmd_recommend(c, o, log) == kExitOk);
  auto rows = lines_of(read_text_file(root / "recommend" / "contingency_report.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "contingency,weather,recommendation,switches,total_cost");
  CHECK(rows[1].rfind("1,Normal,Base Case,[", 0) == 0);
  CHECK(rows[2].rfind("1,Hurricane,", 0) == 0);
  CHECK(rows[4].rfind("2,Wildfire,", 0) == 0);

  EconomicParameters econ = EconomicParameters::load(GRIDRES_DATA_DIR "/economics.conf");
  auto cost_of = [&](const std::string& tag) {
    return total_cost(trace_from_csv(read_text_file(root / "recommend" / (tag + "_trace.csv"))),
                      econ);
  };
  auto reported = [&](const std::string& row) {
    return parse_exact(row.substr(row.rfind(',') + 1));
  };
  CHECK(std::abs(reported(rows[1]) - cost_of("normal")) < 1e-6);
  CHECK(std::abs(reported(rows[2]) - cost_of("hurricane")) < 1e-6);
  CHECK(std::abs(reported(rows[4]) - cost_of("wildfire")) < 1e-6);
  auto hurricane = trace_from_csv(read_text_file(root / "recommend" / "hurricane_trace.csv"));
  for (const auto& st : hurricane) CHECK(st.weather == Weather::kCalamity);

  RecommendOptions bad{ckpt, {"volcano"}};
  CHECK_THROWS_AS(cmd_recommend(c, bad, log), DataError);
  fs::remove_all(root);
}

TEST_CASE("report writes plot data") {
  auto root = temp_root("report");
  TrainingMetrics m;
  for (int i = 0; i < 55; ++i) m.episode_rewards.push_back(i);
  m.updates.push_back({1, "strategic", {}});
  m.updates.push_back({1, "tactical", {}});
  fs::create_directories(root / "metrics");
  std::ofstream(root / "metrics" / "rewards.csv") << rewards_csv(m);
  std::ofstream(root / "metrics" / "updates.csv") << updates_csv(m);
  std::ostringstream log;
  CommonOptions c;
  c.out_dir = root;
  CHECK(cmd_report(c, ReportOptions{}, log) == kExitOk);
  CHECK(lines_of(read_text_file(root / "plots" / "reward_curve.dat")).size() == 55);
  CHECK(lines_of(read_text_file(root / "plots" / "kl_entropy_tactical.dat")).size() == 1);

  std::ofstream(root / "metrics" / "rewards.csv") << "episode,reward,moving_avg50\n";
  fs::remove(root / "metrics" / "updates.csv");
  CHECK(cmd_report(c, ReportOptions{}, log) == kExitOk);
  CHECK(read_text_file(root / "plots" / "reward_curve.dat").empty());
  CHECK(read_text_file(root / "plots" / "kl_entropy_strategic.dat").empty());

  std::ofstream(root / "metrics" / "rewards.csv") << "episode,reward,moving_avg50\n1,oops,\n";
  CHECK_THROWS_AS(cmd_report(c, ReportOptions{}, log), DataError);
  fs::remove_all(root);
}

TEST_CASE("cli exit codes") {
  auto root = temp_root("cli");
  CHECK(run_cli("") == kExitUsage);
  CHECK(run_cli("--help") == kExitOk);
  CHECK(run_cli("evaluate") == kExitUsage);
  CHECK(run_cli("train --episodes 0") == kExitUsage);
  CHECK(run_cli("--out-dir " + root.string() + " evaluate --checkpoint " +
                (root / "nope").string()) == kExitCheckpoint);
  CHECK(run_cli("--out-dir " + root.string() + " report") == kExitData);
  auto ckpt = make_checkpoint(root, 5);
  CHECK(run_cli("--out-dir " + root.string() + " evaluate --episodes 1 --checkpoint " +
                ckpt.string()) == kExitOk);
  CHECK(fs::exists(root / "eval" / "summary.txt"));
  fs::remove_all(root);
}
