#ifndef GRIDRES_ECONOMICS_HPP_
#define GRIDRES_ECONOMICS_HPP_

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridres {

inline constexpr int kNumConfigs = 6;

enum class Weather { kNormal = 0, kCalamity = 1 };

std::string_view to_string(Weather w);

// Commercial-analysis constants. Configuration-indexed multipliers are
// linear interpolations across configurations 0..5 of the published ranges.
struct EconomicParameters {
  // capital
  double c_ctrl = 50000.0;
  double c_der = 3000.0;
  double c_sw = 1500.0;
  double c_comm = 2500.0;
  double c_prot = 2000.0;
  // operational
  double c_maint = 2.0;
  double c_fuel = 10.0;
  double c_comm_op = 0.5;
  double c_operator = 30.0;
  double c_monitor = 5.0;
  // failure
  double c_outage = 5.0;
  double c_restore = 50.0;
  double c_emerg = 200.0;
  double c_damage = 1000.0;  // loaded and validated, not used by any formula
  double c_rep = 5000.0;     // loaded and validated, not used by any formula
  // configuration multipliers
  std::array<double, kNumConfigs> mu_cap{1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
  std::array<double, kNumConfigs> mu_op{1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
  std::array<double, kNumConfigs> mu_maint{1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
  // other
  double discount_rate = 0.03;
  int lifetime_years = 5;
  double inflation_rate = 0.03;  // loaded and validated, not used by any formula
  double n_customers = 50.0;
  double v_outage = 100.0;
  double s_fee = 2000.0;
  double n_subscribers = 1.0;
  double p_contract = 1000.0;
  double i_rate = 2000.0;
  double c_dev = 30000.0;
  double c_init = 150000.0;
  double p_cost = 1000.0;
  double r_base = 0.5;
  std::array<double, kNumConfigs> c_config{0.0, 15.0, 28.0, 40.0, 50.0, 75.0};
  std::array<int, kNumConfigs> n_der{0, 1, 2, 3, 4, 4};
  int episode_length = 50;

  // throws DataError on a violated invariant
  void validate() const;

  // Keys mirror the field names; any subset may be given.
  static EconomicParameters from_text(std::string_view text);
  static EconomicParameters load(const std::filesystem::path& path);
};

struct TraceStep {
  int t = 0;
  Weather weather = Weather::kNormal;
  int config = 0;
  int closed_switches = 0;
  double resilience = 0.0;
  double reward = 0.0;
  double step_cost = 0.0;

  bool operator==(const TraceStep&) const = default;
};

using EpisodeTrace = std::vector<TraceStep>;

double capital_cost(int config, int closed_switches, const EconomicParameters& p);
double operational_cost(int config, int closed_switches, Weather w, const EconomicParameters& p);
double failure_cost(double resilience, Weather w, const EconomicParameters& p);
double resilience_value(double resilience, const EconomicParameters& p);
double revenue_potential(double resilience, Weather w, const EconomicParameters& p);
double risk_reduction_benefit(double resilience, Weather w, const EconomicParameters& p);

// C_config + C_cap + C_op + C_fail for one step
double step_total_cost(const TraceStep& s, const EconomicParameters& p);

// sum of per-step costs plus C_dev * T / 8760 with T the trace length
double total_cost(std::span<const TraceStep> trace, const EconomicParameters& p);

// revenue minus per-step cost, summed over the trace
double cash_flow(std::span<const TraceStep> trace, const EconomicParameters& p);

// -C_init + sum_y CF_y / (1 + delta)^y, y counted from 0; at most L entries
double npv(std::span<const double> yearly_cash_flows, const EconomicParameters& p);

struct YearTrace {
  int year = 0;
  EpisodeTrace trace;
};
// buckets traces by year index then discounts
double npv_from_traces(std::span<const YearTrace> traces, const EconomicParameters& p);

struct CostEffectiveness {
  double revenue_total = 0.0;
  double risk_benefit_total = 0.0;
  double cost_total = 0.0;
  double bcr = 0.0;
  double cpub = 0.0;  // +inf when benefits are zero
  double nb = 0.0;
};

CostEffectiveness cost_effectiveness(std::span<const TraceStep> trace,
                                     const EconomicParameters& p);
// pooled over several traces; each trace carries its own development term
CostEffectiveness cost_effectiveness(std::span<const EpisodeTrace> traces,
                                     const EconomicParameters& p);

// t,weather,config,closed_switches,resilience,reward,step_cost
std::string trace_to_csv(std::span<const TraceStep> trace);
EpisodeTrace trace_from_csv(std::string_view text);

}  // namespace gridres

#endif  // GRIDRES_ECONOMICS_HPP_
