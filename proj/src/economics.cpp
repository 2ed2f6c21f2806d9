#include "gridres/economics.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gridres/error.hpp"
#include "gridres/feeder.hpp"
#include "gridres/kv_config.hpp"

namespace gridres {
namespace {

void check_config(int c) {
  if (c < 0 || c >= kNumConfigs) throw DomainError("configuration outside 0..5");
}

double gamma_multiplier(Weather w) { return w == Weather::kCalamity ? 1.5 : 1.0; }
double phi_multiplier(Weather w) { return w == Weather::kCalamity ? 3.0 : 1.0; }

template <typename T>
void load_array(const KeyValueConfig& kv, const std::string& key,
                std::array<T, kNumConfigs>& out) {
  if (!kv.has(key)) return;
  auto v = kv.get_doubles(key);
  if (v.size() != kNumConfigs) {
    throw DataError(fmt::format("'{}' needs {} comma separated values", key, kNumConfigs));
  }
  for (int i = 0; i < kNumConfigs; ++i) out[i] = static_cast<T>(v[i]);
}

}  // namespace

std::string_view to_string(Weather w) { return w == Weather::kCalamity ? "calamity" : "normal"; }

void EconomicParameters::validate() const {
  const double money[] = {c_ctrl,     c_der,     c_sw,      c_comm,    c_prot,   c_maint,
                          c_fuel,     c_comm_op, c_operator, c_monitor, c_outage, c_restore,
                          c_emerg,    c_damage,  c_rep,     v_outage,  s_fee,    p_contract,
                          i_rate,     c_dev,     c_init,    p_cost};
  for (double m : money) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw DataError("monetary values must be >= 0");
  }
  if (!(discount_rate >= 0.0 && discount_rate < 1.0)) throw DataError("discount rate outside [0,1)");
  if (!(inflation_rate >= 0.0 && inflation_rate < 1.0)) {
    throw DataError("inflation rate outside [0,1)");
  }
  if (lifetime_years < 1) throw DataError("project lifetime must be >= 1 year");
  if (n_customers < 0.0 || n_subscribers < 0.0) throw DataError("negative customer count");
  if (r_base < 0.0 || r_base > 1.0) throw DataError("baseline resilience outside [0,1]");
  if (episode_length < 0) throw DataError("negative episode length");
  for (int c = 0; c < kNumConfigs; ++c) {
    if (mu_cap[c] < 0.0 || mu_op[c] < 0.0 || mu_maint[c] < 0.0) {
      throw DataError("negative configuration multiplier");
    }
    if (c_config[c] < 0.0) throw DataError("negative configuration base cost");
    if (n_der[c] < 0) throw DataError("negative DER count");
  }
}

EconomicParameters EconomicParameters::from_text(std::string_view text) {
  auto kv = KeyValueConfig::parse(text);
  EconomicParameters p;
  auto set = [&](const char* key, double& field) {
    if (kv.has(key)) field = kv.get_double(key);
  };
  set("c_ctrl", p.c_ctrl);
  set("c_der", p.c_der);
  set("c_sw", p.c_sw);
  set("c_comm", p.c_comm);
  set("c_prot", p.c_prot);
  set("c_maint", p.c_maint);
  set("c_fuel", p.c_fuel);
  set("c_comm_op", p.c_comm_op);
  set("c_operator", p.c_operator);
  set("c_monitor", p.c_monitor);
  set("c_outage", p.c_outage);
  set("c_restore", p.c_restore);
  set("c_emerg", p.c_emerg);
  set("c_damage", p.c_damage);
  set("c_rep", p.c_rep);
  set("delta", p.discount_rate);
  set("eta", p.inflation_rate);
  set("n_customers", p.n_customers);
  set("v_outage", p.v_outage);
  set("s_fee", p.s_fee);
  set("n_subscribers", p.n_subscribers);
  set("p_contract", p.p_contract);
  set("i_rate", p.i_rate);
  set("c_dev", p.c_dev);
  set("c_init", p.c_init);
  set("p_cost", p.p_cost);
  set("r_base", p.r_base);
  if (kv.has("lifetime")) p.lifetime_years = kv.get_int("lifetime");
  if (kv.has("episode_length")) p.episode_length = kv.get_int("episode_length");
  load_array(kv, "mu_cap", p.mu_cap);
  load_array(kv, "mu_op", p.mu_op);
  load_array(kv, "mu_maint", p.mu_maint);
  load_array(kv, "c_config", p.c_config);
  load_array(kv, "n_der", p.n_der);
  kv.require_all_used();
  p.validate();
  return p;
}

EconomicParameters EconomicParameters::load(const std::filesystem::path& path) {
  auto text = read_text_file(path);
  try {
    return from_text(text);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

double capital_cost(int c, int s, const EconomicParameters& p) {
  check_config(c);
  return (p.c_ctrl + p.n_der[c] * p.c_der + s * (p.c_sw + p.c_comm + p.c_prot)) * p.mu_cap[c] /
         p.lifetime_years;
}

double operational_cost(int c, int s, Weather w, const EconomicParameters& p) {
  check_config(c);
  return (p.c_operator + p.c_monitor + p.c_maint * s + p.n_der[c] * p.c_fuel + p.c_comm_op * s) *
         p.mu_op[c] * gamma_multiplier(w);
}

double failure_cost(double r, Weather w, const EconomicParameters& p) {
  return (1.0 - r) * (p.n_customers * p.c_outage + 2.0 * p.c_restore + 10.0 * p.c_emerg) *
         phi_multiplier(w);
}

double resilience_value(double r, const EconomicParameters& p) {
  return r * p.v_outage * p.n_customers;
}

double revenue_potential(double r, Weather w, const EconomicParameters& p) {
  double calamity = w == Weather::kCalamity ? 1.0 : 0.0;
  return p.s_fee * p.n_subscribers * p.episode_length / 30.0 + p.p_contract * r +
         p.i_rate * r * calamity;
}

double risk_reduction_benefit(double r, Weather w, const EconomicParameters& p) {
  if (w == Weather::kCalamity && r < p.r_base) return p.p_cost * (p.r_base - r);
  return 0.0;
}

double step_total_cost(const TraceStep& s, const EconomicParameters& p) {
  check_config(s.config);
  return p.c_config[s.config] + capital_cost(s.config, s.closed_switches, p) +
         operational_cost(s.config, s.closed_switches, s.weather, p) +
         failure_cost(s.resilience, s.weather, p);
}

double total_cost(std::span<const TraceStep> trace, const EconomicParameters& p) {
  double sum = 0.0;
  for (const auto& s : trace) sum += step_total_cost(s, p);
  return sum + p.c_dev * static_cast<double>(trace.size()) / 8760.0;
}

double cash_flow(std::span<const TraceStep> trace, const EconomicParameters& p) {
  double cf = 0.0;
  for (const auto& s : trace) cf += revenue_potential(s.resilience, s.weather, p) - step_total_cost(s, p);
  return cf;
}

double npv(std::span<const double> cf, const EconomicParameters& p) {
  if (static_cast<int>(cf.size()) > p.lifetime_years) {
    throw DomainError("more yearly cash flows than the project lifetime");
  }
  double v = -p.c_init;
  for (size_t y = 0; y < cf.size(); ++y) v += cf[y] / std::pow(1.0 + p.discount_rate, y);
  return v;
}

double npv_from_traces(std::span<const YearTrace> traces, const EconomicParameters& p) {
  std::vector<double> cf(p.lifetime_years, 0.0);
  for (const auto& yt : traces) {
    if (yt.year < 0 || yt.year >= p.lifetime_years) {
      throw DomainError("year index outside the project lifetime");
    }
    cf[yt.year] += cash_flow(yt.trace, p);
  }
  return npv(cf, p);
}

namespace {

CostEffectiveness finish(double revenue, double risk, double cost) {
  if (!(cost > 0.0)) throw DomainError("total cost must be positive");
  CostEffectiveness ce;
  ce.revenue_total = revenue;
  ce.risk_benefit_total = risk;
  ce.cost_total = cost;
  double benefits = revenue + risk;
  ce.bcr = benefits / cost;
  ce.cpub = benefits > 0.0 ? cost / benefits : std::numeric_limits<double>::infinity();
  ce.nb = benefits - cost;
  return ce;
}

}  // namespace

CostEffectiveness cost_effectiveness(std::span<const TraceStep> trace,
                                     const EconomicParameters& p) {
  double revenue = 0.0, risk = 0.0;
  for (const auto& s : trace) {
    revenue += revenue_potential(s.resilience, s.weather, p);
    risk += risk_reduction_benefit(s.resilience, s.weather, p);
  }
  return finish(revenue, risk, total_cost(trace, p));
}

CostEffectiveness cost_effectiveness(std::span<const EpisodeTrace> traces,
                                     const EconomicParameters& p) {
  double revenue = 0.0, risk = 0.0, cost = 0.0;
  for (const auto& tr : traces) {
    for (const auto& s : tr) {
      revenue += revenue_potential(s.resilience, s.weather, p);
      risk += risk_reduction_benefit(s.resilience, s.weather, p);
    }
    cost += total_cost(tr, p);
  }
  return finish(revenue, risk, cost);
}

std::string trace_to_csv(std::span<const TraceStep> trace) {
  std::string out = "t,weather,config,closed_switches,resilience,reward,step_cost\n";
  for (const auto& s : trace) {
    out += fmt::format("{},{},{},{},{},{},{}\n", s.t, to_string(s.weather), s.config,
                       s.closed_switches, format_exact(s.resilience), format_exact(s.reward),
                       format_exact(s.step_cost));
  }
  return out;
}

EpisodeTrace trace_from_csv(std::string_view text) {
  EpisodeTrace trace;
  int line_no = 0;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "t,weather,config,closed_switches,resilience,reward,step_cost") {
        throw DataError("unexpected trace header", line_no);
      }
      continue;
    }
    std::vector<std::string_view> f;
    size_t i = 0;
    while (true) {
      auto comma = line.find(',', i);
      f.push_back(line.substr(i, comma == std::string_view::npos ? std::string_view::npos
                                                                 : comma - i));
      if (comma == std::string_view::npos) break;
      i = comma + 1;
    }
    if (f.size() != 7) throw DataError("trace rows need 7 fields", line_no);
    try {
      TraceStep s;
      s.t = static_cast<int>(parse_exact(f[0]));
      if (f[1] == "calamity" || f[1] == "1") {
        s.weather = Weather::kCalamity;
      } else if (f[1] == "normal" || f[1] == "0") {
        s.weather = Weather::kNormal;
      } else {
        throw DataError(fmt::format("unknown weather '{}'", f[1]));
      }
      s.config = static_cast<int>(parse_exact(f[2]));
      s.closed_switches = static_cast<int>(parse_exact(f[3]));
      s.resilience = parse_exact(f[4]);
      s.reward = parse_exact(f[5]);
      s.step_cost = parse_exact(f[6]);
      trace.push_back(s);
    } catch (const DataError& e) {
      throw DataError(e.what(), line_no);
    }
  }
  return trace;
}

}  // namespace gridres
