#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "evagg/fleet.hpp"
#include "evagg/rng.hpp"

namespace evagg {

/// One daily away block: the vehicle departs at `depart_period`, returns at
/// `arrive_period` (0-based, away on [depart, arrive)).
struct TripSpec {
  int depart_period = 0;
  int arrive_period = 0;
  double distance_km = 0.0;
};

/// Flat configuration of the synthetic driving-pattern generator (the
/// stand-in for the survey data) plus the uniform fleet it describes.
struct GeneratorConfig {
  std::uint64_t seed = 1;
  int n_vehicles = 100;
  int n_days = 57;
  int n_periods = 96;
  double dt_hours = 0.25;
  int start_weekday = 0;

  // Weekday commute windows, in periods.
  double depart_mean_period = 30.0;
  double depart_spread_periods = 6.0;
  double arrive_mean_period = 72.0;
  double arrive_spread_periods = 8.0;

  // Lognormal daily distance.
  double distance_log_mean_km = 3.1;
  double distance_log_sd = 0.45;
  double no_trip_prob = 0.15;

  // Price curve: base level with morning/evening humps, a midday dip (solar
  // valley) and seeded noise. The dip sits inside the typical away window,
  // which is what makes hedging against absence a real trade-off.
  double price_base_eur = 0.05;
  double price_morning_amp_eur = 0.02;
  double price_evening_amp_eur = 0.03;
  double price_midday_dip_eur = 0.03;
  double price_noise_eur = 0.004;

  // Uniform fleet parameters; e_init < 0 means the midpoint of the SOC band.
  double ev_max_charge_kw = 7.4;
  double ev_efficiency = 0.95;
  double ev_e_min_kwh = 10.0;
  double ev_e_max_kwh = 51.0;
  double ev_e_init_kwh = -1.0;
  double ev_kwh_per_km = 0.137;

  std::string validate() const {
    if (n_vehicles < 1) return "n_vehicles must be positive";
    if (n_days < 1) return "n_days must be positive";
    if (n_periods < 2) return "n_periods must be at least 2";
    if (!(dt_hours > 0.0)) return "dt_hours must be positive";
    if (start_weekday < 0 || start_weekday > 6) return "start_weekday outside 0..6";
    if (depart_mean_period < 1 || depart_mean_period > n_periods)
      return "depart window outside the grid";
    if (arrive_mean_period < 1 || arrive_mean_period > n_periods)
      return "arrive window outside the grid";
    if (no_trip_prob < 0.0 || no_trip_prob > 1.0) return "no_trip_prob outside [0,1]";
    if (ev_e_min_kwh > ev_e_max_kwh) return "ev_e_min_kwh above ev_e_max_kwh";
    if (ev_e_init_kwh >= 0.0 &&
        (ev_e_init_kwh < ev_e_min_kwh || ev_e_init_kwh > ev_e_max_kwh))
      return "ev_e_init_kwh outside the SOC band";
    return "";
  }

  TimeGrid grid() const { return TimeGrid{n_periods, dt_hours}; }

  EvParams ev_params() const {
    EvParams ev;
    ev.max_charge_kw = ev_max_charge_kw;
    ev.efficiency = ev_efficiency;
    ev.e_min_kwh = ev_e_min_kwh;
    ev.e_max_kwh = ev_e_max_kwh;
    ev.e_init_kwh = ev_e_init_kwh >= 0.0 ? ev_e_init_kwh
                                         : 0.5 * (ev_e_min_kwh + ev_e_max_kwh);
    ev.kwh_per_km = ev_kwh_per_km;
    return ev;
  }

  std::vector<EvParams> fleet() const {
    return std::vector<EvParams>(n_vehicles, ev_params());
  }

  static GeneratorConfig from_file(const std::string& path);
};

namespace detail {

inline std::string csv_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline double parse_double_field(const std::string& tok, const char* what,
                                 int line_no) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw DataError(std::string("line ") + std::to_string(line_no) + ": bad " +
                    what + " '" + tok + "'");
  return v;
}

inline long parse_int_field(const std::string& tok, const char* what, int line_no) {
  long v = 0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw DataError(std::string("line ") + std::to_string(line_no) + ": bad " +
                    what + " '" + tok + "'");
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Seeded synthetic history. Availability is 1 until the (single) daily trip
/// departs and again once it arrives; consumption is the travelled distance
/// times the energy rating, spread over the away periods.
inline std::vector<DayRecord> generate_history(const GeneratorConfig& cfg,
                                               const std::vector<EvParams>& fleet) {
  const std::string issue = cfg.validate();
  if (!issue.empty()) throw ValidationError("generator config: " + issue);
  if (static_cast<int>(fleet.size()) != cfg.n_vehicles)
    throw ValidationError("generator: fleet size differs from n_vehicles");

  const int T = cfg.n_periods;
  const Rng base(cfg.seed);
  std::vector<DayRecord> history(cfg.n_days);

  for (int day = 0; day < cfg.n_days; ++day) {
    DayRecord& rec = history[day];
    rec.date_index = day;
    rec.weekday = (cfg.start_weekday + day) % 7;
    rec.realized_alpha.assign(cfg.n_vehicles, std::vector<int>(T, 1));
    rec.realized_xi_kwh.assign(cfg.n_vehicles, std::vector<double>(T, 0.0));

    for (int v = 0; v < cfg.n_vehicles; ++v) {
      Rng rng = base.fork(0x10000ULL * (day + 1) + v);
      if (rng.bernoulli(cfg.no_trip_prob)) continue;

      int depart = static_cast<int>(std::lround(
          rng.normal(cfg.depart_mean_period, cfg.depart_spread_periods)));
      depart = std::clamp(depart, 1, T - 2);
      int arrive = static_cast<int>(std::lround(
          rng.normal(cfg.arrive_mean_period, cfg.arrive_spread_periods)));
      arrive = std::clamp(arrive, depart + 1, T - 1);
      const double distance =
          std::clamp(rng.lognormal(cfg.distance_log_mean_km, cfg.distance_log_sd),
                     1.0, 150.0);
      const TripSpec trip{depart, arrive, distance};

      const double total_kwh = trip.distance_km * fleet[v].kwh_per_km;
      const int away = trip.arrive_period - trip.depart_period;
      for (int t = trip.depart_period; t < trip.arrive_period; ++t) {
        rec.realized_alpha[v][t] = 0;
        rec.realized_xi_kwh[v][t] = total_kwh / away;
      }
    }

    Rng price_rng = base.fork(0xABCD0000ULL + day);
    rec.prices.eur_per_kwh.resize(T);
    const double level = 1.0 + 0.15 * std::sin(2.0 * 3.14159265358979323846 * day / 7.0);
    const double t_morning = 0.33 * T, t_evening = 0.77 * T, t_midday = 0.55 * T;
    const double width = T / 12.0, dip_width = T / 8.0;
    for (int t = 0; t < T; ++t) {
      const double morning = std::exp(-0.5 * std::pow((t - t_morning) / width, 2));
      const double evening = std::exp(-0.5 * std::pow((t - t_evening) / width, 2));
      const double midday = std::exp(-0.5 * std::pow((t - t_midday) / dip_width, 2));
      double l = level * cfg.price_base_eur + cfg.price_morning_amp_eur * morning +
                 cfg.price_evening_amp_eur * evening - cfg.price_midday_dip_eur * midday +
                 cfg.price_noise_eur * (2.0 * price_rng.uniform() - 1.0);
      rec.prices.eur_per_kwh[t] = std::max(0.001, l);
    }
  }
  return history;
}

inline const char* kHistoryHeader = "day,weekday,vehicle,period,alpha,xi_kwh";
inline const char* kPricesHeader = "day,period,eur_per_kwh";

/// history.csv: one row per (day, vehicle, period), periods 1-based.
/// prices.csv: one row per (day, period).
inline void save_history_csv(const std::vector<DayRecord>& history,
                             const std::string& history_path,
                             const std::string& prices_path) {
  std::ofstream hs(history_path);
  if (!hs) throw DataError("cannot open " + history_path + " for writing");
  hs << kHistoryHeader << "\n";
  for (const DayRecord& rec : history) {
    const int V = static_cast<int>(rec.realized_alpha.size());
    for (int v = 0; v < V; ++v) {
      const int T = static_cast<int>(rec.realized_alpha[v].size());
      for (int t = 0; t < T; ++t)
        hs << rec.date_index << ',' << rec.weekday << ',' << v << ',' << t + 1 << ','
           << rec.realized_alpha[v][t] << ','
           << detail::csv_double(rec.realized_xi_kwh[v][t]) << "\n";
    }
  }
  hs.flush();
  if (!hs) throw DataError("write failure on " + history_path);

  std::ofstream ps(prices_path);
  if (!ps) throw DataError("cannot open " + prices_path + " for writing");
  ps << kPricesHeader << "\n";
  for (const DayRecord& rec : history) {
    const int T = static_cast<int>(rec.prices.eur_per_kwh.size());
    for (int t = 0; t < T; ++t)
      ps << rec.date_index << ',' << t + 1 << ','
         << detail::csv_double(rec.prices.eur_per_kwh[t]) << "\n";
  }
  ps.flush();
  if (!ps) throw DataError("write failure on " + prices_path);
}

/// Loads and cross-validates both files; rejects schema mismatches, malformed
/// rows (with their line number), incomplete coverage and moving-while-
/// available inconsistencies.
inline std::vector<DayRecord> load_history_csv(const std::string& history_path,
                                               const std::string& prices_path) {
  std::ifstream hs(history_path);
  if (!hs) throw DataError("cannot open " + history_path);
  std::string line;
  int line_no = 0;
  if (!std::getline(hs, line)) throw DataError(history_path + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHistoryHeader)
    throw DataError(history_path + ": header mismatch, expected '" +
                    std::string(kHistoryHeader) + "'");

  struct Cell {
    int alpha;
    double xi;
  };
  std::map<int, int> weekday_of;
  std::map<int, std::map<std::pair<int, int>, Cell>> days;  // day -> (v,t) -> cell
  int max_vehicle = -1, max_period = 0;

  while (std::getline(hs, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tok = detail::split_csv(line);
    if (tok.size() != 6)
      throw DataError(history_path + " line " + std::to_string(line_no) +
                      ": expected 6 fields, got " + std::to_string(tok.size()));
    const int day = static_cast<int>(detail::parse_int_field(tok[0], "day", line_no));
    const int weekday = static_cast<int>(detail::parse_int_field(tok[1], "weekday", line_no));
    const int vehicle = static_cast<int>(detail::parse_int_field(tok[2], "vehicle", line_no));
    const int period = static_cast<int>(detail::parse_int_field(tok[3], "period", line_no));
    const int alpha = static_cast<int>(detail::parse_int_field(tok[4], "alpha", line_no));
    const double xi = detail::parse_double_field(tok[5], "xi_kwh", line_no);
    if (weekday < 0 || weekday > 6)
      throw DataError(history_path + " line " + std::to_string(line_no) + ": weekday outside 0..6");
    if (vehicle < 0 || period < 1)
      throw DataError(history_path + " line " + std::to_string(line_no) + ": bad vehicle/period");
    if (alpha != 0 && alpha != 1)
      throw DataError(history_path + " line " + std::to_string(line_no) + ": alpha must be 0 or 1");
    if (xi < 0.0)
      throw DataError(history_path + " line " + std::to_string(line_no) + ": negative xi_kwh");
    if (xi > 0.0 && alpha == 1)
      throw DataError(history_path + " line " + std::to_string(line_no) +
                      ": vehicle marked available while moving");
    auto [it, inserted] = weekday_of.insert({day, weekday});
    if (!inserted && it->second != weekday)
      throw DataError(history_path + " line " + std::to_string(line_no) +
                      ": weekday contradicts an earlier row for day " + std::to_string(day));
    if (!days[day].insert({{vehicle, period}, Cell{alpha, xi}}).second)
      throw DataError(history_path + " line " + std::to_string(line_no) + ": duplicate row");
    max_vehicle = std::max(max_vehicle, vehicle);
    max_period = std::max(max_period, period);
  }
  if (days.empty()) throw DataError(history_path + ": no data rows");

  std::ifstream ps(prices_path);
  if (!ps) throw DataError("cannot open " + prices_path);
  line_no = 0;
  if (!std::getline(ps, line)) throw DataError(prices_path + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPricesHeader)
    throw DataError(prices_path + ": header mismatch, expected '" +
                    std::string(kPricesHeader) + "'");
  std::map<int, std::map<int, double>> prices;
  while (std::getline(ps, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tok = detail::split_csv(line);
    if (tok.size() != 3)
      throw DataError(prices_path + " line " + std::to_string(line_no) +
                      ": expected 3 fields, got " + std::to_string(tok.size()));
    const int day = static_cast<int>(detail::parse_int_field(tok[0], "day", line_no));
    const int period = static_cast<int>(detail::parse_int_field(tok[1], "period", line_no));
    const double price = detail::parse_double_field(tok[2], "eur_per_kwh", line_no);
    if (!prices[day].insert({period, price}).second)
      throw DataError(prices_path + " line " + std::to_string(line_no) + ": duplicate row");
    max_period = std::max(max_period, period);
  }

  const int V = max_vehicle + 1;
  const int T = max_period;
  std::vector<DayRecord> history;
  for (const auto& [day, cells] : days) {
    if (static_cast<int>(cells.size()) != V * T)
      throw DataError(history_path + ": dimension mismatch on day " + std::to_string(day) +
                      " (" + std::to_string(cells.size()) + " rows, expected " +
                      std::to_string(V * T) + ")");
    auto pit = prices.find(day);
    if (pit == prices.end() || static_cast<int>(pit->second.size()) != T)
      throw DataError(prices_path + ": dimension mismatch on day " + std::to_string(day));
    DayRecord rec;
    rec.date_index = day;
    rec.weekday = weekday_of[day];
    rec.realized_alpha.assign(V, std::vector<int>(T, 0));
    rec.realized_xi_kwh.assign(V, std::vector<double>(T, 0.0));
    rec.prices.eur_per_kwh.assign(T, 0.0);
    for (const auto& [key, cell] : cells) {
      rec.realized_alpha[key.first][key.second - 1] = cell.alpha;
      rec.realized_xi_kwh[key.first][key.second - 1] = cell.xi;
    }
    for (const auto& [period, price] : pit->second) rec.prices.eur_per_kwh[period - 1] = price;
    history.push_back(std::move(rec));
  }
  for (const auto& [day, series] : prices)
    if (!days.count(day))
      throw DataError(prices_path + ": prices for day " + std::to_string(day) +
                      " have no history rows");
  return history;
}

struct ForecastResult {
  std::vector<ForecastInputs> per_vehicle;
  PriceSeries prices;
};

/// Expected values for a target weekday: per-period means of availability and
/// consumption over the last `lookback` same-weekday days, and mean prices
/// over the last `lookback` calendar days.
inline ForecastResult forecast(const std::vector<DayRecord>& history,
                               int target_weekday, int lookback = 4) {
  if (lookback < 1) throw ValidationError("lookback must be positive");
  std::vector<const DayRecord*> same_weekday;
  for (const DayRecord& rec : history)
    if (rec.weekday == target_weekday) same_weekday.push_back(&rec);
  if (static_cast<int>(same_weekday.size()) < lookback)
    throw DataError("insufficient history: " + std::to_string(same_weekday.size()) +
                    " day(s) with weekday " + std::to_string(target_weekday) +
                    ", need " + std::to_string(lookback));
  if (static_cast<int>(history.size()) < lookback)
    throw DataError("insufficient history: " + std::to_string(history.size()) +
                    " day(s) total, need " + std::to_string(lookback));
  same_weekday.erase(same_weekday.begin(),
                     same_weekday.end() - lookback);

  const int V = static_cast<int>(same_weekday.front()->realized_alpha.size());
  const int T = static_cast<int>(same_weekday.front()->realized_alpha.front().size());

  ForecastResult out;
  out.per_vehicle.assign(V, ForecastInputs{std::vector<double>(T, 0.0),
                                           std::vector<double>(T, 0.0)});
  for (const DayRecord* rec : same_weekday) {
    for (int v = 0; v < V; ++v)
      for (int t = 0; t < T; ++t) {
        out.per_vehicle[v].alpha_hat[t] += rec->realized_alpha[v][t];
        out.per_vehicle[v].xi_hat_kwh[t] += rec->realized_xi_kwh[v][t];
      }
  }
  for (int v = 0; v < V; ++v)
    for (int t = 0; t < T; ++t) {
      out.per_vehicle[v].alpha_hat[t] /= lookback;
      out.per_vehicle[v].xi_hat_kwh[t] /= lookback;
    }

  out.prices.eur_per_kwh.assign(T, 0.0);
  for (auto it = history.end() - lookback; it != history.end(); ++it)
    for (int t = 0; t < T; ++t) out.prices.eur_per_kwh[t] += it->prices.eur_per_kwh[t];
  for (int t = 0; t < T; ++t) out.prices.eur_per_kwh[t] /= lookback;
  return out;
}

/// Availability box and cardinality floor consistent with a same-weekday
/// history slice: a period is pinned when all days agree, and K is the
/// smallest availability count observed (the tightest floor that keeps every
/// observed day feasible).
inline UncertaintySet build_uncertainty_set(const std::vector<const DayRecord*>& slice,
                                            int vehicle) {
  if (slice.empty()) throw DataError("empty history slice");
  const int T = static_cast<int>(slice.front()->realized_alpha.at(vehicle).size());
  UncertaintySet u;
  u.alpha_lo.assign(T, 1);
  u.alpha_hi.assign(T, 0);
  int k = T + 1;
  for (const DayRecord* rec : slice) {
    const auto& alpha = rec->realized_alpha.at(vehicle);
    int count = 0;
    for (int t = 0; t < T; ++t) {
      u.alpha_lo[t] = std::min(u.alpha_lo[t], alpha[t]);
      u.alpha_hi[t] = std::max(u.alpha_hi[t], alpha[t]);
      count += alpha[t];
    }
    k = std::min(k, count);
  }
  u.k_min = k;
  return u;
}

inline UncertaintySet build_uncertainty_set(const std::vector<DayRecord>& slice,
                                            int vehicle) {
  std::vector<const DayRecord*> view;
  view.reserve(slice.size());
  for (const DayRecord& rec : slice) view.push_back(&rec);
  return build_uncertainty_set(view, vehicle);
}

inline GeneratorConfig GeneratorConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config " + path);
  GeneratorConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string key, eq, value;
    std::istringstream ss(line);
    if (!(ss >> key)) continue;
    if (!(ss >> eq >> value) || eq != "=")
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": expected 'key = value'");
    auto as_d = [&] { return detail::parse_double_field(value, key.c_str(), line_no); };
    auto as_i = [&] { return detail::parse_int_field(value, key.c_str(), line_no); };
    if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_i());
    else if (key == "n_vehicles") cfg.n_vehicles = static_cast<int>(as_i());
    else if (key == "n_days") cfg.n_days = static_cast<int>(as_i());
    else if (key == "n_periods") cfg.n_periods = static_cast<int>(as_i());
    else if (key == "dt_hours") cfg.dt_hours = as_d();
    else if (key == "start_weekday") cfg.start_weekday = static_cast<int>(as_i());
    else if (key == "depart_mean_period") cfg.depart_mean_period = as_d();
    else if (key == "depart_spread_periods") cfg.depart_spread_periods = as_d();
    else if (key == "arrive_mean_period") cfg.arrive_mean_period = as_d();
    else if (key == "arrive_spread_periods") cfg.arrive_spread_periods = as_d();
    else if (key == "distance_log_mean_km") cfg.distance_log_mean_km = as_d();
    else if (key == "distance_log_sd") cfg.distance_log_sd = as_d();
    else if (key == "no_trip_prob") cfg.no_trip_prob = as_d();
    else if (key == "price_base_eur") cfg.price_base_eur = as_d();
    else if (key == "price_morning_amp_eur") cfg.price_morning_amp_eur = as_d();
    else if (key == "price_evening_amp_eur") cfg.price_evening_amp_eur = as_d();
    else if (key == "price_midday_dip_eur") cfg.price_midday_dip_eur = as_d();
    else if (key == "price_noise_eur") cfg.price_noise_eur = as_d();
    else if (key == "ev_max_charge_kw") cfg.ev_max_charge_kw = as_d();
    else if (key == "ev_efficiency") cfg.ev_efficiency = as_d();
    else if (key == "ev_e_min_kwh") cfg.ev_e_min_kwh = as_d();
    else if (key == "ev_e_max_kwh") cfg.ev_e_max_kwh = as_d();
    else if (key == "ev_e_init_kwh") cfg.ev_e_init_kwh = as_d();
    else if (key == "ev_kwh_per_km") cfg.ev_kwh_per_km = as_d();
    else
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": unknown key '" + key + "'");
  }
  const std::string issue = cfg.validate();
  if (!issue.empty()) throw DataError(path + ": " + issue);
  return cfg;
}

}  // namespace evagg
