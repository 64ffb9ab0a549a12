#include "stickysim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "stickysim/bin_sim.hpp"
#include "stickysim/flow_sim.hpp"
#include "stickysim/mean_field.hpp"
#include "stickysim/metrics.hpp"
#include "stickysim/sweep.hpp"

#ifndef STICKYSIM_VERSION
#define STICKYSIM_VERSION "0.0.0-unknown"
#endif

namespace stickysim {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
namespace mf = mean_field;

const char* version() { return STICKYSIM_VERSION; }

namespace {

constexpr double kResidualTol = 1e-8;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw ValidationError("cannot write " + path.string());
    line(header);
  }

  void line(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out_ << ',';
      out_ << cells[k];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct Context {
  const ExperimentSpec& spec;
  ParamReader params;
  SystemParams sys;
  json results = json::object();
  json tolerances = json::object();
  std::vector<fs::path> files;

  fs::path csv(const std::string& name) {
    auto p = spec.out_dir / name;
    files.push_back(p);
    return p;
  }
};

SystemParams read_system(ParamReader& r) {
  SystemParams p;
  p.n = static_cast<std::size_t>(r.get_int("n", static_cast<long>(p.n)));
  p.lambda = r.get_double("lambda", p.lambda);
  p.beta = r.get_double("beta", p.beta);
  p.nu = r.get_double("nu", p.nu);
  p.mu = r.get_double("mu", p.mu);
  if (p.n < 1) throw ValidationError("n must be at least 1");
  validate_params(p);
  return p;
}

SimConfig read_sim(Context& ctx, const SchemeConfig& scheme, double default_horizon_beta = 200.0) {
  SimConfig c;
  c.params = ctx.sys;
  c.scheme = scheme;
  c.seed = ctx.spec.seed;
  c.warmup = ctx.params.get_double("warmup", 50.0 * ctx.sys.beta);
  c.horizon = ctx.params.get_double("horizon", default_horizon_beta * ctx.sys.beta);
  c.tracked_server = static_cast<std::size_t>(ctx.params.get_int("tracked", 0));
  validate_config(c);
  return c;
}

std::uint64_t replica_seed(std::uint64_t seed, std::size_t index) {
  return index == 0 ? seed : mix64(seed + 0x9e3779b97f4a7c15ULL * index);
}

void write_histogram(Context& ctx, const std::string& name, std::span<const double> empirical,
                     const std::optional<FlowDistribution>& theory) {
  CsvFile f(ctx.csv(name), {"i", "p_empirical", "p_theory"});
  const std::size_t len =
      std::max(empirical.size(), theory ? theory->size() : std::size_t{0});
  for (std::size_t i = 0; i < len; ++i) {
    const double e = i < empirical.size() ? empirical[i] : 0.0;
    f.line({std::to_string(i), fmt(e), theory ? fmt((*theory)[i]) : ""});
  }
}

void write_series(Context& ctx, const std::string& name,
                  const std::vector<std::pair<double, int>>& series) {
  CsvFile f(ctx.csv(name), {"t", "occupancy"});
  for (const auto& [t, k] : series) f.line({fmt(t), std::to_string(k)});
}

double mass_within(std::span<const double> hist, std::size_t lo, std::size_t hi) {
  double m = 0.0;
  for (std::size_t i = lo; i <= hi && i < hist.size(); ++i) m += hist[i];
  return m;
}

json sim_summary(const SimStats& s) {
  return {{"total_flows", s.total_flows},
          {"violations", s.violations},
          {"violation_rate", s.violation_rate()},
          {"mean_occupancy", s.mean_occ},
          {"measured_time", s.measured_time},
          {"events", s.events}};
}

// Simulation of one flow-level scheme with histogram and tracked series.
SimStats sim_figure(Context& ctx, const SchemeConfig& scheme,
                    const std::function<std::optional<FlowDistribution>()>& theory_fn) {
  const SimConfig cfg = read_sim(ctx, scheme);
  ctx.params.finish();
  const auto theory = theory_fn();
  const SimStats stats = run_flow_sim(cfg);
  write_histogram(ctx, "histogram.csv", stats.occupancy_hist, theory);
  write_series(ctx, "series.csv", stats.series);
  ctx.results["scheme"] = scheme_name(scheme);
  ctx.results["simulation"] = sim_summary(stats);
  if (theory) {
    ctx.results["tv_to_theory"] = empirical_vs_theory(stats, *theory);
    ctx.results["theory_mean"] = mean_occupancy(*theory);
    ctx.results["theory_residual"] = mf::fixed_point_residual(scheme, *theory, ctx.sys.rho());
    ctx.tolerances["fixed_point_residual"] = kResidualTol;
  }
  return stats;
}

void fig_perfect_jsq(Context& ctx) {
  const SchemeConfig scheme = scheme::PowerOfD{scheme::PowerOfD::kJoinShortest};
  const auto stats =
      sim_figure(ctx, scheme, [&] { return std::optional(mf::jsq_fixed_point(ctx.sys.rho())); });
  const auto k = static_cast<std::size_t>(std::floor(ctx.sys.rho()));
  const double mass = mass_within(stats.occupancy_hist, k, k + 1);
  ctx.results["mass_on_k_k1"] = mass;
}

void fig_power_of_d(Context& ctx) {
  const int d = static_cast<int>(ctx.params.get_int("d", 2));
  const SchemeConfig scheme = scheme::PowerOfD{d};
  const double ode_time = ctx.params.get_double("ode_time", 60.0 * ctx.sys.beta);
  const SimConfig cfg = read_sim(ctx, scheme);
  ctx.params.finish();
  const double rho = ctx.sys.rho();
  const auto i_max = default_truncation(rho);
  mf::OdeOptions opt;
  opt.stop_residual = 1e-10;
  const auto ode = mf::integrate_ode(
      scheme, ctx.sys, mf::MeanFieldState::from_distribution(FlowDistribution::point_mass(0), i_max),
      ode_time, opt);
  const auto theory = ode.terminal.to_distribution();
  const SimStats stats = run_flow_sim(cfg);
  write_histogram(ctx, "histogram.csv", stats.occupancy_hist, theory);
  write_series(ctx, "series.csv", stats.series);

  const auto emp_tail = to_tail(stats.distribution());
  const auto ode_tail = ode.terminal.tail();
  CsvFile bound(ctx.csv("bound.csv"), {"i", "s_empirical", "s_ode", "s_bound"});
  double worst_ode = -1.0;
  for (std::size_t i = 0; i < ode_tail.size(); ++i) {
    const double b = mf::pod_upper_bound(rho, d, i);
    const double e = i < emp_tail.size() ? emp_tail[i] : 0.0;
    bound.line({std::to_string(i), fmt(e), fmt(ode_tail[i]), fmt(b)});
    if (static_cast<double>(i) > std::floor(rho)) worst_ode = std::max(worst_ode, ode_tail[i] - b);
  }
  ctx.results["scheme"] = scheme_name(scheme);
  ctx.results["simulation"] = sim_summary(stats);
  ctx.results["ode"] = {{"t", ode.t}, {"steps", ode.steps}, {"residual", ode.residual}};
  ctx.results["tv_to_ode"] = empirical_vs_theory(stats, theory);
  ctx.results["max_ode_excess_over_bound"] = worst_ode;
  ctx.tolerances["ode_stop_residual"] = opt.stop_residual;
  ctx.tolerances["ode_projection"] = opt.projection_tolerance;
}

void fig_pull(Context& ctx) {
  const int l = static_cast<int>(ctx.params.get_int("l", 140));
  const Threshold h = ctx.params.get_threshold("h", Threshold::finite(160));
  const double rho = ctx.sys.rho();
  sim_figure(ctx, scheme::PullBased{l, h},
             [&] { return std::optional(mf::solve_pull_fixed_point(rho, l, h).dist); });
}

void fig_shedding(Context& ctx) {
  const Threshold h = ctx.params.get_threshold("h", Threshold::finite(160));
  const double rho = ctx.sys.rho();
  sim_figure(ctx, scheme::Shedding{h},
             [&] { return std::optional(mf::shedding_fixed_point(rho, h)); });
  if (h.is_finite()) ctx.results["epsilon_theory"] = shedding_violation(h.value(), ctx.sys);
}

void fig_transfer_invite(Context& ctx) {
  const int l = static_cast<int>(ctx.params.get_int("l", 140));
  const int h = static_cast<int>(ctx.params.get_int("h", 160));
  const bool move = ctx.params.get_bool("move_existing", false);
  const double rho = ctx.sys.rho();
  std::optional<FlowDistribution> theory;
  sim_figure(ctx, scheme::TransferToInvite{l, h, move}, [&] {
    theory = mf::solve_transfer_invite_fixed_point(rho, l, h).dist;
    return theory;
  });
  ctx.results["epsilon_theory"] = (*theory)[static_cast<std::size_t>(h)];
}

void fig_transfer_least(Context& ctx) {
  const int h = static_cast<int>(ctx.params.get_int("h", 160));
  const bool move = ctx.params.get_bool("move_existing", false);
  const double rho = ctx.sys.rho();
  std::optional<FlowDistribution> theory;
  sim_figure(ctx, scheme::TransferToLeastLoaded{h, move}, [&] {
    theory = mf::solve_least_loaded_fixed_point(rho, h).dist;
    return theory;
  });
  ctx.results["epsilon_theory"] = (*theory)[static_cast<std::size_t>(h)];
}

std::vector<double> default_chis() {
  std::vector<double> out;
  for (int c = 0; c <= 300; c += 10) out.push_back(c);
  return out;
}

void fig_delay_perfect(Context& ctx) {
  const auto chis = ctx.params.get_double_list("chi", default_chis());
  ctx.params.finish();
  CsvFile f(ctx.csv("delay.csv"), {"chi", "g_flow_jsq", "g_pkt_random", "g_random_flow"});
  for (double chi : chis) {
    f.line({fmt(chi), fmt(g_tilde_flow_jsq(chi, ctx.sys)), fmt(g_tilde_pkt_random(chi, ctx.sys)),
            fmt(shedding_tail(Threshold::infinite(), chi, ctx.sys))});
  }
  ctx.results["points"] = chis.size();
}

enum class ViolationScheme { Shedding, Invite, Least };

const char* violation_scheme_name(ViolationScheme s) {
  switch (s) {
    case ViolationScheme::Shedding:
      return "shedding";
    case ViolationScheme::Invite:
      return "transfer-invite";
    case ViolationScheme::Least:
      return "transfer-least";
  }
  return "?";
}

SchemeConfig violation_scheme(ViolationScheme s, int l, int h) {
  switch (s) {
    case ViolationScheme::Shedding:
      return scheme::Shedding{Threshold::finite(h)};
    case ViolationScheme::Invite:
      return scheme::TransferToInvite{l, h};
    case ViolationScheme::Least:
      return scheme::TransferToLeastLoaded{h};
  }
  return scheme::PowerOfD{1};
}

double violation_theory(ViolationScheme s, double rho, int l, int h, const SystemParams& p) {
  switch (s) {
    case ViolationScheme::Shedding:
      return shedding_violation(h, p);
    case ViolationScheme::Invite:
      return mf::solve_transfer_invite_fixed_point(rho, l, h).dist[static_cast<std::size_t>(h)];
    case ViolationScheme::Least:
      return mf::solve_least_loaded_fixed_point(rho, h).dist[static_cast<std::size_t>(h)];
  }
  return 0.0;
}

void violation_curves(Context& ctx) {
  const int l = static_cast<int>(ctx.params.get_int("l", 140));
  const auto hs = ctx.params.get_int_list("h_values", {152, 156, 160, 165});
  const auto min_violations = static_cast<std::uint64_t>(ctx.params.get_int("min_violations", 50));
  const SimConfig base = read_sim(ctx, scheme::PowerOfD{1});
  ctx.params.finish();
  const ViolationScheme kinds[] = {ViolationScheme::Shedding, ViolationScheme::Invite,
                                   ViolationScheme::Least};
  std::vector<SimConfig> configs;
  std::vector<std::pair<ViolationScheme, int>> labels;
  for (auto kind : kinds) {
    for (int h : hs) {
      SimConfig c = base;
      c.scheme = violation_scheme(kind, l, h);
      c.seed = replica_seed(ctx.spec.seed, configs.size());
      c.record_series = false;
      configs.push_back(c);
      labels.emplace_back(kind, h);
    }
  }
  auto stats = sweep::run_flow_sims(configs);
  // Extend the horizon for points with too few observed violations.
  for (int round = 0; round < 4; ++round) {
    std::vector<SimConfig> redo;
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < stats.size(); ++k) {
      if (stats[k].violations < min_violations) {
        SimConfig c = configs[k];
        c.horizon = c.horizon_time() * 4.0;
        configs[k] = c;
        redo.push_back(c);
        idx.push_back(k);
      }
    }
    if (redo.empty()) break;
    auto more = sweep::run_flow_sims(redo);
    for (std::size_t j = 0; j < idx.size(); ++j) stats[idx[j]] = std::move(more[j]);
  }
  CsvFile f(ctx.csv("violation.csv"),
            {"scheme", "h", "horizon", "flows", "violations", "eps_empirical", "eps_theory",
             "rel_error"});
  json points = json::array();
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto [kind, h] = labels[k];
    const double theory = violation_theory(kind, ctx.sys.rho(), l, h, ctx.sys);
    const double emp = stats[k].violation_rate();
    const double rel = std::abs(emp - theory) / theory;
    f.line({violation_scheme_name(kind), std::to_string(h), fmt(configs[k].horizon_time()),
            std::to_string(stats[k].total_flows), std::to_string(stats[k].violations), fmt(emp),
            fmt(theory), fmt(rel)});
    points.push_back({{"scheme", violation_scheme_name(kind)}, {"h", h}, {"rel_error", rel}});
  }
  ctx.results["points"] = points;
  ctx.tolerances["min_violations"] = min_violations;
}

std::vector<int> default_tradeoff_h() {
  std::vector<int> out;
  for (int h = 150; h <= 230; ++h) out.push_back(h);
  return out;
}

struct TradeoffRow {
  std::string scheme;
  TradeoffPoint point;
};

std::vector<TradeoffRow> tradeoff_rows(Context& ctx, const std::string& which, int l,
                                       const std::vector<int>& hs, double chi) {
  const double rho = ctx.sys.rho();
  const double baseline = shedding_tail(Threshold::infinite(), chi, ctx.sys);
  std::vector<TradeoffRow> rows;
  if (which == "shedding") {
    for (const auto& p : tradeoff_curve(hs, chi, ctx.sys)) rows.push_back({which, p});
    return rows;
  }
  for (int h : hs) {
    FlowDistribution dist = which == "transfer-invite"
                                ? mf::solve_transfer_invite_fixed_point(rho, l, h).dist
                                : mf::solve_least_loaded_fixed_point(rho, h).dist;
    const double eps = dist[static_cast<std::size_t>(h)];
    rows.push_back(
        {which, make_tradeoff_point(Threshold::finite(h), eps, dist, chi, baseline, ctx.sys)});
  }
  return rows;
}

void write_tradeoff(Context& ctx, const std::vector<TradeoffRow>& rows, double chi) {
  CsvFile f(ctx.csv("tradeoff.csv"), {"scheme", "h", "epsilon", "g_chi", "improvement"});
  for (const auto& r : rows) {
    f.line({r.scheme, r.point.h.to_string(), fmt(r.point.epsilon), fmt(r.point.g_chi),
            fmt(r.point.improvement)});
  }
  ctx.results["chi"] = chi;
  ctx.results["baseline_g_chi"] = shedding_tail(Threshold::infinite(), chi, ctx.sys);
  ctx.results["points"] = rows.size();
}

void tradeoff(Context& ctx, const std::vector<std::string>& schemes) {
  const double chi = ctx.params.get_double("chi", 200.0);
  const int l = static_cast<int>(ctx.params.get_int("l", 140));
  auto hs = ctx.params.get_int_list("h_values", default_tradeoff_h());
  ctx.params.finish();
  std::vector<TradeoffRow> rows;
  for (const auto& s : schemes) {
    std::vector<int> valid;
    for (int h : hs) {
      if (s != "transfer-invite" || h > l) valid.push_back(h);
    }
    auto part = tradeoff_rows(ctx, s, l, valid, chi);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_tradeoff(ctx, rows, chi);
}

SchemeConfig parse_scheme(ParamReader& r) {
  const auto name = r.get_string("scheme", "pull");
  if (name == "jsq") return scheme::PowerOfD{scheme::PowerOfD::kJoinShortest};
  if (name == "random") return scheme::PowerOfD{1};
  if (name == "power-of-d") return scheme::PowerOfD{static_cast<int>(r.get_int("d", 2))};
  if (name == "pull") {
    return scheme::PullBased{static_cast<int>(r.get_int("l", 140)),
                             r.get_threshold("h", Threshold::finite(160))};
  }
  if (name == "shedding") return scheme::Shedding{r.get_threshold("h", Threshold::finite(160))};
  if (name == "transfer-invite") {
    return scheme::TransferToInvite{static_cast<int>(r.get_int("l", 140)),
                                    static_cast<int>(r.get_int("h", 160))};
  }
  if (name == "transfer-least") {
    return scheme::TransferToLeastLoaded{static_cast<int>(r.get_int("h", 160))};
  }
  throw ValidationError("unknown scheme '" + name +
                        "' (jsq, random, power-of-d, pull, shedding, transfer-invite, "
                        "transfer-least)");
}

void fixed_point(Context& ctx) {
  const SchemeConfig scheme = parse_scheme(ctx.params);
  const double rho = ctx.params.get_double("rho", ctx.sys.rho());
  const auto* pod = std::get_if<scheme::PowerOfD>(&scheme);
  const bool use_ode = pod && pod->d > 1 && !pod->is_jsq();
  const double ode_time = use_ode ? ctx.params.get_double("ode_time", 200.0 * ctx.sys.beta) : 0.0;
  ctx.params.finish();
  FlowDistribution dist = FlowDistribution::point_mass(0);
  if (use_ode) {
    SystemParams p = ctx.sys;
    p.lambda = rho / p.beta;
    mf::OdeOptions opt;
    opt.stop_residual = 1e-11;
    const auto ode = mf::integrate_ode(
        scheme, p,
        mf::MeanFieldState::from_distribution(FlowDistribution::point_mass(0),
                                              default_truncation(rho)),
        ode_time, opt);
    dist = ode.terminal.to_distribution();
    ctx.results["ode_residual"] = ode.residual;
  } else {
    dist = mf::analytic_fixed_point(scheme, rho);
  }
  CsvFile f(ctx.csv("fixed_point.csv"), {"i", "p"});
  for (std::size_t i = 0; i < dist.size(); ++i) f.line({std::to_string(i), fmt(dist[i])});
  ctx.results["scheme"] = scheme_name(scheme);
  ctx.results["rho"] = rho;
  ctx.results["mean"] = mean_occupancy(dist);
  const double residual = mf::fixed_point_residual(scheme, dist, rho);
  ctx.results["residual"] = residual;
  ctx.tolerances["fixed_point_residual"] = kResidualTol;
  if (!(residual <= kResidualTol)) {
    std::ostringstream msg;
    msg << "fixed-point residual " << residual << " exceeds " << kResidualTol;
    throw NumericalError(msg.str());
  }
}

scheme::BinBased read_bin_scheme(Context& ctx, std::size_t m, Threshold h) {
  scheme::BinBased b;
  b.m = m;
  b.l = static_cast<int>(ctx.params.get_int("l", 140));
  b.h = h;
  b.move_while_above = ctx.params.get_bool("move_while_above", true);
  return b;
}

void bin_variation(Context& ctx) {
  const auto ms = ctx.params.get_count_list("bins", ctx.sys.n, {5 * ctx.sys.n, 10 * ctx.sys.n});
  const Threshold h = ctx.params.get_threshold("h", Threshold::finite(160));
  std::vector<SimConfig> configs;
  for (std::size_t m : ms) {
    configs.push_back(read_sim(ctx, read_bin_scheme(ctx, m, h)));
  }
  ctx.params.finish();
  const auto& first = std::get<scheme::BinBased>(configs.front().scheme);
  std::optional<FlowDistribution> theory;
  if (h.is_finite() && first.l < h.value()) {
    theory = mf::solve_transfer_invite_fixed_point(ctx.sys.rho(), first.l, h.value()).dist;
  }
  const auto stats = sweep::run_bin_sims(configs);
  json per_m = json::array();
  for (std::size_t k = 0; k < ms.size(); ++k) {
    const auto tag = "_m" + std::to_string(ms[k]);
    write_series(ctx, "series" + tag + ".csv", stats[k].series);
    write_histogram(ctx, "histogram" + tag + ".csv", stats[k].occupancy_hist, theory);
    json entry = sim_summary(stats[k]);
    entry["m"] = ms[k];
    entry["reallocations"] = stats[k].reallocations;
    if (h.is_finite()) {
      entry["tracked_time_at_or_below_h"] =
          mass_within(stats[k].tracked_hist, 0, static_cast<std::size_t>(h.value()));
    }
    if (theory) entry["tv_to_transfer_invite"] = empirical_vs_theory(stats[k], *theory);
    per_m.push_back(entry);
  }
  ctx.results["runs"] = per_m;
}

std::vector<int> default_bin_h() {
  std::vector<int> out;
  for (int h = 160; h <= 205; h += 5) out.push_back(h);
  return out;
}

struct BinGrid {
  std::vector<std::size_t> ms;
  std::vector<int> hs;
  std::size_t replicas;
  std::vector<SimConfig> configs;
  std::vector<BinSimStats> stats;

  [[nodiscard]] std::size_t index(std::size_t mi, std::size_t hi, std::size_t r) const {
    return (mi * hs.size() + hi) * replicas + r;
  }
};

BinGrid run_bin_grid(Context& ctx, std::vector<std::size_t> default_ms) {
  BinGrid g;
  g.ms = ctx.params.get_count_list("bins", ctx.sys.n, default_ms);
  g.hs = ctx.params.get_int_list("h_values", default_bin_h());
  g.replicas = static_cast<std::size_t>(ctx.params.get_int("replicas", 1));
  if (g.replicas < 1) throw ValidationError("replicas must be at least 1");
  const SimConfig base = read_sim(ctx, scheme::PowerOfD{1}, 100.0);
  const int l = static_cast<int>(ctx.params.get_int("l", 140));
  const bool mwa = ctx.params.get_bool("move_while_above", true);
  ctx.params.finish();
  for (std::size_t m : g.ms) {
    for (int h : g.hs) {
      for (std::size_t r = 0; r < g.replicas; ++r) {
        SimConfig c = base;
        c.scheme = scheme::BinBased{m, l, Threshold::finite(h), mwa};
        c.seed = replica_seed(ctx.spec.seed, r);
        c.record_series = false;
        validate_config(c);
        g.configs.push_back(c);
      }
    }
  }
  g.stats = sweep::run_bin_sims(g.configs);
  return g;
}

void bin_violation(Context& ctx) {
  const auto n = ctx.sys.n;
  const BinGrid g = run_bin_grid(ctx, {2 * n, 5 * n, 10 * n, 20 * n});
  CsvFile f(ctx.csv("violation.csv"),
            {"m", "h", "replicas", "flows", "violated", "reallocations", "epsilon"});
  for (std::size_t mi = 0; mi < g.ms.size(); ++mi) {
    for (std::size_t hi = 0; hi < g.hs.size(); ++hi) {
      std::uint64_t flows = 0, violated = 0, moves = 0;
      for (std::size_t r = 0; r < g.replicas; ++r) {
        const auto& s = g.stats[g.index(mi, hi, r)];
        flows += s.total_flows;
        violated += s.violated_flows;
        moves += s.reallocations;
      }
      f.line({std::to_string(g.ms[mi]), std::to_string(g.hs[hi]), std::to_string(g.replicas),
              std::to_string(flows), std::to_string(violated), std::to_string(moves),
              fmt(flows ? static_cast<double>(violated) / static_cast<double>(flows) : 0.0)});
    }
  }
  ctx.results["runs"] = g.configs.size();
}

void bin_tradeoff(Context& ctx) {
  const double chi = ctx.params.get_double("chi", 200.0);
  const auto n = ctx.sys.n;
  const BinGrid g = run_bin_grid(ctx, {2 * n, 5 * n, 10 * n, 20 * n});
  const double baseline = shedding_tail(Threshold::infinite(), chi, ctx.sys);
  CsvFile f(ctx.csv("tradeoff.csv"), {"m", "h", "epsilon", "g_chi", "improvement"});
  for (std::size_t mi = 0; mi < g.ms.size(); ++mi) {
    for (std::size_t hi = 0; hi < g.hs.size(); ++hi) {
      std::uint64_t flows = 0, violated = 0;
      double g_sum = 0.0;
      for (std::size_t r = 0; r < g.replicas; ++r) {
        const auto& s = g.stats[g.index(mi, hi, r)];
        flows += s.total_flows;
        violated += s.violated_flows;
        g_sum += g_tilde(s.occupancy_hist, g_chi_fn(chi, ctx.sys));
      }
      const double eps = flows ? static_cast<double>(violated) / static_cast<double>(flows) : 0.0;
      const double gc = g_sum / static_cast<double>(g.replicas);
      f.line({std::to_string(g.ms[mi]), std::to_string(g.hs[hi]), fmt(eps), fmt(gc),
              fmt(gc > 0.0 ? baseline / gc : HUGE_VAL)});
    }
  }
  ctx.results["chi"] = chi;
  ctx.results["baseline_g_chi"] = baseline;
  ctx.results["runs"] = g.configs.size();
}

struct Entry {
  ExperimentInfo info;
  std::function<void(Context&)> run;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {{"fig-perfect-jsq", "Flow-level JSQ: tracked-server series and occupancy histogram",
        {"jsq", "flow-sim"}},
       fig_perfect_jsq},
      {{"fig-power-of-d", "Power-of-d: histogram vs ODE fixed point and the tail bound",
        {"power-of-d", "flow-sim", "ode"}},
       fig_power_of_d},
      {{"fig-pull", "Pull-based (invite/disinvite) histogram and series vs its fixed point",
        {"pull", "flow-sim"}},
       fig_pull},
      {{"fig-delay-perfect", "chi-delay tails under perfect stickiness vs packet-level routing",
        {"jsq", "delay", "analytic"}},
       fig_delay_perfect},
      {{"fig-shedding", "Load shedding histogram and series vs truncated Poisson",
        {"shedding", "flow-sim"}},
       fig_shedding},
      {{"fig-transfer-invite", "Transfer-to-invite histogram and series vs its fixed point",
        {"transfer-invite", "flow-sim"}},
       fig_transfer_invite},
      {{"fig-transfer-least", "Transfer-to-least-loaded histogram and series vs its fixed point",
        {"transfer-least", "flow-sim"}},
       fig_transfer_least},
      {{"violation-curves", "Empirical vs theoretical violation probability over h",
        {"shedding", "transfer-invite", "transfer-least", "flow-sim", "violation"}},
       violation_curves},
      {{"tradeoff-shedding", "Violation vs chi-delay improvement for load shedding",
        {"shedding", "tradeoff", "analytic"}},
       [](Context& c) { tradeoff(c, {"shedding"}); }},
      {{"tradeoff-invite", "Violation vs chi-delay improvement for transfer-to-invite",
        {"transfer-invite", "tradeoff", "analytic"}},
       [](Context& c) { tradeoff(c, {"transfer-invite"}); }},
      {{"tradeoff-least", "Violation vs chi-delay improvement for transfer-to-least-loaded",
        {"transfer-least", "tradeoff", "analytic"}},
       [](Context& c) { tradeoff(c, {"transfer-least"}); }},
      {{"tradeoff-compare", "Trade-off curves of all three threshold schemes",
        {"shedding", "transfer-invite", "transfer-least", "tradeoff", "analytic"}},
       [](Context& c) { tradeoff(c, {"shedding", "transfer-invite", "transfer-least"}); }},
      {{"fixed-point", "Mean-field fixed point of one scheme (scheme=...)",
        {"analytic", "fixed-point"}},
       fixed_point},
      {{"bin-variation", "Bin scheme: tracked-server series and histograms per bin count",
        {"bin", "bin-sim"}},
       bin_variation},
      {{"bin-violation", "Bin scheme: violation probability over h per bin count",
        {"bin", "bin-sim", "violation"}},
       bin_violation},
      {{"bin-tradeoff", "Bin scheme: violation vs chi-delay improvement per bin count",
        {"bin", "bin-sim", "tradeoff"}},
       bin_tradeoff},
  };
  return table;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Column {
  std::string name;
  std::map<long, double> values;
};

Column read_probability_column(const fs::path& path, const std::string& wanted) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  const auto header = split_fields(line);
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    return std::nullopt;
  };
  const auto idx_col = find("i");
  if (!idx_col) throw ValidationError(path.string() + ": shape mismatch, no 'i' column");
  std::optional<std::size_t> val_col;
  if (!wanted.empty()) {
    val_col = find(wanted);
    if (!val_col) throw ValidationError(path.string() + ": no column '" + wanted + "'");
  } else {
    for (const char* name : {"p_empirical", "p_theory", "p"}) {
      if ((val_col = find(name))) break;
    }
    if (!val_col && header.size() >= 2) val_col = *idx_col == 0 ? 1 : 0;
  }
  if (!val_col || *val_col == *idx_col) {
    throw ValidationError(path.string() + ": shape mismatch, no probability column");
  }
  Column col{header[*val_col], {}};
  long prev = -1;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_fields(line);
    if (cells.size() != header.size()) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": shape mismatch, wrong number of fields");
    }
    try {
      std::size_t used = 0;
      const long i = std::stol(cells[*idx_col], &used);
      if (used != cells[*idx_col].size() || i < 0 || i <= prev) throw std::invalid_argument("i");
      const double v = cells[*val_col].empty() ? 0.0 : std::stod(cells[*val_col]);
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("p");
      col.values[i] = v;
      prev = i;
    } catch (const std::logic_error&) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": shape mismatch, bad index or probability");
    }
  }
  if (col.values.empty()) throw ValidationError(path.string() + ": no data rows");
  return col;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog = [] {
    std::vector<ExperimentInfo> out;
    for (const auto& e : entries()) out.push_back(e.info);
    return out;
  }();
  return catalog;
}

std::vector<ExperimentInfo> list_experiments(std::string_view filter) {
  std::vector<ExperimentInfo> out;
  for (const auto& info : experiment_catalog()) {
    bool match = filter.empty() || info.name.find(filter) != std::string::npos;
    for (const auto& t : info.tags) match = match || t.find(filter) != std::string::npos;
    if (match) out.push_back(info);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const auto& table = entries();
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const Entry& e) { return e.info.name == spec.name; });
  if (it == table.end()) throw ValidationError("unknown experiment '" + spec.name + "'");

  const auto start = std::chrono::steady_clock::now();
  Context ctx{spec, ParamReader(spec.params), {}, json::object(), json::object(), {}};
  ctx.sys = read_system(ctx.params);
  fs::create_directories(spec.out_dir);
  it->run(ctx);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ctx.tolerances["pmf_mass"] = FlowDistribution::kSumTolerance;
  ctx.tolerances["sigma"] = 1e-12;
  ctx.tolerances["sigma_carried_traffic"] = 1e-10;
  json summary;
  summary["experiment"] = spec.name;
  summary["version"] = version();
  summary["seed"] = spec.seed;
  summary["params"] = spec.params;
  summary["system"] = {{"n", ctx.sys.n},       {"lambda", ctx.sys.lambda}, {"beta", ctx.sys.beta},
                       {"nu", ctx.sys.nu},     {"mu", ctx.sys.mu},         {"rho", ctx.sys.rho()},
                       {"utilization", ctx.sys.utilization()}};
  summary["threads"] = sweep::max_threads();
  summary["wall_clock_seconds"] = wall;
  summary["tolerances"] = ctx.tolerances;
  summary["results"] = ctx.results;
  json files = json::array();
  for (const auto& p : ctx.files) files.push_back(p.filename().string());
  summary["files"] = files;

  ExperimentResult result;
  result.summary_json = summary.dump(2);
  const auto summary_path = spec.out_dir / "summary.json";
  std::ofstream out(summary_path, std::ios::binary | std::ios::trunc);
  out << result.summary_json << '\n';
  if (!out) throw ValidationError("cannot write " + summary_path.string());
  result.files = std::move(ctx.files);
  result.files.push_back(summary_path);
  return result;
}

CompareReport compare_csv(const fs::path& a, const fs::path& b, const CompareOptions& options) {
  if (!(options.tol >= 0.0)) throw ValidationError("tolerance must be non-negative");
  const Column ca = read_probability_column(a, options.column_a);
  const Column cb = read_probability_column(b, options.column_b);
  CompareReport r;
  r.column_a = ca.name;
  r.column_b = cb.name;
  r.rows_a = ca.values.size();
  r.rows_b = cb.values.size();
  std::map<long, std::pair<double, double>> merged;
  for (const auto& [i, v] : ca.values) merged[i].first = v;
  for (const auto& [i, v] : cb.values) merged[i].second = v;
  double l1 = 0.0;
  for (const auto& [i, pq] : merged) {
    l1 += std::abs(pq.first - pq.second);
    r.mass_a += pq.first;
    r.mass_b += pq.second;
    r.mean_a += static_cast<double>(i) * pq.first;
    r.mean_b += static_cast<double>(i) * pq.second;
  }
  r.tv = 0.5 * l1;
  r.mean_gap = r.mean_b - r.mean_a;
  r.tol = options.tol;
  r.pass = r.tv <= options.tol;
  return r;
}

std::string format_report(const CompareReport& r) {
  std::ostringstream out;
  out << "columns: " << r.column_a << " (" << r.rows_a << " rows) vs " << r.column_b << " ("
      << r.rows_b << " rows)\n";
  out << "mass: " << fmt(r.mass_a) << " vs " << fmt(r.mass_b) << "\n";
  out << "mean: " << fmt(r.mean_a) << " vs " << fmt(r.mean_b) << " (gap " << fmt(r.mean_gap)
      << ")\n";
  out << "tv: " << fmt(r.tv) << " (tol " << fmt(r.tol) << ")\n";
  out << (r.pass ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace stickysim
