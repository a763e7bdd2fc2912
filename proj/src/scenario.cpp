#include "flexprice/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "flexprice/csv.hpp"
#include "flexprice/errors.hpp"
#include "flexprice/stats.hpp"

namespace flexprice::scenario {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Typed access to one JSON object that remembers which keys were consumed so
// that unknown (misspelled) keys can be rejected.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError(path_ + " must be an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    seen_.insert(key);
    if (!node_.contains(key)) {
      if (fallback) return *fallback;
      throw ValidationError(where(key) + " is required");
    }
    const json& v = node_.at(key);
    if (!v.is_number()) throw ValidationError(where(key) + " must be a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    seen_.insert(key);
    if (!node_.contains(key)) {
      if (fallback) return *fallback;
      throw ValidationError(where(key) + " is required");
    }
    const json& v = node_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ValidationError(where(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    seen_.insert(key);
    if (!node_.contains(key)) {
      if (fallback) return *fallback;
      throw ValidationError(where(key) + " is required");
    }
    const json& v = node_.at(key);
    if (!v.is_string()) throw ValidationError(where(key) + " must be a string");
    return v.get<std::string>();
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(node_.at(key), where(key));
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void reject_unknown() const {
    for (const auto& [key, _] : node_.items())
      if (!seen_.count(key)) throw ValidationError("unknown field " + where(key));
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

ProfileSpec parse_profile(const json& node, const std::string& name, const fs::path& base_dir) {
  ProfileSpec p;
  if (node.is_number()) {
    p.kind = ProfileSpec::Kind::constant;
    p.value = node.get<double>();
    return p;
  }
  if (node.is_array()) {
    p.kind = ProfileSpec::Kind::inline_values;
    for (const auto& v : node) {
      if (!v.is_number()) throw ValidationError(name + " must contain only numbers");
      p.values.push_back(v.get<double>());
    }
    return p;
  }
  Section s(node, name);
  const std::string kind = s.text("kind");
  if (kind == "constant") {
    p.kind = ProfileSpec::Kind::constant;
    p.value = s.number("value");
  } else if (kind == "sinusoid") {
    p.kind = ProfileSpec::Kind::sinusoid;
    p.mean = s.number("mean");
    p.amplitude = s.number("amplitude");
    p.phase_hours = s.number("phase_hours", 0.0);
  } else if (kind == "csv") {
    p.kind = ProfileSpec::Kind::csv;
    fs::path path = s.text("path");
    p.path = path.is_absolute() ? path : fs::absolute(base_dir / path).lexically_normal();
    p.column = s.text("column", "value");
    if (!fs::exists(p.path))
      throw ValidationError(name + ".path: file not found: " + p.path.string());
  } else if (kind == "inline") {
    p.kind = ProfileSpec::Kind::inline_values;
    const json& values = s.raw("values");
    if (!values.is_array()) throw ValidationError(name + ".values must be an array");
    for (const auto& v : values) {
      if (!v.is_number()) throw ValidationError(name + ".values must contain only numbers");
      p.values.push_back(v.get<double>());
    }
  } else {
    throw ValidationError(name + ".kind '" + kind +
                          "' is not one of constant|sinusoid|csv|inline");
  }
  s.reject_unknown();
  return p;
}

json profile_to_json(const ProfileSpec& p) {
  switch (p.kind) {
    case ProfileSpec::Kind::inline_values: return {{"kind", "inline"}, {"values", p.values}};
    case ProfileSpec::Kind::constant: return {{"kind", "constant"}, {"value", p.value}};
    case ProfileSpec::Kind::sinusoid:
      return {{"kind", "sinusoid"},
              {"mean", p.mean},
              {"amplitude", p.amplitude},
              {"phase_hours", p.phase_hours}};
    case ProfileSpec::Kind::csv:
      return {{"kind", "csv"}, {"path", p.path.string()}, {"column", p.column}};
  }
  return {};
}

ProfileSpec constant_profile(double v) {
  ProfileSpec p;
  p.kind = ProfileSpec::Kind::constant;
  p.value = v;
  return p;
}

// Length and domain checks for every profile, given the resolved config.
void validate_config(const ScenarioConfig& c) {
  c.flex.validate();
  if (!(c.x0 >= 0.0 && c.x0 <= 1.0)) throw ValidationError("flex_params.x0 must lie in [0,1]");
  if (c.horizon_hours < 1) throw ValidationError("horizon_hours must be >= 1");
  c.opt.config.validate();

  const std::size_t n = c.horizon_hours;
  ff::Series{c.start_hour, generate(c.baseline, n, c.start_hour, "profiles.baseline"),
             ff::SeriesLabel::baseline}
      .validate();
  ff::Series{c.start_hour, generate(c.demand_ref, n, c.start_hour, "profiles.demand_ref"),
             ff::SeriesLabel::demand_ref}
      .validate();
  if (c.price)
    ff::Series{c.start_hour, generate(*c.price, n, c.start_hour, "profiles.price"),
               ff::SeriesLabel::price}
        .validate();

  if (c.simulate.mode == ff::SimMode::stochastic && !c.simulate.seed)
    throw ValidationError("simulate.seed is required when simulate.mode is stochastic");
  if (c.simulate.paths < 1) throw ValidationError("simulate.paths must be >= 1");

  if (c.ancillary) {
    const auto& a = *c.ancillary;
    price::AncillaryMap map;
    map.v0 = a.v0;
    map.droop = a.droop;
    map.weight_v = a.weight_v;
    map.weight_u = a.weight_u;
    map.v_ref = generate(a.v_ref, n, c.start_hour, "ancillary.v_ref");
    if (a.u_ref) map.u_ref = generate(*a.u_ref, n, c.start_hour, "ancillary.u_ref");
    map.validate(n);
  }

  if (c.mpc) {
    const auto& m = *c.mpc;
    m.tank.validate();
    m.controller.validate();
    if (m.sim_hours < 1) throw ValidationError("mpc.sim_hours must be >= 1");
    const std::size_t needed = m.sim_hours + m.controller.horizon;
    (void)generate(m.ambient, needed, c.start_hour, "mpc.ambient");
    (void)generate(m.load, needed, c.start_hour, "mpc.load");
    if (m.penalty) {
      (void)generate(*m.penalty, needed, c.start_hour, "mpc.penalty");
    } else if (c.horizon_hours < needed) {
      throw ValidationError("mpc without an explicit penalty uses the optimized price signal, "
                            "so horizon_hours must be >= mpc.sim_hours + mpc.controller.horizon (" +
                            std::to_string(needed) + ")");
    }
    if (!std::isfinite(m.initial.t_top) || !std::isfinite(m.initial.t_bot))
      throw ValidationError("mpc.initial_state must be finite");
  }
}

std::size_t line_of(const std::string& text, std::size_t byte, std::size_t& column) {
  std::size_t line = 1;
  column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return line;
}

}  // namespace

std::vector<double> generate(const ProfileSpec& spec, std::size_t length, int start_hour,
                             const std::string& name) {
  std::vector<double> out;
  switch (spec.kind) {
    case ProfileSpec::Kind::constant:
      out.assign(length, spec.value);
      break;
    case ProfileSpec::Kind::sinusoid:
      out.resize(length);
      for (std::size_t i = 0; i < length; ++i) {
        const double hour = static_cast<double>(start_hour) + static_cast<double>(i);
        out[i] = spec.mean +
                 spec.amplitude * std::sin(2.0 * std::numbers::pi * (hour - spec.phase_hours) / 24.0);
      }
      break;
    case ProfileSpec::Kind::inline_values:
      out = spec.values;
      break;
    case ProfileSpec::Kind::csv: {
      csv::Table table;
      try {
        table = csv::read(spec.path);
      } catch (const IoError& e) {
        throw ValidationError(name + ": " + e.what());
      }
      try {
        out = table.numbers(spec.column);
      } catch (const ValidationError& e) {
        throw ValidationError(name + " (" + spec.path.string() + "): " + e.what());
      }
      break;
    }
  }
  if (out.size() != length)
    throw ValidationError(name + " has " + std::to_string(out.size()) + " samples but " +
                          std::to_string(length) + " are required");
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!std::isfinite(out[i]))
      throw ValidationError(name + "[" + std::to_string(i) + "] is not finite");
  return out;
}

ScenarioConfig parse_config(const json& doc, const fs::path& base_dir) {
  ScenarioConfig c;
  Section root(doc, "");

  {
    Section f = root.child("flex_params");
    c.flex.capacity = f.number("capacity");
    c.flex.sensitivity = f.number("sensitivity");
    c.flex.ref_price = f.number("ref_price");
    c.flex.noise_sigma = f.number("noise_sigma", 0.0);
    c.flex.dt_hours = f.number("dt_hours", 1.0);
    c.x0 = f.number("x0", 0.5);
    f.reject_unknown();
  }
  c.horizon_hours = root.count("horizon_hours");
  c.start_hour = static_cast<int>(root.number("start_hour", 0.0));
  if (static_cast<double>(c.start_hour) != root.number("start_hour", 0.0))
    throw ValidationError("start_hour must be an integer");

  {
    Section p = root.child("profiles");
    c.baseline = parse_profile(p.raw("baseline"), "profiles.baseline", base_dir);
    c.demand_ref = parse_profile(p.raw("demand_ref"), "profiles.demand_ref", base_dir);
    if (p.has("price")) c.price = parse_profile(p.raw("price"), "profiles.price", base_dir);
    p.reject_unknown();
  }

  if (root.has("opt")) {
    Section o = root.child("opt");
    c.opt.mode = price::parse_opt_mode(o.text("mode", "sequential"));
    c.opt.cost = price::parse_cost_kind(o.text("cost", "absolute"));
    auto& oc = c.opt.config;
    oc.u_min = o.number("u_min", oc.u_min);
    oc.u_max = o.number("u_max", oc.u_max);
    oc.tol = o.number("tol", oc.tol);
    oc.max_iters = o.count("max_iters", oc.max_iters);
    oc.n_starts = o.count("n_starts", oc.n_starts);
    if (o.has("seed")) {
      oc.seed = o.count("seed");
      c.opt.seed_given = true;
    }
    o.reject_unknown();
  }

  if (root.has("simulate")) {
    Section s = root.child("simulate");
    const std::string mode = s.text("mode", "deterministic");
    if (mode == "deterministic") {
      c.simulate.mode = ff::SimMode::deterministic;
    } else if (mode == "stochastic") {
      c.simulate.mode = ff::SimMode::stochastic;
    } else {
      throw ValidationError("simulate.mode '" + mode + "' is not deterministic|stochastic");
    }
    if (s.has("seed")) c.simulate.seed = s.count("seed");
    c.simulate.paths = s.count("paths", 1);
    s.reject_unknown();
  }

  if (root.has("ancillary") && !root.raw("ancillary").is_null()) {
    Section a = root.child("ancillary");
    AncillarySection anc;
    anc.v0 = a.number("v0", anc.v0);
    anc.droop = a.number("droop", anc.droop);
    anc.v_ref = a.has("v_ref") ? parse_profile(a.raw("v_ref"), "ancillary.v_ref", base_dir)
                               : constant_profile(1.0);
    anc.weight_v = a.number("weight_v", anc.weight_v);
    anc.weight_u = a.number("weight_u", anc.weight_u);
    if (a.has("u_ref")) anc.u_ref = parse_profile(a.raw("u_ref"), "ancillary.u_ref", base_dir);
    a.reject_unknown();
    c.ancillary = std::move(anc);
  }

  if (root.has("mpc") && !root.raw("mpc").is_null()) {
    Section m = root.child("mpc");
    MpcSection ms;
    if (m.has("tank")) {
      Section t = m.child("tank");
      auto& tk = ms.tank;
      tk.c_top = t.number("c_top", tk.c_top);
      tk.c_bot = t.number("c_bot", tk.c_bot);
      tk.ua_top = t.number("ua_top", tk.ua_top);
      tk.ua_bot = t.number("ua_bot", tk.ua_bot);
      tk.k_mix = t.number("k_mix", tk.k_mix);
      tk.cop = t.number("cop", tk.cop);
      tk.p_max = t.number("p_max", tk.p_max);
      tk.dt_hours = t.number("dt_hours", tk.dt_hours);
      t.reject_unknown();
    }
    if (m.has("controller")) {
      Section k = m.child("controller");
      auto& ctl = ms.controller;
      ctl.horizon = k.count("horizon", ctl.horizon);
      ctl.t_min = k.number("t_min", ctl.t_min);
      ctl.t_max = k.number("t_max", ctl.t_max);
      ctl.slack_weight = k.number("slack_weight", ctl.slack_weight);
      ctl.terminal_weight = k.number("terminal_weight", ctl.terminal_weight);
      if (k.has("t_term")) ctl.t_term = k.number("t_term");
      k.reject_unknown();
    }
    if (m.has("initial_state")) {
      Section s = m.child("initial_state");
      ms.initial.t_top = s.number("t_top", ms.initial.t_top);
      ms.initial.t_bot = s.number("t_bot", ms.initial.t_bot);
      s.reject_unknown();
    }
    ms.sim_hours = m.count("sim_hours", ms.sim_hours);
    ms.ambient = parse_profile(m.raw("ambient"), "mpc.ambient", base_dir);
    ms.load = parse_profile(m.raw("load"), "mpc.load", base_dir);
    if (m.has("penalty")) ms.penalty = parse_profile(m.raw("penalty"), "mpc.penalty", base_dir);
    m.reject_unknown();
    c.mpc = std::move(ms);
  }

  const fs::path out = root.text("output_dir", "out");
  c.output_dir = out.is_absolute() ? out : fs::absolute(base_dir / out).lexically_normal();
  root.reject_unknown();

  validate_config(c);
  return c;
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t column = 0;
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1, column);
    throw ValidationError(path.string() + ":" + std::to_string(line) + ":" +
                          std::to_string(column) + ": " + e.what());
  }
  try {
    return parse_config(doc, fs::absolute(path).parent_path());
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json to_json(const ScenarioConfig& c) {
  json doc;
  doc["flex_params"] = {{"capacity", c.flex.capacity},       {"sensitivity", c.flex.sensitivity},
                        {"ref_price", c.flex.ref_price},     {"noise_sigma", c.flex.noise_sigma},
                        {"dt_hours", c.flex.dt_hours},       {"x0", c.x0}};
  doc["horizon_hours"] = c.horizon_hours;
  doc["start_hour"] = c.start_hour;
  doc["profiles"] = {{"baseline", profile_to_json(c.baseline)},
                     {"demand_ref", profile_to_json(c.demand_ref)}};
  if (c.price) doc["profiles"]["price"] = profile_to_json(*c.price);

  const auto& oc = c.opt.config;
  doc["opt"] = {{"mode", price::to_string(c.opt.mode)},
                {"cost", price::to_string(c.opt.cost)},
                {"u_min", oc.u_min},
                {"u_max", oc.u_max},
                {"tol", oc.tol},
                {"max_iters", oc.max_iters},
                {"n_starts", oc.n_starts}};
  if (c.opt.seed_given) doc["opt"]["seed"] = oc.seed;

  doc["simulate"] = {
      {"mode", c.simulate.mode == ff::SimMode::deterministic ? "deterministic" : "stochastic"},
      {"paths", c.simulate.paths}};
  if (c.simulate.seed) doc["simulate"]["seed"] = *c.simulate.seed;

  if (c.ancillary) {
    const auto& a = *c.ancillary;
    doc["ancillary"] = {{"v0", a.v0},
                        {"droop", a.droop},
                        {"v_ref", profile_to_json(a.v_ref)},
                        {"weight_v", a.weight_v},
                        {"weight_u", a.weight_u}};
    if (a.u_ref) doc["ancillary"]["u_ref"] = profile_to_json(*a.u_ref);
  }

  if (c.mpc) {
    const auto& m = *c.mpc;
    json controller = {{"horizon", m.controller.horizon},
                       {"t_min", m.controller.t_min},
                       {"t_max", m.controller.t_max},
                       {"slack_weight", m.controller.slack_weight},
                       {"terminal_weight", m.controller.terminal_weight}};
    if (m.controller.t_term) controller["t_term"] = *m.controller.t_term;
    doc["mpc"] = {{"tank",
                   {{"c_top", m.tank.c_top},
                    {"c_bot", m.tank.c_bot},
                    {"ua_top", m.tank.ua_top},
                    {"ua_bot", m.tank.ua_bot},
                    {"k_mix", m.tank.k_mix},
                    {"cop", m.tank.cop},
                    {"p_max", m.tank.p_max},
                    {"dt_hours", m.tank.dt_hours}}},
                  {"controller", controller},
                  {"initial_state", {{"t_top", m.initial.t_top}, {"t_bot", m.initial.t_bot}}},
                  {"sim_hours", m.sim_hours},
                  {"ambient", profile_to_json(m.ambient)},
                  {"load", profile_to_json(m.load)}};
    if (m.penalty) doc["mpc"]["penalty"] = profile_to_json(*m.penalty);
  }
  doc["output_dir"] = c.output_dir.string();
  return doc;
}

void apply_overrides(ScenarioConfig& cfg, const Overrides& o) {
  if (o.seed) {
    cfg.opt.config.seed = *o.seed;
    cfg.opt.seed_given = true;
    cfg.simulate.seed = *o.seed;
  }
  if (o.mode) cfg.opt.mode = *o.mode;
  if (o.cost) cfg.opt.cost = *o.cost;
  if (o.output_dir) cfg.output_dir = fs::absolute(*o.output_dir).lexically_normal();
  validate_config(cfg);
}

price::PriceProblem make_problem(const ScenarioConfig& c, price::CostKind cost) {
  price::PriceProblem p;
  p.x0.x = c.x0;
  p.params = c.flex;
  p.baseline = generate(c.baseline, c.horizon_hours, c.start_hour, "profiles.baseline");
  p.demand_ref = generate(c.demand_ref, c.horizon_hours, c.start_hour, "profiles.demand_ref");
  p.cost_kind = cost;
  if (c.ancillary) {
    const auto& a = *c.ancillary;
    price::AncillaryMap map;
    map.v0 = a.v0;
    map.droop = a.droop;
    map.weight_v = a.weight_v;
    map.weight_u = a.weight_u;
    map.v_ref = generate(a.v_ref, c.horizon_hours, c.start_hour, "ancillary.v_ref");
    if (a.u_ref) map.u_ref = generate(*a.u_ref, c.horizon_hours, c.start_hour, "ancillary.u_ref");
    p.ancillary = std::move(map);
  }
  return p;
}

bool RunReport::ok() const {
  for (const auto& r : rows)
    if (r.error) return false;
  return true;
}

namespace {

void write_price_csv(const fs::path& path, const price::PriceProblem& problem,
                     const price::PriceSolution& sol, int start_hour) {
  std::vector<std::string> header{"hour", "price", "baseline", "demand_ref", "demand_pred"};
  if (problem.ancillary) header.push_back("voltage");
  csv::Writer w(path, header);
  for (std::size_t t = 0; t < sol.prices.size(); ++t) {
    std::vector<double> row{static_cast<double>(start_hour) + static_cast<double>(t),
                            sol.prices[t], problem.baseline[t], problem.demand_ref[t],
                            sol.demand[t]};
    if (problem.ancillary) row.push_back(price::voltage_of_demand(sol.demand[t], *problem.ancillary));
    w.row(row);
  }
  w.close();
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRow>& rows) {
  csv::Writer w(path, {"mode", "cost", "sse", "sum_penalty", "objective", "iterations",
                       "clamp_events", "status"});
  for (const auto& r : rows) {
    if (r.error) {
      w.row(std::vector<std::string>{std::string(price::to_string(r.mode)),
                                     std::string(price::to_string(r.cost)), "nan", "nan", "nan",
                                     "0", "0", "error"});
      continue;
    }
    w.row(std::vector<std::string>{
        std::string(price::to_string(r.mode)), std::string(price::to_string(r.cost)),
        csv::format_number(r.sse), csv::format_number(r.sum_penalty),
        csv::format_number(r.objective), std::to_string(r.iterations),
        std::to_string(r.clamp_events), "ok"});
  }
  w.close();
}

void write_manifest(const fs::path& dir, const std::vector<fs::path>& files) {
  csv::Writer w(dir / "manifest.csv", {"file"});
  for (const auto& f : files) w.row(std::vector<std::string>{f.generic_string()});
  w.close();
}

// Starts beyond the sequential and nominal ones are random draws.
void require_opt_seed(const ScenarioConfig& cfg) {
  if (cfg.opt.config.n_starts > 2 && !cfg.opt.seed_given)
    throw ValidationError(
        "opt.seed (or --seed) is required for simultaneous runs with opt.n_starts > 2");
}

MetricsRow solve_one(const ScenarioConfig& cfg, price::OptMode mode, price::CostKind cost,
                     const fs::path& csv_path) {
  MetricsRow row;
  row.mode = mode;
  row.cost = cost;
  const auto problem = make_problem(cfg, cost);
  const auto t0 = std::chrono::steady_clock::now();
  const auto sol = price::optimize(problem, cfg.opt.config, mode);
  row.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const auto m = price::metrics(sol, problem.demand_ref);
  row.sse = m.sse;
  row.sum_penalty = m.sum_penalty;
  row.objective = sol.objective;
  row.iterations = sol.iterations;
  row.clamp_events = sol.clamp_events;
  write_price_csv(csv_path, problem, sol, cfg.start_hour);
  return row;
}

}  // namespace

void write_resolved(const ScenarioConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  const fs::path path = cfg.output_dir / "resolved.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

RunReport run_simulate(const ScenarioConfig& cfg) {
  RunReport report;
  const std::size_t n = cfg.horizon_hours;
  const auto baseline = generate(cfg.baseline, n, cfg.start_hour, "profiles.baseline");
  const auto prices = cfg.price ? generate(*cfg.price, n, cfg.start_hour, "profiles.price")
                                : std::vector<double>(n, cfg.flex.ref_price);
  const ff::FlexState x0{cfg.x0};
  const auto roll = ff::rollout(x0, prices, baseline, cfg.flex, cfg.simulate.mode, cfg.simulate.seed);

  csv::Writer w(cfg.output_dir / "ff.csv", {"hour", "price", "baseline", "demand_pred", "state"});
  for (std::size_t t = 0; t < n; ++t)
    w.row({static_cast<double>(cfg.start_hour) + static_cast<double>(t), prices[t], baseline[t],
           roll.demand[t], roll.states[t + 1]});
  w.close();
  report.files.push_back("ff.csv");

  if (cfg.simulate.mode == ff::SimMode::stochastic && cfg.simulate.paths > 1) {
    std::vector<std::uint64_t> seeds(cfg.simulate.paths);
    for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = *cfg.simulate.seed + i;
    const auto paths = ff::rollout_ensemble(x0, prices, baseline, cfg.flex, seeds);
    csv::Writer e(cfg.output_dir / "ensemble.csv",
                  {"hour", "demand_mean", "demand_min", "demand_max", "state_mean"});
    for (std::size_t t = 0; t < n; ++t) {
      double mean = 0.0, lo = paths[0].demand[t], hi = lo, state = 0.0;
      for (const auto& p : paths) {
        mean += p.demand[t];
        lo = std::min(lo, p.demand[t]);
        hi = std::max(hi, p.demand[t]);
        state += p.states[t + 1];
      }
      const double count = static_cast<double>(paths.size());
      e.row({static_cast<double>(cfg.start_hour) + static_cast<double>(t), mean / count, lo, hi,
             state / count});
    }
    e.close();
    report.files.push_back("ensemble.csv");
  }
  write_resolved(cfg);
  return report;
}

RunReport run_optimize(const ScenarioConfig& cfg) {
  if (cfg.opt.mode == price::OptMode::simultaneous) require_opt_seed(cfg);
  RunReport report;
  report.rows.push_back(solve_one(cfg, cfg.opt.mode, cfg.opt.cost, cfg.output_dir / "price.csv"));
  report.files.push_back("price.csv");
  write_metrics_csv(cfg.output_dir / "metrics.csv", report.rows);
  report.files.push_back("metrics.csv");
  write_resolved(cfg);
  return report;
}

RunReport run_compare(const ScenarioConfig& cfg) {
  require_opt_seed(cfg);
  RunReport report;
  for (auto mode : {price::OptMode::sequential, price::OptMode::simultaneous}) {
    for (auto cost : {price::CostKind::absolute, price::CostKind::quadratic}) {
      const fs::path rel =
          fs::path(std::string(price::to_string(mode)) + "_" + std::string(price::to_string(cost))) /
          "price.csv";
      try {
        report.rows.push_back(solve_one(cfg, mode, cost, cfg.output_dir / rel));
        report.files.push_back(rel);
      } catch (const std::exception& e) {
        MetricsRow row;
        row.mode = mode;
        row.cost = cost;
        row.error = std::string(price::to_string(mode)) + "/" +
                    std::string(price::to_string(cost)) + ": " + e.what();
        report.rows.push_back(row);
      }
    }
  }
  write_metrics_csv(cfg.output_dir / "metrics.csv", report.rows);
  report.files.push_back("metrics.csv");
  write_manifest(cfg.output_dir, report.files);
  write_resolved(cfg);
  return report;
}

MpcReport run_mpc(const ScenarioConfig& cfg) {
  if (!cfg.mpc) throw ValidationError("run-mpc requires an mpc section");
  const auto& m = *cfg.mpc;
  const std::size_t needed = m.sim_hours + m.controller.horizon;

  MpcReport report;
  if (m.penalty) {
    report.penalty = generate(*m.penalty, needed, cfg.start_hour, "mpc.penalty");
  } else {
    if (cfg.opt.mode == price::OptMode::simultaneous) require_opt_seed(cfg);
    const auto problem = make_problem(cfg, cfg.opt.cost);
    const auto sol = price::optimize(problem, cfg.opt.config, cfg.opt.mode);
    write_price_csv(cfg.output_dir / "penalty" / "price.csv", problem, sol, cfg.start_hour);
    report.files.push_back("penalty/price.csv");
    report.penalty.assign(sol.prices.begin(), sol.prices.begin() + static_cast<std::ptrdiff_t>(needed));
  }

  mpc::Disturbances dist;
  dist.ambient = generate(m.ambient, needed, cfg.start_hour, "mpc.ambient");
  dist.load = generate(m.load, needed, cfg.start_hour, "mpc.load");
  report.loop = mpc::receding_horizon_run(m.initial, report.penalty, dist, m.tank, m.controller,
                                          m.sim_hours);

  std::vector<double> applied_penalty, applied_power;
  csv::Writer w(cfg.output_dir / "mpc.csv",
                {"hour", "t_top", "t_bot", "power", "ambient", "load", "penalty"});
  for (const auto& r : report.loop.rows) {
    w.row({static_cast<double>(cfg.start_hour) + static_cast<double>(r.hour), r.t_top, r.t_bot,
           r.power, r.ambient, r.load, r.penalty});
    applied_penalty.push_back(r.penalty);
    applied_power.push_back(r.power);
  }
  w.close();
  report.files.push_back("mpc.csv");
  report.spearman_penalty_power = stats::spearman(applied_penalty, applied_power);

  csv::Writer s(cfg.output_dir / "mpc_summary.csv", {"metric", "value"});
  s.row(std::vector<std::string>{"energy_cost", csv::format_number(report.loop.energy_cost)});
  s.row(std::vector<std::string>{"spearman_penalty_power",
                                 csv::format_number(report.spearman_penalty_power)});
  s.row(std::vector<std::string>{"max_kkt_residual", csv::format_number(report.loop.max_kkt)});
  s.row(std::vector<std::string>{"solves", std::to_string(report.loop.solves)});
  s.close();
  report.files.push_back("mpc_summary.csv");
  write_resolved(cfg);
  return report;
}

}  // namespace flexprice::scenario
