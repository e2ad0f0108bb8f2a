#include "qmimo/config_io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "qmimo/types.hpp"

namespace qmimo {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const char* where,
                    std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::invalid_argument(std::string("config: unknown key '") +
                                  it.key() + "' in " + where);
    }
  }
}

std::vector<Vec2> read_points(const json& j, const char* what) {
  if (!j.is_array()) {
    throw std::invalid_argument(std::string("config: ") + what +
                                " must be an array of [x, y] pairs");
  }
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (const json& p : j) {
    if (!p.is_array() || p.size() != 2) {
      throw std::invalid_argument(std::string("config: ") + what +
                                  " entries must be [x, y] pairs");
    }
    out.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return out;
}

json points_json(const std::vector<Vec2>& pts) {
  json out = json::array();
  for (const Vec2& p : pts) out.push_back({p(0), p(1)});
  return out;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["scene"] = {{"tx_positions_m", points_json(cfg.scene.tx_positions)},
                {"rx_positions_m", points_json(cfg.scene.rx_positions)},
                {"first_carrier_hz", cfg.scene.f0},
                {"carrier_spacing_hz", cfg.scene.delta_f},
                {"bandwidth_hz", cfg.scene.b0},
                {"pulse_duration_s", cfg.scene.tp},
                {"pri_s", cfg.scene.t_pri},
                {"pulses", cfg.scene.q_pulses},
                {"max_delay_s", cfg.scene.tau_max}};
  j["targets"] = json::array();
  for (const TargetState& t : cfg.targets) {
    j["targets"].push_back({{"position_m", {t.position(0), t.position(1)}},
                            {"velocity_mps", {t.velocity(0), t.velocity(1)}}});
  }
  j["quantizer"] = {{"bits", cfg.quantizer.bits}, {"gamma", cfg.quantizer.gamma}};
  j["channel"] = {{"corruption_prob", cfg.channel.corruption_prob}};
  j["solver"] = {{"mu", cfg.solver.mu},
                 {"lambda", cfg.solver.lambda},
                 {"step", cfg.solver.step},
                 {"max_iter", cfg.solver.max_iter},
                 {"tol", cfg.solver.tol},
                 {"backtracking", cfg.solver.backtracking}};
  j["estimator"] = {{"grid",
                     {{"x_min_m", cfg.estimator.grid.x_min},
                      {"y_min_m", cfg.estimator.grid.y_min},
                      {"step_m", cfg.estimator.grid.step},
                      {"nx", cfg.estimator.grid.nx},
                      {"ny", cfg.estimator.grid.ny}}},
                    {"zero_pad", cfg.estimator.zero_pad}};
  j["sweep"] = {{"snr_db", cfg.sweep.snr_db},
                {"bits", cfg.sweep.bits},
                {"trials", cfg.sweep.trials},
                {"seed", cfg.sweep.seed}};
  j["out_dir"] = cfg.out_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") +
                                e.what());
  }
  reject_unknown(j, "top level",
                 {"scene", "targets", "quantizer", "channel", "solver",
                  "estimator", "sweep", "out_dir"});

  ExperimentConfig cfg;
  {
    const json& s = j.at("scene");
    reject_unknown(s, "scene",
                   {"tx_positions_m", "rx_positions_m", "first_carrier_hz",
                    "carrier_spacing_hz", "bandwidth_hz", "pulse_duration_s",
                    "pri_s", "pulses", "max_delay_s"});
    cfg.scene.tx_positions = read_points(s.at("tx_positions_m"), "tx_positions_m");
    cfg.scene.rx_positions = read_points(s.at("rx_positions_m"), "rx_positions_m");
    cfg.scene.f0 = s.value("first_carrier_hz", cfg.scene.f0);
    cfg.scene.delta_f = s.value("carrier_spacing_hz", cfg.scene.delta_f);
    cfg.scene.b0 = s.value("bandwidth_hz", cfg.scene.b0);
    cfg.scene.tp = s.value("pulse_duration_s", cfg.scene.tp);
    cfg.scene.t_pri = s.value("pri_s", cfg.scene.t_pri);
    cfg.scene.q_pulses = s.value("pulses", cfg.scene.q_pulses);
    cfg.scene.tau_max = s.value("max_delay_s", cfg.scene.tau_max);
  }
  for (const json& t : j.at("targets")) {
    reject_unknown(t, "targets[]", {"position_m", "velocity_mps"});
    TargetState ts;
    const json& p = t.at("position_m");
    const json& v = t.at("velocity_mps");
    if (!p.is_array() || p.size() != 2 || !v.is_array() || v.size() != 2) {
      throw std::invalid_argument(
          "config: target position_m and velocity_mps must be [x, y] pairs");
    }
    ts.position = Vec2(p[0].get<double>(), p[1].get<double>());
    ts.velocity = Vec2(v[0].get<double>(), v[1].get<double>());
    cfg.targets.push_back(ts);
  }
  if (j.contains("quantizer")) {
    const json& q = j["quantizer"];
    reject_unknown(q, "quantizer", {"bits", "gamma"});
    cfg.quantizer.bits = q.value("bits", cfg.quantizer.bits);
    cfg.quantizer.gamma = q.value("gamma", cfg.quantizer.gamma);
  }
  if (j.contains("channel")) {
    const json& c = j["channel"];
    reject_unknown(c, "channel", {"corruption_prob"});
    cfg.channel.corruption_prob =
        c.value("corruption_prob", cfg.channel.corruption_prob);
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown(s, "solver",
                   {"mu", "lambda", "step", "max_iter", "tol", "backtracking"});
    cfg.solver.mu = s.value("mu", cfg.solver.mu);
    cfg.solver.lambda = s.value("lambda", cfg.solver.lambda);
    cfg.solver.step = s.value("step", cfg.solver.step);
    cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
    cfg.solver.tol = s.value("tol", cfg.solver.tol);
    cfg.solver.backtracking = s.value("backtracking", cfg.solver.backtracking);
  }
  if (j.contains("estimator")) {
    const json& e = j["estimator"];
    reject_unknown(e, "estimator", {"grid", "zero_pad"});
    if (e.contains("grid")) {
      const json& g = e["grid"];
      reject_unknown(g, "estimator.grid", {"x_min_m", "y_min_m", "step_m", "nx", "ny"});
      cfg.estimator.grid.x_min = g.value("x_min_m", cfg.estimator.grid.x_min);
      cfg.estimator.grid.y_min = g.value("y_min_m", cfg.estimator.grid.y_min);
      cfg.estimator.grid.step = g.value("step_m", cfg.estimator.grid.step);
      cfg.estimator.grid.nx = g.value("nx", cfg.estimator.grid.nx);
      cfg.estimator.grid.ny = g.value("ny", cfg.estimator.grid.ny);
    }
    cfg.estimator.zero_pad = e.value("zero_pad", cfg.estimator.zero_pad);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    reject_unknown(s, "sweep", {"snr_db", "bits", "trials", "seed"});
    if (s.contains("snr_db")) {
      cfg.sweep.snr_db = s["snr_db"].get<std::vector<double>>();
    }
    if (s.contains("bits")) {
      cfg.sweep.bits = s["bits"].get<std::vector<int>>();
    }
    cfg.sweep.trials = s.value("trials", cfg.sweep.trials);
    cfg.sweep.seed = s.value("seed", cfg.sweep.seed);
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  write_text_file(path, config_to_json(cfg));
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::string& command, double elapsed_seconds,
                    std::size_t rows) {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["elapsed_s"] = elapsed_seconds;
  j["rows"] = rows;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  j["finished_at"] = stamp;
  j["config"] = json::parse(config_to_json(cfg));
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace qmimo
