#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qmimo/config_io.hpp"
#include "qmimo/harness.hpp"
#include "support/properties.hpp"

using namespace qmimo;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Column-wise median of an odd-length sample, as the summary row uses.
double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

bool records_equal_modulo_wall(const SweepRecord& a, const SweepRecord& b) {
  return a.snr_db == b.snr_db && a.bits == b.bits && a.trial == b.trial &&
         a.rel_err_x == b.rel_err_x && a.rel_err_t == b.rel_err_t &&
         a.position_error_m == b.position_error_m &&
         a.velocity_error_mps == b.velocity_error_mps &&
         a.solver_iters == b.solver_iters && a.status == b.status;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("rel_err: definition and degenerate truths") {
  CMat x(2, 2);
  x << cxd(1.0, 2.0), cxd(-3.0, 0.5), cxd(0.0, -1.0), cxd(4.0, 4.0);
  CHECK(rel_err(x, x) == 0.0);
  CHECK(rel_err(CMat::Zero(2, 2), x) == 1.0);  // ||0 - X|| / ||X||
  CHECK(rel_err(CMat::Zero(2, 2), CMat::Zero(2, 2)) == 0.0);
  CHECK(std::isinf(rel_err(x, CMat::Zero(2, 2))));
  const CMat y = x + CMat::Constant(2, 2, cxd(0.1, 0.0));
  CHECK(rel_err(y, x) ==
        doctest::Approx((y - x).norm() / x.norm()).epsilon(1e-15));
}

TEST_CASE("simulate: noise level realizes the requested SNR") {
  const ExperimentConfig cfg = default_sweep_config();
  const Simulation sim = simulate(cfg, 15.0, 4, 3);
  REQUIRE(sim.pairs.size() ==
          static_cast<std::size_t>(cfg.scene.num_pairs()));

  // nominal ratio is exact by construction
  CHECK(10.0 * std::log10(sim.signal_power / sim.noise_var) ==
        doctest::Approx(15.0).epsilon(1e-12));

  // the realized noise matches the variance it was drawn with
  double sig = 0.0, noise = 0.0;
  for (const auto& p : sim.pairs) {
    const double cells =
        static_cast<double>(p.x_true.rows() * p.x_true.cols());
    sig += p.x_true.squaredNorm() / cells;
    noise += (p.y - p.x_true).squaredNorm() / cells;
  }
  const double empirical_db = 10.0 * std::log10(sig / noise);
  CHECK(std::abs(empirical_db - 15.0) < 0.1);

  // quantized and corrupted streams have consistent shapes
  for (const auto& p : sim.pairs) {
    CHECK(p.z.rows() == p.x_true.rows());
    CHECK(p.z.cols() == p.x_true.cols());
    CHECK(p.t_true.rows() == p.x_true.rows());
    CHECK(p.spec.levels == 16);  // 4 bits
    CHECK(p.spec.gamma > 0.0);
  }
}

TEST_CASE("run_trial: high-fidelity desk cell recovers the data") {
  // 14-bit quantization at 60 dB with a clean channel: recovery error is
  // limited only by the solver, well inside 1 percent
  ExperimentConfig cfg = default_sweep_config();
  cfg.channel.corruption_prob = 0.0;
  const SweepRecord r = run_trial(cfg, 60.0, 14, 0);
  CHECK(r.status == "ok");
  CHECK(r.rel_err_x < 0.01);
  CHECK(r.position_error_m == 0.0);
  CHECK(r.velocity_error_mps < 0.01);
  CHECK(r.solver_iters <= cfg.solver.max_iter);
}

TEST_CASE("run_trial: unquantized baseline on a clean scene") {
  // effectively noiseless input, sparse corruption handled by the l1 term;
  // the regularization floor sits around 5e-4 with these weights
  ExperimentConfig cfg = default_sweep_config();
  cfg.solver.mu = 0.02;
  cfg.solver.lambda = 0.02 / std::sqrt(71.0);
  const SweepRecord r = run_trial(cfg, 300.0, 14, 0, true);
  CHECK(r.status == "ok");
  CHECK(r.rel_err_x < 1e-3);
  CHECK(r.position_error_m == 0.0);
}

TEST_CASE("run_trial: identical cell and seed reproduce the record") {
  const ExperimentConfig cfg = properties::detail::mini_experiment();
  const SweepRecord a = run_trial(cfg, 20.0, 4, 1);
  const SweepRecord b = run_trial(cfg, 20.0, 4, 1);
  CHECK(records_equal_modulo_wall(a, b));

  // a different trial index draws different realizations
  const SweepRecord c = run_trial(cfg, 20.0, 4, 2);
  CHECK(a.rel_err_x != c.rel_err_x);
}

TEST_CASE("run_sweep: row order, mean rows, and csv determinism") {
  ExperimentConfig cfg = properties::detail::mini_experiment();
  cfg.sweep.snr_db = {10.0, 20.0};
  cfg.sweep.bits = {4, 6};
  cfg.sweep.trials = 3;
  const auto rows = run_sweep(cfg);
  REQUIRE(rows.size() == 16);  // 2 snr x 2 bits x (3 trials + mean)

  int idx = 0;
  for (double snr : cfg.sweep.snr_db) {
    for (int bits : cfg.sweep.bits) {
      double sum_relx = 0.0;
      for (int trial = 0; trial < 3; ++trial, ++idx) {
        CHECK(rows[idx].snr_db == snr);
        CHECK(rows[idx].bits == bits);
        CHECK(rows[idx].trial == trial);
        CHECK(rows[idx].status == "ok");
        sum_relx += rows[idx].rel_err_x;
      }
      // each cell closes with its mean row
      CHECK(rows[idx].trial == -1);
      CHECK(rows[idx].status == "mean");
      CHECK(rows[idx].rel_err_x ==
            doctest::Approx(sum_relx / 3.0).epsilon(1e-12));
      ++idx;
    }
  }

  // byte-identical CSV on a repeated run
  const std::string csv1 = sweep_csv(rows);
  const std::string csv2 = sweep_csv(run_sweep(cfg));
  CHECK(csv1 == csv2);
  CHECK(csv1.substr(0, csv1.find('\n')) ==
        "snr_db,bits,trial,rel_err_x,rel_err_t,position_error_m,"
        "velocity_error_mps,solver_iters,status");
}

TEST_CASE("run_trial: quantized recovery never beats the unquantized baseline") {
  // paired comparison on identical noise and corruption realizations; at
  // these cells the quantization penalty is far above run-to-run variation
  const ExperimentConfig cfg = properties::detail::mini_experiment();
  for (double snr : {10.0, 20.0}) {
    for (int bits : {2, 4}) {
      const SweepRecord q = run_trial(cfg, snr, bits, 0, false);
      const SweepRecord b = run_trial(cfg, snr, bits, 0, true);
      CHECK(q.status == "ok");
      CHECK(b.status == "ok");
      CHECK(q.rel_err_x >= 1.2 * b.rel_err_x);
    }
  }
}

TEST_CASE("run_locate: trial rows plus a per-column median summary") {
  ExperimentConfig cfg = properties::detail::mini_experiment();
  cfg.sweep.snr_db = {20.0};
  cfg.sweep.bits = {4};
  cfg.sweep.trials = 5;
  const auto rows = run_locate(cfg);
  REQUIRE(rows.size() == 6);

  std::vector<double> vx, vy, pe, it;
  for (int i = 0; i < 5; ++i) {
    CHECK(rows[i].trial == i);
    vx.push_back(rows[i].est_vx_mps);
    vy.push_back(rows[i].est_vy_mps);
    pe.push_back(rows[i].position_error_m);
    it.push_back(rows[i].solver_iters);
  }
  const LocateRecord& med = rows[5];
  CHECK(med.trial == -1);
  CHECK(med.est_vx_mps == median_of(vx));
  CHECK(med.est_vy_mps == median_of(vy));
  CHECK(med.position_error_m == median_of(pe));
  CHECK(med.solver_iters == median_of(it));

  const std::string csv = locate_csv(rows);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "trial,est_x_m,est_y_m,est_vx_mps,est_vy_mps,position_error_m,"
        "velocity_error_x_mps,velocity_error_y_mps,solver_iters");
}

TEST_CASE("config json: round trip is the identity on the serialized form") {
  ExperimentConfig cfg = default_sweep_config();
  cfg.quantizer.gamma = 1.75;
  cfg.channel.corruption_prob = 0.02;
  cfg.sweep.seed = 987654321ULL;
  const std::string text = config_to_json(cfg);
  const ExperimentConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.quantizer.gamma == 1.75);
  CHECK(back.sweep.seed == 987654321ULL);
  CHECK(back.scene.tx_positions.size() == cfg.scene.tx_positions.size());
}

TEST_CASE("config json: unknown keys and malformed input are rejected") {
  const std::string text = config_to_json(default_sweep_config());
  nlohmann::json j = nlohmann::json::parse(text);
  j["surprise"] = 1;
  CHECK_THROWS_AS(config_from_json(j.dump()), std::exception);

  nlohmann::json j2 = nlohmann::json::parse(text);
  j2["scene"]["surprise"] = 1;
  CHECK_THROWS_AS(config_from_json(j2.dump()), std::exception);

  CHECK_THROWS(config_from_json("not json at all {"));
  CHECK_THROWS(load_config("/nonexistent/path/config.json"));
}

TEST_CASE("config file: save and load round trip") {
  const std::string path = temp_path("qmimo_cfg_roundtrip.json");
  ExperimentConfig cfg = default_sweep_config();
  cfg.sweep.trials = 7;
  save_config(cfg, path);
  const ExperimentConfig back = load_config(path);
  CHECK(back.sweep.trials == 7);
  CHECK(config_to_json(back) == config_to_json(cfg));
  std::filesystem::remove(path);
}

TEST_CASE("cmat file: float64 round trip and error paths") {
  const std::string path = temp_path("qmimo_roundtrip.cmat");
  CMat x(3, 4);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 3; ++i) {
      x(i, j) = cxd(std::sin(1.0 + i + 4.0 * j), std::cos(2.0 + i - j));
    }
  }
  write_cmat(path, x);
  const CMat back = read_cmat(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 4);
  CHECK((back - x).norm() == 0.0);  // float64 payload is bit-exact

  // truncated payload
  {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    char buf[32];
    REQUIRE(std::fread(buf, 1, sizeof buf, f) == sizeof buf);
    std::fclose(f);
    f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fwrite(buf, 1, sizeof buf, f);
    std::fclose(f);
  }
  CHECK_THROWS(read_cmat(path));
  CHECK_THROWS(read_cmat("/nonexistent/file.cmat"));
  std::filesystem::remove(path);
}

TEST_CASE("config validation rejects out-of-domain settings") {
  {
    QuantizerConfig q;
    q.bits = 0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    q.bits = 25;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  }
  {
    ChannelConfig c;
    c.corruption_prob = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.corruption_prob = -0.1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }
  {
    SweepPlan p;
    p.trials = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = SweepPlan();
    p.snr_db.clear();
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = SweepPlan();
    p.bits = {0};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  {
    ExperimentConfig cfg = default_sweep_config();
    cfg.targets.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  {
    EstimatorConfig e = default_sweep_config().estimator;
    e.zero_pad = 0;
    CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  }
  CHECK_NOTHROW(default_sweep_config().validate());
  CHECK_NOTHROW(default_locate_config().validate());
}

TEST_CASE("randomized invariants hold at small scale") {
  CHECK_NOTHROW(properties::harness_reproducibility(25, 0x51CE5EEDULL));
  CHECK_NOTHROW(properties::harness_metric_sanity(25, 0x51CE5EEDULL));
  CHECK_NOTHROW(properties::harness_csv_schema(25, 0x51CE5EEDULL));
}

}  // TEST_SUITE
