#include <doctest.h>

#include <fedcert/experiment.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace fedcert;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::create_directories(p);
  return p;
}

std::string write_temp(const std::string& name, const std::string& body) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small, fast hash-variant experiment.
ExperimentConfig small_d_config() {
  ExperimentConfig cfg;
  cfg.dataset.synthetic = {3, 6, 30, 10, 0.4};
  cfg.n_clients = 12;
  cfg.variant = Variant::Deterministic;
  cfg.num_groups = 5;
  cfg.train.global_iters = 8;
  cfg.m_grid = {0, 1, 2};
  cfg.master_seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("config file parsing") {
  std::string path = write_temp("fedcert_cfg.ini",
                                "# comment line\n"
                                "[dataset]\n"
                                "kind = synthetic\n"
                                "dims = 6\n"
                                "\n"
                                "[clients]\n"
                                "count = 12\n"
                                "[run]\n"
                                "master_seed = 9\n");
  auto kv = parse_config_file(path);
  CHECK(kv.at("dataset.kind") == "synthetic");
  CHECK(kv.at("dataset.dims") == "6");
  CHECK(kv.at("clients.count") == "12");
  CHECK(kv.at("run.master_seed") == "9");

  CHECK_THROWS_AS(parse_config_file(write_temp("fedcert_bad1.ini", "key = 1\n")),
                  std::runtime_error);  // key before any section
  CHECK_THROWS_AS(parse_config_file(write_temp("fedcert_bad2.ini",
                                               "[a]\nk = 1\nk = 2\n")),
                  std::runtime_error);  // duplicate key
  CHECK_THROWS_AS(parse_config_file("/nonexistent/fedcert.ini"), std::runtime_error);
}

TEST_CASE("config kv round-trip and digest") {
  ExperimentConfig cfg = small_d_config();
  auto kv = config_to_kv(cfg);
  ExperimentConfig back = config_from_kv(kv);
  CHECK(config_digest(back) == config_digest(cfg));
  CHECK(config_to_kv(back) == kv);

  // Execution-only fields stay out of the digest.
  ExperimentConfig moved = cfg;
  moved.threads = 4;
  moved.output_dir = "elsewhere";
  CHECK(config_digest(moved) == config_digest(cfg));

  // Semantic fields do not.
  ExperimentConfig reseeded = cfg;
  reseeded.master_seed = 6;
  CHECK(config_digest(reseeded) != config_digest(cfg));

  CHECK_THROWS_AS(config_from_kv({{"bogus.key", "1"}}), std::invalid_argument);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_d_config();
  cfg.validate();
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = small_d_config();
  cfg.variant = Variant::Probabilistic;
  cfg.group_size = 13;  // exceeds the client count
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = small_d_config();
  cfg.p_mode = PMode::Exact;  // exact enumeration is sampled-variant-only
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = small_d_config();
  cfg.m_grid = {0, -1};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config field names cover the kv keys") {
  const auto& names = config_field_names();
  for (const auto& [key, value] : config_to_kv(small_d_config())) {
    CAPTURE(key);
    CHECK(std::count(names.begin(), names.end(), key) == 1);
  }
  CHECK(std::count(names.begin(), names.end(), "run.threads") == 1);
  CHECK(std::count(names.begin(), names.end(), "run.output_dir") == 1);
}

TEST_CASE("metrics helpers") {
  std::vector<CertifiedPrediction> certs(4);
  certs[0] = {1, 2, false, LabelHistogram({0, 5}), std::nullopt};   // right, level 2
  certs[1] = {0, 0, false, LabelHistogram({3, 2}), std::nullopt};   // right, level 0
  certs[2] = {1, 1, false, LabelHistogram({1, 4}), std::nullopt};   // wrong label
  certs[3] = {1, kAbstain, true, LabelHistogram({2, 3}), std::nullopt};  // abstained
  std::vector<int> truth = {1, 0, 0, 1};

  CHECK(certified_accuracy(certs, truth, 0) == 0.5);
  CHECK(certified_accuracy(certs, truth, 1) == 0.25);  // level 0 drops out
  CHECK(certified_accuracy(certs, truth, 2) == 0.25);
  CHECK(certified_accuracy(certs, truth, 3) == 0.0);
  CHECK_THROWS_AS(certified_accuracy(certs, truth, -1), std::invalid_argument);

  CHECK(attack_success_rate({2, 2, 0, 2}, 2) == 0.75);
}

TEST_CASE("cost_estimate") {
  // Hash groups: every client trains in its one group for all T rounds.
  CHECK(cost_estimate(60, 0, 15, 1.0, 100, Variant::Deterministic) == 100.0);
  // Sampled groups: k*N*beta*T/n.
  CHECK(cost_estimate(60, 4, 15, 0.1, 1000, Variant::Probabilistic) == 100.0);
  CHECK(cost_estimate(60, 2, 30, 1.0, 100, Variant::Probabilistic) == 100.0);
  // k*N == n makes the two variants cost the same.
  CHECK(cost_estimate(60, 4, 15, 0.1, 1000, Variant::Probabilistic) ==
        cost_estimate(60, 0, 15, 0.1, 1000, Variant::Deterministic));
  // Oversampling k*N > n costs proportionally more.
  CHECK(cost_estimate(60, 4, 30, 1.0, 100, Variant::Probabilistic) == 200.0);
}

TEST_CASE("hash-variant experiment end to end") {
  ExperimentConfig cfg = small_d_config();
  cfg.output_dir = temp_dir("fedcert_run_d").string();
  ExperimentResult r = run_experiment(cfg);

  CHECK(r.config_digest == config_digest(cfg));
  CHECK(r.models.size() == 5);
  CHECK(r.certificates.size() == 30);  // 3 classes x 10 test examples
  CHECK(r.test_labels.size() == 30);
  for (const auto& c : r.certificates) {
    CHECK_FALSE(c.abstained);
    CHECK(c.level >= 0);
    CHECK(c.level <= 2);  // never beyond total/2 of 5 votes
  }
  // CA is non-increasing in m.
  for (std::size_t i = 1; i < r.ca_curve.size(); ++i)
    CHECK(r.ca_curve[i].second <= r.ca_curve[i - 1].second);
  CHECK(r.ca_curve[0].second <= r.test_accuracy);
  CHECK(r.cost_per_client == 8.0);
  CHECK(r.attack_success == -1.0);

  write_experiment_outputs(cfg, r);
  fs::path dir(cfg.output_dir);
  CHECK(fs::exists(dir / "result.json"));
  CHECK(fs::exists(dir / "certificates.json"));
  CHECK(fs::exists(dir / "ca_curve.csv"));
  CHECK(fs::exists(dir / "ensemble.bin"));

  // Certificates withstand independent re-checking.
  std::string report;
  CHECK(verify_certificates((dir / "certificates.json").string(), &report) == 0);
  CHECK(report.find("0 violation(s)") != std::string::npos);

  // The CSV has a header and one row per grid point.
  std::string csv = slurp(dir / "ca_curve.csv");
  CHECK(csv.rfind("m,ca\n", 0) == 0);

  // The saved ensemble certifies fresh raw inputs.
  EnsembleFile e = load_ensemble((dir / "ensemble.bin").string());
  CHECK(e.models.size() == 5);
  CHECK(e.variant == Variant::Deterministic);
  Dataset fresh = gen_synthetic(3, 6, 4, 0.4, 321);
  auto certs = certify_with_ensemble(e, fresh, 0.001, 7);
  CHECK(certs.size() == fresh.size());
}

TEST_CASE("experiment reruns are byte-identical") {
  ExperimentConfig cfg = small_d_config();
  ExperimentResult a = run_experiment(cfg);
  ExperimentResult b = run_experiment(cfg);
  CHECK(certificates_to_json(cfg, a) == certificates_to_json(cfg, b));
  CHECK(ca_curve_to_csv(a) == ca_curve_to_csv(b));
  for (std::size_t i = 0; i < a.models.size(); ++i) {
    CHECK(a.models[i].weights == b.models[i].weights);
    CHECK(a.models[i].bias == b.models[i].bias);
  }
}

TEST_CASE("sampled-variant experiment abstains or certifies coherently") {
  ExperimentConfig cfg;
  cfg.dataset.synthetic = {3, 6, 30, 8, 0.4};
  cfg.n_clients = 12;
  cfg.variant = Variant::Probabilistic;
  cfg.p_mode = PMode::Sampled;
  cfg.num_groups = 20;
  cfg.group_size = 3;
  cfg.alpha = 0.05;
  cfg.train.global_iters = 8;
  cfg.m_grid = {0, 1};
  cfg.master_seed = 6;
  cfg.output_dir = temp_dir("fedcert_run_p").string();

  ExperimentResult r = run_experiment(cfg);
  CHECK(r.models.size() == 20);
  CHECK(r.groups.k == 3);
  for (const auto& c : r.certificates) {
    REQUIRE(c.bounds.has_value());
    CHECK(c.histogram.total == 20);
    if (c.abstained) {
      CHECK(c.level == kAbstain);
      CHECK(c.bounds->lower_y <= c.bounds->upper_z);
    } else {
      CHECK(c.level >= 0);
      CHECK(c.bounds->lower_y > c.bounds->upper_z);
    }
  }
  write_experiment_outputs(cfg, r);
  std::string report;
  CHECK(verify_certificates((fs::path(cfg.output_dir) / "certificates.json").string(),
                            &report) == 0);
}

TEST_CASE("exact-mode experiment trains one model per subset") {
  ExperimentConfig cfg;
  cfg.dataset.synthetic = {2, 4, 20, 6, 0.4};
  cfg.n_clients = 6;
  cfg.variant = Variant::Probabilistic;
  cfg.p_mode = PMode::Exact;
  cfg.group_size = 2;
  cfg.num_groups = 1;  // ignored by enumeration
  cfg.train.global_iters = 6;
  cfg.m_grid = {0, 1};
  cfg.master_seed = 7;
  cfg.output_dir = temp_dir("fedcert_run_x").string();

  ExperimentResult r = run_experiment(cfg);
  CHECK(r.models.size() == 15);  // C(6, 2)
  for (const auto& c : r.certificates) {
    CHECK_FALSE(c.abstained);
    CHECK(c.level >= 0);
    CHECK(c.level <= 4);  // n - k
  }
  write_experiment_outputs(cfg, r);
  std::string report;
  CHECK(verify_certificates((fs::path(cfg.output_dir) / "certificates.json").string(),
                            &report) == 0);
}

TEST_CASE("experiment failures carry the stage label") {
  ExperimentConfig cfg = small_d_config();
  cfg.alpha = 2.0;
  try {
    run_experiment(cfg);
    FAIL("expected a stage-labeled failure");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("stage config") != std::string::npos);
  }
}

TEST_CASE("ensemble file round-trip") {
  ExperimentConfig cfg = small_d_config();
  ExperimentResult r = run_experiment(cfg);

  EnsembleFile e;
  e.num_classes = 3;
  e.dims = 6;
  e.variant = cfg.variant;
  e.p_mode = cfg.p_mode;
  e.n = cfg.n_clients;
  e.k = 0;
  e.config_digest = r.config_digest;
  e.scaler = r.scaler;
  e.models = r.models;

  fs::path path = temp_dir("fedcert_io") / "ensemble.bin";
  save_ensemble(path.string(), e);
  EnsembleFile back = load_ensemble(path.string());
  CHECK(back.num_classes == e.num_classes);
  CHECK(back.dims == e.dims);
  CHECK(back.variant == e.variant);
  CHECK(back.n == e.n);
  CHECK(back.k == e.k);
  CHECK(back.config_digest == e.config_digest);
  CHECK(back.scaler.mean == e.scaler.mean);
  CHECK(back.scaler.stddev == e.scaler.stddev);
  REQUIRE(back.models.size() == e.models.size());
  for (std::size_t i = 0; i < e.models.size(); ++i) {
    CHECK(back.models[i].weights == e.models[i].weights);
    CHECK(back.models[i].bias == e.models[i].bias);
  }

  // Same inputs, same bytes.
  fs::path again = temp_dir("fedcert_io") / "ensemble2.bin";
  save_ensemble(again.string(), e);
  CHECK(slurp(path) == slurp(again));

  // Corruption is detected.
  std::string bytes = slurp(path);
  fs::path bad = temp_dir("fedcert_io") / "bad.bin";
  std::ofstream out(bad, std::ios::binary);
  out.write(bytes.data(), static_cast<long>(bytes.size() / 2));
  out.close();
  CHECK_THROWS_AS(load_ensemble(bad.string()), std::runtime_error);

  std::ofstream magic(bad, std::ios::binary);
  magic << "NOTMAGIC" << bytes.substr(8);
  magic.close();
  CHECK_THROWS_AS(load_ensemble(bad.string()), std::runtime_error);
}

TEST_CASE("verify_certificates flags tampering") {
  ExperimentConfig cfg = small_d_config();
  cfg.output_dir = temp_dir("fedcert_tamper").string();
  ExperimentResult r = run_experiment(cfg);
  write_experiment_outputs(cfg, r);

  fs::path certs = fs::path(cfg.output_dir) / "certificates.json";
  std::string text = slurp(certs);
  // Inflate the first claimed level to 3, impossible for 5 votes.
  auto pos = text.find("\"level\": ");
  REQUIRE(pos != std::string::npos);
  auto end = text.find_first_of(",\n", pos);
  REQUIRE(end != std::string::npos);
  text.replace(pos, end - pos, "\"level\": 3");
  std::ofstream out(certs);
  out << text;
  out.close();

  std::string report;
  CHECK(verify_certificates(certs.string(), &report) >= 1);
  CHECK(report.find("violation") != std::string::npos);
}
