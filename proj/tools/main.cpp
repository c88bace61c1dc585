// Command-line front end: run experiments from a config file, certify stored
// ensembles against new data, re-check certificate files, and print cost
// estimates.

#include <fedcert/experiment.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

namespace {

using namespace fedcert;

int cmd_run(const std::string& config_path,
            const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> kv = parse_config_file(config_path);
  for (const auto& [key, value] : overrides) kv[key] = value;
  const ExperimentConfig cfg = config_from_kv(kv);
  const ExperimentResult result = run_experiment(cfg);
  write_experiment_outputs(cfg, result);
  std::printf("wrote %s/{result.json,certificates.json,ca_curve.csv,ensemble.bin}\n",
              cfg.output_dir.c_str());
  std::printf("test_accuracy=%.6f\n", result.test_accuracy);
  for (const auto& [m, ca] : result.ca_curve) std::printf("ca@%d=%.6f\n", m, ca);
  if (result.attack_success >= 0.0) {
    std::printf("attack_success=%.6f\n", result.attack_success);
  }
  std::printf("cost_per_client=%.6f\n", result.cost_per_client);
  return 0;
}

int cmd_certify(const std::string& ensemble_path, const std::string& test_csv,
                double alpha, std::uint64_t tie_seed, const std::string& out_path) {
  const EnsembleFile e = load_ensemble(ensemble_path);
  const Dataset testset = load_csv(test_csv);
  const auto certs = certify_with_ensemble(e, testset, alpha, tie_seed);
  const std::string text =
      certificates_json(e.variant, e.p_mode, e.n, e.k, alpha, e.config_digest, certs);
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + out_path);
    std::printf("wrote %s (%zu certificates)\n", out_path.c_str(), certs.size());
  }
  return 0;
}

int cmd_verify(const std::string& certs_path) {
  std::string report;
  const int violations = verify_certificates(certs_path, &report);
  std::fputs(report.c_str(), stdout);
  return violations == 0 ? 0 : 1;
}

int cmd_cost(std::size_t n, unsigned k, std::size_t num_groups, double beta,
             int global_iters, const std::string& variant) {
  const Variant v = variant_from_string(variant);
  const double cost = cost_estimate(n, k, num_groups, beta, global_iters, v);
  std::printf("cost_per_client=%.6f\n", cost);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified ensemble federated learning toolkit"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  std::string config_path;
  run->add_option("config", config_path, "config file ([section] + key = value)")
      ->required()
      ->check(CLI::ExistingFile);
  std::map<std::string, std::string> overrides;
  for (const std::string& name : config_field_names()) {
    run->add_option_function<std::string>(
        "--" + name,
        [&overrides, name](const std::string& v) { overrides[name] = v; },
        "override config key " + name);
  }

  // certify
  auto* certify = app.add_subcommand("certify", "certify a test csv with a stored ensemble");
  std::string ensemble_path;
  std::string test_csv;
  double alpha = 0.001;
  std::uint64_t tie_seed = 1;
  std::string out_path;
  certify->add_option("ensemble", ensemble_path, "ensemble file from a run")
      ->required()
      ->check(CLI::ExistingFile);
  certify->add_option("testset", test_csv, "csv with features and a label column")
      ->required()
      ->check(CLI::ExistingFile);
  certify->add_option("--alpha", alpha, "family-wise confidence level (sampled variant)");
  certify->add_option("--tie-seed", tie_seed, "seed for random tie-breaking");
  certify->add_option("--out", out_path, "output file (default: stdout)");

  // verify
  auto* verify = app.add_subcommand("verify", "re-check a certificates file");
  std::string certs_path;
  verify->add_option("certificates", certs_path, "certificates.json from a run")
      ->required()
      ->check(CLI::ExistingFile);

  // cost
  auto* cost = app.add_subcommand("cost", "per-client training cost estimate");
  std::size_t cost_n = 60;
  unsigned cost_k = 4;
  std::size_t cost_groups = 15;
  double cost_beta = 1.0;
  int cost_iters = 100;
  std::string cost_variant = "P";
  cost->add_option("--n", cost_n, "client count");
  cost->add_option("--k", cost_k, "group size (sampled variant)");
  cost->add_option("--num-groups", cost_groups, "number of groups");
  cost->add_option("--beta", cost_beta, "client fraction per round");
  cost->add_option("--global-iters", cost_iters, "global training rounds");
  cost->add_option("--variant", cost_variant, "D or P");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, overrides);
    if (certify->parsed()) return cmd_certify(ensemble_path, test_csv, alpha, tie_seed, out_path);
    if (verify->parsed()) return cmd_verify(certs_path);
    if (cost->parsed()) return cmd_cost(cost_n, cost_k, cost_groups, cost_beta,
                                        cost_iters, cost_variant);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
