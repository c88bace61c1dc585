#pragma once

#include <fedcert/config.hpp>
#include <fedcert/ensemble.hpp>
#include <fedcert/ensemble_io.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fedcert {

struct ExperimentResult {
  std::uint64_t config_digest = 0;
  GroupAssignment groups;
  Scaler scaler;
  std::vector<Model> models;
  std::vector<CertifiedPrediction> certificates;
  std::vector<int> test_labels;
  double test_accuracy = 0.0;  // plain ensemble vote accuracy, no abstention
  std::vector<std::pair<int, double>> ca_curve;  // (m, CA@m) over the m grid
  double attack_success = -1.0;  // backdoor only; fraction hitting the target
  double cost_per_client = 0.0;  // expected training iterations per client
  double train_seconds = 0.0;
  double certify_seconds = 0.0;
};

// Fraction of test inputs whose certificate is correct at tolerance m:
// prediction matches the truth and level >= m. Abstentions count as
// incorrect. Non-increasing in m.
double certified_accuracy(const std::vector<CertifiedPrediction>& certs,
                          const std::vector<int>& truth, int m);

// Fraction of predictions equal to the attacker's target label.
double attack_success_rate(const std::vector<int>& predictions, int target_label);

// Expected per-client training iterations: k*N*beta*T/n for sampled groups,
// beta*T for hash groups (each client sits in exactly one group).
double cost_estimate(std::size_t n, unsigned k, std::size_t num_groups,
                     double beta, int global_iters, Variant v);

// Full pipeline: build data, split clients, group, poison (if configured),
// train every group model, certify the test set, compute metrics. Every
// failure surfaces as an exception labeled with the pipeline stage.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Deterministic serializations (timing lives in result.json only, under the
// "timing" key, so byte comparison of reruns strips exactly that).
std::string result_to_json(const ExperimentConfig& cfg, const ExperimentResult& r);
std::string certificates_to_json(const ExperimentConfig& cfg, const ExperimentResult& r);
// Same record schema, driven by ensemble metadata instead of a full config.
std::string certificates_json(Variant variant, PMode p_mode, std::size_t n, unsigned k,
                              double alpha, std::uint64_t config_digest,
                              const std::vector<CertifiedPrediction>& certs);
std::string ca_curve_to_csv(const ExperimentResult& r);

// Writes result.json, certificates.json, ca_curve.csv, ensemble.bin into
// cfg.output_dir (created if missing).
void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& r);

// Re-checks a certificates.json file: recomputes each record's level from its
// stored evidence, confirms the level's condition holds and fails one step
// higher, and (for small hash-variant instances) confirms agreement with the
// brute-force reference. Returns the number of violations; `report` collects
// one line per violation plus a summary.
int verify_certificates(const std::string& certs_path, std::string* report);

// Certify a standalone test set with a saved ensemble (applies the stored
// scaler; alpha is the family-wise level for the sampled variant).
std::vector<CertifiedPrediction> certify_with_ensemble(const EnsembleFile& e,
                                                       const Dataset& raw_testset,
                                                       double alpha,
                                                       std::uint64_t tie_seed);

}  // namespace fedcert
