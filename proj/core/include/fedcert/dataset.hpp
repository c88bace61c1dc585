#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedcert {

// Dense feature matrix with integer class labels in [0, num_classes).
struct Dataset {
  std::size_t dims = 0;
  int num_classes = 0;
  std::vector<double> features;  // row-major, labels.size() * dims
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dims, dims};
  }
  void validate() const;
};

// Isotropic Gaussian blob per class, centered on coordinate axis c mod dims
// (unit scale), standard deviation `spread`. Examples are emitted class-major,
// per_class each, so the labels are balanced by construction.
Dataset gen_synthetic(int num_classes, std::size_t dims, std::size_t per_class,
                      double spread, std::uint64_t seed);

// Label-skewed split across n_clients. Clients are cut into num_classes
// near-equal buckets; an example with label l goes to bucket l with
// probability q and to each other bucket with probability (1-q)/(L-1), then
// to a uniform client inside the bucket. q = 1/L reproduces a uniform split;
// q = 1 routes every example to its own label's bucket.
std::vector<Dataset> partition_noniid(const Dataset& data, std::size_t n_clients,
                                      double q, std::uint64_t seed);

// Numeric CSV, no header, last column an integer class label.
Dataset load_csv(const std::string& path);

// Backdoor pattern: overwrite `indices` with `values`.
struct TriggerSpec {
  std::vector<std::size_t> indices;
  std::vector<double> values;
  int target_label = 0;
  void validate(std::size_t dims, int num_classes) const;
};

// Returns x with the trigger coordinates overwritten; idempotent.
std::vector<double> embed_trigger(std::span<const double> x, const TriggerSpec& t);

// Per-column standardization fitted on training data. Columns with (near)
// zero variance get unit scale so they map to zero, not infinity.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;
};
Scaler fit_scaler(const Dataset& data);
Dataset apply_scaler(const Dataset& data, const Scaler& s);

}  // namespace fedcert
