#pragma once

#include <fedcert/config.hpp>
#include <fedcert/dataset.hpp>
#include <fedcert/fl_sim.hpp>
#include <fedcert/grouping.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fedcert {

// Serialized ensemble: everything needed to certify new inputs without
// retraining. Fixed-width binary layout, written and read on the same
// byte order; identical runs produce identical files.
struct EnsembleFile {
  int num_classes = 0;
  std::size_t dims = 0;
  Variant variant = Variant::Deterministic;
  PMode p_mode = PMode::Sampled;
  std::size_t n = 0;  // client population behind the ensemble
  unsigned k = 0;     // group size (0 for the hash variant)
  std::uint64_t config_digest = 0;
  Scaler scaler;      // train-time standardization, applied before predicting
  std::vector<Model> models;
};

void save_ensemble(const std::string& path, const EnsembleFile& e);
EnsembleFile load_ensemble(const std::string& path);

}  // namespace fedcert
