#include <fedcert/dataset.hpp>

#include <fedcert/rng.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace fedcert {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void Dataset::validate() const {
  require(dims >= 1, "dataset: need at least one feature column");
  require(num_classes >= 2, "dataset: need at least two classes");
  require(features.size() == labels.size() * dims, "dataset: feature matrix shape mismatch");
  for (double v : features) {
    require(std::isfinite(v), "dataset: non-finite feature value");
  }
  for (int l : labels) {
    require(l >= 0 && l < num_classes, "dataset: label out of range");
  }
}

Dataset gen_synthetic(int num_classes, std::size_t dims, std::size_t per_class,
                      double spread, std::uint64_t seed) {
  require(num_classes >= 2, "gen_synthetic: need at least two classes");
  require(dims >= 1, "gen_synthetic: need at least one dimension");
  require(per_class >= 1, "gen_synthetic: need at least one example per class");
  require(spread > 0.0, "gen_synthetic: need spread > 0");
  Dataset d;
  d.dims = dims;
  d.num_classes = num_classes;
  d.features.reserve(static_cast<std::size_t>(num_classes) * per_class * dims);
  d.labels.reserve(static_cast<std::size_t>(num_classes) * per_class);
  Rng rng = Rng::derive(seed, 0);
  for (int c = 0; c < num_classes; ++c) {
    const std::size_t axis = static_cast<std::size_t>(c) % dims;
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t j = 0; j < dims; ++j) {
        const double mean = (j == axis) ? 1.0 : 0.0;
        d.features.push_back(mean + spread * rng.next_gaussian());
      }
      d.labels.push_back(c);
    }
  }
  d.validate();
  return d;
}

std::vector<Dataset> partition_noniid(const Dataset& data, std::size_t n_clients,
                                      double q, std::uint64_t seed) {
  data.validate();
  const int L = data.num_classes;
  require(n_clients >= static_cast<std::size_t>(L), "partition_noniid: need n_clients >= num_classes");
  if (q < 1.0 / L - 1e-12 || q > 1.0 + 1e-12) {
    throw std::domain_error("partition_noniid: q outside [1/L, 1]");
  }
  // Bucket b owns the contiguous client range [b*n/L, (b+1)*n/L).
  std::vector<std::size_t> bucket_begin(L + 1);
  for (int b = 0; b <= L; ++b) {
    bucket_begin[b] = (n_clients * static_cast<std::size_t>(b)) / static_cast<std::size_t>(L);
  }
  std::vector<Dataset> clients(n_clients);
  for (auto& c : clients) {
    c.dims = data.dims;
    c.num_classes = L;
  }
  Rng rng = Rng::derive(seed, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int l = data.labels[i];
    int bucket = l;
    if (rng.next_unit() >= q) {
      const int other = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(L - 1)));
      bucket = other < l ? other : other + 1;
    }
    const std::size_t lo = bucket_begin[bucket];
    const std::size_t width = bucket_begin[bucket + 1] - lo;
    const std::size_t client = lo + static_cast<std::size_t>(rng.next_below(width));
    const auto row = data.row(i);
    clients[client].features.insert(clients[client].features.end(), row.begin(), row.end());
    clients[client].labels.push_back(l);
  }
  return clients;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw std::runtime_error("load_csv: " + path + " line " + std::to_string(lineno) +
                                 ": not a number: \"" + cell + "\"");
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) {
        throw std::runtime_error("load_csv: " + path + " line " + std::to_string(lineno) +
                                 ": trailing characters in \"" + cell + "\"");
      }
      cells.push_back(v);
    }
    if (cells.size() < 2) {
      throw std::runtime_error("load_csv: " + path + " line " + std::to_string(lineno) +
                               ": need at least one feature and a label");
    }
    if (d.dims == 0) {
      d.dims = cells.size() - 1;
    } else if (cells.size() - 1 != d.dims) {
      throw std::runtime_error("load_csv: " + path + " line " + std::to_string(lineno) +
                               ": expected " + std::to_string(d.dims) + " features, got " +
                               std::to_string(cells.size() - 1));
    }
    const double raw_label = cells.back();
    const int label = static_cast<int>(raw_label);
    if (static_cast<double>(label) != raw_label || label < 0) {
      throw std::runtime_error("load_csv: " + path + " line " + std::to_string(lineno) +
                               ": label must be a non-negative integer");
    }
    d.features.insert(d.features.end(), cells.begin(), cells.end() - 1);
    d.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  if (d.labels.empty()) throw std::runtime_error("load_csv: " + path + ": empty dataset");
  d.num_classes = max_label + 1;
  d.validate();
  return d;
}

void TriggerSpec::validate(std::size_t dims, int num_classes) const {
  require(indices.size() == values.size(), "trigger: indices/values length mismatch");
  require(target_label >= 0 && target_label < num_classes, "trigger: target label out of range");
  std::unordered_set<std::size_t> seen;
  for (std::size_t i : indices) {
    require(i < dims, "trigger: index out of range");
    require(seen.insert(i).second, "trigger: duplicate index");
  }
  for (double v : values) {
    require(std::isfinite(v), "trigger: non-finite value");
  }
}

std::vector<double> embed_trigger(std::span<const double> x, const TriggerSpec& t) {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < t.indices.size(); ++i) {
    if (t.indices[i] >= out.size()) throw std::domain_error("embed_trigger: index out of range");
    out[t.indices[i]] = t.values[i];
  }
  return out;
}

Scaler fit_scaler(const Dataset& data) {
  data.validate();
  const std::size_t n = data.size();
  Scaler s;
  s.mean.assign(data.dims, 0.0);
  s.stddev.assign(data.dims, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::size_t j = 0; j < data.dims; ++j) s.mean[j] += row[j];
  }
  for (std::size_t j = 0; j < data.dims; ++j) s.mean[j] /= static_cast<double>(n);
  std::vector<double> var(data.dims, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    for (std::size_t j = 0; j < data.dims; ++j) {
      const double dlt = row[j] - s.mean[j];
      var[j] += dlt * dlt;
    }
  }
  for (std::size_t j = 0; j < data.dims; ++j) {
    var[j] /= static_cast<double>(n);
    s.stddev[j] = var[j] < 1e-12 ? 1.0 : std::sqrt(var[j]);
  }
  return s;
}

Dataset apply_scaler(const Dataset& data, const Scaler& s) {
  require(s.mean.size() == data.dims && s.stddev.size() == data.dims,
          "apply_scaler: scaler shape mismatch");
  Dataset out = data;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < out.dims; ++j) {
      out.features[i * out.dims + j] = (out.features[i * out.dims + j] - s.mean[j]) / s.stddev[j];
    }
  }
  return out;
}

}  // namespace fedcert
