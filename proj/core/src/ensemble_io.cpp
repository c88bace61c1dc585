#include <fedcert/ensemble_io.hpp>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fedcert {

namespace {

constexpr char kMagic[8] = {'F', 'C', 'E', 'N', 'S', 'v', '1', '\0'};

void wr(std::ofstream& out, const void* p, std::size_t bytes) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

void wr_u64(std::ofstream& out, std::uint64_t v) { wr(out, &v, sizeof v); }
void wr_u32(std::ofstream& out, std::uint32_t v) { wr(out, &v, sizeof v); }
void wr_u8(std::ofstream& out, std::uint8_t v) { wr(out, &v, sizeof v); }

void wr_doubles(std::ofstream& out, const std::vector<double>& v) {
  wr_u64(out, v.size());
  wr(out, v.data(), v.size() * sizeof(double));
}

void rd(std::ifstream& in, void* p, std::size_t bytes, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw std::runtime_error("ensemble file: " + path + ": truncated");
  }
}

std::uint64_t rd_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  rd(in, &v, sizeof v, path);
  return v;
}

std::uint32_t rd_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  rd(in, &v, sizeof v, path);
  return v;
}

std::uint8_t rd_u8(std::ifstream& in, const std::string& path) {
  std::uint8_t v = 0;
  rd(in, &v, sizeof v, path);
  return v;
}

std::vector<double> rd_doubles(std::ifstream& in, const std::string& path,
                               std::uint64_t max_len) {
  const std::uint64_t len = rd_u64(in, path);
  if (len > max_len) {
    throw std::runtime_error("ensemble file: " + path + ": implausible vector length");
  }
  std::vector<double> v(len);
  rd(in, v.data(), len * sizeof(double), path);
  return v;
}

}  // namespace

void save_ensemble(const std::string& path, const EnsembleFile& e) {
  if (e.models.empty()) throw std::invalid_argument("save_ensemble: no models");
  for (const Model& m : e.models) {
    if (m.num_classes != e.num_classes || m.dims != e.dims) {
      throw std::invalid_argument("save_ensemble: model shape differs from header");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_ensemble: cannot open " + path);
  wr(out, kMagic, sizeof kMagic);
  wr_u32(out, static_cast<std::uint32_t>(e.num_classes));
  wr_u64(out, e.dims);
  wr_u8(out, e.variant == Variant::Deterministic ? 0 : 1);
  wr_u8(out, e.p_mode == PMode::Sampled ? 0 : 1);
  wr_u64(out, e.n);
  wr_u32(out, e.k);
  wr_u64(out, e.config_digest);
  wr_doubles(out, e.scaler.mean);
  wr_doubles(out, e.scaler.stddev);
  wr_u64(out, e.models.size());
  for (const Model& m : e.models) {
    wr(out, m.weights.data(), m.weights.size() * sizeof(double));
    wr(out, m.bias.data(), m.bias.size() * sizeof(double));
  }
  out.flush();
  if (!out) throw std::runtime_error("save_ensemble: write failed for " + path);
}

EnsembleFile load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_ensemble: cannot open " + path);
  char magic[8] = {};
  rd(in, magic, sizeof magic, path);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("load_ensemble: " + path + ": not an ensemble file");
  }
  EnsembleFile e;
  e.num_classes = static_cast<int>(rd_u32(in, path));
  e.dims = rd_u64(in, path);
  e.variant = rd_u8(in, path) == 0 ? Variant::Deterministic : Variant::Probabilistic;
  e.p_mode = rd_u8(in, path) == 0 ? PMode::Sampled : PMode::Exact;
  e.n = rd_u64(in, path);
  e.k = rd_u32(in, path);
  e.config_digest = rd_u64(in, path);
  if (e.num_classes < 2 || e.dims < 1) {
    throw std::runtime_error("load_ensemble: " + path + ": bad model shape");
  }
  constexpr std::uint64_t kMaxDim = 1ull << 32;
  e.scaler.mean = rd_doubles(in, path, kMaxDim);
  e.scaler.stddev = rd_doubles(in, path, kMaxDim);
  if (e.scaler.mean.size() != e.dims || e.scaler.stddev.size() != e.dims) {
    throw std::runtime_error("load_ensemble: " + path + ": scaler shape mismatch");
  }
  const std::uint64_t count = rd_u64(in, path);
  if (count == 0 || count > kMaxDim) {
    throw std::runtime_error("load_ensemble: " + path + ": implausible model count");
  }
  e.models.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Model m = Model::zeros(e.num_classes, e.dims);
    rd(in, m.weights.data(), m.weights.size() * sizeof(double), path);
    rd(in, m.bias.data(), m.bias.size() * sizeof(double), path);
    e.models.push_back(std::move(m));
  }
  return e;
}

}  // namespace fedcert
