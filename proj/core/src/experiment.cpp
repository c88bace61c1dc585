#include <fedcert/experiment.hpp>

#include <fedcert/oracle.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace fedcert {

namespace {

using nlohmann::json;

// Independent sub-seed streams carved out of the master seed.
constexpr std::uint64_t kTrainDataStream = 101;
constexpr std::uint64_t kTestDataStream = 102;
constexpr std::uint64_t kPartitionStream = 103;
constexpr std::uint64_t kGroupStream = 104;
constexpr std::uint64_t kTrainStream = 105;
constexpr std::uint64_t kTieStream = 106;
constexpr std::uint64_t kServerDataStream = 107;
constexpr std::uint64_t kAttackTieStream = 108;

std::uint64_t sub_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(master ^ mix64(stream));
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string client_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "client-%04zu", i);
  return buf;
}

// Plain ensemble votes (no certification) for a dataset.
std::vector<int> ensemble_votes(const std::vector<Model>& models, const Dataset& data,
                                Variant variant, std::uint64_t tie_seed) {
  const int L = models.front().num_classes;
  std::vector<int> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const LabelHistogram hist = label_histogram(models, data.row(i), L);
    if (variant == Variant::Deterministic) {
      out.push_back(majority_vote(hist, TieRule::SmallestIndex).winner);
    } else {
      Rng rng = Rng::derive(tie_seed, static_cast<std::uint64_t>(i));
      out.push_back(majority_vote(hist, TieRule::Random, &rng).winner);
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

double certified_accuracy(const std::vector<CertifiedPrediction>& certs,
                          const std::vector<int>& truth, int m) {
  if (certs.size() != truth.size() || certs.empty()) {
    throw std::invalid_argument("certified_accuracy: certificate/truth size mismatch");
  }
  if (m < 0) throw std::invalid_argument("certified_accuracy: need m >= 0");
  std::size_t good = 0;
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const auto& c = certs[i];
    if (!c.abstained && c.label == truth[i] && c.level >= m) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(certs.size());
}

double attack_success_rate(const std::vector<int>& predictions, int target_label) {
  if (predictions.empty()) throw std::invalid_argument("attack_success_rate: no predictions");
  std::size_t hits = 0;
  for (int p : predictions) {
    if (p == target_label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double cost_estimate(std::size_t n, unsigned k, std::size_t num_groups,
                     double beta, int global_iters, Variant v) {
  if (n == 0) throw std::invalid_argument("cost_estimate: need n >= 1");
  if (v == Variant::Deterministic) {
    // Each client sits in exactly one group and trains every round it is
    // selected, independent of the number of groups.
    return beta * static_cast<double>(global_iters);
  }
  return static_cast<double>(k) * static_cast<double>(num_groups) * beta *
         static_cast<double>(global_iters) / static_cast<double>(n);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  stage("config", [&] { cfg.validate(); });

  // Data: generate or load, standardize with train statistics, split.
  Dataset train;
  Dataset test;
  Scaler scaler;
  stage("dataset", [&] {
    Dataset train_raw;
    Dataset test_raw;
    if (cfg.dataset.kind == DatasetSpec::Kind::Synthetic) {
      const auto& s = cfg.dataset.synthetic;
      train_raw = gen_synthetic(s.num_classes, s.dims, s.per_class, s.spread,
                                sub_seed(cfg.master_seed, kTrainDataStream));
      test_raw = gen_synthetic(s.num_classes, s.dims, s.test_per_class, s.spread,
                               sub_seed(cfg.master_seed, kTestDataStream));
    } else {
      train_raw = load_csv(cfg.dataset.train_csv);
      test_raw = load_csv(cfg.dataset.test_csv);
      if (train_raw.dims != test_raw.dims) {
        throw std::invalid_argument("train and test csv have different feature counts");
      }
      const int L = std::max(train_raw.num_classes, test_raw.num_classes);
      train_raw.num_classes = L;
      test_raw.num_classes = L;
    }
    scaler = fit_scaler(train_raw);
    train = apply_scaler(train_raw, scaler);
    test = apply_scaler(test_raw, scaler);
  });

  std::vector<ClientRecord> clients(cfg.n_clients);
  for (std::size_t i = 0; i < cfg.n_clients; ++i) clients[i].user_id = client_name(i);

  std::vector<Dataset> client_data = stage("partition", [&] {
    return partition_noniid(train, cfg.n_clients, cfg.dataset.noniid_q,
                            sub_seed(cfg.master_seed, kPartitionStream));
  });

  GroupAssignment groups = stage("grouping", [&] {
    if (cfg.variant == Variant::Deterministic) {
      return assign_groups_d(clients, cfg.num_groups);
    }
    if (cfg.p_mode == PMode::Sampled) {
      return sample_groups_p(clients, cfg.group_size, cfg.num_groups,
                             sub_seed(cfg.master_seed, kGroupStream));
    }
    return enumerate_all_groups(clients, cfg.group_size);
  });
  const std::size_t num_models = groups.groups.size();

  std::vector<std::size_t> malicious;
  RoundHook hook;
  stage("attack", [&] {
    cfg.attack.validate(train.num_classes, train.dims);
    if (cfg.attack.kind == AttackKind::None) return;
    if (!cfg.attack.malicious_ids.empty()) {
      malicious = resolve_malicious(clients, cfg.attack.malicious_ids);
    } else {
      if (cfg.attack.malicious_count > cfg.n_clients) {
        throw std::invalid_argument("malicious_count exceeds the client count");
      }
      for (std::size_t i = 0; i < cfg.attack.malicious_count; ++i) malicious.push_back(i);
    }
    if (poisons_data(cfg.attack.kind)) {
      client_data = apply_data_poison(cfg.attack, clients, client_data, malicious);
    }
    if (poisons_updates(cfg.attack.kind) && !malicious.empty()) {
      hook = make_poison_hook(cfg.attack.kind,
                              std::unordered_set<std::size_t>(malicious.begin(), malicious.end()));
    }
  });

  std::optional<Dataset> server_data;
  if (cfg.train.rule == AggRule::FLTrust) {
    stage("server-data", [&] {
      if (cfg.dataset.kind == DatasetSpec::Kind::Synthetic) {
        const auto& s = cfg.dataset.synthetic;
        const std::size_t per_class =
            std::max<std::size_t>(1, 100 / static_cast<std::size_t>(s.num_classes));
        const Dataset raw = gen_synthetic(s.num_classes, s.dims, per_class, s.spread,
                                          sub_seed(cfg.master_seed, kServerDataStream));
        server_data = apply_scaler(raw, scaler);
      } else {
        // No clean generator for csv data: hold out the first 100 train rows.
        Dataset holdout;
        holdout.dims = train.dims;
        holdout.num_classes = train.num_classes;
        const std::size_t count = std::min<std::size_t>(100, train.size());
        holdout.features.assign(train.features.begin(),
                                train.features.begin() + count * train.dims);
        holdout.labels.assign(train.labels.begin(), train.labels.begin() + count);
        server_data = std::move(holdout);
      }
    });
  }

  ExperimentResult r;
  r.config_digest = config_digest(cfg);
  r.groups = groups;
  r.scaler = scaler;
  r.test_labels = test.labels;

  TrainConfig tc = cfg.train;
  tc.seed = sub_seed(cfg.master_seed, kTrainStream);

  const auto train_start = std::chrono::steady_clock::now();
  stage("train", [&] {
    r.models.assign(num_models, Model{});
    const Dataset* server = server_data ? &*server_data : nullptr;
    const int threads = std::min<int>(cfg.threads, static_cast<int>(num_models));
    if (threads <= 1) {
      for (std::size_t g = 0; g < num_models; ++g) {
        r.models[g] = train_global(groups.groups[g], client_data, tc, g, server, hook);
      }
      return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        try {
          for (std::size_t g = static_cast<std::size_t>(t); g < num_models;
               g += static_cast<std::size_t>(threads)) {
            r.models[g] = train_global(groups.groups[g], client_data, tc, g, server, hook);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  });
  const auto train_end = std::chrono::steady_clock::now();
  r.train_seconds = std::chrono::duration<double>(train_end - train_start).count();

  const std::uint64_t tie_seed = sub_seed(cfg.master_seed, kTieStream);
  stage("certify", [&] {
    if (cfg.variant == Variant::Deterministic) {
      r.certificates = predict_and_certify_d(r.models, test);
    } else if (cfg.p_mode == PMode::Sampled) {
      r.certificates = predict_and_certify_p(r.models, test, cfg.alpha, cfg.n_clients,
                                             cfg.group_size, tie_seed);
    } else {
      r.certificates = predict_and_certify_p_exact(r.models, test, cfg.n_clients,
                                                   cfg.group_size, tie_seed);
    }
  });
  const auto certify_end = std::chrono::steady_clock::now();
  r.certify_seconds = std::chrono::duration<double>(certify_end - train_end).count();

  stage("metrics", [&] {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < r.certificates.size(); ++i) {
      if (r.certificates[i].label == test.labels[i]) ++correct;
    }
    r.test_accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    for (int m : cfg.m_grid) {
      r.ca_curve.emplace_back(m, certified_accuracy(r.certificates, test.labels, m));
    }
    if (cfg.attack.kind == AttackKind::Backdoor) {
      Dataset triggered = test;
      for (std::size_t i = 0; i < triggered.size(); ++i) {
        const auto row = embed_trigger(triggered.row(i), *cfg.attack.trigger);
        std::copy(row.begin(), row.end(), triggered.features.begin() + i * triggered.dims);
      }
      const auto votes = ensemble_votes(r.models, triggered, cfg.variant,
                                        sub_seed(cfg.master_seed, kAttackTieStream));
      r.attack_success = attack_success_rate(votes, cfg.attack.trigger->target_label);
    }
    r.cost_per_client = cost_estimate(cfg.n_clients,
                                      cfg.variant == Variant::Probabilistic ? cfg.group_size : 0,
                                      num_models, tc.client_fraction, tc.global_iters,
                                      cfg.variant);
  });
  return r;
}

std::string result_to_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
  json j;
  j["config"] = json::object();
  for (const auto& [key, value] : config_to_kv(cfg)) j["config"][key] = value;
  j["config_digest"] = std::to_string(r.config_digest);
  j["groups"] = json::parse(r.groups.to_json());
  j["attack"]["kind"] = to_string(cfg.attack.kind);
  j["attack"]["surrogate"] = cfg.attack.kind == AttackKind::TrimAttack ||
                             cfg.attack.kind == AttackKind::KrumAttack;
  j["metrics"]["test_accuracy"] = r.test_accuracy;
  j["metrics"]["cost_per_client"] = r.cost_per_client;
  if (r.attack_success >= 0.0) {
    j["metrics"]["attack_success"] = r.attack_success;
  }
  j["metrics"]["ca_curve"] = json::array();
  for (const auto& [m, ca] : r.ca_curve) {
    j["metrics"]["ca_curve"].push_back(json{{"m", m}, {"ca", ca}});
  }
  j["timing"]["train_seconds"] = r.train_seconds;
  j["timing"]["certify_seconds"] = r.certify_seconds;
  return j.dump(2) + "\n";
}

std::string certificates_to_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
  return certificates_json(cfg.variant, cfg.p_mode, cfg.n_clients, cfg.group_size,
                           cfg.alpha, r.config_digest, r.certificates);
}

std::string certificates_json(Variant variant, PMode p_mode, std::size_t n, unsigned k,
                              double alpha, std::uint64_t config_digest,
                              const std::vector<CertifiedPrediction>& certs) {
  json meta;
  meta["variant"] = to_string(variant);
  meta["config_digest"] = std::to_string(config_digest);
  meta["abstain_policy"] = "abstained inputs count as incorrect for certified accuracy";
  if (!certs.empty()) {
    meta["num_groups"] = certs.front().histogram.total;
  }
  if (variant == Variant::Probabilistic) {
    meta["p_mode"] = to_string(p_mode);
    meta["n"] = n;
    meta["k"] = k;
    if (p_mode == PMode::Sampled) {
      meta["alpha"] = alpha;
      if (!certs.empty()) {
        meta["alpha_per_input"] = alpha / static_cast<double>(certs.size());
      }
    }
  }
  json records = json::array();
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const auto& c = certs[i];
    json rec;
    rec["index"] = i;
    if (c.abstained) {
      rec["label"] = "ABSTAIN";
      rec["level"] = "ABSTAIN";
    } else {
      rec["label"] = c.label;
      rec["level"] = c.level;
    }
    rec["counts"] = c.histogram.counts;
    if (c.bounds) {
      rec["p_lower"] = c.bounds->lower_y;
      rec["p_upper"] = c.bounds->upper_z;
    }
    records.push_back(std::move(rec));
  }
  json j;
  j["metadata"] = std::move(meta);
  j["records"] = std::move(records);
  return j.dump(2) + "\n";
}

std::string ca_curve_to_csv(const ExperimentResult& r) {
  std::string out = "m,ca\n";
  for (const auto& [m, ca] : r.ca_curve) {
    out += std::to_string(m);
    out += ',';
    out += format_double(ca);
    out += '\n';
  }
  return out;
}

void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& r) {
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  write_text_file(dir / "result.json", result_to_json(cfg, r));
  write_text_file(dir / "certificates.json", certificates_to_json(cfg, r));
  write_text_file(dir / "ca_curve.csv", ca_curve_to_csv(r));
  EnsembleFile e;
  e.num_classes = r.models.front().num_classes;
  e.dims = r.models.front().dims;
  e.variant = cfg.variant;
  e.p_mode = cfg.p_mode;
  e.n = cfg.n_clients;
  e.k = cfg.variant == Variant::Probabilistic ? cfg.group_size : 0;
  e.config_digest = r.config_digest;
  e.scaler = r.scaler;
  e.models = r.models;
  save_ensemble((dir / "ensemble.bin").string(), e);
}

namespace {

// One certificate re-check; appends violation lines, returns their count.
int verify_one_record(const json& meta, const json& rec, std::string* report) {
  int violations = 0;
  const auto complain = [&](const std::string& what) {
    ++violations;
    if (report) {
      *report += "record " + rec.at("index").dump() + ": " + what + "\n";
    }
  };

  const std::vector<int> counts = rec.at("counts").get<std::vector<int>>();
  const LabelHistogram hist{counts};
  hist.validate();
  const std::string variant = meta.at("variant").get<std::string>();
  const bool abstained = rec.at("label").is_string();

  if (variant == "D") {
    if (abstained) {
      complain("hash variant never abstains");
      return violations;
    }
    const int label = rec.at("label").get<int>();
    const int level = rec.at("level").get<int>();
    const Vote v = majority_vote(hist, TieRule::SmallestIndex);
    if (v.winner != label) {
      complain("stored label is not the tie-broken vote winner");
      return violations;
    }
    if (certify_d(hist, label) != level) complain("stored level differs from recomputation");
    if (!vote_condition_holds(hist, label, level)) complain("condition fails at the stored level");
    if (vote_condition_holds(hist, label, level + 1)) complain("level is not maximal");
    if (hist.total <= 7 && hist.counts.size() <= 4) {
      if (oracle_max_m_d(hist, label) != level) complain("brute-force reference disagrees");
    }
    return violations;
  }

  // Sampled/exact variant.
  const unsigned long n = meta.at("n").get<unsigned long>();
  const unsigned long k = meta.at("k").get<unsigned long>();
  const std::string p_mode = meta.at("p_mode").get<std::string>();

  if (p_mode == "sampled") {
    const double p_lower = rec.at("p_lower").get<double>();
    const double p_upper = rec.at("p_upper").get<double>();
    if (abstained) {
      if (p_lower > p_upper) complain("abstained although the bounds separate");
      return violations;
    }
    const int label = rec.at("label").get<int>();
    const int level = rec.at("level").get<int>();
    if (label < 0 || label >= static_cast<int>(counts.size()) ||
        counts[label] != *std::max_element(counts.begin(), counts.end())) {
      complain("stored label is not an argmax of the counts");
      return violations;
    }
    if (p_lower <= p_upper) {
      complain("bounds do not separate but no abstention");
      return violations;
    }
    ProbabilityBounds b;
    b.lower_y = p_lower;
    b.upper_z = p_upper;
    if (certify_p_bounds(b, n, k) != level) complain("stored level differs from recomputation");
    const Rational ry = Rational::from_double(p_lower);
    const Rational rz = Rational::from_double(p_upper);
    if (!bounds_condition_holds(ry, rz, n, k, level)) complain("condition fails at the stored level");
    if (static_cast<unsigned long>(level) < n - k &&
        bounds_condition_holds(ry, rz, n, k, level + 1)) {
      complain("level is not maximal");
    }
    return violations;
  }

  // Exact mode: counts are the full subset table histogram.
  if (abstained) {
    complain("exact mode never abstains");
    return violations;
  }
  const int label = rec.at("label").get<int>();
  const int level = rec.at("level").get<int>();
  if (label < 0 || label >= static_cast<int>(counts.size()) ||
      counts[label] != *std::max_element(counts.begin(), counts.end())) {
    complain("stored label is not an argmax of the counts");
    return violations;
  }
  int rival = -1;
  for (int j = 0; j < static_cast<int>(counts.size()); ++j) {
    if (j != label && counts[j] > rival) rival = counts[j];
  }
  if (counts[label] == rival) {
    if (level != 0) complain("tied vote must certify level 0");
    return violations;
  }
  const mpz_class c = binomial(n, k);
  const Rational p_y = Rational::from_ratio(counts[label], c);
  const Rational p_z = Rational::from_ratio(rival, c);
  if (certify_p_exact(p_y, p_z, n, k) != level) complain("stored level differs from recomputation");
  if (!exact_condition_holds(p_y, p_z, n, k, level)) complain("condition fails at the stored level");
  if (static_cast<unsigned long>(level) < n - k &&
      exact_condition_holds(p_y, p_z, n, k, level + 1)) {
    complain("level is not maximal");
  }
  return violations;
}

}  // namespace

int verify_certificates(const std::string& certs_path, std::string* report) {
  std::ifstream in(certs_path);
  if (!in) throw std::runtime_error("verify: cannot open " + certs_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error("verify: " + certs_path + ": " + e.what());
  }
  const json& meta = j.at("metadata");
  const json& records = j.at("records");
  int violations = 0;
  for (const auto& rec : records) {
    violations += verify_one_record(meta, rec, report);
  }
  if (report) {
    *report += "checked " + std::to_string(records.size()) + " certificates, " +
               std::to_string(violations) + " violation(s)\n";
  }
  return violations;
}

std::vector<CertifiedPrediction> certify_with_ensemble(const EnsembleFile& e,
                                                       const Dataset& raw_testset,
                                                       double alpha,
                                                       std::uint64_t tie_seed) {
  if (raw_testset.dims != e.dims) {
    throw std::invalid_argument("certify: test set feature count differs from the ensemble");
  }
  const Dataset test = apply_scaler(raw_testset, e.scaler);
  if (e.variant == Variant::Deterministic) {
    return predict_and_certify_d(e.models, test);
  }
  if (e.p_mode == PMode::Sampled) {
    return predict_and_certify_p(e.models, test, alpha, e.n, e.k, tie_seed);
  }
  return predict_and_certify_p_exact(e.models, test, e.n, e.k, tie_seed);
}

}  // namespace fedcert
