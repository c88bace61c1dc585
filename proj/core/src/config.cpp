#include <fedcert/config.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedcert {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Shortest round-trip decimal form, identical across runs and platforms.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + ": not a number: \"" + v + "\"");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + ": not an integer: \"" + v + "\"");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + ": not an unsigned integer: \"" + v + "\"");
  }
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) {
    out.push_back(static_cast<int>(parse_int(key, item)));
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

}  // namespace

std::string to_string(PMode m) {
  return m == PMode::Sampled ? "sampled" : "exact";
}

PMode p_mode_from_string(const std::string& s) {
  if (s == "sampled") return PMode::Sampled;
  if (s == "exact") return PMode::Exact;
  throw std::invalid_argument("p_mode: expected \"sampled\" or \"exact\", got \"" + s + "\"");
}

void ExperimentConfig::validate() const {
  require(n_clients >= 1, "config: need at least one client");
  require(num_groups >= 1, "config: need at least one group");
  require(alpha > 0.0 && alpha < 1.0, "config: need alpha in (0,1)");
  require(threads >= 1, "config: need threads >= 1");
  require(!output_dir.empty(), "config: empty output directory");
  require(!m_grid.empty(), "config: empty m grid");
  for (int m : m_grid) require(m >= 0, "config: negative m grid entry");
  if (variant == Variant::Probabilistic) {
    require(group_size >= 1 && group_size <= n_clients,
            "config: need 1 <= group_size <= client count");
  } else {
    require(p_mode == PMode::Sampled, "config: exact mode only applies to the sampled variant");
  }
  if (dataset.kind == DatasetSpec::Kind::Synthetic) {
    require(dataset.synthetic.num_classes >= 2, "config: need at least two classes");
    require(dataset.synthetic.dims >= 1, "config: need at least one dimension");
    require(dataset.synthetic.per_class >= 1, "config: need per_class >= 1");
    require(dataset.synthetic.test_per_class >= 1, "config: need test_per_class >= 1");
    require(dataset.synthetic.spread > 0.0, "config: need spread > 0");
  } else {
    require(!dataset.train_csv.empty(), "config: csv dataset needs train_csv");
    require(!dataset.test_csv.empty(), "config: csv dataset needs test_csv");
  }
  require(dataset.noniid_q > 0.0 && dataset.noniid_q <= 1.0,
          "config: need noniid_q in (0,1]");
  train.validate();
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw std::runtime_error("config: " + path + " line " + std::to_string(lineno) +
                                 ": malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: " + path + " line " + std::to_string(lineno) +
                               ": expected key = value");
    }
    if (section.empty()) {
      throw std::runtime_error("config: " + path + " line " + std::to_string(lineno) +
                               ": key outside any [section]");
    }
    const std::string key = section + "." + trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!kv.emplace(key, value).second) {
      throw std::runtime_error("config: " + path + " line " + std::to_string(lineno) +
                               ": duplicate key " + key);
    }
  }
  return kv;
}

ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  std::vector<std::size_t> trigger_indices;
  std::vector<double> trigger_values;
  int trigger_target = 0;
  bool has_trigger = false;

  for (const auto& [key, value] : kv) {
    if (key == "dataset.kind") {
      if (value == "synthetic") {
        cfg.dataset.kind = DatasetSpec::Kind::Synthetic;
      } else if (value == "csv") {
        cfg.dataset.kind = DatasetSpec::Kind::Csv;
      } else {
        throw std::invalid_argument("config: dataset.kind: expected synthetic or csv");
      }
    } else if (key == "dataset.num_classes") {
      cfg.dataset.synthetic.num_classes = static_cast<int>(parse_int(key, value));
    } else if (key == "dataset.dims") {
      cfg.dataset.synthetic.dims = parse_size(key, value);
    } else if (key == "dataset.per_class") {
      cfg.dataset.synthetic.per_class = parse_size(key, value);
    } else if (key == "dataset.test_per_class") {
      cfg.dataset.synthetic.test_per_class = parse_size(key, value);
    } else if (key == "dataset.spread") {
      cfg.dataset.synthetic.spread = parse_double(key, value);
    } else if (key == "dataset.train_csv") {
      cfg.dataset.train_csv = value;
    } else if (key == "dataset.test_csv") {
      cfg.dataset.test_csv = value;
    } else if (key == "dataset.noniid_q") {
      cfg.dataset.noniid_q = parse_double(key, value);
    } else if (key == "clients.count") {
      cfg.n_clients = parse_size(key, value);
    } else if (key == "grouping.variant") {
      cfg.variant = variant_from_string(value);
    } else if (key == "grouping.p_mode") {
      cfg.p_mode = p_mode_from_string(value);
    } else if (key == "grouping.num_groups") {
      cfg.num_groups = parse_size(key, value);
    } else if (key == "grouping.group_size") {
      cfg.group_size = static_cast<unsigned>(parse_u64(key, value));
    } else if (key == "cert.alpha") {
      cfg.alpha = parse_double(key, value);
    } else if (key == "cert.m_grid") {
      cfg.m_grid = parse_int_list(key, value);
    } else if (key == "train.global_iters") {
      cfg.train.global_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "train.local_iters") {
      cfg.train.local_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "train.learning_rate") {
      cfg.train.learning_rate = parse_double(key, value);
    } else if (key == "train.batch_size") {
      cfg.train.batch_size = parse_size(key, value);
    } else if (key == "train.client_fraction") {
      cfg.train.client_fraction = parse_double(key, value);
    } else if (key == "train.rule") {
      cfg.train.rule = agg_rule_from_string(value);
    } else if (key == "train.krum_f") {
      cfg.train.krum_f = static_cast<int>(parse_int(key, value));
    } else if (key == "train.trim") {
      cfg.train.trim = static_cast<int>(parse_int(key, value));
    } else if (key == "attack.kind") {
      cfg.attack.kind = attack_kind_from_string(value);
    } else if (key == "attack.malicious_count") {
      cfg.attack.malicious_count = parse_size(key, value);
    } else if (key == "attack.malicious_ids") {
      cfg.attack.malicious_ids = split_list(value);
    } else if (key == "attack.flip_rule") {
      cfg.attack.flip_rule = parse_int_list(key, value);
    } else if (key == "attack.trigger_indices") {
      for (const auto& s : split_list(value)) trigger_indices.push_back(parse_size(key, s));
      has_trigger = has_trigger || !trigger_indices.empty();
    } else if (key == "attack.trigger_values") {
      for (const auto& s : split_list(value)) trigger_values.push_back(parse_double(key, s));
      has_trigger = has_trigger || !trigger_values.empty();
    } else if (key == "attack.trigger_target") {
      if (!value.empty()) {  // empty means "no trigger", round-trip friendly
        trigger_target = static_cast<int>(parse_int(key, value));
        has_trigger = true;
      }
    } else if (key == "run.master_seed") {
      cfg.master_seed = parse_u64(key, value);
    } else if (key == "run.threads") {
      cfg.threads = static_cast<int>(parse_int(key, value));
    } else if (key == "run.output_dir") {
      cfg.output_dir = value;
    } else {
      throw std::invalid_argument("config: unknown key " + key);
    }
  }

  if (has_trigger) {
    TriggerSpec t;
    t.indices = std::move(trigger_indices);
    t.values = std::move(trigger_values);
    t.target_label = trigger_target;
    cfg.attack.trigger = std::move(t);
  }
  cfg.validate();
  return cfg;
}

std::map<std::string, std::string> config_to_kv(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["dataset.kind"] = cfg.dataset.kind == DatasetSpec::Kind::Synthetic ? "synthetic" : "csv";
  kv["dataset.num_classes"] = std::to_string(cfg.dataset.synthetic.num_classes);
  kv["dataset.dims"] = std::to_string(cfg.dataset.synthetic.dims);
  kv["dataset.per_class"] = std::to_string(cfg.dataset.synthetic.per_class);
  kv["dataset.test_per_class"] = std::to_string(cfg.dataset.synthetic.test_per_class);
  kv["dataset.spread"] = format_double(cfg.dataset.synthetic.spread);
  kv["dataset.train_csv"] = cfg.dataset.train_csv;
  kv["dataset.test_csv"] = cfg.dataset.test_csv;
  kv["dataset.noniid_q"] = format_double(cfg.dataset.noniid_q);
  kv["clients.count"] = std::to_string(cfg.n_clients);
  kv["grouping.variant"] = to_string(cfg.variant);
  kv["grouping.p_mode"] = to_string(cfg.p_mode);
  kv["grouping.num_groups"] = std::to_string(cfg.num_groups);
  kv["grouping.group_size"] = std::to_string(cfg.group_size);
  kv["cert.alpha"] = format_double(cfg.alpha);
  kv["cert.m_grid"] = join(cfg.m_grid, [](int m) { return std::to_string(m); });
  kv["train.global_iters"] = std::to_string(cfg.train.global_iters);
  kv["train.local_iters"] = std::to_string(cfg.train.local_iters);
  kv["train.learning_rate"] = format_double(cfg.train.learning_rate);
  kv["train.batch_size"] = std::to_string(cfg.train.batch_size);
  kv["train.client_fraction"] = format_double(cfg.train.client_fraction);
  kv["train.rule"] = to_string(cfg.train.rule);
  kv["train.krum_f"] = std::to_string(cfg.train.krum_f);
  kv["train.trim"] = std::to_string(cfg.train.trim);
  kv["attack.kind"] = to_string(cfg.attack.kind);
  kv["attack.malicious_count"] = std::to_string(cfg.attack.malicious_count);
  kv["attack.malicious_ids"] =
      join(cfg.attack.malicious_ids, [](const std::string& s) { return s; });
  kv["attack.flip_rule"] = join(cfg.attack.flip_rule, [](int l) { return std::to_string(l); });
  if (cfg.attack.trigger) {
    kv["attack.trigger_indices"] = join(cfg.attack.trigger->indices,
                                        [](std::size_t i) { return std::to_string(i); });
    kv["attack.trigger_values"] =
        join(cfg.attack.trigger->values, [](double v) { return format_double(v); });
    kv["attack.trigger_target"] = std::to_string(cfg.attack.trigger->target_label);
  } else {
    kv["attack.trigger_indices"] = "";
    kv["attack.trigger_values"] = "";
    kv["attack.trigger_target"] = "";
  }
  kv["run.master_seed"] = std::to_string(cfg.master_seed);
  return kv;
}

std::uint64_t config_digest(const ExperimentConfig& cfg) {
  std::string blob;
  for (const auto& [key, value] : config_to_kv(cfg)) {
    blob += key;
    blob += '=';
    blob += value;
    blob += '\n';
  }
  return fnv1a64(blob);
}

const std::vector<std::string>& config_field_names() {
  static const std::vector<std::string> names = [] {
    ExperimentConfig defaults;
    std::vector<std::string> out;
    for (const auto& [key, value] : config_to_kv(defaults)) out.push_back(key);
    // Trigger keys are conditional in config_to_kv; defaults carry none.
    out.push_back("attack.trigger_indices");
    out.push_back("attack.trigger_values");
    out.push_back("attack.trigger_target");
    out.push_back("run.threads");
    out.push_back("run.output_dir");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }();
  return names;
}

}  // namespace fedcert
