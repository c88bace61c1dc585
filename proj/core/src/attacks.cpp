#include <fedcert/attacks.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace fedcert {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

std::string to_string(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::LabelFlip: return "label_flip";
    case AttackKind::Backdoor: return "backdoor";
    case AttackKind::ZeroUpdate: return "zero_update";
    case AttackKind::TrimAttack: return "trim_attack";
    case AttackKind::KrumAttack: return "krum_attack";
  }
  throw std::logic_error("attack kind: unknown tag");
}

AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "none") return AttackKind::None;
  if (s == "label_flip") return AttackKind::LabelFlip;
  if (s == "backdoor") return AttackKind::Backdoor;
  if (s == "zero_update") return AttackKind::ZeroUpdate;
  if (s == "trim_attack") return AttackKind::TrimAttack;
  if (s == "krum_attack") return AttackKind::KrumAttack;
  throw std::invalid_argument("attack kind: unknown name \"" + s + "\"");
}

bool poisons_data(AttackKind k) {
  return k == AttackKind::LabelFlip || k == AttackKind::Backdoor;
}

bool poisons_updates(AttackKind k) {
  return k == AttackKind::ZeroUpdate || k == AttackKind::TrimAttack ||
         k == AttackKind::KrumAttack;
}

void AttackSpec::validate(int num_classes, std::size_t dims) const {
  if (kind == AttackKind::None) {
    require(malicious_ids.empty() && malicious_count == 0,
            "attack spec: kind none with malicious clients");
    return;
  }
  require(!malicious_ids.empty() || malicious_count > 0,
          "attack spec: no malicious clients named");
  if (kind == AttackKind::Backdoor) {
    require(trigger.has_value(), "attack spec: backdoor needs a trigger");
    trigger->validate(dims, num_classes);
  } else {
    require(!trigger.has_value(), "attack spec: trigger only valid for backdoor");
  }
  if (kind == AttackKind::LabelFlip) {
    if (!flip_rule.empty()) {
      require(flip_rule.size() == static_cast<std::size_t>(num_classes),
              "attack spec: flip rule must cover every label");
      std::vector<bool> seen(num_classes, false);
      for (int l : flip_rule) {
        require(l >= 0 && l < num_classes, "attack spec: flip rule label out of range");
        require(!seen[l], "attack spec: flip rule is not a permutation");
        seen[l] = true;
      }
    }
  } else {
    require(flip_rule.empty(), "attack spec: flip rule only valid for label_flip");
  }
}

std::vector<std::size_t> resolve_malicious(const std::vector<ClientRecord>& clients,
                                           const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    index.emplace(clients[i].user_id, i);
  }
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = index.find(id);
    require(it != index.end(), "attack spec: unknown malicious client id \"" + id + "\"");
    out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Dataset> apply_data_poison(const AttackSpec& spec,
                                       const std::vector<ClientRecord>& clients,
                                       const std::vector<Dataset>& client_data,
                                       const std::vector<std::size_t>& malicious) {
  require(poisons_data(spec.kind), "apply_data_poison: not a data-poisoning attack");
  require(clients.size() == client_data.size(), "apply_data_poison: registry size mismatch");
  const int L = client_data.empty() ? 0 : client_data.front().num_classes;
  std::vector<Dataset> out = client_data;
  for (std::size_t c : malicious) {
    require(c < out.size(), "apply_data_poison: malicious index out of range");
    Dataset& d = out[c];
    if (spec.kind == AttackKind::LabelFlip) {
      for (int& l : d.labels) {
        // Empty rule means full reversal: l -> L-1-l.
        l = spec.flip_rule.empty() ? (L - 1 - l) : spec.flip_rule[l];
      }
    } else {
      const TriggerSpec& t = *spec.trigger;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const auto poisoned = embed_trigger(d.row(i), t);
        std::copy(poisoned.begin(), poisoned.end(), d.features.begin() + i * d.dims);
        d.labels[i] = t.target_label;
      }
    }
  }
  return out;
}

std::vector<Update> craft_model_poison(AttackKind kind,
                                       const std::vector<Update>& malicious_honest,
                                       const std::vector<Update>& visible_benign) {
  require(poisons_updates(kind), "craft_model_poison: not a model-poisoning attack");
  require(!malicious_honest.empty(), "craft_model_poison: no malicious client selected");
  const std::size_t dim = malicious_honest.front().size();
  for (const auto& u : malicious_honest) {
    require(u.size() == dim, "craft_model_poison: update dimension mismatch");
  }
  for (const auto& u : visible_benign) {
    require(u.size() == dim, "craft_model_poison: update dimension mismatch");
  }
  const std::size_t m = malicious_honest.size();

  if (kind == AttackKind::ZeroUpdate) {
    // Each colluder submits -(sum of benign)/m; a uniform mean of all
    // submissions is then exactly zero. No benign in sight -> all zeros.
    Update crafted(dim, 0.0);
    for (const auto& u : visible_benign) {
      for (std::size_t i = 0; i < dim; ++i) crafted[i] += u[i];
    }
    for (double& v : crafted) v = -v / static_cast<double>(m);
    return std::vector<Update>(m, crafted);
  }

  // Trim and Krum surrogates need a benign reference; colluders fall back to
  // their own honest updates when no benign update is visible.
  const std::vector<Update>& ref = visible_benign.empty() ? malicious_honest : visible_benign;

  if (kind == AttackKind::TrimAttack) {
    Update crafted(dim, 0.0);
    for (std::size_t c = 0; c < dim; ++c) {
      double lo = ref.front()[c];
      double hi = ref.front()[c];
      double mean = 0.0;
      for (const auto& u : ref) {
        lo = std::min(lo, u[c]);
        hi = std::max(hi, u[c]);
        mean += u[c];
      }
      mean /= static_cast<double>(ref.size());
      const double range = hi - lo;
      // Directed deviation: leave the benign range on the side opposite the
      // benign mean's sign.
      crafted[c] = mean > 0.0 ? lo - 2.0 * range : hi + 2.0 * range;
    }
    return std::vector<Update>(m, crafted);
  }

  // Krum surrogate: identical submissions opposing the mean benign direction;
  // identical copies are mutually closest, courting selection.
  Update crafted(dim, 0.0);
  for (const auto& u : ref) {
    for (std::size_t i = 0; i < dim; ++i) crafted[i] += u[i];
  }
  for (double& v : crafted) v = -v / static_cast<double>(ref.size());
  return std::vector<Update>(m, crafted);
}

RoundHook make_poison_hook(AttackKind kind, std::unordered_set<std::size_t> malicious) {
  require(poisons_updates(kind), "make_poison_hook: not a model-poisoning attack");
  return [kind, malicious = std::move(malicious)](
             int, const std::vector<std::size_t>& selected, std::vector<Update>& updates) {
    std::vector<Update> mal_honest;
    std::vector<Update> benign;
    std::vector<std::size_t> mal_pos;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      if (malicious.count(selected[i])) {
        mal_honest.push_back(updates[i]);
        mal_pos.push_back(i);
      } else {
        benign.push_back(updates[i]);
      }
    }
    if (mal_pos.empty()) return;  // no colluder selected this round
    const auto crafted = craft_model_poison(kind, mal_honest, benign);
    for (std::size_t j = 0; j < mal_pos.size(); ++j) {
      updates[mal_pos[j]] = crafted[j];
    }
  };
}

}  // namespace fedcert
