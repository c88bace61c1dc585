#pragma once

#include <fedcert/dataset.hpp>
#include <fedcert/fl_sim.hpp>
#include <fedcert/grouping.hpp>

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace fedcert {

enum class AttackKind { None, LabelFlip, Backdoor, ZeroUpdate, TrimAttack, KrumAttack };
std::string to_string(AttackKind k);
AttackKind attack_kind_from_string(const std::string& s);
bool poisons_data(AttackKind k);     // rewrites malicious clients' datasets
bool poisons_updates(AttackKind k);  // rewrites malicious clients' round updates

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  // Either explicit ids, or the first malicious_count registry clients.
  std::vector<std::string> malicious_ids;
  std::size_t malicious_count = 0;
  std::optional<TriggerSpec> trigger;  // backdoor
  std::vector<int> flip_rule;          // label permutation; empty = reversal
  void validate(int num_classes, std::size_t dims) const;
};

// Maps malicious user ids to registry indices; an unknown id is a config error.
std::vector<std::size_t> resolve_malicious(const std::vector<ClientRecord>& clients,
                                           const std::vector<std::string>& ids);

// Data poisoning. Only malicious clients' datasets change: label_flip applies
// the label permutation; backdoor embeds the trigger and sets its target
// label on every example. Malicious clients keep their user ids, so hash
// grouping is unchanged.
std::vector<Dataset> apply_data_poison(const AttackSpec& spec,
                                       const std::vector<ClientRecord>& clients,
                                       const std::vector<Dataset>& client_data,
                                       const std::vector<std::size_t>& malicious);

// Model poisoning for one round, crafted from what the colluders see. These
// are simplified surrogates of the published attacks (qualitative mechanism,
// not the full optimization):
//  - zero_update: every malicious client submits -(sum of benign)/count, so a
//    uniform mean over all submissions is the zero vector.
//  - trim_attack: per coordinate, a value outside the benign [min, max] on the
//    side opposite the benign mean's sign, offset twice the range.
//  - krum_attack: all colluders submit one identical vector opposing the mean
//    benign direction, making them mutually closest.
// With no visible benign updates, trim/krum fall back to the colluders' own
// honest updates as the reference; zero_update stays all-zero.
std::vector<Update> craft_model_poison(AttackKind kind,
                                       const std::vector<Update>& malicious_honest,
                                       const std::vector<Update>& visible_benign);

// Round hook that swaps malicious clients' submissions for crafted ones.
RoundHook make_poison_hook(AttackKind kind,
                           std::unordered_set<std::size_t> malicious);

}  // namespace fedcert
