#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fedcert {

enum class Variant { Deterministic, Probabilistic };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

// A participating client. user_id is the immutable identity that hash
// grouping keys on; it must be unique across the client set.
struct ClientRecord {
  std::string user_id;
};

// Group membership as 0-based indices into the client registry. Group ids are
// 1-based in external output; position i of `groups` is group i+1.
struct GroupAssignment {
  Variant variant = Variant::Deterministic;
  std::size_t n = 0;  // client population size
  unsigned k = 0;     // group size (0 for the hash variant)
  std::vector<std::vector<std::size_t>> groups;

  void validate() const;
  std::string to_json() const;
  static GroupAssignment from_json(const std::string& text);
};

// FNV-1a 64-bit over the UTF-8 bytes of `bytes`; identical on every platform.
std::uint64_t fnv1a64(std::string_view bytes);

// Hash grouping: client u joins group (fnv1a64(u.user_id) mod N) + 1.
// Groups are disjoint, cover all clients, and may be empty. Depends only on
// the user ids, never on dataset contents or ordering.
GroupAssignment assign_groups_d(const std::vector<ClientRecord>& clients,
                                std::size_t num_groups);

// N independent uniform draws of k distinct clients; the same group may be
// drawn twice and then votes twice. Reproducible from the seed alone.
GroupAssignment sample_groups_p(const std::vector<ClientRecord>& clients,
                                unsigned k, std::size_t num_groups,
                                std::uint64_t seed);

// Every size-k subset in lexicographic order. Errors once C(n,k) exceeds
// `limit`, directing the caller to sampling mode.
GroupAssignment enumerate_all_groups(const std::vector<ClientRecord>& clients,
                                     unsigned k, std::size_t limit = 10000);

}  // namespace fedcert
