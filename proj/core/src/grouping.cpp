#include <fedcert/grouping.hpp>

#include <fedcert/rational.hpp>
#include <fedcert/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace fedcert {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

std::string to_string(Variant v) {
  return v == Variant::Deterministic ? "D" : "P";
}

Variant variant_from_string(const std::string& s) {
  if (s == "D") return Variant::Deterministic;
  if (s == "P") return Variant::Probabilistic;
  throw std::invalid_argument("variant: expected \"D\" or \"P\", got \"" + s + "\"");
}

void GroupAssignment::validate() const {
  require(n > 0, "group assignment: empty client population");
  require(!groups.empty(), "group assignment: no groups");
  for (const auto& g : groups) {
    for (std::size_t c : g) {
      require(c < n, "group assignment: client index out of range");
    }
    std::unordered_set<std::size_t> uniq(g.begin(), g.end());
    require(uniq.size() == g.size(), "group assignment: duplicate client within a group");
  }
  if (variant == Variant::Deterministic) {
    // Disjoint cover of the whole population; empty groups are legal.
    std::vector<bool> seen(n, false);
    std::size_t covered = 0;
    for (const auto& g : groups) {
      for (std::size_t c : g) {
        require(!seen[c], "group assignment: client in two hash groups");
        seen[c] = true;
        ++covered;
      }
    }
    require(covered == n, "group assignment: hash groups do not cover all clients");
  } else {
    require(k >= 1, "group assignment: sampled variant needs k >= 1");
    for (const auto& g : groups) {
      require(g.size() == k, "group assignment: sampled group size differs from k");
    }
  }
}

std::string GroupAssignment::to_json() const {
  nlohmann::json j;
  j["variant"] = to_string(variant);
  j["n"] = n;
  j["k"] = k;
  j["groups"] = nlohmann::json::array();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    nlohmann::json g;
    g["group_id"] = i + 1;  // 1-based in external output
    g["clients"] = groups[i];
    j["groups"].push_back(std::move(g));
  }
  return j.dump(2);
}

GroupAssignment GroupAssignment::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  GroupAssignment a;
  a.variant = variant_from_string(j.at("variant").get<std::string>());
  a.n = j.at("n").get<std::size_t>();
  a.k = j.at("k").get<unsigned>();
  for (const auto& g : j.at("groups")) {
    a.groups.push_back(g.at("clients").get<std::vector<std::size_t>>());
  }
  a.validate();
  return a;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

GroupAssignment assign_groups_d(const std::vector<ClientRecord>& clients,
                                std::size_t num_groups) {
  require(!clients.empty(), "assign_groups_d: empty client population");
  require(num_groups >= 1, "assign_groups_d: need at least one group");
  GroupAssignment a;
  a.variant = Variant::Deterministic;
  a.n = clients.size();
  a.k = 0;
  a.groups.assign(num_groups, {});
  for (std::size_t i = 0; i < clients.size(); ++i) {
    a.groups[fnv1a64(clients[i].user_id) % num_groups].push_back(i);
  }
  a.validate();
  return a;
}

GroupAssignment sample_groups_p(const std::vector<ClientRecord>& clients,
                                unsigned k, std::size_t num_groups,
                                std::uint64_t seed) {
  require(!clients.empty(), "sample_groups_p: empty client population");
  require(k >= 1 && k <= clients.size(), "sample_groups_p: need 1 <= k <= n");
  require(num_groups >= 1, "sample_groups_p: need at least one group");
  GroupAssignment a;
  a.variant = Variant::Probabilistic;
  a.n = clients.size();
  a.k = k;
  a.groups.reserve(num_groups);
  std::vector<std::size_t> pool(clients.size());
  for (std::size_t g = 0; g < num_groups; ++g) {
    // Partial Fisher-Yates: first k entries are a uniform k-subset. Each group
    // draws from its own stream so the assignment is independent of N.
    Rng rng = Rng::derive(seed, g);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::size_t> members(k);
    for (unsigned i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(
          rng.next_below(static_cast<std::uint64_t>(pool.size() - i)));
      std::swap(pool[i], pool[j]);
      members[i] = pool[i];
    }
    std::sort(members.begin(), members.end());
    a.groups.push_back(std::move(members));
  }
  a.validate();
  return a;
}

GroupAssignment enumerate_all_groups(const std::vector<ClientRecord>& clients,
                                     unsigned k, std::size_t limit) {
  require(!clients.empty(), "enumerate_all_groups: empty client population");
  const std::size_t n = clients.size();
  require(k >= 1 && k <= n, "enumerate_all_groups: need 1 <= k <= n");
  const mpz_class total = binomial(n, k);
  if (total > static_cast<unsigned long>(limit)) {
    throw std::invalid_argument(
        "enumerate_all_groups: C(n,k) = " + total.get_str() + " exceeds limit " +
        std::to_string(limit) + "; use sampled groups instead");
  }
  GroupAssignment a;
  a.variant = Variant::Probabilistic;
  a.n = n;
  a.k = k;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    a.groups.push_back(idx);
    long i = static_cast<long>(k) - 1;
    while (i >= 0 && idx[i] == n - k + static_cast<std::size_t>(i)) --i;
    if (i < 0) break;
    ++idx[i];
    for (std::size_t j = static_cast<std::size_t>(i) + 1; j < k; ++j) {
      idx[j] = idx[j - 1] + 1;
    }
  }
  a.validate();
  return a;
}

}  // namespace fedcert
