#include <fedcert/oracle.hpp>

#include <fedcert/cert_core.hpp>
#include <fedcert/rational.hpp>
#include <fedcert/rng.hpp>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace fedcert {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

int argmax_smallest(const std::vector<int>& counts) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(counts.size()); ++j) {
    if (counts[j] > counts[best]) best = j;
  }
  return best;
}

// Multisets of `s` extra votes on top of `work`, labels non-decreasing from
// `from_label`. False as soon as a completed state dethrones y.
bool additions_keep_y(std::vector<int>& work, int from_label, int s, int y) {
  if (s == 0) return argmax_smallest(work) == y;
  for (int lab = from_label; lab < static_cast<int>(work.size()); ++lab) {
    ++work[lab];
    const bool ok = additions_keep_y(work, lab, s - 1, y);
    --work[lab];
    if (!ok) return false;
  }
  return true;
}

// Removal vectors r with r_j <= counts[j] and sum(r) <= budget; every removal
// vector is paired with every addition multiset of the same size.
bool removals_keep_y(const std::vector<int>& counts, std::vector<int>& work,
                     int label, int budget, int removed, int y) {
  if (label == static_cast<int>(counts.size())) {
    return additions_keep_y(work, 0, removed, y);
  }
  const int max_r = std::min(budget, counts[label]);
  for (int r = 0; r <= max_r; ++r) {
    work[label] = counts[label] - r;
    if (!removals_keep_y(counts, work, label + 1, budget - r, removed + r, y)) {
      work[label] = counts[label];
      return false;
    }
  }
  work[label] = counts[label];
  return true;
}

std::vector<std::vector<unsigned long>> all_subsets(unsigned long n, unsigned long k) {
  std::vector<std::vector<unsigned long>> subs;
  std::vector<unsigned long> idx(k);
  std::iota(idx.begin(), idx.end(), 0ul);
  while (true) {
    subs.push_back(idx);
    long i = static_cast<long>(k) - 1;
    while (i >= 0 && idx[i] == n - k + static_cast<unsigned long>(i)) --i;
    if (i < 0) break;
    ++idx[i];
    for (unsigned long j = static_cast<unsigned long>(i) + 1; j < k; ++j) {
      idx[j] = idx[j - 1] + 1;
    }
  }
  return subs;
}

}  // namespace

bool oracle_certify_d(const LabelHistogram& hist, int y, int m) {
  hist.validate();
  require(y >= 0 && y < static_cast<int>(hist.counts.size()), "oracle_certify_d: label out of range");
  require(m >= 0, "oracle_certify_d: need m >= 0");
  std::vector<int> work = hist.counts;
  return removals_keep_y(hist.counts, work, 0, m, 0, y);
}

int oracle_max_m_d(const LabelHistogram& hist, int y) {
  if (!oracle_certify_d(hist, y, 0)) return -1;
  int best = 0;
  for (int m = 1; m <= hist.total; ++m) {
    if (!oracle_certify_d(hist, y, m)) break;
    best = m;
  }
  return best;
}

bool oracle_certify_p_exact(const std::vector<int>& label_table,
                            unsigned long n, unsigned long k,
                            const std::vector<unsigned long>& malicious,
                            int y, int num_labels) {
  require(k >= 1 && k <= n, "oracle_p_exact: need 1 <= k <= n");
  require(num_labels >= 2, "oracle_p_exact: need at least two labels");
  require(y >= 0 && y < num_labels, "oracle_p_exact: label out of range");
  const auto subs = all_subsets(n, k);
  require(label_table.size() == subs.size(), "oracle_p_exact: table size differs from C(n,k)");
  std::vector<bool> bad(n, false);
  for (unsigned long c : malicious) {
    require(c < n, "oracle_p_exact: malicious client out of range");
    bad[c] = true;
  }
  std::vector<long> unaffected(num_labels, 0);
  long affected = 0;
  for (std::size_t s = 0; s < subs.size(); ++s) {
    const int lab = label_table[s];
    require(lab >= 0 && lab < num_labels, "oracle_p_exact: table label out of range");
    bool hit = false;
    for (unsigned long c : subs[s]) {
      if (bad[c]) { hit = true; break; }
    }
    if (hit) {
      ++affected;
    } else {
      ++unaffected[lab];
    }
  }
  // The adversary moves every affected vote onto its best single competitor;
  // y must stay strictly ahead of all of them.
  for (int z = 0; z < num_labels; ++z) {
    if (z == y) continue;
    if (unaffected[y] <= unaffected[z] + affected) return false;
  }
  return true;
}

int oracle_max_m_p_exact(const std::vector<int>& label_table,
                         unsigned long n, unsigned long k,
                         int y, int num_labels) {
  require(num_labels >= 2, "oracle_p_exact: need at least two labels");
  require(y >= 0 && y < num_labels, "oracle_p_exact: label out of range");
  std::vector<long> counts(num_labels, 0);
  for (int lab : label_table) {
    require(lab >= 0 && lab < num_labels, "oracle_p_exact: table label out of range");
    ++counts[lab];
  }
  for (int z = 0; z < num_labels; ++z) {
    if (z != y && counts[y] <= counts[z]) return -1;
  }
  int best = -1;
  for (unsigned long m = 0; m <= n - k; ++m) {
    bool all_ok = true;
    if (m == 0) {
      all_ok = oracle_certify_p_exact(label_table, n, k, {}, y, num_labels);
    } else {
      for (const auto& mal : all_subsets(n, m)) {
        if (!oracle_certify_p_exact(label_table, n, k, mal, y, num_labels)) {
          all_ok = false;
          break;
        }
      }
    }
    if (!all_ok) break;
    best = static_cast<int>(m);
  }
  return best;
}

double coverage_test_cp(double p_true, int trials_per_bound, double alpha,
                        int trials, std::uint64_t seed) {
  require(p_true > 0.0 && p_true <= 1.0, "coverage_test_cp: need p_true in (0,1]");
  require(trials_per_bound > 0, "coverage_test_cp: need trials_per_bound > 0");
  require(trials > 0, "coverage_test_cp: need trials > 0");
  Rng rng = Rng::derive(seed, 0);
  int miss = 0;
  for (int t = 0; t < trials; ++t) {
    long successes = 0;
    for (int i = 0; i < trials_per_bound; ++i) {
      if (rng.next_unit() < p_true) ++successes;
    }
    if (clopper_pearson_lower(successes, trials_per_bound, alpha) > p_true) ++miss;
  }
  return static_cast<double>(miss) / static_cast<double>(trials);
}

}  // namespace fedcert
