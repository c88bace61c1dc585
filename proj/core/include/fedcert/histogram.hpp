#pragma once

#include <numeric>
#include <stdexcept>
#include <vector>

namespace fedcert {

// Vote counts per label over an ensemble. Invariant: total == sum(counts),
// at least two labels, no negative count.
struct LabelHistogram {
  std::vector<int> counts;
  int total = 0;

  LabelHistogram() = default;
  explicit LabelHistogram(std::vector<int> c)
      : counts(std::move(c)),
        total(std::accumulate(counts.begin(), counts.end(), 0)) {}

  void validate() const {
    if (counts.size() < 2) throw std::invalid_argument("histogram: need at least 2 labels");
    int sum = 0;
    for (int c : counts) {
      if (c < 0) throw std::invalid_argument("histogram: negative vote count");
      sum += c;
    }
    if (sum != total) throw std::invalid_argument("histogram: total does not match counts");
  }
};

}  // namespace fedcert
