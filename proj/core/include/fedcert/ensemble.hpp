#pragma once

#include <fedcert/cert_core.hpp>
#include <fedcert/fl_sim.hpp>
#include <fedcert/rng.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace fedcert {

// Level value marking an abstention (sampled variant only).
inline constexpr int kAbstain = -1;

struct CertifiedPrediction {
  int label = 0;          // ensemble prediction (kept even when abstained)
  int level = 0;          // certified tolerance; kAbstain when abstained
  bool abstained = false;
  LabelHistogram histogram;
  std::optional<ProbabilityBounds> bounds;  // sampled variant only
};

LabelHistogram label_histogram(const std::vector<Model>& models,
                               std::span<const double> x, int num_classes);

enum class TieRule { SmallestIndex, Random };

struct Vote {
  int winner = 0;
  int runner_up = 0;  // argmax over the rest, smallest index among equals
};

// Winner under the tie rule (Random requires rng). The runner-up always uses
// the smallest-index rule.
Vote majority_vote(const LabelHistogram& hist, TieRule rule, Rng* rng = nullptr);

// Hash-grouped ensemble: per input, the index-tie-broken vote and the largest
// tolerated number of group flips. Never abstains.
std::vector<CertifiedPrediction> predict_and_certify_d(const std::vector<Model>& models,
                                                       const Dataset& testset);

// Sampled ensemble: per input, a random-tie vote, a Clopper-Pearson bound at
// level alpha / testset.size() (family-wise alpha via union bound), and the
// certified level from the quantized condition; abstains when the winner's
// lower bound does not beat the complementary upper bound.
std::vector<CertifiedPrediction> predict_and_certify_p(const std::vector<Model>& models,
                                                       const Dataset& testset,
                                                       double alpha,
                                                       std::size_t n, unsigned k,
                                                       std::uint64_t tie_seed);

// Fully enumerated ensemble (one model per size-k subset, lexicographic
// order): exact label shares, no abstention. A tie between the top two shares
// certifies level 0.
std::vector<CertifiedPrediction> predict_and_certify_p_exact(const std::vector<Model>& models,
                                                             const Dataset& testset,
                                                             std::size_t n, unsigned k,
                                                             std::uint64_t tie_seed);

}  // namespace fedcert
