#include <fedcert/ensemble.hpp>

#include <fedcert/rational.hpp>

#include <stdexcept>

namespace fedcert {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Largest raw count among labels other than y: the value competitor, free of
// any tie-break penalty. Used where exact probabilities are compared.
int max_rival_count(const LabelHistogram& hist, int y) {
  int best = -1;
  for (int j = 0; j < static_cast<int>(hist.counts.size()); ++j) {
    if (j != y && hist.counts[j] > best) best = hist.counts[j];
  }
  return best;
}

}  // namespace

LabelHistogram label_histogram(const std::vector<Model>& models,
                               std::span<const double> x, int num_classes) {
  require(!models.empty(), "label_histogram: no models");
  require(num_classes >= 2, "label_histogram: need at least two labels");
  std::vector<int> counts(num_classes, 0);
  for (const Model& m : models) {
    require(m.num_classes == num_classes, "label_histogram: model label space mismatch");
    ++counts[predict(m, x)];
  }
  return LabelHistogram(std::move(counts));
}

Vote majority_vote(const LabelHistogram& hist, TieRule rule, Rng* rng) {
  hist.validate();
  const int L = static_cast<int>(hist.counts.size());
  int best = 0;
  for (int j = 1; j < L; ++j) {
    if (hist.counts[j] > hist.counts[best]) best = j;
  }
  Vote v;
  if (rule == TieRule::SmallestIndex) {
    v.winner = best;
  } else {
    require(rng != nullptr, "majority_vote: random tie rule needs an rng");
    std::vector<int> tied;
    for (int j = 0; j < L; ++j) {
      if (hist.counts[j] == hist.counts[best]) tied.push_back(j);
    }
    v.winner = tied[static_cast<std::size_t>(rng->next_below(tied.size()))];
  }
  // Worst-case competitor: counts plus the index advantage over the winner.
  int rival = -1;
  long rival_score = -1;
  for (int j = 0; j < L; ++j) {
    if (j == v.winner) continue;
    const long score = hist.counts[j] + (j < v.winner ? 1 : 0);
    if (score > rival_score) {
      rival_score = score;
      rival = j;
    }
  }
  v.runner_up = rival;
  return v;
}

std::vector<CertifiedPrediction> predict_and_certify_d(const std::vector<Model>& models,
                                                       const Dataset& testset) {
  require(!models.empty(), "predict_and_certify_d: no models");
  const int L = models.front().num_classes;
  std::vector<CertifiedPrediction> out;
  out.reserve(testset.size());
  for (std::size_t i = 0; i < testset.size(); ++i) {
    CertifiedPrediction p;
    p.histogram = label_histogram(models, testset.row(i), L);
    p.label = majority_vote(p.histogram, TieRule::SmallestIndex).winner;
    p.level = certify_d(p.histogram, p.label);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<CertifiedPrediction> predict_and_certify_p(const std::vector<Model>& models,
                                                       const Dataset& testset,
                                                       double alpha,
                                                       std::size_t n, unsigned k,
                                                       std::uint64_t tie_seed) {
  require(!models.empty(), "predict_and_certify_p: no models");
  require(alpha > 0.0 && alpha < 1.0, "predict_and_certify_p: need alpha in (0,1)");
  require(testset.size() > 0, "predict_and_certify_p: empty test set");
  const int L = models.front().num_classes;
  const long N = static_cast<long>(models.size());
  const double alpha_per_input = alpha / static_cast<double>(testset.size());
  std::vector<CertifiedPrediction> out;
  out.reserve(testset.size());
  for (std::size_t i = 0; i < testset.size(); ++i) {
    Rng rng = Rng::derive(tie_seed, static_cast<std::uint64_t>(i));
    CertifiedPrediction p;
    p.histogram = label_histogram(models, testset.row(i), L);
    p.label = majority_vote(p.histogram, TieRule::Random, &rng).winner;
    ProbabilityBounds b;
    b.lower_y = clopper_pearson_lower(p.histogram.counts[p.label], N, alpha_per_input);
    b.upper_z = 1.0 - b.lower_y;
    p.bounds = b;
    if (b.lower_y > b.upper_z) {
      p.level = certify_p_bounds(b, n, k);
    } else {
      p.level = kAbstain;
      p.abstained = true;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<CertifiedPrediction> predict_and_certify_p_exact(const std::vector<Model>& models,
                                                             const Dataset& testset,
                                                             std::size_t n, unsigned k,
                                                             std::uint64_t tie_seed) {
  require(!models.empty(), "predict_and_certify_p_exact: no models");
  const mpz_class c = binomial(n, k);
  require(c == static_cast<unsigned long>(models.size()),
          "predict_and_certify_p_exact: model count differs from C(n,k)");
  const int L = models.front().num_classes;
  std::vector<CertifiedPrediction> out;
  out.reserve(testset.size());
  for (std::size_t i = 0; i < testset.size(); ++i) {
    Rng rng = Rng::derive(tie_seed, static_cast<std::uint64_t>(i));
    CertifiedPrediction p;
    p.histogram = label_histogram(models, testset.row(i), L);
    p.label = majority_vote(p.histogram, TieRule::Random, &rng).winner;
    const int rival = max_rival_count(p.histogram, p.label);
    if (p.histogram.counts[p.label] == rival) {
      p.level = 0;  // exact tie: the vote itself is ambiguous
    } else {
      const Rational p_y = Rational::from_ratio(p.histogram.counts[p.label], c);
      const Rational p_z = Rational::from_ratio(rival, c);
      p.level = certify_p_exact(p_y, p_z, n, k);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace fedcert
