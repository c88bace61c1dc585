#pragma once

#include <fedcert/histogram.hpp>
#include <fedcert/rational.hpp>

namespace fedcert {

// Confidence bounds on the top-two label probabilities of a sampled ensemble.
struct ProbabilityBounds {
  double lower_y = 0.0;  // lower bound on the winner's label probability
  double upper_z = 0.0;  // upper bound on the runner-up's label probability
  void validate() const;
};

// Fraction of size-k client subsets that avoid a fixed set of m clients:
// C(n-m, k) / C(n, k). Requires 1 <= k <= n and 0 <= m <= n - k.
// Strictly decreasing in m while k < n - m.
Rational survival_ratio(unsigned long n, unsigned long k, unsigned long m);

// Robustness condition with exactly known probabilities:
//   p_y - p_z > 2 - 2 * survival_ratio(n, k, m).
bool exact_condition_holds(const Rational& p_y, const Rational& p_z,
                           unsigned long n, unsigned long k, unsigned long m);

// Largest m in [0, n-k] satisfying the exact condition; always >= 0.
// Requires 0 <= p_z < p_y <= 1. Evaluated entirely in exact rationals.
int certify_p_exact(const Rational& p_y, const Rational& p_z,
                    unsigned long n, unsigned long k);

// Same condition with estimated probabilities. Both bounds are first snapped
// to the 1/C(n,k) grid: the lower bound up, the upper bound down. The snap is
// the identity on exact multiples of 1/C(n,k).
bool bounds_condition_holds(const Rational& lower_y, const Rational& upper_z,
                            unsigned long n, unsigned long k, unsigned long m);

// Largest m in [0, n-k] satisfying the bounds condition; always >= 0.
// Requires both bounds in [0,1] and lower_y > upper_z.
int certify_p_bounds(const Rational& lower_y, const Rational& upper_z,
                     unsigned long n, unsigned long k);
// Doubles are converted to rationals exactly (no decimal rounding).
int certify_p_bounds(const ProbabilityBounds& b, unsigned long n, unsigned long k);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double reg_incomplete_beta(double a, double b, double x);

// One-sided lower confidence bound for a binomial proportion: the alpha
// quantile of Beta(successes, trials - successes + 1), 0 when successes == 0.
// Bisection to absolute tolerance 1e-12 (max 200 iterations); returns the
// lower bracket end so the result never overshoots the exact quantile.
double clopper_pearson_lower(long successes, long trials, double alpha);

// Condition for a disjoint-group ensemble: after flipping any m group votes,
// y stays strictly ahead of every competitor under the index tie-break:
//   2 * m <= counts[y] - max_{j != y} (counts[j] + [j < y]).
bool vote_condition_holds(const LabelHistogram& hist, int y, int m);

// Largest m satisfying the vote condition, clamped at 0. Requires y to be the
// index-tie-broken argmax of the histogram. Never exceeds total / 2.
int certify_d(const LabelHistogram& hist, int y);

}  // namespace fedcert
