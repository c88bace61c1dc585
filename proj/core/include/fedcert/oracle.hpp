#pragma once

#include <fedcert/histogram.hpp>

#include <cstdint>
#include <vector>

namespace fedcert {

// Brute-force reference checks. These share no logic with the closed-form
// certification routines beyond the histogram type; they exist to verify
// those routines on small instances.

// True iff the index-tie-broken winner stays y for every choice of at most m
// groups and every reassignment of their votes. Exponential; meant for
// total <= 12, labels <= 5.
bool oracle_certify_d(const LabelHistogram& hist, int y, int m);

// Largest m for which oracle_certify_d holds.
int oracle_max_m_d(const LabelHistogram& hist, int y);

// Exact-mode reference over an explicit label table: one predicted label per
// size-k subset of n clients, lexicographic subset order. True iff y keeps
// the strictly largest subset share after every subset that intersects
// `malicious` is reassigned to the adversary's best single label.
// Meant for n <= 8, k <= 3.
bool oracle_certify_p_exact(const std::vector<int>& label_table,
                            unsigned long n, unsigned long k,
                            const std::vector<unsigned long>& malicious,
                            int y, int num_labels);

// Largest m such that oracle_certify_p_exact holds for every malicious set of
// size m; -1 if y is not the strict winner of the clean table.
int oracle_max_m_p_exact(const std::vector<int>& label_table,
                         unsigned long n, unsigned long k,
                         int y, int num_labels);

// Monte Carlo miscoverage of clopper_pearson_lower: draws `trials` binomial
// samples with success probability p_true and returns the fraction whose
// lower bound exceeds p_true.
double coverage_test_cp(double p_true, int trials_per_bound, double alpha,
                        int trials, std::uint64_t seed);

}  // namespace fedcert
