#include <fedcert/cert_core.hpp>

#include <cmath>
#include <stdexcept>

namespace fedcert {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Continued fraction for the incomplete beta function, modified Lentz.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3.0e-16;
  constexpr double kFpMin = 1.0e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= kEps) return h;
  }
  throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

}  // namespace

void ProbabilityBounds::validate() const {
  require(lower_y >= 0.0 && lower_y <= 1.0, "bounds: lower_y outside [0,1]");
  require(upper_z >= 0.0 && upper_z <= 1.0, "bounds: upper_z outside [0,1]");
}

Rational survival_ratio(unsigned long n, unsigned long k, unsigned long m) {
  require(k >= 1 && k <= n, "survival_ratio: need 1 <= k <= n");
  require(m <= n - k, "survival_ratio: need m <= n - k");
  return Rational::from_ratio(binomial(n - m, k), binomial(n, k));
}

bool exact_condition_holds(const Rational& p_y, const Rational& p_z,
                           unsigned long n, unsigned long k, unsigned long m) {
  const Rational two(2);
  return p_y - p_z > two - two * survival_ratio(n, k, m);
}

int certify_p_exact(const Rational& p_y, const Rational& p_z,
                    unsigned long n, unsigned long k) {
  require(p_z >= Rational(0) && p_y <= Rational(1), "certify_p_exact: probabilities outside [0,1]");
  require(p_y > p_z, "certify_p_exact: need p_y > p_z");
  int best = 0;
  for (unsigned long m = 0; m <= n - k; ++m) {
    if (!exact_condition_holds(p_y, p_z, n, k, m)) break;
    best = static_cast<int>(m);
  }
  return best;
}

bool bounds_condition_holds(const Rational& lower_y, const Rational& upper_z,
                            unsigned long n, unsigned long k, unsigned long m) {
  const mpz_class c = binomial(n, k);
  // Snap to the 1/C grid: achievable probabilities are multiples of 1/C, so
  // the lower bound rounds up and the upper bound rounds down without losing
  // soundness. Exact multiples are unchanged.
  const Rational snapped_y = Rational::from_ratio(mul_ceil(lower_y, c), c);
  const Rational snapped_z = Rational::from_ratio(mul_floor(upper_z, c), c);
  const Rational two(2);
  return snapped_y - snapped_z > two - two * survival_ratio(n, k, m);
}

int certify_p_bounds(const Rational& lower_y, const Rational& upper_z,
                     unsigned long n, unsigned long k) {
  require(lower_y >= Rational(0) && lower_y <= Rational(1), "certify_p_bounds: lower_y outside [0,1]");
  require(upper_z >= Rational(0) && upper_z <= Rational(1), "certify_p_bounds: upper_z outside [0,1]");
  require(lower_y > upper_z, "certify_p_bounds: need lower_y > upper_z");
  int best = 0;
  for (unsigned long m = 0; m <= n - k; ++m) {
    if (!bounds_condition_holds(lower_y, upper_z, n, k, m)) break;
    best = static_cast<int>(m);
  }
  return best;
}

int certify_p_bounds(const ProbabilityBounds& b, unsigned long n, unsigned long k) {
  b.validate();
  return certify_p_bounds(Rational::from_double(b.lower_y),
                          Rational::from_double(b.upper_z), n, k);
}

double reg_incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "incomplete beta: need a, b > 0");
  require(x >= 0.0 && x <= 1.0, "incomplete beta: need x in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double clopper_pearson_lower(long successes, long trials, double alpha) {
  require(trials > 0, "clopper_pearson_lower: need trials > 0");
  require(successes >= 0 && successes <= trials, "clopper_pearson_lower: successes outside [0, trials]");
  require(alpha > 0.0 && alpha < 1.0, "clopper_pearson_lower: need alpha in (0,1)");
  if (successes == 0) return 0.0;
  // Quantile of Beta(s, t - s + 1): smallest x with I_x(a, b) >= alpha.
  // I_x is increasing in x, so bisect. Returning the lower bracket end keeps
  // the bound conservative against the exact quantile.
  const double a = static_cast<double>(successes);
  const double b = static_cast<double>(trials - successes) + 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (reg_incomplete_beta(a, b, mid) >= alpha) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

bool vote_condition_holds(const LabelHistogram& hist, int y, int m) {
  hist.validate();
  require(y >= 0 && y < static_cast<int>(hist.counts.size()), "vote condition: label out of range");
  require(m >= 0, "vote condition: need m >= 0");
  long best_rival = -1;
  for (int j = 0; j < static_cast<int>(hist.counts.size()); ++j) {
    if (j == y) continue;
    const long rival = hist.counts[j] + (j < y ? 1 : 0);
    if (rival > best_rival) best_rival = rival;
  }
  return 2L * m <= hist.counts[y] - best_rival;
}

int certify_d(const LabelHistogram& hist, int y) {
  if (!vote_condition_holds(hist, y, 0)) {
    throw std::invalid_argument("certify_d: label is not the tie-broken majority vote");
  }
  int best = 0;
  for (int m = 1; m <= hist.total / 2; ++m) {
    if (!vote_condition_holds(hist, y, m)) break;
    best = m;
  }
  return best;
}

}  // namespace fedcert
