#include <fedcert/rational.hpp>

#include <cmath>
#include <stdexcept>

namespace fedcert {

Rational::Rational(long num, long den) {
  if (den == 0) throw std::domain_error("rational: zero denominator");
  q_ = mpq_class(num, den);
  q_.canonicalize();
}

Rational Rational::from_double(double x) {
  if (!std::isfinite(x)) throw std::domain_error("rational: non-finite double");
  return Rational(mpq_class(x));  // mpq_set_d is exact and canonical
}

Rational Rational::from_ratio(const mpz_class& num, const mpz_class& den) {
  if (den == 0) throw std::domain_error("rational: zero denominator");
  mpq_class q(num, den);
  q.canonicalize();
  return Rational(q);
}

Rational Rational::operator/(const Rational& r) const {
  if (r.q_ == 0) throw std::domain_error("rational: division by zero");
  return Rational(mpq_class(q_ / r.q_));
}

mpz_class binomial(unsigned long n, unsigned long k) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

mpz_class mul_ceil(const Rational& p, const mpz_class& c) {
  const mpz_class num = p.num() * c;
  const mpz_class den = p.den();
  mpz_class q;
  mpz_cdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return q;
}

mpz_class mul_floor(const Rational& p, const mpz_class& c) {
  const mpz_class num = p.num() * c;
  const mpz_class den = p.den();
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return q;
}

}  // namespace fedcert
