#pragma once

#include <gmpxx.h>

#include <string>

namespace fedcert {

// Exact rational arithmetic for certification decisions. Values are always
// canonical: reduced fraction, denominator > 0.
class Rational {
 public:
  Rational() : q_(0) {}
  Rational(long num, long den = 1);

  // Exact conversion; every finite double is a dyadic rational.
  static Rational from_double(double x);
  static Rational from_ratio(const mpz_class& num, const mpz_class& den);

  mpz_class num() const { return q_.get_num(); }
  mpz_class den() const { return q_.get_den(); }
  double to_double() const { return q_.get_d(); }
  std::string str() const { return q_.get_str(); }

  Rational operator+(const Rational& r) const { return Rational(mpq_class(q_ + r.q_)); }
  Rational operator-(const Rational& r) const { return Rational(mpq_class(q_ - r.q_)); }
  Rational operator*(const Rational& r) const { return Rational(mpq_class(q_ * r.q_)); }
  Rational operator/(const Rational& r) const;
  Rational operator-() const { return Rational(mpq_class(-q_)); }

  bool operator==(const Rational& r) const { return q_ == r.q_; }
  bool operator!=(const Rational& r) const { return q_ != r.q_; }
  bool operator<(const Rational& r) const { return q_ < r.q_; }
  bool operator<=(const Rational& r) const { return q_ <= r.q_; }
  bool operator>(const Rational& r) const { return q_ > r.q_; }
  bool operator>=(const Rational& r) const { return q_ >= r.q_; }

 private:
  explicit Rational(const mpq_class& q) : q_(q) {}
  mpq_class q_;
};

// C(n, k); 0 when k > n.
mpz_class binomial(unsigned long n, unsigned long k);

// ceil(p * c) and floor(p * c) as exact integers; c >= 0.
mpz_class mul_ceil(const Rational& p, const mpz_class& c);
mpz_class mul_floor(const Rational& p, const mpz_class& c);

}  // namespace fedcert
