#pragma once

#include <Eigen/Core>
#include <boost/multiprecision/gmp.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace abset {

// Exact arbitrary-precision rational scalar. GMP keeps every arithmetic
// result in canonical form (coprime numerator/denominator, denominator > 0),
// and the ordering is the total order of Q.
using Rational = boost::multiprecision::mpq_rational;
using BigInt   = boost::multiprecision::mpz_int;

using MatQ = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;
using VecQ = Eigen::Matrix<Rational, Eigen::Dynamic, 1>;
using MatB = Eigen::MatrixXi;  // 0/1 routing / incidence matrices
using VecI = Eigen::VectorXi;

inline BigInt num(const Rational& q) { return numerator(q); }
inline BigInt den(const Rational& q) { return denominator(q); }

/// p/q with canonicalization; throws on q == 0.
inline Rational rat(long long p, long long q = 1) {
  if (q == 0) throw std::invalid_argument("rational: zero denominator");
  return Rational(p) / Rational(q);
}

/// Parses "p" or "p/q" (optional sign, arbitrary precision).
inline Rational parse_rational(std::string_view text) {
  const auto bad = [&] {
    return std::invalid_argument("not a rational: '" + std::string(text) + "'");
  };
  if (text.empty()) throw bad();
  const auto slash = text.find('/');
  try {
    if (slash == std::string_view::npos) return Rational(BigInt(std::string(text)));
    BigInt p{std::string(text.substr(0, slash))};
    BigInt q{std::string(text.substr(slash + 1))};
    if (q == 0) throw bad();
    return Rational(p) / Rational(q);
  } catch (const std::runtime_error&) {
    throw bad();
  }
}

inline std::string to_string(const Rational& q) { return q.str(); }

/// sign(v) * min(|v|, 1), the two-sided unit clamp.
inline Rational saturate(const Rational& v) {
  if (v > 1) return Rational(1);
  if (v < -1) return Rational(-1);
  return v;
}

inline VecQ saturate(VecQ v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = saturate(v[i]);
  return v;
}

inline VecQ constant_vec(Eigen::Index n, const Rational& value) {
  VecQ v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = value;
  return v;
}

}  // namespace abset
