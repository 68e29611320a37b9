#pragma once

// Exact rational scalar for the oracle LP mode.

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/gmp.hpp>

#include "vng/lp.hpp"

namespace vng {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;

template <>
struct LpTraits<Rational> {
  static constexpr bool exact = true;
  static Rational zero_tolerance() { return Rational(0); }
  static Rational pivot_tolerance() { return Rational(0); }
  static double to_double(const Rational& v) { return v.convert_to<double>(); }
  // Every finite double is a dyadic rational, so this is exact.
  static Rational from_double(double v) { return Rational(v); }
};

}  // namespace vng
