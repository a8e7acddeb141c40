#ifndef AMPNN_TESTS_TARGET_ORACLE_HPP
#define AMPNN_TESTS_TARGET_ORACLE_HPP

// Both benchmark targets evaluated in 50-digit binary floating point.

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace ampnn::testing {

using Big = boost::multiprecision::cpp_bin_float_50;

inline Big oracle_1d(double xd) {
  const Big x = xd;
  return log(x + Big(0.5)) + Big("0.2") * sin(x) + Big("0.4") * sin(2 * x) + Big("0.3") * sin(3 * x) -
         Big("0.1") * sin(5 * x) - Big("0.2") * sin(7 * x) + Big("0.15") * sin(20 * x);
}

inline Big oracle_ackley(double xd, double yd) {
  const Big x = xd;
  const Big y = yd;
  const Big two_pi = 2 * boost::math::constants::pi<Big>();
  return Big(-20) * exp(Big("-0.2") * sqrt(Big("0.5") * (x * x + y * y))) -
         exp(Big("0.5") * (cos(two_pi * x) + cos(two_pi * y))) + exp(Big(1)) + Big(20);
}

inline double relative_error(double value, const Big& exact) {
  return static_cast<double>(abs(Big(value) - exact) / abs(exact));
}

}  // namespace ampnn::testing

#endif  // AMPNN_TESTS_TARGET_ORACLE_HPP
