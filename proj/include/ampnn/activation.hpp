#ifndef AMPNN_ACTIVATION_HPP
#define AMPNN_ACTIVATION_HPP

// Primary activations H, secondary activations G, and the composite neuron
// transfer F = G o H together with its exact derivative.
//
// All functions are pure and templated on the scalar type so that the same
// definitions serve double precision training and extended precision
// reference computations.

#include <cmath>
#include <sstream>
#include <string>

#include "ampnn/error.hpp"

namespace ampnn {

enum class PrimaryKind { ParametricSoftplus, Identity, ReLU };
enum class SecondaryKind { None, Amplify, Attenuate };

/// Primary activation H. For ParametricSoftplus,
///   f(x) = a x + (1 - a) ln(1 + e^x),  0 <= a < 1.
template <typename Scalar>
struct PrimaryActivation {
  PrimaryKind kind = PrimaryKind::Identity;
  Scalar a = Scalar(0);

  static PrimaryActivation parametric_softplus(Scalar a) {
    if (!(a >= Scalar(0) && a < Scalar(1))) {
      std::ostringstream msg;
      msg << "parametric softplus slope a must lie in [0, 1), got " << a;
      throw ValidationError(msg.str());
    }
    return {PrimaryKind::ParametricSoftplus, a};
  }
  static PrimaryActivation identity() { return {PrimaryKind::Identity, Scalar(0)}; }
  static PrimaryActivation relu() { return {PrimaryKind::ReLU, Scalar(0)}; }

  template <typename NewScalar>
  PrimaryActivation<NewScalar> cast() const {
    return {kind, static_cast<NewScalar>(a)};
  }

  friend bool operator==(const PrimaryActivation&, const PrimaryActivation&) = default;
};

/// Secondary activation G applied to the primary output:
///   None -> h,  Amplify -> h^2,  Attenuate(b) -> h / (h^2 + b),  b > 0.
template <typename Scalar>
struct SecondaryActivation {
  SecondaryKind kind = SecondaryKind::None;
  Scalar b = Scalar(0);

  static SecondaryActivation none() { return {SecondaryKind::None, Scalar(0)}; }
  static SecondaryActivation amplify() { return {SecondaryKind::Amplify, Scalar(0)}; }
  static SecondaryActivation attenuate(Scalar b = Scalar(1)) {
    if (!(b > Scalar(0)) || !std::isfinite(static_cast<double>(b))) {
      std::ostringstream msg;
      msg << "attenuation constant b must be a finite positive number, got " << b;
      throw ValidationError(msg.str());
    }
    return {SecondaryKind::Attenuate, b};
  }

  template <typename NewScalar>
  SecondaryActivation<NewScalar> cast() const {
    return {kind, static_cast<NewScalar>(b)};
  }

  friend bool operator==(const SecondaryActivation&, const SecondaryActivation&) = default;
};

/// A function value paired with its derivative at the same point.
template <typename Scalar>
struct ValueAndDerivative {
  Scalar value;
  Scalar derivative;
};

namespace detail {

template <typename Scalar>
inline void require_finite(Scalar x, const char* where) {
  using std::isfinite;
  if (!isfinite(x)) {
    std::ostringstream msg;
    msg << where << ": non-finite argument " << x;
    throw DomainError(msg.str());
  }
}

// Branches on the sign of x so that exp never sees a positive argument:
//   x <= 0:  a x + (1 - a) log1p(e^x)
//   x >  0:  x + (1 - a) log1p(e^-x)
// The derivative is a + (1 - a) sigma(x), with the logistic sigma built from
// the same exponential.
template <typename Scalar>
inline ValueAndDerivative<Scalar> softplus_unchecked(Scalar a, Scalar x) {
  using std::exp;
  using std::log1p;
  const Scalar one(1);
  if (x > Scalar(0)) {
    const Scalar e = exp(-x);
    const Scalar sigma = one / (one + e);
    return {x + (one - a) * log1p(e), a + (one - a) * sigma};
  }
  const Scalar e = exp(x);
  const Scalar sigma = e / (one + e);
  return {a * x + (one - a) * log1p(e), a + (one - a) * sigma};
}

template <typename Scalar>
inline ValueAndDerivative<Scalar> primary_unchecked(const PrimaryActivation<Scalar>& h, Scalar x) {
  switch (h.kind) {
    case PrimaryKind::ParametricSoftplus: return softplus_unchecked(h.a, x);
    case PrimaryKind::Identity: return {x, Scalar(1)};
    case PrimaryKind::ReLU:
      // derivative at exactly 0 is taken as 0
      if (x > Scalar(0)) return {x, Scalar(1)};
      return {Scalar(0), Scalar(0)};
  }
  return {x, Scalar(1)};
}

template <typename Scalar>
inline ValueAndDerivative<Scalar> secondary_unchecked(const SecondaryActivation<Scalar>& g, Scalar h) {
  switch (g.kind) {
    case SecondaryKind::None: return {h, Scalar(1)};
    case SecondaryKind::Amplify: return {h * h, Scalar(2) * h};
    case SecondaryKind::Attenuate: {
      const Scalar h2 = h * h;
      const Scalar denom = h2 + g.b;
      return {h / denom, (g.b - h2) / (denom * denom)};
    }
  }
  return {h, Scalar(1)};
}

}  // namespace detail

template <typename Scalar>
Scalar primary_activate(const PrimaryActivation<Scalar>& h, Scalar x) {
  detail::require_finite(x, "primary_activate");
  return detail::primary_unchecked(h, x).value;
}

template <typename Scalar>
Scalar primary_derivative(const PrimaryActivation<Scalar>& h, Scalar x) {
  detail::require_finite(x, "primary_derivative");
  return detail::primary_unchecked(h, x).derivative;
}

template <typename Scalar>
Scalar secondary_activate(const SecondaryActivation<Scalar>& g, Scalar h) {
  detail::require_finite(h, "secondary_activate");
  return detail::secondary_unchecked(g, h).value;
}

/// dG/dh at h: 1 for None, 2h for Amplify, (b - h^2) / (h^2 + b)^2 for Attenuate.
template <typename Scalar>
Scalar secondary_derivative(const SecondaryActivation<Scalar>& g, Scalar h) {
  detail::require_finite(h, "secondary_derivative");
  return detail::secondary_unchecked(g, h).derivative;
}

/// F(x) = G(H(x)) and F'(x) = G'(H(x)) H'(x). Only the post-secondary value
/// is returned; H(x) is not kept.
template <typename Scalar>
ValueAndDerivative<Scalar> composite_activate(const PrimaryActivation<Scalar>& h,
                                              const SecondaryActivation<Scalar>& g, Scalar x) {
  detail::require_finite(x, "composite_activate");
  const auto inner = detail::primary_unchecked(h, x);
  if (g.kind == SecondaryKind::None) return inner;
  const auto outer = detail::secondary_unchecked(g, inner.value);
  return {outer.value, outer.derivative * inner.derivative};
}

inline std::string to_string(PrimaryKind kind) {
  switch (kind) {
    case PrimaryKind::ParametricSoftplus: return "parametric_softplus";
    case PrimaryKind::Identity: return "identity";
    case PrimaryKind::ReLU: return "relu";
  }
  return "identity";
}

inline std::string to_string(SecondaryKind kind) {
  switch (kind) {
    case SecondaryKind::None: return "none";
    case SecondaryKind::Amplify: return "amplify";
    case SecondaryKind::Attenuate: return "attenuate";
  }
  return "none";
}

inline PrimaryKind parse_primary_kind(const std::string& name) {
  if (name == "parametric_softplus") return PrimaryKind::ParametricSoftplus;
  if (name == "identity") return PrimaryKind::Identity;
  if (name == "relu") return PrimaryKind::ReLU;
  throw ValidationError("unknown primary activation '" + name + "'");
}

inline SecondaryKind parse_secondary_kind(const std::string& name) {
  if (name == "none") return SecondaryKind::None;
  if (name == "amplify") return SecondaryKind::Amplify;
  if (name == "attenuate") return SecondaryKind::Attenuate;
  throw ValidationError("unknown secondary activation '" + name + "'");
}

}  // namespace ampnn

#endif  // AMPNN_ACTIVATION_HPP
