#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "pgt/errors.hpp"

namespace pgt {

enum class QuantizerKind { none, log, uniform };

/// Quantizer applied to every transmitted value. `level` is rho.
struct QuantizerSpec {
  QuantizerKind kind = QuantizerKind::none;
  double level = 0.0;

  void validate() const {
    if (kind != QuantizerKind::none && (!(level > 0.0) || !std::isfinite(level))) {
      throw InvalidParameter("quantization level rho must be positive, got " + std::to_string(level));
    }
  }
};

inline std::string_view to_string(QuantizerKind k) {
  switch (k) {
    case QuantizerKind::log: return "log";
    case QuantizerKind::uniform: return "uniform";
    case QuantizerKind::none: break;
  }
  return "none";
}

inline std::optional<QuantizerKind> parse_quantizer_kind(std::string_view s) {
  if (s == "none") return QuantizerKind::none;
  if (s == "log") return QuantizerKind::log;
  if (s == "uniform") return QuantizerKind::uniform;
  return std::nullopt;
}

/// sgn(x) exp(rho * round(log|x| / rho)); q(0) = 0 and subnormal inputs flush to 0.
template <typename Scalar>
Scalar log_quantize(Scalar x, Scalar rho) {
  using std::abs, std::exp, std::log, std::round;
  const Scalar mag = abs(x);
  if (!(mag >= std::numeric_limits<Scalar>::min())) {
    return mag == mag ? Scalar(0) : x;  // NaN passes through
  }
  const Scalar q = exp(rho * round(log(mag) / rho));
  return x < 0 ? -q : q;
}

/// rho * round(x / rho), ties away from zero.
template <typename Scalar>
Scalar uniform_quantize(Scalar x, Scalar rho) {
  using std::round;
  return rho * round(x / rho);
}

template <typename Scalar>
Scalar quantize(const QuantizerSpec& spec, Scalar x) {
  switch (spec.kind) {
    case QuantizerKind::log: return log_quantize<Scalar>(x, static_cast<Scalar>(spec.level));
    case QuantizerKind::uniform: return uniform_quantize<Scalar>(x, static_cast<Scalar>(spec.level));
    case QuantizerKind::none: break;
  }
  return x;
}

/// Elementwise quantization of a dense vector or matrix expression.
template <typename Derived>
typename Derived::PlainObject quantize_vector(const QuantizerSpec& spec, const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (spec.kind == QuantizerKind::none) return v.eval();
  return v.unaryExpr([&spec](Scalar x) { return quantize<Scalar>(spec, x); }).eval();
}

}  // namespace pgt
