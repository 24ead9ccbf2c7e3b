#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pgt/errors.hpp"
#include "pgt/quantize.hpp"

using namespace pgt;

TEST_CASE("log quantizer fixed values") {
  for (double rho : {0.01, 0.125, 1.0}) CHECK(log_quantize(1.0, rho) == 1.0);
  CHECK(log_quantize(3.0, std::numbers::ln2) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(log_quantize(-3.0, std::numbers::ln2) == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(log_quantize(0.0, 0.125) == 0.0);
  CHECK(log_quantize(std::numeric_limits<double>::denorm_min(), 0.125) == 0.0);
  CHECK(log_quantize(1e-300, 0.125) > 0.0);
}

TEST_CASE("uniform quantizer fixed values") {
  CHECK(uniform_quantize(0.10, 0.0625) == doctest::Approx(0.125));
  CHECK(uniform_quantize(0.0, 0.3) == 0.0);
  CHECK(uniform_quantize(0.25, 0.5) == 0.5);    // tie rounds away from zero
  CHECK(uniform_quantize(-0.25, 0.5) == -0.5);
}

TEST_CASE("quantize dispatch and vector form") {
  const QuantizerSpec none{QuantizerKind::none, 0.0};
  Eigen::Vector2d v(1.3, -2.0);
  CHECK(quantize_vector(none, v) == v);

  const QuantizerSpec lg{QuantizerKind::log, std::numbers::ln2};
  const Eigen::Vector2d q = quantize_vector(lg, Eigen::Vector2d(3.0, -3.0));
  CHECK(q(0) == doctest::Approx(4.0));
  CHECK(q(1) == doctest::Approx(-4.0));

  const QuantizerSpec un{QuantizerKind::uniform, 0.5};
  const Eigen::Vector2d r = quantize_vector(un, Eigen::Vector2d(0.2, 0.3));
  CHECK(r(0) == 0.0);
  CHECK(r(1) == 0.5);
  CHECK(quantize(un, 0.3) == 0.5);
}

TEST_CASE("quantizer parameter validation") {
  CHECK_NOTHROW(QuantizerSpec{QuantizerKind::none, 0.0}.validate());
  CHECK_THROWS_AS(QuantizerSpec({QuantizerKind::log, 0.0}).validate(), InvalidParameter);
  CHECK_THROWS_AS(QuantizerSpec({QuantizerKind::uniform, -0.1}).validate(), InvalidParameter);
  CHECK(parse_quantizer_kind("log") == QuantizerKind::log);
  CHECK_FALSE(parse_quantizer_kind("logarithmic").has_value());
  CHECK(to_string(QuantizerKind::uniform) == "uniform");
}

TEST_CASE("property: sector bound, uniform bound, oddness, idempotence") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mag(-6.0, 6.0);
  std::uniform_real_distribution<double> lin(-1e6, 1e6);
  std::bernoulli_distribution coin(0.5);
  for (double rho : {1.0 / 8, 1.0 / 32, 1.0 / 128, 0.0625, 0.5}) {
    const QuantizerSpec lg{QuantizerKind::log, rho};
    const QuantizerSpec un{QuantizerKind::uniform, rho};
    const double lo = std::exp(-rho / 2), hi = std::exp(rho / 2);
    int sector = 0, uniform_bad = 0, odd = 0, idem = 0;
    for (int k = 0; k < 100000; ++k) {
      // half log-spread, half linear-spread samples over [-1e6, 1e6]
      double x = coin(rng) ? std::pow(10.0, mag(rng)) * (coin(rng) ? 1 : -1) : lin(rng);
      if (x == 0.0) continue;
      const double q = quantize(lg, x);
      const double ratio = q / x;
      if (!(ratio >= lo && ratio <= hi)) ++sector;
      const double qu = quantize(un, x);
      if (!(std::abs(qu - x) <= rho / 2 + 1e-12 * std::abs(x))) ++uniform_bad;
      if (quantize(lg, -x) != -q || quantize(un, -x) != -qu) ++odd;
      if (quantize(lg, q) != q || quantize(un, qu) != qu) ++idem;
    }
    CHECK(sector == 0);
    CHECK(uniform_bad == 0);
    CHECK(odd == 0);
    CHECK(idem == 0);
  }
}
