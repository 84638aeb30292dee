// Copyright 2026 the dpnoise authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpnoise/expr.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "dpnoise/rng.hpp"

using dpnoise::Expr;

TEST_SUITE_BEGIN("expr");

TEST_CASE("prefix parsing and evaluation") {
  const Expr half_z_exp = Expr::parse("mul mul 0.5 z exp neg z");
  CHECK(half_z_exp.eval(1.0) == doctest::Approx(0.5 * std::exp(-1.0)));
  CHECK(half_z_exp.eval(0.0) == 0.0);

  const Expr poly = Expr::parse("add pow z 2 mul -2 z");  // z^2 - 2z
  CHECK(poly.eval(3.0) == doctest::Approx(3.0));
  CHECK(poly.eval(0.0) == 0.0);

  CHECK(Expr::parse("abs z").eval(-4.5) == 4.5);
  CHECK(Expr::parse("exp 0").eval(7.0) == 1.0);
  CHECK(Expr::parse("sub z 1").eval(3.0) == 2.0);
  CHECK(Expr::parse("pow z 0").eval(5.0) == 1.0);
}

TEST_CASE("parse errors carry token diagnostics") {
  CHECK_THROWS_AS(Expr::parse(""), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("frob z"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("add z"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("z z"), std::invalid_argument);       // trailing
  CHECK_THROWS_AS(Expr::parse("pow z 2.5"), std::invalid_argument); // non-int
  CHECK_THROWS_AS(Expr::parse("pow z -1"), std::invalid_argument);
}

namespace {

// Random expression trees for the round-trip property.
std::string random_expr(dpnoise::Rng& rng, int depth) {
  const auto pick = rng.next_u64() % (depth <= 0 ? 2 : 7);
  switch (pick) {
    case 0: return "z";
    case 1: {
      const double v = (rng.next_unit() - 0.5) * 20.0;
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      return buf;
    }
    case 2: return "neg " + random_expr(rng, depth - 1);
    case 3: return "abs " + random_expr(rng, depth - 1);
    case 4: return "exp " + random_expr(rng, depth - 1);
    case 5:
      return "add " + random_expr(rng, depth - 1) + " " +
             random_expr(rng, depth - 1);
    default:
      return "mul " + random_expr(rng, depth - 1) + " " +
             random_expr(rng, depth - 1);
  }
}

}  // namespace

TEST_CASE("serialization round-trips losslessly") {
  dpnoise::Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const Expr e = Expr::parse(random_expr(rng, 4));
    const Expr back = Expr::parse(e.to_string());
    CHECK(back == e);
    for (int k = 0; k < 5; ++k) {
      const double z = (rng.next_unit() - 0.5) * 8.0;
      const double a = e.eval(z);
      const double b = back.eval(z);
      if (std::isnan(a))
        CHECK(std::isnan(b));
      else
        CHECK(a == b);
    }
  }
}

TEST_SUITE_END();
