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

#ifndef DPNOISE_EXPR_HPP
#define DPNOISE_EXPR_HPP

#include <string>
#include <vector>

namespace dpnoise {

// Closed-form expressions in one variable z, written in whitespace-separated
// prefix notation:
//
//   expr := "z" | <number>
//         | "neg" expr | "abs" expr | "exp" expr
//         | "add" expr expr | "sub" expr expr | "mul" expr expr
//         | "pow" expr <non-negative integer>
//
// Example: (z/2)*e^{-z}  is  "mul mul 0.5 z exp neg z".
//
// The operator set (constants, polynomials via add/mul/pow, exp, abs) keeps
// piecewise density segments serializable and analyzable; arbitrary callbacks
// are deliberately not supported.
class Expr {
 public:
  // Throws std::invalid_argument with a token-level diagnostic.
  static Expr parse(const std::string& text);

  double eval(double z) const;

  // Canonical prefix form. parse(to_string()) reproduces the expression
  // exactly (numbers are printed shortest-round-trip).
  std::string to_string() const;

  friend bool operator==(const Expr& a, const Expr& b) {
    return a.nodes_ == b.nodes_;
  }
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  enum class Op { Constant, Var, Neg, Abs, Exp, Add, Sub, Mul, Pow };

  struct Node {
    Op op = Op::Constant;
    double value = 0.0;  // Constant payload, or Pow exponent (integer-valued)
    int lhs = -1;
    int rhs = -1;
    friend bool operator==(const Node&, const Node&) = default;
  };

  Expr() = default;

  // Nodes stored as a flat post-ordered tree; the root is nodes_.back().
  std::vector<Node> nodes_;
};

}  // namespace dpnoise

#endif
