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

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace dpnoise {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

bool parse_number(const std::string& tok, double* out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + tok.size()) return false;
  *out = v;
  return true;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Expr Expr::parse(const std::string& text) {
  const std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) throw std::invalid_argument("expression: empty input");

  Expr e;
  std::size_t pos = 0;

  // Recursive descent over the token stream; emits nodes in post order so
  // that every child index precedes its parent.
  auto parse_expr = [&](auto&& self) -> int {
    if (pos >= tokens.size())
      throw std::invalid_argument("expression: unexpected end of input");
    const std::string tok = tokens[pos++];

    Node node;
    if (tok == "z") {
      node.op = Op::Var;
    } else if (tok == "neg" || tok == "abs" || tok == "exp") {
      node.op = tok == "neg" ? Op::Neg : (tok == "abs" ? Op::Abs : Op::Exp);
      node.lhs = self(self);
    } else if (tok == "add" || tok == "sub" || tok == "mul") {
      node.op = tok == "add" ? Op::Add : (tok == "sub" ? Op::Sub : Op::Mul);
      node.lhs = self(self);
      node.rhs = self(self);
    } else if (tok == "pow") {
      node.op = Op::Pow;
      node.lhs = self(self);
      if (pos >= tokens.size())
        throw std::invalid_argument("expression: 'pow' missing exponent");
      double k = 0;
      if (!parse_number(tokens[pos], &k) || k < 0 || k != std::floor(k) ||
          k > 1e6)
        throw std::invalid_argument("expression: 'pow' exponent must be a "
                                    "non-negative integer, got '" +
                                    tokens[pos] + "'");
      ++pos;
      node.value = k;
    } else {
      double v = 0;
      if (!parse_number(tok, &v))
        throw std::invalid_argument("expression: unknown token '" + tok + "'");
      node.op = Op::Constant;
      node.value = v;
    }
    e.nodes_.push_back(node);
    return static_cast<int>(e.nodes_.size()) - 1;
  };

  parse_expr(parse_expr);
  if (pos != tokens.size())
    throw std::invalid_argument("expression: trailing tokens starting at '" +
                                tokens[pos] + "'");
  return e;
}

double Expr::eval(double z) const {
  // Post-ordered nodes evaluate with a single forward sweep.
  std::vector<double> value(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Constant: value[i] = n.value; break;
      case Op::Var: value[i] = z; break;
      case Op::Neg: value[i] = -value[n.lhs]; break;
      case Op::Abs: value[i] = std::fabs(value[n.lhs]); break;
      case Op::Exp: value[i] = std::exp(value[n.lhs]); break;
      case Op::Add: value[i] = value[n.lhs] + value[n.rhs]; break;
      case Op::Sub: value[i] = value[n.lhs] - value[n.rhs]; break;
      case Op::Mul: value[i] = value[n.lhs] * value[n.rhs]; break;
      case Op::Pow: {
        double base = value[n.lhs];
        long k = static_cast<long>(n.value);
        double acc = 1.0;
        while (k > 0) {  // square-and-multiply
          if (k & 1) acc *= base;
          base *= base;
          k >>= 1;
        }
        value[i] = acc;
        break;
      }
    }
  }
  return value.back();
}

std::string Expr::to_string() const {
  std::vector<std::string> text(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Constant: text[i] = format_number(n.value); break;
      case Op::Var: text[i] = "z"; break;
      case Op::Neg: text[i] = "neg " + text[n.lhs]; break;
      case Op::Abs: text[i] = "abs " + text[n.lhs]; break;
      case Op::Exp: text[i] = "exp " + text[n.lhs]; break;
      case Op::Add: text[i] = "add " + text[n.lhs] + " " + text[n.rhs]; break;
      case Op::Sub: text[i] = "sub " + text[n.lhs] + " " + text[n.rhs]; break;
      case Op::Mul: text[i] = "mul " + text[n.lhs] + " " + text[n.rhs]; break;
      case Op::Pow:
        text[i] = "pow " + text[n.lhs] + " " + format_number(n.value);
        break;
    }
  }
  return text.back();
}

}  // namespace dpnoise
