#pragma once

#include <memory>
#include <string>
#include <vector>

namespace hfk {

/// Scalar arithmetic expression over named variables. Supports numbers,
/// + - * / ^, unary minus, parentheses, sin, cos, exp, sqrt and pow(a, b).
/// Evaluated in double precision.
class Expression {
 public:
  /// Throws ParseError on malformed input or unknown identifiers.
  static Expression parse(const std::string& text, const std::vector<std::string>& variables);

  /// `values` follows the order of the variable list given to parse().
  double eval(const std::vector<double>& values) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
  std::size_t n_vars_ = 0;
};

}  // namespace hfk
