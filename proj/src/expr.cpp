#include "hfk/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "hfk/errors.hpp"

namespace hfk {

struct Expression::Node {
  enum class Op { kConst, kVar, kNeg, kAdd, kSub, kMul, kDiv, kPow, kSin, kCos, kExp, kSqrt };
  Op op = Op::kConst;
  double value = 0.0;
  std::size_t index = 0;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("expression '" + s_ + "': " + why + " at offset " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = make(Node::Op::kAdd, lhs, term());
      } else if (accept('-')) {
        lhs = make(Node::Op::kSub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = make(Node::Op::kMul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Node::Op::kDiv, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Node::Op::kNeg, unary());
    if (accept('+')) return unary();
    return power();
  }

  // Right-associative; binds tighter than unary minus on its left, so
  // -x^2 is -(x^2).
  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Node::Op::kPow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name = s_.substr(start, pos_ - start);
      if (accept('(')) return call(name);
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          auto n = std::make_shared<Node>();
          n->op = Node::Op::kVar;
          n->index = i;
          return n;
        }
      }
      fail("unknown variable '" + name + "'");
    }
    fail("unexpected character");
  }

  NodePtr call(const std::string& name) {
    NodePtr a = expr();
    if (name == "pow") {
      if (!accept(',')) fail("pow takes two arguments");
      NodePtr b = expr();
      if (!accept(')')) fail("expected ')'");
      return make(Node::Op::kPow, a, b);
    }
    if (!accept(')')) fail("expected ')'");
    if (name == "sin") return make(Node::Op::kSin, a);
    if (name == "cos") return make(Node::Op::kCos, a);
    if (name == "exp") return make(Node::Op::kExp, a);
    if (name == "sqrt") return make(Node::Op::kSqrt, a);
    fail("unknown function '" + name + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

double evaluate(const Node& n, const std::vector<double>& v) {
  switch (n.op) {
    case Node::Op::kConst:
      return n.value;
    case Node::Op::kVar:
      return v[n.index];
    case Node::Op::kNeg:
      return -evaluate(*n.lhs, v);
    case Node::Op::kAdd:
      return evaluate(*n.lhs, v) + evaluate(*n.rhs, v);
    case Node::Op::kSub:
      return evaluate(*n.lhs, v) - evaluate(*n.rhs, v);
    case Node::Op::kMul:
      return evaluate(*n.lhs, v) * evaluate(*n.rhs, v);
    case Node::Op::kDiv:
      return evaluate(*n.lhs, v) / evaluate(*n.rhs, v);
    case Node::Op::kPow:
      return std::pow(evaluate(*n.lhs, v), evaluate(*n.rhs, v));
    case Node::Op::kSin:
      return std::sin(evaluate(*n.lhs, v));
    case Node::Op::kCos:
      return std::cos(evaluate(*n.lhs, v));
    case Node::Op::kExp:
      return std::exp(evaluate(*n.lhs, v));
    case Node::Op::kSqrt:
      return std::sqrt(evaluate(*n.lhs, v));
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text, variables).parse();
  e.n_vars_ = variables.size();
  return e;
}

double Expression::eval(const std::vector<double>& values) const {
  if (values.size() != n_vars_) throw DimensionError("expression variable count mismatch");
  return evaluate(*root_, values);
}

}  // namespace hfk
