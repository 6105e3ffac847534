#include "forge/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "forge/common.hpp"

namespace forge {

class ExprParser {
 public:
  explicit ExprParser(std::string_view src) : src_(src) {}

  Expr run() {
    Expr e;
    e.src_ = std::string(src_);
    out_ = &e.nodes_;
    e.root_ = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  using Op = Expr::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("expression error at offset " +
                          std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(Op op, double value = 0, int a = -1, int b = -1) {
    out_->push_back({op, value, a, b});
    return static_cast<int>(out_->size()) - 1;
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (eat('+'))
        lhs = add(Op::kAdd, 0, lhs, parse_product());
      else if (eat('-'))
        lhs = add(Op::kSub, 0, lhs, parse_product());
      else
        return lhs;
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (eat('*'))
        lhs = add(Op::kMul, 0, lhs, parse_unary());
      else if (eat('/'))
        lhs = add(Op::kDiv, 0, lhs, parse_unary());
      else
        return lhs;
    }
  }

  int parse_unary() {
    if (eat('-')) return add(Op::kNeg, 0, parse_unary());
    return parse_primary();
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("expected a value");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = parse_sum();
      if (!eat(')')) fail("missing ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0;
      const char* begin = src_.data() + pos_;
      const auto [p, ec] = std::from_chars(begin, src_.data() + src_.size(), v);
      if (ec != std::errc{}) fail("bad number");
      pos_ += static_cast<std::size_t>(p - begin);
      return add(Op::kNum, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      const std::string_view name = src_.substr(start, pos_ - start);
      if (name == "n") return add(Op::kVarN);
      if (name == "m") return add(Op::kVarM);
      const auto fn = [&]() -> std::pair<Op, int> {
        if (name == "min") return {Op::kMin, 2};
        if (name == "max") return {Op::kMax, 2};
        if (name == "pow") return {Op::kPow, 2};
        if (name == "sqrt") return {Op::kSqrt, 1};
        if (name == "abs") return {Op::kAbs, 1};
        if (name == "exp") return {Op::kExp, 1};
        if (name == "log") return {Op::kLog, 1};
        fail("unknown name \"" + std::string(name) + "\"");
      }();
      if (!eat('(')) fail("expected '(' after \"" + std::string(name) + "\"");
      const int a = parse_sum();
      int b = -1;
      if (fn.second == 2) {
        if (!eat(',')) fail("\"" + std::string(name) + "\" takes two arguments");
        b = parse_sum();
      }
      if (!eat(')')) fail("missing ')'");
      return add(fn.first, 0, a, b);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<Expr::Node>* out_ = nullptr;
};

Expr Expr::parse(std::string_view src) { return ExprParser(src).run(); }

double Expr::eval_node(int idx, double n, double m) const {
  const Node& nd = nodes_[static_cast<std::size_t>(idx)];
  switch (nd.op) {
    case Op::kNum: return nd.value;
    case Op::kVarN: return n;
    case Op::kVarM: return m;
    case Op::kAdd: return eval_node(nd.a, n, m) + eval_node(nd.b, n, m);
    case Op::kSub: return eval_node(nd.a, n, m) - eval_node(nd.b, n, m);
    case Op::kMul: return eval_node(nd.a, n, m) * eval_node(nd.b, n, m);
    case Op::kDiv: return eval_node(nd.a, n, m) / eval_node(nd.b, n, m);
    case Op::kNeg: return -eval_node(nd.a, n, m);
    case Op::kMin: return std::min(eval_node(nd.a, n, m), eval_node(nd.b, n, m));
    case Op::kMax: return std::max(eval_node(nd.a, n, m), eval_node(nd.b, n, m));
    case Op::kSqrt: return std::sqrt(eval_node(nd.a, n, m));
    case Op::kAbs: return std::fabs(eval_node(nd.a, n, m));
    case Op::kExp: return std::exp(eval_node(nd.a, n, m));
    case Op::kLog: return std::log(eval_node(nd.a, n, m));
    case Op::kPow:
      return std::pow(eval_node(nd.a, n, m), eval_node(nd.b, n, m));
  }
  throw ConstructionError("unreachable expression node");
}

double Expr::eval(double n, double m) const {
  if (root_ < 0) throw ConstructionError("empty expression");
  return eval_node(root_, n, m);
}

}  // namespace forge
