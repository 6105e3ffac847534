#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace forge {

// Arithmetic in two variables n and m: numbers, + - * /, unary minus,
// parentheses, min(a,b), max(a,b), sqrt(x), abs(x), exp(x), log(x), pow(a,b).
class Expr {
 public:
  static Expr parse(std::string_view src);
  double eval(double n, double m) const;
  const std::string& source() const { return src_; }

 private:
  enum class Op : uint8_t {
    kNum, kVarN, kVarM, kAdd, kSub, kMul, kDiv, kNeg,
    kMin, kMax, kSqrt, kAbs, kExp, kLog, kPow,
  };
  struct Node {
    Op op;
    double value = 0;  // kNum only
    int a = -1, b = -1;
  };
  double eval_node(int idx, double n, double m) const;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::string src_;
  friend class ExprParser;
};

}  // namespace forge
