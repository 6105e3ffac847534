#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "forge/expr.hpp"
#include "forge/frac.hpp"
#include "forge/io.hpp"

namespace forge {

// Computable stand-ins for ultrafilters: each maps a 1-based rank i within a
// horizon H to the index of the chosen subsequence.
enum class Selector { kAll, kEvens, kOdds, kTailHalf };

Selector parse_selector(std::string_view name);
std::string selector_name(Selector s);
long long apply_selector(Selector s, long long i, long long horizon);

enum class IterOrder { kNM, kMN };

// Double-indexed value array a(n, m), indices 1-based. Boundedness flags are
// classification metadata for the three-case check, not enforced bounds.
class DoubleSeq {
 public:
  virtual ~DoubleSeq() = default;
  virtual double at(long long n, long long m) const = 0;
  bool bounded_n = true;
  bool bounded_m = true;
};

class ClosedFormSeq : public DoubleSeq {
 public:
  explicit ClosedFormSeq(Expr expr) : expr_(std::move(expr)) {}
  double at(long long n, long long m) const override {
    return expr_.eval(static_cast<double>(n), static_cast<double>(m));
  }

 private:
  Expr expr_;
};

// One parametric family of finitely supported rational vectors.
struct VecFamily {
  enum class Kind { kPrefix, kSingle, kConstant };
  Kind kind = Kind::kConstant;
  Frac scale{1};                // prefix, single
  long long stride = 1;         // single: index = stride*k + offset
  long long offset = 0;
  std::vector<Frac> coords;     // constant: coords[i-1] is coordinate i

  static VecFamily from_json(const ojson& j);
};

class SeqSpaceSeq : public DoubleSeq {
 public:
  // p <= 0 selects the sup norm, else the p-norm (p >= 1).
  SeqSpaceSeq(VecFamily s, VecFamily t, double p);
  double at(long long n, long long m) const override;

 private:
  // Absolute coordinate differences of s(n) - t(m) as (value, multiplicity).
  void diff_profile(long long n, long long m,
                    std::vector<std::pair<Frac, long long>>& out) const;
  VecFamily s_, t_;
  double p_;
};

class TableSeq : public DoubleSeq {
 public:
  TableSeq(std::vector<std::vector<double>> values, std::vector<int> seq_n,
           std::vector<int> seq_m, bool cycle);
  double at(long long n, long long m) const override;

 private:
  int pick(const std::vector<int>& seq, long long k) const;
  std::vector<std::vector<double>> values_;
  std::vector<int> seq_n_, seq_m_;
  bool cycle_;
};

class FnSeq : public DoubleSeq {
 public:
  explicit FnSeq(std::function<double(long long, long long)> fn)
      : fn_(std::move(fn)) {}
  double at(long long n, long long m) const override { return fn_(n, m); }

 private:
  std::function<double(long long, long long)> fn_;
};

// Pointwise x/(1+x) view of another spec. Non-owning; classification
// metadata is carried over unchanged so the case split still sees the
// original growth behaviour.
class TransformSeq : public DoubleSeq {
 public:
  explicit TransformSeq(const DoubleSeq& base) : base_(base) {
    bounded_n = base.bounded_n;
    bounded_m = base.bounded_m;
  }
  double at(long long n, long long m) const override;

 private:
  const DoubleSeq& base_;
};

double bounded_transform(double d_value);

struct LimitEstimate {
  bool converged = false;
  double value = 0;            // outer-window mean, meaningful when converged
  double worst_inner_osc = 0;  // max over outer window of inner (max-min)
  double outer_osc = 0;        // (max-min) of the accepted inner limits
  ojson to_json() const;
};

// Iterated limit of a along the given order: the outer index runs to N, the
// inner index to N^2. Each limit is the mean of the last W values, accepted
// iff their oscillation is at most tol. Indices pass through the selectors.
LimitEstimate iterated_limit(const DoubleSeq& a, IterOrder order, long long N,
                             int W, double tol, Selector sel_n = Selector::kAll,
                             Selector sel_m = Selector::kAll);

struct PairResult {
  Selector sel_n = Selector::kAll;
  Selector sel_m = Selector::kAll;
  LimitEstimate nm, mn;
  bool defect_defined = false;
  double defect = 0;
};

struct StabilityReport {
  long long N = 0;
  int W = 0;
  double tol = 0;
  std::vector<PairResult> pairs;
  LimitEstimate L_nm, L_mn;    // the (all, all) pair, or the first pair run
  bool defect_defined = false;
  double defect = 0;           // max over pairs with both orders converged
  ojson to_json() const;
};

StabilityReport stability_defect(const DoubleSeq& a, long long N, int W,
                                 double tol,
                                 const std::vector<Selector>& selectors);

struct DivergenceCaseReport {
  int case_id = 1;             // 1 both bounded, 2 one divergent, 3 both
  bool passed = false;
  bool metadata_consistent = true;
  double delta_defect = 0;     // case 1: defect of the transformed spec
  double mapped_defect = 0;    // case 1: |t(L_nm) - t(L_mn)| of the original
  LimitEstimate delta_nm, delta_mn;
  ojson to_json() const;
};

DivergenceCaseReport divergence_case_check(const DoubleSeq& a, long long N,
                                           int W, double tol);

std::shared_ptr<const DoubleSeq> make_seq_from_json(const ojson& j);

}  // namespace forge
