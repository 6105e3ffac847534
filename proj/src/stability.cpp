#include "forge/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/common.hpp"

namespace forge {

Selector parse_selector(std::string_view name) {
  if (name == "all") return Selector::kAll;
  if (name == "evens") return Selector::kEvens;
  if (name == "odds") return Selector::kOdds;
  if (name == "tail" || name == "tail-half") return Selector::kTailHalf;
  throw ValidationError("unknown selector \"" + std::string(name) +
                        "\" (expected all, evens, odds, tail)");
}

std::string selector_name(Selector s) {
  switch (s) {
    case Selector::kAll: return "all";
    case Selector::kEvens: return "evens";
    case Selector::kOdds: return "odds";
    case Selector::kTailHalf: return "tail";
  }
  return "?";
}

long long apply_selector(Selector s, long long i, long long horizon) {
  switch (s) {
    case Selector::kAll: return i;
    case Selector::kEvens: return 2 * i;
    case Selector::kOdds: return 2 * i - 1;
    case Selector::kTailHalf: return i + horizon / 2;
  }
  return i;
}

double bounded_transform(double d_value) {
  if (!(d_value >= 0))
    throw ValidationError("bounded transform needs a non-negative value, got " +
                          format_double(d_value));
  return d_value / (1.0 + d_value);
}

double TransformSeq::at(long long n, long long m) const {
  return bounded_transform(base_.at(n, m));
}

VecFamily VecFamily::from_json(const ojson& j) {
  const auto frac_of = [](const ojson& v, const char* what) {
    if (v.is_string()) return Frac::parse(v.get<std::string>());
    if (v.is_number_integer()) return Frac(v.get<long long>());
    throw ValidationError(std::string(what) +
                          " must be an integer or a rational string like "
                          "\"1/2\"");
  };
  if (!j.is_object() || !j.contains("type"))
    throw ValidationError("vector family needs a \"type\"");
  const std::string type = j.at("type").get<std::string>();
  VecFamily fam;
  if (type == "prefix") {
    fam.kind = Kind::kPrefix;
    if (j.contains("scale")) fam.scale = frac_of(j.at("scale"), "scale");
  } else if (type == "single") {
    fam.kind = Kind::kSingle;
    if (j.contains("scale")) fam.scale = frac_of(j.at("scale"), "scale");
    if (j.contains("stride")) fam.stride = j.at("stride").get<long long>();
    if (j.contains("offset")) fam.offset = j.at("offset").get<long long>();
    if (fam.stride < 1) throw ValidationError("stride must be at least 1");
    if (fam.offset < 0) throw ValidationError("offset must be non-negative");
  } else if (type == "constant") {
    fam.kind = Kind::kConstant;
    if (!j.contains("coords") || !j.at("coords").is_array())
      throw ValidationError("constant family needs a \"coords\" array");
    for (const auto& c : j.at("coords"))
      fam.coords.push_back(frac_of(c, "coordinate"));
  } else {
    throw ValidationError("unknown family type \"" + type +
                          "\" (expected prefix, single, constant)");
  }
  return fam;
}

SeqSpaceSeq::SeqSpaceSeq(VecFamily s, VecFamily t, double p)
    : s_(std::move(s)), t_(std::move(t)), p_(p) {
  if (p_ > 0 && p_ < 1)
    throw ValidationError("p-norm needs p >= 1, got " + format_double(p_));
}

void SeqSpaceSeq::diff_profile(
    long long n, long long m,
    std::vector<std::pair<Frac, long long>>& out) const {
  using K = VecFamily::Kind;
  const auto push = [&out](Frac v, long long mult) {
    if (mult > 0 && v.num != 0) out.emplace_back(v.abs(), mult);
  };
  const auto single_index = [](const VecFamily& f, long long k) {
    return f.stride * k + f.offset;
  };
  const auto coord_at = [](const VecFamily& f, long long i) {
    return (i >= 1 && i <= static_cast<long long>(f.coords.size()))
               ? f.coords[static_cast<std::size_t>(i - 1)]
               : Frac(0);
  };
  out.clear();

  if (s_.kind == K::kPrefix && t_.kind == K::kPrefix) {
    const long long c = std::min(n, m);
    push(s_.scale - t_.scale, c);
    push(s_.scale, n - c);
    push(t_.scale, m - c);
  } else if (s_.kind == K::kSingle && t_.kind == K::kSingle) {
    if (single_index(s_, n) == single_index(t_, m)) {
      push(s_.scale - t_.scale, 1);
    } else {
      push(s_.scale, 1);
      push(t_.scale, 1);
    }
  } else if (s_.kind == K::kPrefix && t_.kind == K::kSingle) {
    const long long i = single_index(t_, m);
    if (i <= n) {
      push(s_.scale - t_.scale, 1);
      push(s_.scale, n - 1);
    } else {
      push(s_.scale, n);
      push(t_.scale, 1);
    }
  } else if (s_.kind == K::kSingle && t_.kind == K::kPrefix) {
    const long long i = single_index(s_, n);
    if (i <= m) {
      push(s_.scale - t_.scale, 1);
      push(t_.scale, m - 1);
    } else {
      push(t_.scale, m);
      push(s_.scale, 1);
    }
  } else if (s_.kind == K::kConstant && t_.kind == K::kConstant) {
    const long long L = static_cast<long long>(
        std::max(s_.coords.size(), t_.coords.size()));
    for (long long i = 1; i <= L; ++i)
      push(coord_at(s_, i) - coord_at(t_, i), 1);
  } else if (s_.kind == K::kPrefix || t_.kind == K::kPrefix) {
    // prefix against constant
    const bool s_is_prefix = s_.kind == K::kPrefix;
    const VecFamily& pre = s_is_prefix ? s_ : t_;
    const VecFamily& con = s_is_prefix ? t_ : s_;
    const long long len = s_is_prefix ? n : m;
    const long long L = static_cast<long long>(con.coords.size());
    for (long long i = 1; i <= L; ++i)
      push((i <= len ? pre.scale : Frac(0)) - coord_at(con, i), 1);
    push(pre.scale, len - std::min(len, L));
  } else {
    // single against constant
    const bool s_is_single = s_.kind == K::kSingle;
    const VecFamily& sing = s_is_single ? s_ : t_;
    const VecFamily& con = s_is_single ? t_ : s_;
    const long long i0 = single_index(sing, s_is_single ? n : m);
    const long long L = static_cast<long long>(con.coords.size());
    for (long long i = 1; i <= L; ++i)
      push((i == i0 ? sing.scale : Frac(0)) - coord_at(con, i), 1);
    if (i0 > L) push(sing.scale, 1);
  }
}

double SeqSpaceSeq::at(long long n, long long m) const {
  std::vector<std::pair<Frac, long long>> profile;
  diff_profile(n, m, profile);
  if (p_ <= 0) {
    Frac best(0);
    for (const auto& [v, mult] : profile)
      if (best < v) best = v;
    return best.to_double();
  }
  double sum = 0, comp = 0;  // Kahan
  for (const auto& [v, mult] : profile) {
    const double term =
        static_cast<double>(mult) * std::pow(v.to_double(), p_) - comp;
    const double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
  }
  return std::pow(sum, 1.0 / p_);
}

TableSeq::TableSeq(std::vector<std::vector<double>> values,
                   std::vector<int> seq_n, std::vector<int> seq_m, bool cycle)
    : values_(std::move(values)),
      seq_n_(std::move(seq_n)),
      seq_m_(std::move(seq_m)),
      cycle_(cycle) {
  const int sz = static_cast<int>(values_.size());
  if (sz == 0) throw ValidationError("empty value table");
  for (const auto& row : values_) {
    if (static_cast<int>(row.size()) != sz)
      throw ValidationError("value table is not square");
    for (double v : row)
      if (!std::isfinite(v) || v < 0)
        throw ValidationError("value table entries must be finite and "
                              "non-negative");
  }
  if (seq_n_.empty() || seq_m_.empty())
    throw ValidationError("index sequences must be non-empty");
  for (int idx : seq_n_)
    if (idx < 0 || idx >= sz)
      throw ValidationError("seq_n index " + std::to_string(idx) +
                            " outside table of size " + std::to_string(sz));
  for (int idx : seq_m_)
    if (idx < 0 || idx >= sz)
      throw ValidationError("seq_m index " + std::to_string(idx) +
                            " outside table of size " + std::to_string(sz));
}

int TableSeq::pick(const std::vector<int>& seq, long long k) const {
  const long long len = static_cast<long long>(seq.size());
  long long pos = k - 1;
  if (pos >= len) pos = cycle_ ? pos % len : len - 1;
  return seq[static_cast<std::size_t>(pos)];
}

double TableSeq::at(long long n, long long m) const {
  return values_[static_cast<std::size_t>(pick(seq_n_, n))]
                [static_cast<std::size_t>(pick(seq_m_, m))];
}

LimitEstimate iterated_limit(const DoubleSeq& a, IterOrder order, long long N,
                             int W, double tol, Selector sel_n,
                             Selector sel_m) {
  if (W < 1) throw ValidationError("window must be at least 1");
  if (N <= 2 * W)
    throw ValidationError("horizon " + std::to_string(N) +
                          " must exceed twice the window " +
                          std::to_string(W));
  if (!(tol > 0)) throw ValidationError("tolerance must be positive");

  const long long h_out = N;
  const long long h_in = N * N;
  const Selector s_out = (order == IterOrder::kNM) ? sel_n : sel_m;
  const Selector s_in = (order == IterOrder::kNM) ? sel_m : sel_n;

  LimitEstimate est;
  bool inner_ok = true;
  double means_sum = 0;
  double means_min = std::numeric_limits<double>::infinity();
  double means_max = -means_min;

  for (long long oi = h_out - W + 1; oi <= h_out; ++oi) {
    const long long outer = apply_selector(s_out, oi, h_out);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo, sum = 0;
    for (long long ii = h_in - W + 1; ii <= h_in; ++ii) {
      const long long inner = apply_selector(s_in, ii, h_in);
      const long long n = (order == IterOrder::kNM) ? outer : inner;
      const long long m = (order == IterOrder::kNM) ? inner : outer;
      const double v = a.at(n, m);
      if (!std::isfinite(v) || v < 0)
        throw ValidationError("generator produced " + format_double(v) +
                              " at (" + std::to_string(n) + ", " +
                              std::to_string(m) + ")");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    const double osc = hi - lo;
    est.worst_inner_osc = std::max(est.worst_inner_osc, osc);
    if (osc > tol) inner_ok = false;
    const double mean = sum / W;
    means_sum += mean;
    means_min = std::min(means_min, mean);
    means_max = std::max(means_max, mean);
  }
  est.outer_osc = means_max - means_min;
  est.value = means_sum / W;
  est.converged = inner_ok && est.outer_osc <= tol;
  return est;
}

ojson LimitEstimate::to_json() const {
  ojson j;
  j["converged"] = converged;
  if (converged)
    j["value"] = value;
  else
    j["value"] = nullptr;
  j["worst_inner_osc"] = worst_inner_osc;
  j["outer_osc"] = outer_osc;
  return j;
}

StabilityReport stability_defect(const DoubleSeq& a, long long N, int W,
                                 double tol,
                                 const std::vector<Selector>& selectors) {
  if (selectors.empty())
    throw ValidationError("at least one selector is required");

  std::vector<std::pair<Selector, Selector>> combos;
  for (Selector sn : selectors)
    for (Selector sm : selectors) combos.emplace_back(sn, sm);

  auto chunks = parallel_chunks(combos.size(), [&](std::size_t lo,
                                                   std::size_t hi) {
    std::vector<PairResult> out;
    out.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      PairResult pr;
      pr.sel_n = combos[i].first;
      pr.sel_m = combos[i].second;
      pr.nm = iterated_limit(a, IterOrder::kNM, N, W, tol, pr.sel_n, pr.sel_m);
      pr.mn = iterated_limit(a, IterOrder::kMN, N, W, tol, pr.sel_n, pr.sel_m);
      pr.defect_defined = pr.nm.converged && pr.mn.converged;
      if (pr.defect_defined) pr.defect = std::fabs(pr.nm.value - pr.mn.value);
      out.push_back(pr);
    }
    return out;
  });

  StabilityReport rep;
  rep.N = N;
  rep.W = W;
  rep.tol = tol;
  for (auto& chunk : chunks)
    for (auto& pr : chunk) rep.pairs.push_back(pr);

  for (const auto& pr : rep.pairs) {
    if (pr.defect_defined) {
      rep.defect = rep.defect_defined ? std::max(rep.defect, pr.defect)
                                      : pr.defect;
      rep.defect_defined = true;
    }
  }
  rep.L_nm = rep.pairs.front().nm;
  rep.L_mn = rep.pairs.front().mn;
  for (const auto& pr : rep.pairs)
    if (pr.sel_n == Selector::kAll && pr.sel_m == Selector::kAll) {
      rep.L_nm = pr.nm;
      rep.L_mn = pr.mn;
      break;
    }
  return rep;
}

ojson StabilityReport::to_json() const {
  ojson j;
  j["N"] = N;
  j["window"] = W;
  j["tol"] = tol;
  j["defect_defined"] = defect_defined;
  if (defect_defined)
    j["defect"] = defect;
  else
    j["defect"] = nullptr;
  j["L_nm"] = L_nm.to_json();
  j["L_mn"] = L_mn.to_json();
  j["pairs"] = ojson::array();
  for (const auto& pr : pairs) {
    ojson p;
    p["sel_n"] = selector_name(pr.sel_n);
    p["sel_m"] = selector_name(pr.sel_m);
    p["nm"] = pr.nm.to_json();
    p["mn"] = pr.mn.to_json();
    if (pr.defect_defined)
      p["defect"] = pr.defect;
    else
      p["defect"] = nullptr;
    j["pairs"].push_back(std::move(p));
  }
  return j;
}

DivergenceCaseReport divergence_case_check(const DoubleSeq& a, long long N, int W,
                                 double tol) {
  const int divergent = (a.bounded_n ? 0 : 1) + (a.bounded_m ? 0 : 1);
  DivergenceCaseReport rep;
  rep.case_id = divergent + 1;

  const TransformSeq delta(a);
  rep.delta_nm = iterated_limit(delta, IterOrder::kNM, N, W, tol);
  rep.delta_mn = iterated_limit(delta, IterOrder::kMN, N, W, tol);

  if (rep.case_id == 1) {
    const LimitEstimate d_nm = iterated_limit(a, IterOrder::kNM, N, W, tol);
    const LimitEstimate d_mn = iterated_limit(a, IterOrder::kMN, N, W, tol);
    const bool all_conv = rep.delta_nm.converged && rep.delta_mn.converged &&
                          d_nm.converged && d_mn.converged;
    if (all_conv) {
      rep.delta_defect = std::fabs(rep.delta_nm.value - rep.delta_mn.value);
      rep.mapped_defect = std::fabs(bounded_transform(d_nm.value) -
                                    bounded_transform(d_mn.value));
      rep.passed = std::fabs(rep.delta_defect - rep.mapped_defect) <= tol;
    }
  } else {
    rep.passed = rep.delta_nm.converged && rep.delta_mn.converged &&
                 std::fabs(rep.delta_nm.value - 1.0) <= tol &&
                 std::fabs(rep.delta_mn.value - 1.0) <= tol;
  }

  // Growth probe on the untransformed values: a divergence claim should show
  // a visible gap between a near and a far sample along that axis.
  const auto grew = [&](bool along_n) {
    const double near_v = along_n ? a.at(2, 1) : a.at(1, 2);
    const double far_v = along_n ? a.at(N * N, 1) : a.at(1, N * N);
    return far_v > near_v + 1.0;
  };
  rep.metadata_consistent =
      (grew(true) == !a.bounded_n) && (grew(false) == !a.bounded_m);
  return rep;
}

ojson DivergenceCaseReport::to_json() const {
  ojson j;
  j["case"] = case_id;
  j["passed"] = passed;
  j["metadata_consistent"] = metadata_consistent;
  if (case_id == 1) {
    j["delta_defect"] = delta_defect;
    j["mapped_defect"] = mapped_defect;
  } else {
    j["delta_defect"] = nullptr;
    j["mapped_defect"] = nullptr;
  }
  j["delta_L_nm"] = delta_nm.to_json();
  j["delta_L_mn"] = delta_mn.to_json();
  return j;
}

std::shared_ptr<const DoubleSeq> make_seq_from_json(const ojson& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ValidationError("spec needs a \"kind\" field");
  const std::string kind = j.at("kind").get<std::string>();
  std::shared_ptr<DoubleSeq> seq;

  if (kind == "closed_form") {
    if (!j.contains("expr"))
      throw ValidationError("closed_form spec needs \"expr\"");
    seq = std::make_shared<ClosedFormSeq>(
        Expr::parse(j.at("expr").get<std::string>()));
  } else if (kind == "seq_space") {
    if (!j.contains("s") || !j.contains("t"))
      throw ValidationError("seq_space spec needs families \"s\" and \"t\"");
    VecFamily s = VecFamily::from_json(j.at("s"));
    VecFamily t = VecFamily::from_json(j.at("t"));
    double p = 0;  // sup norm
    if (j.contains("norm")) {
      const ojson& nrm = j.at("norm");
      const std::string nk = nrm.at("kind").get<std::string>();
      if (nk == "p")
        p = nrm.at("p").get<double>();
      else if (nk != "sup")
        throw ValidationError("norm kind must be \"sup\" or \"p\"");
    }
    // Prefix families have unbounded p-norms; everything else stays bounded.
    const bool s_divergent = p > 0 && s.kind == VecFamily::Kind::kPrefix &&
                             s.scale.num != 0;
    const bool t_divergent = p > 0 && t.kind == VecFamily::Kind::kPrefix &&
                             t.scale.num != 0;
    seq = std::make_shared<SeqSpaceSeq>(std::move(s), std::move(t), p);
    seq->bounded_n = !s_divergent;
    seq->bounded_m = !t_divergent;
  } else if (kind == "table") {
    if (!j.contains("values") || !j.contains("seq_n") || !j.contains("seq_m"))
      throw ValidationError(
          "table spec needs \"values\", \"seq_n\", \"seq_m\"");
    bool cycle = false;
    if (j.contains("extend")) {
      const std::string ext = j.at("extend").get<std::string>();
      if (ext == "cycle")
        cycle = true;
      else if (ext != "hold")
        throw ValidationError("extend must be \"hold\" or \"cycle\"");
    }
    seq = std::make_shared<TableSeq>(
        j.at("values").get<std::vector<std::vector<double>>>(),
        j.at("seq_n").get<std::vector<int>>(),
        j.at("seq_m").get<std::vector<int>>(), cycle);
  } else {
    throw ValidationError("unknown spec kind \"" + kind +
                          "\" (expected closed_form, seq_space, table)");
  }

  if (j.contains("bounded_n")) seq->bounded_n = j.at("bounded_n").get<bool>();
  if (j.contains("bounded_m")) seq->bounded_m = j.at("bounded_m").get<bool>();
  return seq;
}

}  // namespace forge
