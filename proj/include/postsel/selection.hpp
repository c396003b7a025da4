#ifndef POSTSEL_SELECTION_HPP
#define POSTSEL_SELECTION_HPP

// Information-criterion subset selection and the overfitting diagnostics.
//
// A subset S is scored by  gamma_n(S) = n log SSE(S) + c_n |S|  (natural log).
// AIC takes c_n = 2, BIC takes c_n = log n.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "postsel/error.hpp"
#include "postsel/linalg.hpp"

namespace postsel {

enum class CriterionKind { Aic, Bic, Custom };

class Criterion {
 public:
  static Criterion aic() { return Criterion(CriterionKind::Aic, 2.0); }
  static Criterion bic() { return Criterion(CriterionKind::Bic, 0.0); }
  static Criterion custom(double c_n) {
    if (!(c_n >= 0.0) || !std::isfinite(c_n)) {
      throw Error(ErrorKind::InvalidArgument, "custom penalty c_n must be finite and >= 0");
    }
    return Criterion(CriterionKind::Custom, c_n);
  }

  /// "aic", "bic" or "custom" (case-insensitive); custom needs c_n.
  static Criterion parse(std::string_view name, std::optional<double> c_n = std::nullopt) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "aic") return aic();
    if (lower == "bic") return bic();
    if (lower == "custom") {
      if (!c_n) throw Error(ErrorKind::ConfigError, "criterion 'custom' requires cn");
      return custom(*c_n);
    }
    throw Error(ErrorKind::ConfigError, "unknown criterion '" + std::string(name) + "'");
  }

  CriterionKind kind() const noexcept { return kind_; }

  /// c_n resolved at sample size n.
  double penalty(Index n) const {
    switch (kind_) {
      case CriterionKind::Aic: return 2.0;
      case CriterionKind::Bic: return std::log(static_cast<double>(n));
      case CriterionKind::Custom: return custom_;
    }
    return custom_;
  }

  std::string name() const {
    switch (kind_) {
      case CriterionKind::Aic: return "aic";
      case CriterionKind::Bic: return "bic";
      case CriterionKind::Custom: return "custom";
    }
    return "custom";
  }

  /// Only meaningful for Custom.
  double custom_value() const noexcept { return custom_; }

 private:
  Criterion(CriterionKind kind, double c) : kind_(kind), custom_(c) {}

  CriterionKind kind_;
  double custom_;
};

inline constexpr double kAbsoluteSseFloor = 1e-300;
inline constexpr double kRelativeSseFloor = 1e-20;
inline constexpr int kDefaultEnumerationLimit = 20;

/// SSE values at or below this level are treated as exact fits.
/// The relative part keeps rounding residue of an exact fit (~1e-32 ‖y‖²)
/// from being rewarded by the log.
inline double sse_floor(double y_norm_sq) {
  return std::max(kAbsoluteSseFloor, kRelativeSseFloor * y_norm_sq);
}

inline double gamma(double sse, std::size_t size, Index n, const Criterion& crit) {
  if (!(sse > 0.0)) throw Error(ErrorKind::NonPositiveSse, "gamma needs SSE > 0");
  return static_cast<double>(n) * std::log(sse) + crit.penalty(n) * static_cast<double>(size);
}

struct ScoredSubset {
  Subset subset;
  double sse = 0.0;    // as fitted, before flooring
  double gamma = 0.0;  // from the floored SSE
  bool truncated = false;
};

struct SkippedSubset {
  Subset subset;
  std::string reason;
};

struct SelectOptions {
  std::optional<int> size_cap;
  int enumeration_limit = kDefaultEnumerationLimit;
  /// Threads used for enumeration; values below 1 mean hardware concurrency.
  int workers = 1;
};

struct SelectionResult {
  Subset chosen;
  double c_n = 0.0;
  /// Every feasible enumerated subset, in increasing bitmask order.
  std::vector<ScoredSubset> scores;
  std::vector<Subset> ties;
  std::size_t truncated_sse_count = 0;
  std::vector<SkippedSubset> skipped;

  const ScoredSubset& best() const {
    for (const auto& s : scores) {
      if (s.subset == chosen) return s;
    }
    throw Error(ErrorKind::InvalidArgument, "chosen subset missing from scores");
  }
};

/// Strict ordering used to pick the winner: gamma, then |S|, then indices.
inline bool ranks_before(const ScoredSubset& a, const ScoredSubset& b) {
  if (a.gamma != b.gamma) return a.gamma < b.gamma;
  if (a.subset.size() != b.subset.size()) return a.subset.size() < b.subset.size();
  return a.subset.indices() < b.subset.indices();
}

/// The k best subsets in selection order.
inline std::vector<ScoredSubset> top_subsets(const SelectionResult& result, std::size_t k) {
  std::vector<ScoredSubset> sorted = result.scores;
  k = std::min(k, sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end(),
                    ranks_before);
  sorted.resize(k);
  return sorted;
}

namespace detail {

struct SlotResult {
  std::optional<ScoredSubset> scored;
  std::optional<SkippedSubset> skipped;
};

inline void score_range(const SubsetLeastSquares& solver, const Criterion& crit, double floor,
                        const std::vector<std::uint64_t>& masks, std::size_t begin,
                        std::size_t end, std::vector<SlotResult>& slots) {
  for (std::size_t i = begin; i < end; ++i) {
    Subset s = Subset::from_mask(masks[i]);
    try {
      const double sse = solver.sse(s);
      ScoredSubset scored;
      scored.sse = sse;
      scored.truncated = sse <= floor;
      scored.gamma = gamma(scored.truncated ? floor : sse, s.size(), solver.n(), crit);
      scored.subset = std::move(s);
      slots[i].scored = std::move(scored);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient && e.kind() != ErrorKind::InsufficientDf) throw;
      slots[i].skipped = SkippedSubset{std::move(s), e.what()};
    }
  }
}

}  // namespace detail

/// Exhaustive minimization of gamma over all subsets (or those with
/// |S| <= size_cap). Infeasible subsets are skipped and reported.
/// The result does not depend on options.workers.
inline SelectionResult select(const Dataset& data, const Criterion& crit,
                              const SelectOptions& options = {}) {
  const Index p = data.p();
  const int limit = std::min(options.enumeration_limit, 62);
  if (p > limit) {
    throw Error(ErrorKind::TooManyPredictors,
                "p = " + std::to_string(p) + " exceeds the enumeration limit " +
                    std::to_string(limit));
  }
  const int cap = options.size_cap ? std::max(*options.size_cap, 0) : static_cast<int>(p);

  std::vector<std::uint64_t> masks;
  const std::uint64_t count = std::uint64_t{1} << p;
  masks.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t m = 0; m < count; ++m) {
    if (std::popcount(m) <= cap) masks.push_back(m);
  }

  const SubsetLeastSquares solver(data);
  const double floor = sse_floor(data.y().squaredNorm());
  std::vector<detail::SlotResult> slots(masks.size());

  std::size_t workers = options.workers < 1 ? std::max(1u, std::thread::hardware_concurrency())
                                            : static_cast<std::size_t>(options.workers);
  workers = std::min(workers, std::max<std::size_t>(1, masks.size() / 64));
  if (workers <= 1) {
    detail::score_range(solver, crit, floor, masks, 0, masks.size(), slots);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(workers);
    const std::size_t block = (masks.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(w * block, masks.size());
      const std::size_t end = std::min(begin + block, masks.size());
      pool.emplace_back([&, w, begin, end] {
        try {
          detail::score_range(solver, crit, floor, masks, begin, end, slots);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  SelectionResult result;
  result.c_n = crit.penalty(data.n());
  result.scores.reserve(slots.size());
  for (auto& slot : slots) {
    if (slot.scored) {
      if (slot.scored->truncated) ++result.truncated_sse_count;
      result.scores.push_back(std::move(*slot.scored));
    } else if (slot.skipped) {
      result.skipped.push_back(std::move(*slot.skipped));
    }
  }
  if (result.scores.empty()) {
    throw Error(ErrorKind::AllSubsetsInfeasible, "no enumerated subset could be fitted");
  }

  const ScoredSubset* best = &result.scores.front();
  for (const auto& s : result.scores) {
    if (ranks_before(s, *best)) best = &s;
  }
  result.chosen = best->subset;
  for (const auto& s : result.scores) {
    if (s.gamma == best->gamma) result.ties.push_back(s.subset);
  }
  std::sort(result.ties.begin(), result.ties.end(), [](const Subset& a, const Subset& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.indices() < b.indices();
  });
  return result;
}

/// Terms of the sufficient condition 1 - exp(-a_n D_n) > D_n, with
/// a_n = (c_n / n)(n - |S*| - 1) and D_n = (|S^| - |S*|) / (n - |S*| - 1).
struct OverfitCondition {
  double a_n = 0.0;
  double d_n = 0.0;
  /// 1 - exp(-a_n D_n); also the r_n threshold above which S^ beats S*.
  double threshold = 0.0;
  bool holds = false;
};

inline OverfitCondition overfit_condition(Index n, std::size_t size_star, std::size_t size_hat,
                                          double c_n) {
  const double dof = static_cast<double>(n) - static_cast<double>(size_star) - 1.0;
  if (!(dof > 0.0)) {
    throw Error(ErrorKind::InsufficientDf, "n - |S*| - 1 must be positive");
  }
  OverfitCondition out;
  out.a_n = (c_n / static_cast<double>(n)) * dof;
  out.d_n = (static_cast<double>(size_hat) - static_cast<double>(size_star)) / dof;
  out.threshold = -std::expm1(-out.a_n * out.d_n);
  out.holds = out.threshold > out.d_n;
  return out;
}

struct TheoremReport {
  Subset s_star;
  Subset s_hat;
  Index n = 0;
  double c_n = 0.0;
  double a_n = 0.0;
  /// Present only when S* ⊆ S^.
  std::optional<double> d_n;
  std::optional<double> r_n;
  /// Present only when S* ⊂ S^ strictly; +inf when SSE(S^) = 0.
  std::optional<double> f_n;
  bool nested = false;
  bool condition_holds = false;
  double sse_star = 0.0;
  double sse_selected = 0.0;
  double sigma_hat_star = 0.0;
  double sigma_hat_selected = 0.0;
  bool underestimates = false;
  bool strictly_overfits = false;

  /// [(n-|S*|-1)/(n-|S^|-1)] (1 - r_n) σ*², which must equal σ^² under nesting.
  std::optional<double> variance_from_identity() const {
    if (!r_n) return std::nullopt;
    const double ratio = (static_cast<double>(n) - static_cast<double>(s_star.size()) - 1.0) /
                         (static_cast<double>(n) - static_cast<double>(s_hat.size()) - 1.0);
    return ratio * (1.0 - *r_n) * sigma_hat_star * sigma_hat_star;
  }
};

namespace detail {

inline TheoremReport build_report(const SubsetFit& star, const SubsetFit& hat, Index n,
                                  const Criterion& crit) {
  if (!(star.sse > 0.0)) throw Error(ErrorKind::ZeroSse, "SSE(S*) is zero");
  TheoremReport rep;
  rep.s_star = star.subset;
  rep.s_hat = hat.subset;
  rep.n = n;
  rep.c_n = crit.penalty(n);
  rep.sse_star = star.sse;
  rep.sse_selected = hat.sse;
  rep.sigma_hat_star = star.sigma_hat();
  rep.sigma_hat_selected = hat.sigma_hat();
  rep.underestimates = rep.sigma_hat_selected < rep.sigma_hat_star;
  rep.nested = star.subset.is_subset_of(hat.subset);
  rep.strictly_overfits = star.subset.is_strict_subset_of(hat.subset);

  const OverfitCondition cond =
      overfit_condition(n, star.subset.size(), hat.subset.size(), rep.c_n);
  rep.a_n = cond.a_n;
  if (rep.nested) {
    rep.d_n = cond.d_n;
    rep.r_n = 1.0 - hat.sse / star.sse;
    rep.condition_holds = cond.holds;
    if (rep.strictly_overfits) {
      rep.f_n = decompose(star.sse, hat.sse, n, star.subset.size(), hat.subset.size()).f_stat;
    }
  }
  return rep;
}

}  // namespace detail

/// Diagnostics comparing a reference subset S* with any other subset S^.
inline TheoremReport theorem_report(const Dataset& data, const Subset& s_star,
                                    const Subset& s_hat, const Criterion& crit) {
  const SubsetFit star = ols_fit(data, s_star);
  const SubsetFit hat = ols_fit(data, s_hat);
  return detail::build_report(star, hat, data.n(), crit);
}

struct PreferenceCheck {
  bool prefers_by_gamma = false;
  bool prefers_by_rn = false;
  /// r_n within 1e-12 of the threshold; the two verdicts may then differ.
  bool tie = false;
  double gamma_star = 0.0;
  double gamma_hat = 0.0;
  double r_n = 0.0;
  double threshold = 0.0;

  bool agrees() const { return tie || prefers_by_gamma == prefers_by_rn; }
};

inline constexpr double kPreferenceTieTolerance = 1e-12;

/// Decides S^ over S* twice: by comparing gamma values, and by comparing
/// r_n = 1 - SSE(S^)/SSE(S*) with 1 - exp(-a_n D_n). The two are equivalent.
inline PreferenceCheck preference_from_sse(double sse_star, double sse_hat, Index n,
                                           std::size_t size_star, std::size_t size_hat,
                                           const Criterion& crit) {
  if (!(sse_star > 0.0) || !(sse_hat > 0.0)) {
    throw Error(ErrorKind::ZeroSse, "preference check needs positive SSE values");
  }
  PreferenceCheck out;
  out.gamma_star = gamma(sse_star, size_star, n, crit);
  out.gamma_hat = gamma(sse_hat, size_hat, n, crit);
  out.prefers_by_gamma = out.gamma_hat < out.gamma_star;
  out.r_n = 1.0 - sse_hat / sse_star;
  out.threshold = overfit_condition(n, size_star, size_hat, crit.penalty(n)).threshold;
  out.prefers_by_rn = out.r_n > out.threshold;
  out.tie = std::abs(out.r_n - out.threshold) <= kPreferenceTieTolerance;
  return out;
}

inline PreferenceCheck selection_preference_equivalence(const Dataset& data,
                                                        const Subset& s_star,
                                                        const Subset& s_hat,
                                                        const Criterion& crit) {
  if (!s_star.is_strict_subset_of(s_hat)) {
    throw Error(ErrorKind::NotNested, s_star.to_string() + " is not a strict subset of " +
                                          s_hat.to_string());
  }
  const SubsetFit star = ols_fit(data, s_star);
  const SubsetFit hat = ols_fit(data, s_hat);
  return preference_from_sse(star.sse, hat.sse, data.n(), s_star.size(), s_hat.size(), crit);
}

}  // namespace postsel

#endif  // POSTSEL_SELECTION_HPP
