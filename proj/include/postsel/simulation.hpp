#ifndef POSTSEL_SIMULATION_HPP
#define POSTSEL_SIMULATION_HPP

// Monte Carlo study of naive inference after AIC/BIC selection.
//
// Each replication draws an AR(1) design, fits the true subset and the
// criterion-selected subset, and builds both mean-response intervals at a
// fresh query point. Replication i always uses RNG substream i of the seed,
// so records do not depend on how replications are spread over threads.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "postsel/distributions.hpp"
#include "postsel/error.hpp"
#include "postsel/inference.hpp"
#include "postsel/linalg.hpp"
#include "postsel/selection.hpp"

namespace postsel {

struct ExperimentConfig {
  int n = 50;
  int p = 10;
  double sigma = 1.0;
  Subset s_star = Subset({0, 1, 2});
  Vector beta_star = default_beta(10);
  double rho = 0.5;
  int reps = 1000;
  double alpha = 0.05;
  Criterion criterion = Criterion::aic();
  std::uint64_t seed = 2018;
  /// Replication threads; 0 means hardware concurrency.
  int workers = 0;

  /// (1, 2, 3, 0, ..., 0) truncated or padded to length p.
  static Vector default_beta(int p) {
    Vector b = Vector::Zero(std::max(p, 0));
    for (int i = 0; i < std::min(p, 3); ++i) b(i) = i + 1.0;
    return b;
  }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& msg) {
      throw Error(ErrorKind::ConfigError, field + ": " + msg);
    };
    if (p < 1) fail("p", "must be >= 1");
    if (n <= p + 1) fail("n", "must exceed p + 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma", "must be finite and >= 0");
    if (!(std::abs(rho) < 1.0)) fail("rho", "must satisfy |rho| < 1");
    if (reps < 1) fail("reps", "must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha", "must lie in (0, 1)");
    if (workers < 0) fail("workers", "must be >= 0");
    if (beta_star.size() != p) fail("beta_star", "must have length p");
    if (s_star.empty()) fail("s_star", "must be nonempty");
    if (!s_star.indices().empty() && s_star.indices().back() >= p) {
      fail("s_star", "index exceeds p");
    }
    if (p > kDefaultEnumerationLimit) fail("p", "exceeds the enumeration limit");
    for (int j = 0; j < p; ++j) {
      const bool in_support = s_star.contains(j);
      if (in_support != (beta_star(j) != 0.0)) {
        fail("beta_star", "must be nonzero exactly on s_star (coordinate " +
                              std::to_string(j + 1) + ")");
      }
    }
  }
};

struct GeneratedData {
  CenteredData centered;
  Vector query_raw;
};

/// n AR(1) rows, then n noise draws, then one extra AR(1) row for the query.
inline GeneratedData generate_dataset(const ExperimentConfig& cfg, RngStream& rng) {
  const Ar1Spec spec{cfg.p, cfg.rho};
  Matrix X(cfg.n, cfg.p);
  for (int i = 0; i < cfg.n; ++i) X.row(i) = sample_ar1_row(rng, spec).transpose();
  Vector noise(cfg.n);
  for (int i = 0; i < cfg.n; ++i) noise(i) = rng.normal();
  Vector y = X * cfg.beta_star + cfg.sigma * noise;
  Vector query = sample_ar1_row(rng, spec);
  return GeneratedData{center(std::move(X), std::move(y)), std::move(query)};
}

struct ReplicationRecord {
  int rep_index = 0;
  Subset s_hat;
  double sigma_hat_selected = 0.0;
  double sigma_hat_oracle = 0.0;
  double ratio = 0.0;  // oracle / selected
  bool contains_star = false;
  bool strict_overfit = false;
  bool exact = false;
  bool covered_selected = false;
  bool covered_oracle = false;
  double ci_width_selected = 0.0;
  double ci_width_oracle = 0.0;
  bool condition_holds = false;
  double sigma_sq_oracle = 0.0;
};

inline ReplicationRecord run_replication(const ExperimentConfig& cfg, int rep_index) {
  try {
    if (cfg.sigma == 0.0) {
      throw Error(ErrorKind::DegenerateReplication, "sigma = 0 makes every fit of S* exact");
    }
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(rep_index));
    const GeneratedData gen = generate_dataset(cfg, rng);
    const Dataset& data = gen.centered.data;

    const SubsetFit oracle = ols_fit(data, cfg.s_star);
    const SelectionResult selection = select(data, cfg.criterion);
    if (selection.truncated_sse_count > 0 || oracle.sse <= sse_floor(data.y().squaredNorm())) {
      throw Error(ErrorKind::DegenerateReplication, "SSE fell to the floor");
    }
    const SubsetFit selected = ols_fit(data, selection.chosen);

    const QueryPoint q = QueryPoint::from_raw(gen.query_raw, gen.centered.column_means);
    const double truth = true_mean_response(q, cfg.beta_star);
    const ConfidenceInterval ci_oracle = mean_response_ci(data, oracle, q, cfg.alpha);
    const ConfidenceInterval ci_selected = mean_response_ci(data, selected, q, cfg.alpha);
    const TheoremReport report = detail::build_report(oracle, selected, data.n(), cfg.criterion);

    ReplicationRecord rec;
    rec.rep_index = rep_index;
    rec.s_hat = selection.chosen;
    rec.sigma_hat_selected = selected.sigma_hat();
    rec.sigma_hat_oracle = oracle.sigma_hat();
    rec.ratio = rec.sigma_hat_oracle / rec.sigma_hat_selected;
    rec.contains_star = report.nested;
    rec.strict_overfit = report.strictly_overfits;
    rec.exact = selection.chosen == cfg.s_star;
    rec.covered_selected = covers(ci_selected, truth);
    rec.covered_oracle = covers(ci_oracle, truth);
    rec.ci_width_selected = ci_selected.width();
    rec.ci_width_oracle = ci_oracle.width();
    rec.condition_holds = report.strictly_overfits && report.condition_holds;
    rec.sigma_sq_oracle = oracle.sigma_hat_sq;
    return rec;
  } catch (const Error& e) {
    throw Error(e.kind(), "replication " + std::to_string(rep_index) + ": " + e.what());
  }
}

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

struct RatioHistogram {
  std::vector<HistogramBin> bins;
  std::size_t below = 0;
  std::size_t above = 0;
};

inline constexpr int kHistogramBins = 30;  // width 0.01 over [1.00, 1.30]

/// Histogram of the sigma ratio over strict-overfit records only.
inline RatioHistogram ratio_histogram(const std::vector<ReplicationRecord>& records) {
  RatioHistogram h;
  h.bins.resize(kHistogramBins);
  for (int i = 0; i < kHistogramBins; ++i) {
    h.bins[static_cast<std::size_t>(i)].lo = (100 + i) / 100.0;
    h.bins[static_cast<std::size_t>(i)].hi = (101 + i) / 100.0;
  }
  for (const auto& r : records) {
    if (!r.strict_overfit) continue;
    if (r.ratio < h.bins.front().lo) {
      ++h.below;
      continue;
    }
    if (r.ratio >= h.bins.back().hi) {
      ++h.above;
      continue;
    }
    auto bin = static_cast<std::size_t>(std::floor((r.ratio - 1.0) * 100.0));
    bin = std::min<std::size_t>(bin, kHistogramBins - 1);
    // floor() can land one bin off near an edge
    if (r.ratio < h.bins[bin].lo && bin > 0) --bin;
    if (r.ratio >= h.bins[bin].hi && bin + 1 < h.bins.size()) ++bin;
    ++h.bins[bin].count;
  }
  return h;
}

struct ExperimentSummary {
  int reps = 0;
  double coverage_selected = 0.0;
  double coverage_oracle = 0.0;
  /// NaN when no replication overfits strictly.
  double mean_ratio_overfit = std::numeric_limits<double>::quiet_NaN();
  double containment_rate = 0.0;
  double exact_rate = 0.0;
  double strict_overfit_rate = 0.0;
  /// Fraction of all replications that overfit strictly and satisfy the condition.
  double condition_rate = 0.0;

  double se_coverage_selected = 0.0;
  double se_coverage_oracle = 0.0;
  double se_containment_rate = 0.0;
  double se_exact_rate = 0.0;
  double se_strict_overfit_rate = 0.0;
  double se_condition_rate = 0.0;
  double se_mean_ratio_overfit = std::numeric_limits<double>::quiet_NaN();

  int strict_overfit_count = 0;
  /// Records with strict overfit and the condition but without under-estimation.
  int theorem_violations = 0;
  double mean_sigma_sq_oracle = 0.0;
  double mean_ci_width_selected = 0.0;
  double mean_ci_width_oracle = 0.0;

  double runtime_seconds = 0.0;
  std::string rng_algorithm = RngStream::kAlgorithm;
  std::uint64_t seed = 0;
  int workers = 0;
};

inline double rate_standard_error(double rate, int reps) {
  return std::sqrt(rate * (1.0 - rate) / reps);
}

/// Single-threaded fold over records ordered by rep_index.
inline ExperimentSummary summarize(const std::vector<ReplicationRecord>& records) {
  ExperimentSummary s;
  s.reps = static_cast<int>(records.size());
  if (records.empty()) return s;
  int cov_sel = 0, cov_orc = 0, contain = 0, exact = 0, strict = 0, cond = 0;
  double ratio_sum = 0.0, ratio_sq = 0.0, var_sum = 0.0, w_sel = 0.0, w_orc = 0.0;
  for (const auto& r : records) {
    cov_sel += r.covered_selected;
    cov_orc += r.covered_oracle;
    contain += r.contains_star;
    exact += r.exact;
    cond += r.condition_holds;
    var_sum += r.sigma_sq_oracle;
    w_sel += r.ci_width_selected;
    w_orc += r.ci_width_oracle;
    if (r.strict_overfit) {
      ++strict;
      ratio_sum += r.ratio;
      ratio_sq += r.ratio * r.ratio;
      if (r.condition_holds && !(r.sigma_hat_selected < r.sigma_hat_oracle)) ++s.theorem_violations;
    }
  }
  const double reps = s.reps;
  s.coverage_selected = cov_sel / reps;
  s.coverage_oracle = cov_orc / reps;
  s.containment_rate = contain / reps;
  s.exact_rate = exact / reps;
  s.strict_overfit_rate = strict / reps;
  s.condition_rate = cond / reps;
  s.se_coverage_selected = rate_standard_error(s.coverage_selected, s.reps);
  s.se_coverage_oracle = rate_standard_error(s.coverage_oracle, s.reps);
  s.se_containment_rate = rate_standard_error(s.containment_rate, s.reps);
  s.se_exact_rate = rate_standard_error(s.exact_rate, s.reps);
  s.se_strict_overfit_rate = rate_standard_error(s.strict_overfit_rate, s.reps);
  s.se_condition_rate = rate_standard_error(s.condition_rate, s.reps);
  s.strict_overfit_count = strict;
  if (strict > 0) {
    s.mean_ratio_overfit = ratio_sum / strict;
    if (strict > 1) {
      const double var = (ratio_sq - strict * s.mean_ratio_overfit * s.mean_ratio_overfit) /
                         (strict - 1);
      s.se_mean_ratio_overfit = std::sqrt(std::max(var, 0.0) / strict);
    }
  }
  s.mean_sigma_sq_oracle = var_sum / reps;
  s.mean_ci_width_selected = w_sel / reps;
  s.mean_ci_width_oracle = w_orc / reps;
  return s;
}

struct ExperimentResult {
  ExperimentSummary summary;
  std::vector<ReplicationRecord> records;
};

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs cfg.reps replications on up to cfg.workers threads. The first failing
/// replication (lowest index) aborts the run.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const int workers = std::min(resolve_workers(cfg.workers), cfg.reps);

  std::vector<ReplicationRecord> records(static_cast<std::size_t>(cfg.reps));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(cfg.reps));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (int i = next++; i < cfg.reps && !failed.load(); i = next++) {
      try {
        records[static_cast<std::size_t>(i)] = run_replication(cfg, i);
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  ExperimentResult result;
  result.summary = summarize(records);
  result.summary.seed = cfg.seed;
  result.summary.workers = workers;
  result.summary.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.records = std::move(records);
  return result;
}

}  // namespace postsel

#endif  // POSTSEL_SIMULATION_HPP
