#ifndef POSTSEL_INFERENCE_HPP
#define POSTSEL_INFERENCE_HPP

#include <cmath>
#include <string>

#include "postsel/distributions.hpp"
#include "postsel/error.hpp"
#include "postsel/linalg.hpp"

namespace postsel {

struct ConfidenceInterval {
  double center = 0.0;
  double half_width = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double alpha = 0.0;
  Subset subset;

  double width() const { return hi - lo; }
};

/// A full-length (p) predictor setting. The fitted model lives on centered
/// data, so a raw point must be shifted by the training column means first.
struct QueryPoint {
  Vector x;
  bool centered = false;

  static QueryPoint from_centered(Vector x) { return QueryPoint{std::move(x), true}; }

  static QueryPoint from_raw(const Vector& raw, const Vector& column_means) {
    if (raw.size() != column_means.size()) {
      throw Error(ErrorKind::LengthMismatch, "query and column means differ in length");
    }
    return QueryPoint{raw - column_means, true};
  }

  Vector restrict_to(const Subset& s) const {
    s.check_within(x.size());
    Vector out(static_cast<Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) out(static_cast<Index>(k)) = x(s.indices()[k]);
    return out;
  }
};

namespace detail {

inline void check_query(const Dataset& data, const SubsetFit& fit, const QueryPoint& q) {
  if (q.x.size() != data.p()) {
    throw Error(ErrorKind::LengthMismatch, "query point has length " + std::to_string(q.x.size()) +
                                               ", expected p = " + std::to_string(data.p()));
  }
  if (!q.centered) {
    throw Error(ErrorKind::InvalidArgument, "query point must be centered by training means");
  }
  if (fit.subset.empty()) {
    throw Error(ErrorKind::DegenerateModel, "no regressors: mean-response interval undefined");
  }
  if (fit.df < 1) throw Error(ErrorKind::InsufficientDf, "fit has no residual degrees of freedom");
}

}  // namespace detail

/// center ± critical · σ̂_S · sqrt(x_Sᵀ (X_SᵀX_S)⁻¹ x_S) for a caller-supplied
/// critical value.
inline ConfidenceInterval interval_with_critical_value(const Dataset& data, const SubsetFit& fit,
                                                       const QueryPoint& q, double critical,
                                                       double alpha) {
  detail::check_query(data, fit, q);
  const Vector x_s = q.restrict_to(fit.subset);
  const double form = quadratic_form(data, fit.subset, x_s);
  ConfidenceInterval ci;
  ci.subset = fit.subset;
  ci.alpha = alpha;
  ci.center = x_s.dot(fit.beta_hat);
  ci.half_width = critical * fit.sigma_hat() * std::sqrt(form);
  ci.lo = ci.center - ci.half_width;
  ci.hi = ci.center + ci.half_width;
  return ci;
}

/// Classical 100(1-alpha)% interval for the mean response at q under the
/// fitted subset, using the t quantile with n - |S| - 1 degrees of freedom.
inline ConfidenceInterval mean_response_ci(const Dataset& data, const SubsetFit& fit,
                                           const QueryPoint& q, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidAlpha, "alpha must lie in (0, 1)");
  }
  detail::check_query(data, fit, q);
  const double critical = student_t_quantile(fit.df, 1.0 - alpha / 2.0);
  return interval_with_critical_value(data, fit, q, critical, alpha);
}

inline double true_mean_response(const QueryPoint& q, const Vector& beta_star) {
  if (q.x.size() != beta_star.size()) {
    throw Error(ErrorKind::LengthMismatch, "query and coefficient vector differ in length");
  }
  return q.x.dot(beta_star);
}

/// Closed interval.
inline bool covers(const ConfidenceInterval& ci, double truth) {
  return ci.lo <= truth && truth <= ci.hi;
}

}  // namespace postsel

#endif  // POSTSEL_INFERENCE_HPP
