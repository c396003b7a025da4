#ifndef POSTSEL_LINALG_HPP
#define POSTSEL_LINALG_HPP

// Subset least squares on centered data.
//
// Every fit goes through a column-pivoted Householder QR of the selected
// columns. A subset is rank deficient when some pivot of R falls below
// kRankThreshold times the largest pivot. Degrees of freedom follow the
// n - |S| - 1 convention: one extra degree is charged for the intercept that
// centering absorbed.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "postsel/error.hpp"

namespace postsel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kRankThreshold = 1e-10;
inline constexpr double kCenteringTolerance = 1e-10;

/// A sorted set of predictor indices. Stored 0-based; every textual form
/// (parse, to_string, one_based) is 1-based.
class Subset {
 public:
  Subset() = default;

  /// Takes 0-based indices in any order; rejects duplicates and negatives.
  explicit Subset(std::vector<int> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
      throw Error(ErrorKind::InvalidArgument, "subset has duplicate indices");
    }
    if (!indices_.empty() && indices_.front() < 0) {
      throw Error(ErrorKind::InvalidArgument, "subset index out of range");
    }
  }

  static Subset from_one_based(std::span<const int> one_based) {
    std::vector<int> zero_based;
    zero_based.reserve(one_based.size());
    for (int i : one_based) {
      if (i < 1) throw Error(ErrorKind::InvalidArgument, "subset indices are 1-based");
      zero_based.push_back(i - 1);
    }
    return Subset(std::move(zero_based));
  }

  static Subset from_mask(std::uint64_t mask) {
    std::vector<int> indices;
    indices.reserve(static_cast<std::size_t>(std::popcount(mask)));
    for (int i = 0; mask != 0; ++i, mask >>= 1) {
      if (mask & 1u) indices.push_back(i);
    }
    Subset s;
    s.indices_ = std::move(indices);
    return s;
  }

  static Subset full(int p) {
    std::vector<int> indices(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) indices[static_cast<std::size_t>(i)] = i;
    return Subset(std::move(indices));
  }

  /// Parses "1,2,3" (1-based). Braces, spaces and the empty string are accepted.
  static Subset parse(std::string_view text) {
    std::vector<int> one_based;
    std::size_t pos = 0;
    while (pos < text.size()) {
      char c = text[pos];
      if (c == ',' || c == ' ' || c == '{' || c == '}' || c == '\t') {
        ++pos;
        continue;
      }
      int value = 0;
      auto [end, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
      if (ec != std::errc()) {
        throw Error(ErrorKind::ParseError, "cannot parse subset '" + std::string(text) + "'");
      }
      one_based.push_back(value);
      pos = static_cast<std::size_t>(end - text.data());
    }
    return from_one_based(one_based);
  }

  const std::vector<int>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }

  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (int i : indices_) {
      if (i >= 64) throw Error(ErrorKind::InvalidArgument, "mask needs indices below 64");
      m |= std::uint64_t{1} << i;
    }
    return m;
  }

  bool contains(int index) const {
    return std::binary_search(indices_.begin(), indices_.end(), index);
  }

  /// this ⊆ other
  bool is_subset_of(const Subset& other) const {
    return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                         indices_.end());
  }

  /// this ⊂ other
  bool is_strict_subset_of(const Subset& other) const {
    return size() < other.size() && is_subset_of(other);
  }

  void check_within(Index p) const {
    if (!indices_.empty() && indices_.back() >= p) {
      throw Error(ErrorKind::InvalidArgument,
                  "subset " + to_string() + " exceeds p = " + std::to_string(p));
    }
  }

  std::vector<int> one_based() const {
    std::vector<int> out(indices_);
    for (int& i : out) ++i;
    return out;
  }

  std::string to_string() const {
    std::string out = "{";
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      if (k != 0) out += ',';
      out += std::to_string(indices_[k] + 1);
    }
    out += '}';
    return out;
  }

  friend bool operator==(const Subset&, const Subset&) = default;
  friend auto operator<=>(const Subset&, const Subset&) = default;

 private:
  std::vector<int> indices_;
};

/// Centered response and design. Immutable after construction.
class Dataset {
 public:
  Dataset(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y)) {
    if (X_.rows() != y_.size()) {
      throw Error(ErrorKind::LengthMismatch, "X has " + std::to_string(X_.rows()) +
                                                 " rows but y has length " +
                                                 std::to_string(y_.size()));
    }
    if (X_.cols() < 1) throw Error(ErrorKind::InvalidArgument, "design needs p >= 1");
    if (X_.cols() >= X_.rows()) {
      throw Error(ErrorKind::InvalidArgument, "need p < n, got n = " + std::to_string(n()) +
                                                  ", p = " + std::to_string(p()));
    }
    if (std::abs(y_.mean()) > kCenteringTolerance) {
      throw Error(ErrorKind::InvalidArgument, "response is not centered");
    }
    for (Index j = 0; j < X_.cols(); ++j) {
      if (std::abs(X_.col(j).mean()) > kCenteringTolerance) {
        throw Error(ErrorKind::InvalidArgument,
                    "design column " + std::to_string(j + 1) + " is not centered");
      }
    }
  }

  const Matrix& X() const noexcept { return X_; }
  const Vector& y() const noexcept { return y_; }
  Index n() const noexcept { return X_.rows(); }
  Index p() const noexcept { return X_.cols(); }

  Matrix columns(const Subset& s) const {
    s.check_within(p());
    Matrix out(n(), static_cast<Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) out.col(static_cast<Index>(k)) = X_.col(s.indices()[k]);
    return out;
  }

 private:
  Matrix X_;
  Vector y_;
};

namespace detail {

// Two passes so that constant columns become exact zeros.
inline double center_in_place(Eigen::Ref<Vector> v) {
  double mean = v.mean();
  v.array() -= mean;
  double residual = v.mean();
  v.array() -= residual;
  return mean + residual;
}

}  // namespace detail

struct CenteredData {
  Dataset data;
  Vector column_means;
  double y_mean = 0.0;
};

/// Centers raw data and records the means that were removed.
inline CenteredData center(Matrix X, Vector y) {
  Vector means(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    Vector col = X.col(j);
    means(j) = detail::center_in_place(col);
    X.col(j) = col;
  }
  double y_mean = detail::center_in_place(y);
  return CenteredData{Dataset(std::move(X), std::move(y)), std::move(means), y_mean};
}

struct SubsetFit {
  Subset subset;
  Vector beta_hat;
  double sse = 0.0;
  int df = 0;
  double sigma_hat_sq = 0.0;

  double sigma_hat() const { return std::sqrt(sigma_hat_sq); }
};

namespace detail {

using Qr = Eigen::ColPivHouseholderQR<Matrix>;

inline int residual_df(Index n, std::size_t size) {
  long df = static_cast<long>(n) - static_cast<long>(size) - 1;
  if (df < 1) {
    throw Error(ErrorKind::InsufficientDf,
                "n - |S| - 1 = " + std::to_string(df) + " for |S| = " + std::to_string(size));
  }
  return static_cast<int>(df);
}

inline void factorize(Qr& qr, const Matrix& a, const Subset& s) {
  qr.setThreshold(kRankThreshold);
  qr.compute(a);
  if (qr.rank() < a.cols()) {
    throw Error(ErrorKind::RankDeficient, "columns " + s.to_string() + " are collinear");
  }
}

inline SubsetFit solve_fit(const Matrix& a, const Vector& b, const Subset& s, int df) {
  SubsetFit fit;
  fit.subset = s;
  fit.df = df;
  if (s.empty()) {
    fit.beta_hat = Vector(0);
    fit.sse = b.squaredNorm();
  } else {
    Qr qr;
    factorize(qr, a, s);
    fit.beta_hat = qr.solve(b);
    fit.sse = (b - a * fit.beta_hat).squaredNorm();
  }
  fit.sigma_hat_sq = fit.sse / df;
  return fit;
}

}  // namespace detail

/// Least-squares fit of y on the columns in `s`.
inline SubsetFit ols_fit(const Dataset& data, const Subset& s) {
  s.check_within(data.p());
  int df = detail::residual_df(data.n(), s.size());
  return detail::solve_fit(data.columns(s), data.y(), s, df);
}

/// x_Sᵀ (X_Sᵀ X_S)⁻¹ x_S through the triangular factor of X_S.
/// With X_S P = Q R the form equals ‖R⁻ᵀ Pᵀ x_S‖².
inline double quadratic_form(const Dataset& data, const Subset& s, const Vector& x_s) {
  if (static_cast<std::size_t>(x_s.size()) != s.size()) {
    throw Error(ErrorKind::LengthMismatch, "query has wrong length for subset " + s.to_string());
  }
  if (s.empty()) return 0.0;
  detail::Qr qr;
  detail::factorize(qr, data.columns(s), s);
  const Index k = static_cast<Index>(s.size());
  Vector permuted = qr.colsPermutation().transpose() * x_s;
  Vector w = qr.matrixQR()
                 .topLeftCorner(k, k)
                 .triangularView<Eigen::Upper>()
                 .transpose()
                 .solve(permuted);
  return w.squaredNorm();
}

struct SseDecomposition {
  double sse_small = 0.0;
  double sse_big = 0.0;
  /// 1 - sse_big / sse_small, so that sse_big = (1 - r) sse_small.
  double r = 0.0;
  /// Nested-model F statistic with (|big|-|small|, n-|big|) degrees of freedom.
  double f_stat = 0.0;
};

namespace detail {

inline SseDecomposition decompose(double sse_small, double sse_big, Index n, std::size_t k_small,
                                  std::size_t k_big) {
  if (sse_small <= 0.0) {
    throw Error(ErrorKind::ZeroSse, "SSE of the smaller model is zero");
  }
  SseDecomposition out;
  out.sse_small = sse_small;
  out.sse_big = sse_big;
  // Rounding can push the larger model's SSE a hair above the smaller one.
  out.r = std::clamp(1.0 - sse_big / sse_small, 0.0, 1.0);
  const double gain = std::max(sse_small - sse_big, 0.0);
  if (sse_big <= 0.0) {
    out.f_stat = std::numeric_limits<double>::infinity();
  } else {
    const double extra = static_cast<double>(k_big - k_small);
    const double resid = static_cast<double>(n) - static_cast<double>(k_big);
    out.f_stat = (gain / extra) / (sse_big / resid);
  }
  return out;
}

}  // namespace detail

/// SSE of two strictly nested models and the relative reduction between them.
inline SseDecomposition sse_decomposition(const Dataset& data, const Subset& small,
                                          const Subset& big) {
  if (!small.is_strict_subset_of(big)) {
    throw Error(ErrorKind::NotNested, small.to_string() + " is not a strict subset of " +
                                          big.to_string());
  }
  const SubsetFit fit_small = ols_fit(data, small);
  const SubsetFit fit_big = ols_fit(data, big);
  return detail::decompose(fit_small.sse, fit_big.sse, data.n(), small.size(), big.size());
}

/// Fits many subsets of one dataset cheaply.
///
/// [X y] is reduced once to its (p+1)×(p+1) triangular factor R̃. Because the
/// orthogonal factor preserves norms, ‖y - X_S b‖ = ‖r̃_y - R̃_S b‖ for every
/// subset, so each fit afterwards costs a QR of a (p+1)×|S| matrix no matter
/// how large n is. Pivots of R̃_S equal those of X_S up to sign.
class SubsetLeastSquares {
 public:
  explicit SubsetLeastSquares(const Dataset& data)
      : n_(data.n()), p_(data.p()), yty_(data.y().squaredNorm()) {
    Matrix augmented(n_, p_ + 1);
    augmented.leftCols(p_) = data.X();
    augmented.col(p_) = data.y();
    Eigen::HouseholderQR<Matrix> qr(augmented);
    Matrix r = qr.matrixQR().topRows(p_ + 1).triangularView<Eigen::Upper>();
    reduced_x_ = r.leftCols(p_);
    reduced_y_ = r.col(p_);
  }

  Index n() const noexcept { return n_; }
  Index p() const noexcept { return p_; }

  SubsetFit fit(const Subset& s) const {
    s.check_within(p_);
    int df = detail::residual_df(n_, s.size());
    if (s.empty()) {
      SubsetFit out;
      out.subset = s;
      out.beta_hat = Vector(0);
      out.sse = yty_;
      out.df = df;
      out.sigma_hat_sq = yty_ / df;
      return out;
    }
    Matrix a(p_ + 1, static_cast<Index>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) a.col(static_cast<Index>(k)) = reduced_x_.col(s.indices()[k]);
    return detail::solve_fit(a, reduced_y_, s, df);
  }

  double sse(const Subset& s) const { return fit(s).sse; }

 private:
  Index n_;
  Index p_;
  double yty_;
  Matrix reduced_x_;
  Vector reduced_y_;
};

}  // namespace postsel

#endif  // POSTSEL_LINALG_HPP
