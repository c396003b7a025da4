#ifndef POSTSEL_DISTRIBUTIONS_HPP
#define POSTSEL_DISTRIBUTIONS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "postsel/error.hpp"
#include "postsel/linalg.hpp"

namespace postsel {

/// Deterministic random stream identified by (seed, substream).
///
/// The engine is std::mt19937_64 seeded through std::seed_seq with the four
/// 32-bit halves of seed and substream; both algorithms are fixed by the C++
/// standard, so a given pair yields the same sequence on every host.
/// Normal variates come from the Marsaglia polar method written here rather
/// than std::normal_distribution, whose algorithm is implementation-defined.
class RngStream {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/seed_seq(seed,substream)+marsaglia-polar";

  explicit RngStream(std::uint64_t seed, std::uint64_t substream = 0)
      : seed_(seed), substream_(substream), engine_(make_engine(seed, substream)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t substream() const noexcept { return substream_; }

  /// Independent stream for the same seed.
  RngStream substream_of(std::uint64_t id) const { return RngStream(seed_, id); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t substream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(substream),
                      static_cast<std::uint32_t>(substream >> 32)};
    return std::mt19937_64(seq);
  }

  std::uint64_t seed_;
  std::uint64_t substream_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline double std_normal(RngStream& rng) { return rng.normal(); }

/// Stationary AR(1) correlation: Σ_ij = ρ^|i-j|.
struct Ar1Spec {
  int p = 1;
  double rho = 0.0;

  void validate() const {
    if (p < 1) throw Error(ErrorKind::InvalidArgument, "AR(1) dimension must be positive");
    if (!(std::abs(rho) < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "AR(1) correlation must satisfy |rho| < 1");
    }
  }
};

/// One N_p(0, Σ) draw via x_1 = z_1, x_i = ρ x_{i-1} + sqrt(1-ρ²) z_i.
inline Vector sample_ar1_row(RngStream& rng, const Ar1Spec& spec) {
  spec.validate();
  const double innovation = std::sqrt(1.0 - spec.rho * spec.rho);
  Vector x(spec.p);
  x(0) = rng.normal();
  for (int i = 1; i < spec.p; ++i) x(i) = spec.rho * x(i - 1) + innovation * rng.normal();
  return x;
}

namespace detail {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
// Converges quickly for x < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const int max_iter = 1000 + static_cast<int>(20.0 * std::sqrt(std::max(a, b)));
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b). Takes y = 1 - x separately so
/// callers can pass a complement computed without cancellation.
inline double incomplete_beta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log(y) -
                           (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_continued_fraction(b, a, y) / b;
}

inline double incomplete_beta(double a, double b, double x) {
  return incomplete_beta(a, b, x, 1.0 - x);
}

/// P(T > t) for T ~ t_df, t >= 0 assumed by callers wanting full tail precision.
inline double student_t_upper_tail(double t, double df) {
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  const double two_sided = incomplete_beta(0.5 * df, 0.5, x, y);
  return t >= 0.0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided;
}

inline double student_t_cdf(double t, double df) {
  if (df <= 0.0) throw Error(ErrorKind::InvalidDf, "degrees of freedom must be positive");
  return t >= 0.0 ? 1.0 - student_t_upper_tail(t, df) : student_t_upper_tail(-t, df);
}

inline double student_t_pdf(double t, double df) {
  const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                          0.5 * std::log(df * std::numbers::pi);
  return std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(t * t / df));
}

/// q with P(T <= q) = prob for T ~ t_df.
///
/// Solves P(T > q) = min(prob, 1 - prob) for q >= 0 by Newton steps kept
/// inside a shrinking bisection bracket, then restores the sign.
inline double student_t_quantile(long df, double prob) {
  if (df < 1) throw Error(ErrorKind::InvalidDf, "df = " + std::to_string(df) + " < 1");
  if (!(prob > 0.0 && prob < 1.0)) {
    throw Error(ErrorKind::InvalidProb, "prob must lie in (0, 1)");
  }
  if (prob == 0.5) return 0.0;
  const double nu = static_cast<double>(df);
  const bool upper = prob > 0.5;
  const double target = upper ? 1.0 - prob : prob;

  double lo = 0.0;
  double hi = 1.0;
  while (student_t_upper_tail(hi, nu) > target) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return upper ? hi : -hi;
  }

  double t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double excess = student_t_upper_tail(t, nu) - target;
    if (excess == 0.0) break;
    if (excess > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    double next = t + excess / student_t_pdf(t, nu);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - t);
    t = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * t) break;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return upper ? t : -t;
}

}  // namespace postsel

#endif  // POSTSEL_DISTRIBUTIONS_HPP
