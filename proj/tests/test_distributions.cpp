#include <catch2/catch_amalgamated.hpp>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "oracles.hpp"
#include "postsel/distributions.hpp"

using namespace postsel;
using Catch::Approx;

namespace {

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Matrix empirical_covariance(const std::vector<Vector>& rows) {
  const Index p = rows.front().size();
  Matrix cov = Matrix::Zero(p, p);
  for (const auto& r : rows) cov += r * r.transpose();
  return cov / static_cast<double>(rows.size());
}

}  // namespace

TEST_CASE("std_normal moments", "[distributions]") {
  RngStream rng(2024);
  constexpr int draws = 1'000'000;
  double sum = 0, sum_sq = 0;
  int below = 0;
  for (int i = 0; i < draws; ++i) {
    const double z = std_normal(rng);
    sum += z;
    sum_sq += z * z;
    below += z < 1.96;
  }
  const double mean = sum / draws;
  const double var = sum_sq / draws - mean * mean;
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(var - 1.0) < 0.01);
  CHECK(std::abs(static_cast<double>(below) / draws - oracle::normal_cdf(1.96)) < 0.002);
}

TEST_CASE("RngStream is deterministic per (seed, substream)", "[distributions]") {
  RngStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 1000; ++i) {
    const double va = a.normal();
    const double vb = b.normal();
    REQUIRE(std::bit_cast<std::uint64_t>(va) == std::bit_cast<std::uint64_t>(vb));
    differs_c |= va != c.normal();
    differs_d |= va != d.normal();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(a.substream_of(3).next_u64() == RngStream(7, 3).next_u64());
}

TEST_CASE("uniform stays in the open unit interval", "[distributions]") {
  RngStream rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("AR(1) rows with rho = 0 are uncorrelated", "[distributions]") {
  RngStream rng(5);
  constexpr int draws = 100000;
  std::vector<double> c0(draws), c1(draws), c3(draws);
  for (int i = 0; i < draws; ++i) {
    const Vector x = sample_ar1_row(rng, Ar1Spec{4, 0.0});
    c0[i] = x(0);
    c1[i] = x(1);
    c3[i] = x(3);
  }
  CHECK(std::abs(correlation(c0, c1)) < 0.02);
  CHECK(std::abs(correlation(c0, c3)) < 0.02);
  CHECK(std::abs(correlation(c1, c3)) < 0.02);
}

TEST_CASE("AR(1) rows with rho = 0.5 have geometric correlation", "[distributions]") {
  RngStream rng(6);
  constexpr int draws = 100000;
  std::vector<double> c2(draws), c3(draws), c4(draws);
  for (int i = 0; i < draws; ++i) {
    const Vector x = sample_ar1_row(rng, Ar1Spec{10, 0.5});
    c2[i] = x(2);
    c3[i] = x(3);
    c4[i] = x(4);
  }
  CHECK(std::abs(correlation(c2, c3) - 0.5) < 0.02);
  CHECK(std::abs(correlation(c2, c4) - 0.25) < 0.02);
}

TEST_CASE("AR(1) recursion matches the Cholesky construction", "[distributions]") {
  constexpr int draws = 100000;
  constexpr int p = 10;
  RngStream rec_rng(31), chol_rng(32);
  std::vector<Vector> rec, chol;
  rec.reserve(draws);
  chol.reserve(draws);
  for (int i = 0; i < draws; ++i) {
    rec.push_back(sample_ar1_row(rec_rng, Ar1Spec{p, 0.5}));
    chol.push_back(oracle::cholesky_ar1_row(chol_rng, p, 0.5));
  }
  const Matrix a = empirical_covariance(rec);
  const Matrix b = empirical_covariance(chol);
  CHECK((a - b).cwiseAbs().maxCoeff() < 0.02);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      CHECK(std::abs(a(i, j) - std::pow(0.5, std::abs(i - j))) < 0.03);
    }
  }
}

TEST_CASE("Ar1Spec rejects non-stationary correlation", "[distributions]") {
  RngStream rng(1);
  CHECK_THROWS_AS(sample_ar1_row(rng, Ar1Spec{3, 1.0}), Error);
  CHECK_THROWS_AS(sample_ar1_row(rng, Ar1Spec{0, 0.1}), Error);
}

TEST_CASE("incomplete beta agrees with Boost", "[distributions]") {
  for (double a : {0.5, 1.0, 2.5, 23.0, 50.0}) {
    for (double b : {0.5, 1.0, 3.0}) {
      for (double x : {1e-6, 0.01, 0.2, 0.5, 0.77, 0.99, 1 - 1e-9}) {
        CHECK(incomplete_beta(a, b, x) == Approx(boost::math::ibeta(a, b, x)).epsilon(1e-12).margin(1e-300));
      }
    }
  }
  CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("student_t_cdf agrees with Boost", "[distributions]") {
  for (double df : {1.0, 2.0, 5.0, 46.0, 100.0}) {
    boost::math::students_t dist(df);
    for (double t : {-30.0, -2.0, -0.3, 0.0, 0.7, 1.96, 4.0, 50.0}) {
      CHECK(student_t_cdf(t, df) == Approx(boost::math::cdf(dist, t)).epsilon(1e-11).margin(1e-15));
    }
  }
}

TEST_CASE("student_t_quantile closed forms", "[distributions]") {
  CHECK(student_t_quantile(1, 0.5) == 0.0);
  CHECK(student_t_quantile(1, 0.975) == Approx(oracle::cauchy_quantile(0.975)).margin(1e-6));
  CHECK(student_t_quantile(1, 0.975) == Approx(12.7062047).margin(1e-6));
  CHECK(student_t_quantile(2, 0.975) == Approx(oracle::t2_quantile(0.975)).margin(1e-6));
  CHECK(student_t_quantile(2, 0.975) == Approx(4.3026527).margin(1e-6));
  for (double p : {0.01, 0.1, 0.3, 0.6, 0.9, 0.999}) {
    CHECK(student_t_quantile(1, p) == Approx(oracle::cauchy_quantile(p)).epsilon(1e-10));
    CHECK(student_t_quantile(2, p) == Approx(oracle::t2_quantile(p)).epsilon(1e-10));
  }
}

TEST_CASE("student_t_quantile invariants", "[distributions][property]") {
  const std::vector<long> dfs = {1, 2, 5, 46, 100};
  for (long df : dfs) {
    double previous = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 199; ++k) {
      const double p = 0.005 * k;
      const double q = student_t_quantile(df, p);
      INFO("df = " << df << ", p = " << p);
      CHECK(std::abs(student_t_cdf(q, static_cast<double>(df)) - p) <= 1e-10);
      CHECK(q > previous);
      CHECK(std::abs(q + student_t_quantile(df, 1.0 - p)) <= 1e-12 * std::max(1.0, std::abs(q)));
      previous = q;
    }
  }
  CHECK(std::abs(student_t_quantile(1'000'000, 0.975) - 1.959964) < 1e-3);
}

TEST_CASE("student_t_quantile rejects bad arguments", "[distributions]") {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  CHECK(kind_of([] { student_t_quantile(0, 0.5); }) == ErrorKind::InvalidDf);
  CHECK(kind_of([] { student_t_quantile(3, 0.0); }) == ErrorKind::InvalidProb);
  CHECK(kind_of([] { student_t_quantile(3, 1.0); }) == ErrorKind::InvalidProb);
  CHECK(kind_of([] { student_t_quantile(3, std::nan("")); }) == ErrorKind::InvalidProb);
}
