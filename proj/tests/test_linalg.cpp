#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "postsel/linalg.hpp"

using namespace postsel;
using Catch::Approx;

namespace {

Dataset hand_dataset() {
  Matrix X(3, 1);
  X << 1, 0, -1;
  Vector y(3);
  y << 1, 1, -2;
  return Dataset(X, y);
}

}  // namespace

TEST_CASE("ols_fit solves the one-column hand example", "[linalg]") {
  const SubsetFit fit = ols_fit(hand_dataset(), Subset({0}));
  // (x·y)/(x·x) = 3/2, residual (-0.5, 1, -0.5)
  REQUIRE(fit.beta_hat.size() == 1);
  CHECK(fit.beta_hat(0) == Approx(1.5).epsilon(1e-14));
  CHECK(fit.sse == Approx(1.5).epsilon(1e-14));
  CHECK(fit.df == 1);
  CHECK(fit.sigma_hat_sq == Approx(1.5).epsilon(1e-14));
}

TEST_CASE("ols_fit on the empty subset returns the total sum of squares", "[linalg]") {
  const Dataset data = hand_dataset();
  const SubsetFit fit = ols_fit(data, Subset{});
  CHECK(fit.beta_hat.size() == 0);
  CHECK(fit.sse == data.y().squaredNorm());
  CHECK(fit.df == 2);
}

TEST_CASE("ols_fit recovers a response in the column span exactly", "[linalg]") {
  Matrix X(3, 1);
  X << 1, 0, -1;
  Vector y(3);
  y << -1, 0, 1;
  const SubsetFit fit = ols_fit(Dataset(X, y), Subset({0}));
  CHECK(fit.beta_hat(0) == Approx(-1.0).epsilon(1e-14));
  CHECK(fit.sse < 1e-28);
}

TEST_CASE("ols_fit error paths", "[linalg]") {
  SECTION("collinear columns") {
    Matrix X(5, 2);
    X.col(0) << -2, -1, 0, 1, 2;
    X.col(1) = 3.0 * X.col(0);
    Vector y(5);
    y << 1, -1, 0, 2, -2;
    const Dataset data(X, y);
    try {
      ols_fit(data, Subset({0, 1}));
      FAIL("expected RankDeficient");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::RankDeficient);
    }
    CHECK_NOTHROW(ols_fit(data, Subset({1})));
  }
  SECTION("no residual degrees of freedom") {
    Matrix X(3, 2);
    X << 1, 1, 0, -2, -1, 1;
    Vector y(3);
    y << 1, 1, -2;
    try {
      ols_fit(Dataset(X, y), Subset({0, 1}));
      FAIL("expected InsufficientDf");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InsufficientDf);
    }
  }
  SECTION("subset outside the design") {
    CHECK_THROWS_AS(ols_fit(hand_dataset(), Subset({1})), Error);
  }
}

TEST_CASE("Dataset enforces the centering and shape contract", "[linalg]") {
  Matrix X(3, 1);
  X << 1, 0, -1;
  Vector y(3);
  y << 1, 1, 1;
  CHECK_THROWS_AS(Dataset(X, y), Error);
  Matrix wide(2, 2);
  wide << 1, -1, -1, 1;
  Vector y2(2);
  y2 << 1, -1;
  CHECK_THROWS_AS(Dataset(wide, y2), Error);
  Vector short_y(2);
  short_y << 1, -1;
  CHECK_THROWS_AS(Dataset(X, short_y), Error);
}

TEST_CASE("center records means and zeroes constant columns exactly", "[linalg]") {
  Matrix X(4, 2);
  X << 0.1, 1, 0.1, 2, 0.1, 3, 0.1, 10;
  Vector y(4);
  y << 5, 6, 7, 8;
  const CenteredData c = center(X, y);
  CHECK(c.column_means(0) == Approx(0.1));
  CHECK(c.column_means(1) == Approx(4.0));
  CHECK(c.y_mean == Approx(6.5));
  CHECK(c.data.X().col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(c.data.y().mean()) < 1e-15);
}

TEST_CASE("Subset parsing, ordering and containment", "[linalg]") {
  const Subset s = Subset::parse("{3, 1,2}");
  CHECK(s.indices() == std::vector<int>{0, 1, 2});
  CHECK(s.to_string() == "{1,2,3}");
  CHECK(s.one_based() == std::vector<int>{1, 2, 3});
  CHECK(s.mask() == 0b111u);
  CHECK(Subset::from_mask(0b101) == Subset({0, 2}));
  CHECK(Subset::parse("").empty());
  CHECK(Subset({0}).is_strict_subset_of(s));
  CHECK_FALSE(s.is_strict_subset_of(s));
  CHECK(s.is_subset_of(s));
  CHECK_FALSE(Subset({4}).is_subset_of(s));
  CHECK_THROWS_AS(Subset({1, 1}), Error);
  CHECK_THROWS_AS(Subset::parse("0,1"), Error);
  CHECK_THROWS_AS(Subset::parse("1,x"), Error);
}

TEST_CASE("sse_decomposition on the hand example", "[linalg]") {
  const SseDecomposition d = sse_decomposition(hand_dataset(), Subset{}, Subset({0}));
  CHECK(d.sse_small == Approx(6.0));
  CHECK(d.sse_big == Approx(1.5));
  CHECK(d.r == Approx(0.75));
  // ((6 - 1.5) / 1) / (1.5 / (3 - 1))
  CHECK(d.f_stat == Approx(6.0));
}

TEST_CASE("sse_decomposition with a useless extra column", "[linalg]") {
  // x2 is centered and orthogonal to the residual of y on x1.
  Matrix X(4, 2);
  X.col(0) << 1, 0, -1, 0;
  X.col(1) << 1, 1, 1, -3;
  Vector y(4);
  y << 1, 1, -2, 0;
  const SseDecomposition d = sse_decomposition(Dataset(X, y), Subset({0}), Subset({0, 1}));
  CHECK(d.r == Approx(0.0).margin(1e-12));
  CHECK(d.f_stat == Approx(0.0).margin(1e-10));
}

TEST_CASE("sse_decomposition error paths", "[linalg]") {
  const Dataset data = hand_dataset();
  try {
    sse_decomposition(data, Subset({0}), Subset({0}));
    FAIL("expected NotNested");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotNested);
  }
  Matrix X(4, 2);
  X.col(0) << 1, 0, -1, 0;
  X.col(1) << 1, 1, 1, -3;
  Vector y = X.col(0);
  try {
    sse_decomposition(Dataset(X, y * 0.0), Subset{}, Subset({0}));
    FAIL("expected ZeroSse");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroSse);
  }
}

TEST_CASE("least-squares properties on random instances", "[linalg][property]") {
  RngStream rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = oracle::uniform_int(rng, 6, 12);
    const int p = oracle::uniform_int(rng, 1, std::min(5, n - 2));
    Vector beta(p);
    for (int j = 0; j < p; ++j) beta(j) = rng.normal();
    const CenteredData c = oracle::random_dataset(rng, n, p, beta);
    const Dataset& data = c.data;
    const SubsetLeastSquares reduced(data);

    const auto mask_big = static_cast<std::uint64_t>(rng.next_u64() % (1u << p));
    const Subset big = Subset::from_mask(mask_big);
    const Subset small = Subset::from_mask(mask_big & rng.next_u64());
    if (static_cast<long>(big.size()) > n - 2) continue;

    const SubsetFit fit_big = ols_fit(data, big);
    const SubsetFit fit_small = ols_fit(data, small);
    const auto ne = oracle::normal_equations(data.X(), data.y(), big.indices());

    // Normal-equations oracle.
    for (Index k = 0; k < fit_big.beta_hat.size(); ++k) {
      CHECK(fit_big.beta_hat(k) == Approx(ne.beta(k)).margin(1e-8));
    }
    CHECK(fit_big.sse == Approx(ne.sse).epsilon(1e-9).margin(1e-12));

    // Residual orthogonality.
    if (!big.empty()) {
      const Matrix xs = data.columns(big);
      const Vector gradient = xs.transpose() * (data.y() - xs * fit_big.beta_hat);
      CHECK(gradient.cwiseAbs().maxCoeff() < 1e-8);
    }

    // Monotonicity and the decomposition identity.
    CHECK(fit_small.sse >= fit_big.sse * (1.0 - 1e-10));
    CHECK(fit_big.sse <= data.y().squaredNorm() * (1.0 + 1e-12));
    CHECK(fit_big.sigma_hat_sq * fit_big.df == Approx(fit_big.sse).epsilon(1e-12));
    if (small.is_strict_subset_of(big)) {
      const SseDecomposition d = sse_decomposition(data, small, big);
      CHECK(d.sse_big == Approx((1.0 - d.r) * d.sse_small).epsilon(1e-12).margin(1e-300));
      CHECK(d.r >= 0.0);
      CHECK(d.r <= 1.0);
    }

    // The reduced triangular problem gives the same fit.
    const SubsetFit via_reduced = reduced.fit(big);
    CHECK(via_reduced.sse == Approx(fit_big.sse).epsilon(1e-9).margin(1e-12));
    for (Index k = 0; k < via_reduced.beta_hat.size(); ++k) {
      CHECK(via_reduced.beta_hat(k) == Approx(fit_big.beta_hat(k)).margin(1e-9));
    }
  }
}

TEST_CASE("quadratic_form matches the explicit inverse", "[linalg][property]") {
  RngStream rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = oracle::uniform_int(rng, 8, 20);
    const int p = oracle::uniform_int(rng, 1, 5);
    const CenteredData c = oracle::random_dataset(rng, n, p, Vector::Zero(p));
    const Subset s = Subset::from_mask(1 + rng.next_u64() % ((1u << p) - 1));
    Vector x(static_cast<Index>(s.size()));
    for (Index k = 0; k < x.size(); ++k) x(k) = rng.normal();
    const double expected = oracle::explicit_quadratic_form(c.data.X(), s.indices(), x);
    CHECK(quadratic_form(c.data, s, x) == Approx(expected).epsilon(1e-8));
  }
}
