#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "postsel/report.hpp"

using namespace postsel;
using Catch::Approx;

TEST_CASE("records.csv schema is pinned", "[report]") {
  ReplicationRecord r;
  r.rep_index = 7;
  r.s_hat = Subset({0, 1, 2, 5});
  r.sigma_hat_selected = 0.5;
  r.sigma_hat_oracle = 0.625;
  r.ratio = 1.25;
  r.contains_star = true;
  r.strict_overfit = true;
  r.covered_oracle = true;
  r.ci_width_selected = 0.1;
  r.ci_width_oracle = 0.2;
  r.condition_holds = true;
  std::ostringstream out;
  write_records_csv(out, {r});
  CHECK(out.str() ==
        "rep_index,sigma_hat_selected,sigma_hat_oracle,ratio,size_hat,contains_star,"
        "strict_overfit,exact,covered_selected,covered_oracle,ci_width_selected,"
        "ci_width_oracle,condition_holds\n"
        "7,0.5,0.625,1.25,4,1,1,0,0,1,0.1,0.2,1\n");
}

TEST_CASE("ratio_hist.csv schema is pinned", "[report]") {
  RatioHistogram h;
  h.bins = {{1.0, 1.01, 3}, {1.01, 1.02, 0}};
  std::ostringstream out;
  write_histogram_csv(out, h);
  CHECK(out.str() == "bin_lo,bin_hi,count\n1,1.01,3\n1.01,1.02,0\n");
}

TEST_CASE("format_double round-trips", "[report][property]") {
  RngStream rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.next_u64() % 40) - 20);
    const std::string s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(back == v);
  }
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_short(1.0 / 46.0) == "0.0217391");
}

TEST_CASE("summary.json is a flat object with the headline fields", "[report]") {
  ExperimentSummary s;
  s.reps = 10;
  s.coverage_selected = 0.8;
  const nlohmann::json j = summary_to_json(s, RatioHistogram{});
  for (const char* key : {"reps", "coverage_selected", "coverage_oracle", "mean_ratio_overfit",
                          "containment_rate", "exact_rate", "strict_overfit_rate",
                          "condition_rate", "se_coverage_selected", "rng_algorithm", "seed",
                          "runtime_seconds"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["mean_ratio_overfit"].is_null());
  for (const auto& [key, value] : j.items()) CHECK_FALSE(value.is_object());
}

TEST_CASE("config text echoes every field", "[report]") {
  ExperimentConfig cfg;
  cfg.criterion = Criterion::custom(3.5);
  const std::string text = config_to_text(cfg);
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("beta_star = \"1,2,3,0,0,0,0,0,0,0\""));
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("s_star = \"1,2,3\""));
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("criterion = \"custom\""));
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("cn = 3.5"));
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("seed = 2018"));
  const Vector parsed = parse_doubles("1,2.5,-3", "beta_star");
  CHECK(parsed.size() == 3);
  CHECK(parsed(1) == 2.5);
  CHECK_THROWS_AS(parse_doubles("1,a", "beta_star"), Error);
}

TEST_CASE("dataset CSV reader", "[report]") {
  SECTION("y may sit in any column") {
    std::istringstream in("a, y ,b\n1,2,3\n4,5,6\n7,8,10\r\n");
    const TableData t = read_dataset_csv(in);
    CHECK(t.predictor_names == std::vector<std::string>{"a", "b"});
    CHECK(t.X.rows() == 3);
    CHECK(t.X(2, 1) == 10.0);
    CHECK(t.y(1) == 5.0);
  }
  auto parse_error = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_dataset_csv(in);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::ParseError;
    }
    return false;
  };
  CHECK(parse_error(""));
  CHECK(parse_error("a,b\n1,2\n3,4\n5,6\n"));
  CHECK(parse_error("y,a\n1,2\n3\n4,5\n"));
  CHECK(parse_error("y,a\n1,2\n3,x\n4,5\n"));
  CHECK(parse_error("y,a,b\n1,2,3\n"));
  CHECK(parse_error("y,y\n1,2\n3,4\n"));
}

TEST_CASE("dataset CSV writer feeds the reader", "[report]") {
  Matrix X(3, 2);
  X << 0.1, 2, 0.3, 4, 0.5, 6;
  Vector y(3);
  y << 1, 2, 3;
  std::stringstream buf;
  write_dataset_csv(buf, X, y);
  const TableData t = read_dataset_csv(buf);
  CHECK(t.X == X);
  CHECK(t.y == y);
  CHECK(t.predictor_names == std::vector<std::string>{"x1", "x2"});
}

TEST_CASE("write_file_atomic replaces content", "[report]") {
  const auto path = std::filesystem::temp_directory_path() / "postsel_atomic_test.txt";
  write_file_atomic(path, "one");
  write_file_atomic(path, "two");
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  CHECK(s == "two");
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
}
