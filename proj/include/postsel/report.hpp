#ifndef POSTSEL_REPORT_HPP
#define POSTSEL_REPORT_HPP

// File formats: records.csv, ratio_hist.csv, summary.json, manifest.json,
// the flat key = value run config, and the dataset CSV read by `select`.
// Numbers in files use the shortest representation that round-trips.

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "postsel/error.hpp"
#include "postsel/linalg.hpp"
#include "postsel/simulation.hpp"

namespace postsel {

inline constexpr const char* kToolVersion = "1.0.0";

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

/// Console form: 6 significant digits.
inline std::string format_short(double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.6g", v);
  return buf.data();
}

inline constexpr std::array<const char*, 13> kRecordsColumns = {
    "rep_index",        "sigma_hat_selected", "sigma_hat_oracle", "ratio",
    "size_hat",         "contains_star",      "strict_overfit",   "exact",
    "covered_selected", "covered_oracle",     "ci_width_selected", "ci_width_oracle",
    "condition_holds"};

inline void write_records_csv(std::ostream& out, const std::vector<ReplicationRecord>& records) {
  for (std::size_t i = 0; i < kRecordsColumns.size(); ++i) {
    out << (i ? "," : "") << kRecordsColumns[i];
  }
  out << '\n';
  for (const auto& r : records) {
    out << r.rep_index << ',' << format_double(r.sigma_hat_selected) << ','
        << format_double(r.sigma_hat_oracle) << ',' << format_double(r.ratio) << ','
        << r.s_hat.size() << ',' << int{r.contains_star} << ',' << int{r.strict_overfit} << ','
        << int{r.exact} << ',' << int{r.covered_selected} << ',' << int{r.covered_oracle} << ','
        << format_double(r.ci_width_selected) << ',' << format_double(r.ci_width_oracle) << ','
        << int{r.condition_holds} << '\n';
  }
}

inline void write_histogram_csv(std::ostream& out, const RatioHistogram& hist) {
  out << "bin_lo,bin_hi,count\n";
  for (const auto& b : hist.bins) {
    out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << '\n';
  }
}

namespace detail {

inline nlohmann::json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace detail

inline nlohmann::json summary_to_json(const ExperimentSummary& s, const RatioHistogram& hist) {
  using detail::number_or_null;
  nlohmann::ordered_json j;
  j["reps"] = s.reps;
  j["coverage_selected"] = s.coverage_selected;
  j["coverage_oracle"] = s.coverage_oracle;
  j["mean_ratio_overfit"] = number_or_null(s.mean_ratio_overfit);
  j["containment_rate"] = s.containment_rate;
  j["exact_rate"] = s.exact_rate;
  j["strict_overfit_rate"] = s.strict_overfit_rate;
  j["condition_rate"] = s.condition_rate;
  j["se_coverage_selected"] = s.se_coverage_selected;
  j["se_coverage_oracle"] = s.se_coverage_oracle;
  j["se_mean_ratio_overfit"] = number_or_null(s.se_mean_ratio_overfit);
  j["se_containment_rate"] = s.se_containment_rate;
  j["se_exact_rate"] = s.se_exact_rate;
  j["se_strict_overfit_rate"] = s.se_strict_overfit_rate;
  j["se_condition_rate"] = s.se_condition_rate;
  j["strict_overfit_count"] = s.strict_overfit_count;
  j["theorem_violations"] = s.theorem_violations;
  j["mean_sigma_sq_oracle"] = s.mean_sigma_sq_oracle;
  j["mean_ci_width_selected"] = s.mean_ci_width_selected;
  j["mean_ci_width_oracle"] = s.mean_ci_width_oracle;
  j["ratio_hist_below_range"] = hist.below;
  j["ratio_hist_above_range"] = hist.above;
  j["runtime_seconds"] = s.runtime_seconds;
  j["rng_algorithm"] = s.rng_algorithm;
  j["seed"] = s.seed;
  j["workers"] = s.workers;
  return nlohmann::json(j);
}

inline std::string join_doubles(const Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v(i));
  }
  return out;
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

inline Vector parse_doubles(std::string_view text, const std::string& field) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == ',' || c == ' ' || c == '\t' || c == '[' || c == ']') {
      ++pos;
      continue;
    }
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), v);
    if (ec != std::errc()) {
      throw Error(ErrorKind::ConfigError, field + ": cannot parse '" + std::string(text) + "'");
    }
    values.push_back(v);
    pos = static_cast<std::size_t>(end - text.data());
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
}

/// Flat key = value form of a config, readable back by `postsel simulate --config`.
inline std::string config_to_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "n = " << cfg.n << '\n'
      << "p = " << cfg.p << '\n'
      << "sigma = " << format_double(cfg.sigma) << '\n'
      << "s_star = \"" << join_ints(cfg.s_star.one_based()) << "\"\n"
      << "beta_star = \"" << join_doubles(cfg.beta_star) << "\"\n"
      << "rho = " << format_double(cfg.rho) << '\n'
      << "reps = " << cfg.reps << '\n'
      << "alpha = " << format_double(cfg.alpha) << '\n'
      << "criterion = \"" << cfg.criterion.name() << "\"\n";
  if (cfg.criterion.kind() == CriterionKind::Custom) {
    out << "cn = " << format_double(cfg.criterion.custom_value()) << '\n';
  }
  out << "seed = " << cfg.seed << '\n'
      << "workers = " << cfg.workers << '\n';
  return out.str();
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["n"] = cfg.n;
  j["p"] = cfg.p;
  j["sigma"] = cfg.sigma;
  j["s_star"] = cfg.s_star.one_based();
  j["beta_star"] = std::vector<double>(cfg.beta_star.data(), cfg.beta_star.data() + cfg.beta_star.size());
  j["rho"] = cfg.rho;
  j["reps"] = cfg.reps;
  j["alpha"] = cfg.alpha;
  j["criterion"] = cfg.criterion.name();
  j["cn"] = cfg.criterion.penalty(cfg.n);
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  return nlohmann::json(j);
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorKind::InvalidArgument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct TableData {
  std::vector<std::string> predictor_names;
  Matrix X;
  Vector y;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Header row required; exactly one column named `y`, every other column is a predictor.
inline TableData read_dataset_csv(std::istream& in) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::ParseError, msg); };
  std::string line;
  if (!std::getline(in, line)) fail("empty CSV");
  const auto header = detail::split_fields(line);
  int y_col = -1;
  TableData table;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "y") {
      if (y_col >= 0) fail("more than one column named 'y'");
      y_col = static_cast<int>(i);
    } else {
      if (header[i].empty()) fail("empty column name in header");
      table.predictor_names.emplace_back(header[i]);
    }
  }
  if (y_col < 0) fail("no column named 'y'");
  if (table.predictor_names.empty()) fail("no predictor columns");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      fail("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
           " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto f = fields[i];
      auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), row[i]);
      if (ec != std::errc() || end != f.data() + f.size() || !std::isfinite(row[i])) {
        fail("line " + std::to_string(line_no) + ": bad number '" + std::string(f) + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(table.predictor_names.size());
  if (n <= p) {
    fail("need more rows than predictors (n = " + std::to_string(n) + ", p = " +
         std::to_string(p) + ")");
  }
  table.X.resize(n, p);
  table.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    Index col = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      const double v = rows[static_cast<std::size_t>(i)][j];
      if (static_cast<int>(j) == y_col) {
        table.y(i) = v;
      } else {
        table.X(i, col++) = v;
      }
    }
  }
  return table;
}

inline TableData read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
  return read_dataset_csv(in);
}

/// Writes `y` first, then x1..xp.
inline void write_dataset_csv(std::ostream& out, const Matrix& X, const Vector& y) {
  out << 'y';
  for (Index j = 0; j < X.cols(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (Index i = 0; i < X.rows(); ++i) {
    out << format_double(y(i));
    for (Index j = 0; j < X.cols(); ++j) out << ',' << format_double(X(i, j));
    out << '\n';
  }
}

}  // namespace postsel

#endif  // POSTSEL_REPORT_HPP
