// postsel: subset selection, overfitting diagnostics and the coverage study.
//
//   postsel simulate       [--config FILE] [--seed S] [--reps R] ... [--out DIR]
//   postsel select         --data FILE [--criterion aic|bic|custom] [--cn C] [--top K] [--json]
//   postsel theorem-check  --n N --size-star K --size-hat K2 (--cn C | --criterion NAME)
//   postsel theorem-check  --data FILE --s-star "1,2,3" --s-hat "1,2,3,5" [--criterion NAME]
//   postsel quantile       --df D --prob P
//
// Exit codes: 0 ok, 2 usage or configuration error, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "postsel/postsel.hpp"

namespace fs = std::filesystem;
using namespace postsel;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct SimulateArgs {
  int n = 50;
  int p = 10;
  double sigma = 1.0;
  std::string s_star;
  std::string beta_star;
  double rho = 0.5;
  int reps = 1000;
  double alpha = 0.05;
  std::string criterion = "aic";
  std::optional<double> cn;
  std::uint64_t seed = ExperimentConfig{}.seed;
  int workers = 0;
  std::string out = "postsel_out";
};

ExperimentConfig build_config(const SimulateArgs& a) {
  ExperimentConfig cfg;
  cfg.n = a.n;
  cfg.p = a.p;
  cfg.sigma = a.sigma;
  cfg.rho = a.rho;
  cfg.reps = a.reps;
  cfg.alpha = a.alpha;
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  try {
    cfg.criterion = Criterion::parse(a.criterion, a.cn);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, std::string("criterion: ") + e.what());
  }
  if (!a.beta_star.empty()) {
    cfg.beta_star = parse_doubles(a.beta_star, "beta_star");
  } else {
    cfg.beta_star = ExperimentConfig::default_beta(a.p);
  }
  if (!a.s_star.empty()) {
    try {
      cfg.s_star = Subset::parse(a.s_star);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, std::string("s_star: ") + e.what());
    }
  } else {
    std::vector<int> support;
    for (Index j = 0; j < cfg.beta_star.size(); ++j) {
      if (cfg.beta_star(j) != 0.0) support.push_back(static_cast<int>(j));
    }
    cfg.s_star = Subset(support);
  }
  cfg.validate();
  return cfg;
}

int run_simulate(const SimulateArgs& args) {
  ExperimentConfig cfg;
  try {
    cfg = build_config(args);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }

  ExperimentResult result;
  try {
    result = run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }

  const fs::path dir(args.out);
  const fs::path records_path = dir / "records.csv";
  const fs::path hist_path = dir / "ratio_hist.csv";
  const fs::path summary_path = dir / "summary.json";
  const fs::path config_path = dir / "config.cfg";
  const fs::path manifest_path = dir / "manifest.json";
  const RatioHistogram hist = ratio_histogram(result.records);
  try {
    fs::create_directories(dir);
    std::ostringstream records;
    write_records_csv(records, result.records);
    write_file_atomic(records_path, records.str());
    std::ostringstream histogram;
    write_histogram_csv(histogram, hist);
    write_file_atomic(hist_path, histogram.str());
    write_file_atomic(summary_path, summary_to_json(result.summary, hist).dump(2) + "\n");
    write_file_atomic(config_path, config_to_text(cfg));

    nlohmann::ordered_json manifest;
    manifest["tool"] = "postsel";
    manifest["tool_version"] = kToolVersion;
    manifest["rng_algorithm"] = RngStream::kAlgorithm;
    manifest["seed"] = cfg.seed;
    manifest["runtime_seconds"] = result.summary.runtime_seconds;
    manifest["config"] = config_to_json(cfg);
    manifest["config_file"] = config_path.string();
    manifest["outputs"] = {{"records", records_path.string()},
                           {"ratio_hist", hist_path.string()},
                           {"summary", summary_path.string()}};
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }

  const ExperimentSummary& s = result.summary;
  std::cout << "reps                " << s.reps << '\n'
            << "coverage_selected   " << format_short(s.coverage_selected) << "  (se "
            << format_short(s.se_coverage_selected) << ")\n"
            << "coverage_oracle     " << format_short(s.coverage_oracle) << "  (se "
            << format_short(s.se_coverage_oracle) << ")\n"
            << "mean_ratio_overfit  " << format_short(s.mean_ratio_overfit) << '\n'
            << "containment_rate    " << format_short(s.containment_rate) << '\n'
            << "exact_rate          " << format_short(s.exact_rate) << '\n'
            << "outputs written to  " << dir.string() << '\n';
  return 0;
}

struct SelectArgs {
  std::string data;
  std::string criterion = "aic";
  std::optional<double> cn;
  int top = 10;
  std::optional<int> size_cap;
  int workers = 1;
  bool json = false;
};

std::string names_of(const Subset& s, const std::vector<std::string>& names) {
  std::string out;
  for (int i : s.indices()) {
    if (!out.empty()) out += ' ';
    out += names[static_cast<std::size_t>(i)];
  }
  return out;
}

int run_select(const SelectArgs& args) {
  const TableData table = read_dataset_csv(fs::path(args.data));
  const CenteredData centered = center(table.X, table.y);
  const Dataset& data = centered.data;
  const Criterion crit = Criterion::parse(args.criterion, args.cn);

  SelectOptions options;
  options.size_cap = args.size_cap;
  options.workers = args.workers;
  const SelectionResult result = select(data, crit, options);
  const SubsetFit fit = ols_fit(data, result.chosen);

  std::vector<std::string> warnings;
  for (const auto& skipped : result.skipped) {
    warnings.push_back("skipped " + skipped.subset.to_string() + ": " + skipped.reason);
  }
  if (result.truncated_sse_count > 0) {
    warnings.push_back(std::to_string(result.truncated_sse_count) +
                       " subset(s) fit exactly; SSE clamped to the floor");
  }
  if (result.ties.size() > 1) {
    warnings.push_back(std::to_string(result.ties.size()) +
                       " subsets tie at the minimum; smallest then lexicographically first wins");
  }

  const auto top = top_subsets(result, static_cast<std::size_t>(std::max(args.top, 0)));
  if (args.json) {
    nlohmann::ordered_json j;
    j["n"] = data.n();
    j["p"] = data.p();
    j["criterion"] = crit.name();
    j["c_n"] = result.c_n;
    j["chosen"] = result.chosen.one_based();
    j["chosen_names"] = names_of(result.chosen, table.predictor_names);
    j["sse"] = fit.sse;
    j["df"] = fit.df;
    j["sigma_hat"] = fit.sigma_hat();
    j["truncated_sse_count"] = result.truncated_sse_count;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& s : top) {
      rows.push_back({{"subset", s.subset.one_based()},
                      {"size", s.subset.size()},
                      {"sse", s.sse},
                      {"gamma", s.gamma},
                      {"truncated", s.truncated}});
    }
    j["top"] = rows;
    j["warnings"] = warnings;
    std::cout << j.dump(2) << '\n';
  } else {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "n = " << data.n() << ", p = " << data.p() << ", criterion = " << crit.name()
              << " (c_n = " << format_short(result.c_n) << ")\n"
              << "chosen subset: " << result.chosen.to_string() << "  ["
              << names_of(result.chosen, table.predictor_names) << "]\n"
              << "sigma_hat: " << format_short(fit.sigma_hat()) << "  (df = " << fit.df
              << ", sse = " << format_short(fit.sse) << ")\n\n"
              << "rank  size  gamma         sse           subset\n";
    int rank = 1;
    for (const auto& s : top) {
      char line[160];
      std::snprintf(line, sizeof line, "%4d  %4zu  %-12s  %-12s  %s\n", rank++, s.subset.size(),
                    format_short(s.gamma).c_str(), format_short(s.sse).c_str(),
                    s.subset.to_string().c_str());
      std::cout << line;
    }
  }
  return 0;
}

struct TheoremArgs {
  std::optional<int> n;
  std::optional<int> size_star;
  std::optional<int> size_hat;
  std::optional<double> cn;
  std::optional<std::string> criterion;
  std::string data;
  std::string s_star;
  std::string s_hat;
};

Criterion theorem_criterion(const TheoremArgs& a) {
  if (a.criterion) return Criterion::parse(*a.criterion, a.cn);
  if (a.cn) return Criterion::custom(*a.cn);
  return Criterion::aic();
}

int run_theorem_check(const TheoremArgs& a) {
  const Criterion crit = theorem_criterion(a);
  if (a.data.empty()) {
    if (!a.n || !a.size_star || !a.size_hat) {
      throw Error(ErrorKind::ConfigError, "analytic mode needs --n, --size-star and --size-hat");
    }
    if (*a.size_star < 0 || *a.size_hat <= *a.size_star) {
      throw Error(ErrorKind::ConfigError, "need 0 <= size-star < size-hat (strict overfit)");
    }
    if (*a.n - *a.size_hat - 1 < 1) {
      throw Error(ErrorKind::ConfigError, "need n - size-hat - 1 >= 1");
    }
    const double c_n = crit.penalty(*a.n);
    const OverfitCondition cond = overfit_condition(*a.n, static_cast<std::size_t>(*a.size_star),
                                                    static_cast<std::size_t>(*a.size_hat), c_n);
    std::cout << "c_n = " << format_short(c_n) << '\n'
              << "a_n = " << format_short(cond.a_n) << '\n'
              << "D_n = " << format_short(cond.d_n) << '\n'
              << "1 - exp(-a_n D_n) = " << format_short(cond.threshold) << '\n'
              << "condition " << (cond.holds ? "HOLDS" : "FAILS") << '\n';
    return 0;
  }

  const TableData table = read_dataset_csv(fs::path(a.data));
  const CenteredData centered = center(table.X, table.y);
  const Subset star = Subset::parse(a.s_star);
  const Subset hat = Subset::parse(a.s_hat);
  if (!star.is_strict_subset_of(hat)) {
    throw Error(ErrorKind::NotNested,
                star.to_string() + " must be a strict subset of " + hat.to_string());
  }
  const TheoremReport rep = theorem_report(centered.data, star, hat, crit);
  const PreferenceCheck pref = selection_preference_equivalence(centered.data, star, hat, crit);
  std::cout << "S*  = " << rep.s_star.to_string() << "  sigma_hat = "
            << format_short(rep.sigma_hat_star) << '\n'
            << "S^  = " << rep.s_hat.to_string() << "  sigma_hat = "
            << format_short(rep.sigma_hat_selected) << '\n'
            << "c_n = " << format_short(rep.c_n) << '\n'
            << "a_n = " << format_short(rep.a_n) << '\n'
            << "D_n = " << format_short(*rep.d_n) << '\n'
            << "r_n = " << format_short(*rep.r_n) << '\n'
            << "F_n = " << format_short(*rep.f_n) << '\n'
            << "condition " << (rep.condition_holds ? "HOLDS" : "FAILS") << '\n'
            << "criterion prefers S^ over S*: " << (pref.prefers_by_gamma ? "yes" : "no") << '\n'
            << "under-estimation (sigma_hat(S^) < sigma_hat(S*)): "
            << (rep.underestimates ? "yes" : "no") << '\n';
  return 0;
}

/// 10 significant digits, trailing zeros kept.
std::string format_quantile(double q) {
  if (q == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.10g", q);
  return buf;
}

// Options already given on the command line keep their values.
void apply_config_file(CLI::App& app, const std::string& path) {
  if (!fs::is_regular_file(path)) throw CLI::FileError::Missing(path);
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "default")) {
      throw CLI::ConfigError::Extras(item.fullname());
    }
    if (item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = app.get_option_no_throw("--" + item.name);
    if (opt == nullptr || opt->get_name() == "--config") {
      throw CLI::ConfigError::Extras(item.fullname());
    }
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-subset selection by information criteria and post-selection coverage"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Run the Monte Carlo coverage study");
  std::string sim_config;
  sim->add_option("--config", sim_config, "Flat key = value config file; flags override it");
  sim->add_option("--n", sim_args.n, "Sample size")->capture_default_str();
  sim->add_option("--p", sim_args.p, "Number of predictors")->capture_default_str();
  sim->add_option("--sigma", sim_args.sigma, "Noise standard deviation")->capture_default_str();
  sim->add_option("--s-star,--s_star", sim_args.s_star,
                  "True subset, 1-based (default: support of beta_star)");
  sim->add_option("--beta-star,--beta_star", sim_args.beta_star,
                  "True coefficients, comma separated (default 1,2,3,0,...)");
  sim->add_option("--rho", sim_args.rho, "AR(1) correlation of the design")->capture_default_str();
  sim->add_option("--reps", sim_args.reps, "Replications")->capture_default_str();
  sim->add_option("--alpha", sim_args.alpha, "Interval level is 1 - alpha")->capture_default_str();
  sim->add_option("--criterion", sim_args.criterion, "aic, bic or custom")->capture_default_str();
  sim->add_option("--cn", sim_args.cn, "Penalty c_n for --criterion custom");
  sim->add_option("--seed", sim_args.seed, "Master seed")->capture_default_str();
  sim->add_option("--workers", sim_args.workers, "Threads (0 = all cores)")->capture_default_str();
  sim->add_option("--out", sim_args.out, "Output directory")->capture_default_str();

  SelectArgs sel_args;
  auto* sel = app.add_subcommand("select", "Best subset of a CSV dataset by AIC/BIC");
  sel->add_option("--data,data", sel_args.data, "CSV with header; response column named y")
      ->required();
  sel->add_option("--criterion", sel_args.criterion, "aic, bic or custom")->capture_default_str();
  sel->add_option("--cn", sel_args.cn, "Penalty c_n for --criterion custom");
  sel->add_option("--top", sel_args.top, "Rows of the gamma table")->capture_default_str();
  sel->add_option("--size-cap", sel_args.size_cap, "Largest subset size enumerated");
  sel->add_option("--workers", sel_args.workers, "Threads (0 = all cores)")->capture_default_str();
  sel->add_flag("--json", sel_args.json, "Emit JSON");

  TheoremArgs thm_args;
  auto* thm = app.add_subcommand("theorem-check", "Evaluate the overfitting condition");
  thm->add_option("--n", thm_args.n, "Sample size (analytic mode)");
  thm->add_option("--size-star", thm_args.size_star, "|S*| (analytic mode)");
  thm->add_option("--size-hat", thm_args.size_hat, "|S^| (analytic mode)");
  thm->add_option("--cn", thm_args.cn, "Penalty c_n");
  thm->add_option("--criterion", thm_args.criterion, "aic, bic or custom");
  thm->add_option("--data", thm_args.data, "CSV dataset (data mode)");
  thm->add_option("--s-star", thm_args.s_star, "Reference subset, 1-based (data mode)");
  thm->add_option("--s-hat", thm_args.s_hat, "Larger subset, 1-based (data mode)");

  long q_df = 0;
  double q_prob = 0.0;
  auto* quant = app.add_subcommand("quantile", "Student t quantile");
  quant->add_option("--df,df", q_df, "Degrees of freedom")->required();
  quant->add_option("--prob,prob", q_prob, "Lower-tail probability")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*sim && !sim_config.empty()) {
    try {
      apply_config_file(*sim, sim_config);
    } catch (const CLI::Error& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitUsage;
    }
  }

  try {
    if (*sim) return run_simulate(sim_args);
    if (*sel) return run_select(sel_args);
    if (*thm) return run_theorem_check(thm_args);
    if (*quant) {
      std::cout << format_quantile(student_t_quantile(q_df, q_prob)) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
