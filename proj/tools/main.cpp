// Command-line front end: catalog validation, threshold analysis, dynamics
// sweeps. Rationals stay exact end to end; reports are JSON (or CSV for the
// threshold table).

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "abset/dynamics.hpp"
#include "abset/search.hpp"
#include "abset/serialize.hpp"

namespace {

using namespace abset;

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kPartial = 3 };

struct LoadedAs {
  std::string name;
  AbsorbingSetSpec spec;
  ValidationReport report;
};

std::vector<LoadedAs> load_catalogs(const std::vector<std::string>& paths,
                                    CatalogFormat format) {
  std::vector<LoadedAs> out;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      for (auto& spec : parse_catalog(buf.str(), format)) {
        LoadedAs item;
        item.name = spec.name.empty() ? path : spec.name;
        item.report = validate(spec);
        item.spec = std::move(spec);
        out.push_back(std::move(item));
      }
    } catch (const ParseError& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
  }
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text << "\n";
  }
}

SchedulePartition make_schedule(const RoutingSystem& rs, const std::string& spec) {
  if (spec.empty() || spec == "parallel") return schedule_partition(rs);
  if (spec == "seq") return schedule_partition(rs, rs.even_cn_ids);
  if (spec.rfind("seq:", 0) == 0) {
    std::vector<int> order;
    std::stringstream ss(spec.substr(4));
    std::string tok;
    while (std::getline(ss, tok, ',')) order.push_back(std::stoi(tok));
    return schedule_partition(rs, order);
  }
  throw std::runtime_error("bad --schedule value: " + spec);
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads; exceptions are
// rethrown on the caller thread.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
  std::vector<std::thread> threads;
  for (int w = 0; w < jobs; ++w)
    threads.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Names like foo_5_3 carry an (a,b) label; a mismatch with the computed
// values is reported as a warning, not an error (catalog labels drift).
std::vector<std::string> label_warnings(const std::string& name,
                                        const ValidationReport& rep) {
  std::vector<std::string> out;
  const auto last = name.rfind('_');
  if (last == std::string::npos || last == 0) return out;
  const auto prev = name.rfind('_', last - 1);
  if (prev == std::string::npos) return out;
  try {
    const int a = std::stoi(name.substr(prev + 1, last - prev - 1));
    const int b = std::stoi(name.substr(last + 1));
    if (a != rep.a || b != rep.b)
      out.push_back("name labels (" + std::to_string(a) + "," + std::to_string(b) +
                    ") but the topology is (" + std::to_string(rep.a) + "," +
                    std::to_string(rep.b) + ")");
  } catch (const std::exception&) {
    // not an (a,b)-labeled name
  }
  return out;
}

int cmd_validate(const std::vector<std::string>& paths, CatalogFormat format,
                 const std::string& out_path) {
  const auto items = load_catalogs(paths, format);
  if (items.empty()) throw std::runtime_error("no AS found");
  Json arr = Json::array();
  bool all_good = true;
  for (const auto& item : items) {
    Json j = validation_report_json(item.name, item.report);
    if (auto warnings = label_warnings(item.name, item.report); !warnings.empty())
      j["warnings"] = warnings;
    arr.push_back(std::move(j));
    all_good = all_good && item.report.is_absorbing && item.report.is_elementary;
  }
  emit(arr.dump(2), out_path);
  return all_good ? kOk : kValidation;
}

struct ThresholdArgs {
  Rational lambda_max = rat(1);
  bool test1 = true, test2 = true, certify = true;
  bool brute = false;
  int brute_cap = 16;
  std::uint64_t node_budget = UINT64_MAX;
  int jobs = 1;
  std::string format = "json";
  std::uint64_t seed = 1;
};

int cmd_threshold(const std::vector<std::string>& paths, CatalogFormat format,
                  const std::string& out_path, const ThresholdArgs& args) {
  const auto items = load_catalogs(paths, format);
  for (const auto& item : items)
    if (!item.report.is_absorbing || !item.report.is_elementary) {
      std::cerr << item.name << ": not an elementary absorbing set\n";
      return kValidation;
    }

  struct Row {
    Json json;
    std::string csv;
    bool partial = false;
  };
  std::vector<Row> rows(items.size());

  parallel_for(static_cast<int>(items.size()), args.jobs, [&](int idx) {
    const auto& item = items[static_cast<size_t>(idx)];
    const auto rs = build_routing(item.spec);
    const auto start = std::chrono::steady_clock::now();
    ThresholdResult result;
    if (args.brute) {
      result = brute_force_threshold(rs, args.lambda_max, args.brute_cap);
    } else {
      SearchOptions opts;
      opts.lambda_max = args.lambda_max;
      opts.use_test1 = args.test1;
      opts.use_test2 = args.test2;
      opts.node_budget = args.node_budget;
      result = compute_threshold(rs, opts);
    }
    bool certified = false;
    if (args.certify && !result.budget_exhausted) {
      CertifyOptions copts;
      copts.seed = args.seed;
      certify_threshold(rs, result, copts);  // throws on failure
      certified = true;
    }
    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    rows[static_cast<size_t>(idx)].json =
        threshold_result_json(item.name, item.report, rs, result, certified, wall);
    rows[static_cast<size_t>(idx)].csv =
        threshold_result_csv_row(item.name, item.report, rs, result);
    rows[static_cast<size_t>(idx)].partial = result.budget_exhausted;
  });

  bool partial = false;
  if (args.format == "csv") {
    std::string text = kThresholdCsvHeader;
    for (const auto& row : rows) {
      text += "\n" + row.csv;
      partial = partial || row.partial;
    }
    emit(text, out_path);
  } else {
    Json arr = Json::array();
    for (const auto& row : rows) {
      arr.push_back(row.json);
      partial = partial || row.partial;
    }
    emit(arr.dump(2), out_path);
  }
  return partial ? kPartial : kOk;
}

struct SweepArgs {
  std::string lch;
  std::string tau;
  std::vector<int> puncture;
  std::string rest_lambda;
  std::string margin = "1/16";
  std::uint64_t trials = 1000;
  std::uint64_t seed = 1;
  int max_iters = kDefaultMaxIters;
  int jobs = 1;
  std::string schedule = "parallel";
};

int cmd_sweep(const std::vector<std::string>& paths, CatalogFormat format,
              const std::string& out_path, const SweepArgs& args) {
  const auto items = load_catalogs(paths, format);
  Json arr = Json::array();
  int code = kOk;
  for (const auto& item : items) {
    if (!item.report.is_absorbing || !item.report.is_elementary) {
      std::cerr << item.name << ": not an elementary absorbing set\n";
      return kValidation;
    }
    const auto rs = build_routing(item.spec);
    const auto sp = make_schedule(rs, args.schedule);
    const Rational tau = args.tau.empty()
                             ? compute_threshold(rs).tau
                             : parse_rational(args.tau);

    SweepReport report;
    if (!args.puncture.empty()) {
      PunctureOptions opts;
      opts.margin = parse_rational(args.margin);
      if (!args.rest_lambda.empty()) opts.rest_lambda = parse_rational(args.rest_lambda);
      opts.max_iters = args.max_iters;
      opts.jobs = args.jobs;
      report = puncture_check(rs, sp, tau, args.puncture, args.trials, args.seed, opts);
      if (report.outcomes.failures() != 0) code = kValidation;
    } else {
      if (args.lch.empty()) throw std::runtime_error("sweep needs --lch or --puncture");
      const Rational lch = parse_rational(args.lch);
      SweepOptions opts;
      opts.max_iters = args.max_iters;
      opts.jobs = args.jobs;
      report = lch_sweep(rs, sp, tau, lch, args.trials, args.seed, opts);
      // Below a negative threshold the sweep must come back clean.
      if (tau < 0 && lch < -tau && report.outcomes.failures() != 0) code = kValidation;
    }
    report.as_name = item.name;
    arr.push_back(sweep_report_json(report));
  }
  emit(arr.dump(2), out_path);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"absorbing-set threshold analysis for saturated min-sum decoding"};
  app.require_subcommand(1);

  std::vector<std::string> paths;
  std::string out_path;
  std::string format_str = "auto";
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("files", paths, "AS catalog files")->required()->expected(-1);
    cmd->add_option("--out", out_path, "write the report here instead of stdout");
    cmd->add_option("--input-format", format_str, "catalog format: auto|text|json")
        ->check(CLI::IsMember({"auto", "text", "json"}));
  };

  auto* validate_cmd = app.add_subcommand("validate", "check catalog topologies");
  add_common(validate_cmd);

  ThresholdArgs targs;
  std::string lambda_max_str = "1";
  auto* threshold_cmd = app.add_subcommand("threshold", "compute exact thresholds");
  add_common(threshold_cmd);
  threshold_cmd->add_option("--lambda-max", lambda_max_str, "cap on the reported value");
  threshold_cmd->add_flag("!--no-test1", targs.test1, "disable the structural prune");
  threshold_cmd->add_flag("!--no-test2", targs.test2, "disable the bound-propagation prune");
  threshold_cmd->add_flag("!--no-certify", targs.certify, "skip equilibrium certification");
  threshold_cmd->add_option("--node-budget", targs.node_budget, "search node budget");
  threshold_cmd->add_option("--jobs", targs.jobs, "parallelism across catalog entries");
  threshold_cmd->add_option("--seed", targs.seed, "seed for certification probes");
  threshold_cmd->add_option("--format", targs.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  auto* brute_cmd = app.add_subcommand("brute-force", "oracle-mode threshold (small N)");
  add_common(brute_cmd);
  brute_cmd->add_option("--lambda-max", lambda_max_str, "cap on the reported value");
  brute_cmd->add_option("--cap", targs.brute_cap, "max message count");
  brute_cmd->add_option("--jobs", targs.jobs, "parallelism across catalog entries");
  brute_cmd->add_flag("!--no-certify", targs.certify, "skip equilibrium certification");
  brute_cmd->add_option("--format", targs.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));

  SweepArgs sargs;
  auto* sweep_cmd = app.add_subcommand("sweep", "randomized stability sweeps");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--lch", sargs.lch, "channel saturation level p/q in (0,1]");
  sweep_cmd->add_option("--tau", sargs.tau, "threshold p/q (computed when omitted)");
  sweep_cmd->add_option("--puncture", sargs.puncture, "punctured VN indices")
      ->delimiter(',');
  sweep_cmd->add_option("--rest-lambda", sargs.rest_lambda,
                        "fixed channel value for non-punctured VNs");
  sweep_cmd->add_option("--margin", sargs.margin, "sampling band above tau");
  sweep_cmd->add_option("--trials", sargs.trials, "number of randomized trials");
  sweep_cmd->add_option("--seed", sargs.seed, "PRNG seed (recorded in the report)");
  sweep_cmd->add_option("--max-iters", sargs.max_iters, "iteration budget per trajectory");
  sweep_cmd->add_option("--jobs", sargs.jobs, "worker threads");
  sweep_cmd->add_option("--schedule", sargs.schedule, "parallel | seq | seq:i,j,...");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  const CatalogFormat format = format_str == "text"  ? CatalogFormat::Text
                               : format_str == "json" ? CatalogFormat::Json
                                                      : CatalogFormat::Auto;
  try {
    if (app.got_subcommand(validate_cmd)) return cmd_validate(paths, format, out_path);
    targs.lambda_max = parse_rational(lambda_max_str);
    if (app.got_subcommand(threshold_cmd)) {
      return cmd_threshold(paths, format, out_path, targs);
    }
    if (app.got_subcommand(brute_cmd)) {
      targs.brute = true;
      return cmd_threshold(paths, format, out_path, targs);
    }
    if (app.got_subcommand(sweep_cmd)) return cmd_sweep(paths, format, out_path, sargs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
