#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "fillin/matrix_market.hpp"
#include "fillin/mcts.hpp"
#include "fillin/network.hpp"
#include "fillin/partition.hpp"
#include "fillin/symbolic_lu.hpp"
#include "fillin/training.hpp"

namespace fillin::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", s);
  return buf;
}

std::vector<fs::path> corpus_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".mtx") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

std::unique_ptr<CnnEvaluator> load_evaluator(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_unique<CnnEvaluator>(load_checkpoint(fs::path(path)));
}

void print_report(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& kv,
                  bool pretty) {
  std::size_t width = 0;
  for (const auto& [k, v] : kv) width = std::max(width, k.size());
  for (const auto& [k, v] : kv) {
    if (pretty)
      out << k << std::string(width - k.size() + 2, ' ') << v << '\n';
    else
      out << k << '=' << v << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> report_fields(const FillReport& f) {
  return {{"nnz_L", std::to_string(f.nnz_L)},
          {"nnz_U", std::to_string(f.nnz_U)},
          {"total", std::to_string(f.total)},
          {"fill_in", std::to_string(f.fill_in)}};
}

const std::map<std::string, OrderingMethod> kMethodNames{
    {"naive", OrderingMethod::Naive},
    {"random", OrderingMethod::Random},
    {"mindeg", OrderingMethod::MinimumDegree},
    {"rcm", OrderingMethod::ReverseCuthillMcKee},
    {"learned", OrderingMethod::Learned},
};

std::string short_name(OrderingMethod m) {
  for (const auto& [k, v] : kMethodNames)
    if (v == m) return k;
  return std::string(to_string(m));
}

const std::map<std::string, RewardMode> kRewardNames{{"perstep", RewardMode::PerStep},
                                                     {"terminal", RewardMode::TerminalFraction}};
const std::map<std::string, UctFormula> kUctNames{{"parent", UctFormula::ParentVisit},
                                                  {"paper", UctFormula::PaperLiteral}};

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> reward_mode;
  std::optional<std::string> uct;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_train_args(CLI::App* cmd, TrainArgs& t) {
  cmd->add_option("config", t.config, "key=value training config file");
  cmd->add_option("--set", t.sets, "override one option, key=value");
  cmd->add_option("--reward-mode", t.reward_mode, "perstep or terminal")
      ->check(CLI::IsMember({"perstep", "terminal"}));
  cmd->add_option("--uct", t.uct, "parent or paper")->check(CLI::IsMember({"parent", "paper"}));
  cmd->add_option("--seed", t.seed);
  cmd->add_option("--out", t.out_dir, "output directory")->required();
}

TrainConfig build_config(const TrainArgs& t) {
  TrainConfig cfg = t.config.empty() ? TrainConfig{} : read_train_config(fs::path(t.config));
  for (const auto& kv : t.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    set_train_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (t.reward_mode) set_train_option(cfg, "reward_mode", *t.reward_mode);
  if (t.uct) set_train_option(cfg, "uct", *t.uct);
  if (t.seed) cfg.seed = *t.seed;
  return cfg;
}

void write_run(const fs::path& dir, const TrainConfig& cfg, const TrainResult& r) {
  fs::create_directories(dir);
  std::ofstream config(dir / "config.txt");
  write_train_config(cfg, config);
  std::ofstream metrics(dir / "metrics.csv");
  write_metrics_csv(r.metrics, metrics);
  save_checkpoint(r.best_params, dir / "best.ckpt");
  save_checkpoint(r.final_params, dir / "latest.ckpt");
}

void summarize_run(std::ostream& out, const std::string& label, const TrainConfig& cfg, const TrainResult& r) {
  out << label << "seed=" << cfg.seed << " iterations=" << r.metrics.size()
      << " best_iteration=" << r.best_iteration;
  if (!r.metrics.empty()) out << " final_smoothed_loss=" << smoothed_final_loss(r.metrics);
  out << (r.stopped_on_plateau ? " stopped=plateau" : "") << '\n';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void write_permutation(const Permutation& p, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Index v : p.map()) out << v << '\n';
}

Permutation read_permutation(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Index> map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != line.size() || v < 0)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected an index");
    map.push_back(static_cast<Index>(v));
  }
  return Permutation(std::move(map));
}

int bench(const fs::path& corpus, const BenchOptions& opts, std::ostream& csv, std::ostream& warn) {
  const auto learned = load_evaluator(opts.checkpoint);
  csv << "matrix,n,nnz,status";
  for (OrderingMethod m : opts.methods) {
    const std::string s = short_name(m);
    csv << ',' << s << "_total";
    if (opts.timing) csv << ',' << s << "_order_seconds," << s << "_factor_seconds";
  }
  csv << '\n';

  int failures = 0;
  for (const fs::path& file : corpus_files(corpus)) {
    std::ostringstream row;
    try {
      const PatternMatrix a = pattern_of(read_matrix_market(file));
      row << file.filename().string() << ',' << a.n() << ',' << a.nnz() << ",ok";
      for (OrderingMethod m : opts.methods) {
        const OrderingOptions o{
            .seed = opts.seed, .learned = learned.get(), .max_block = opts.max_block, .simulations = opts.search};
        const auto t0 = Clock::now();
        const OrderingPlan plan = compute_ordering(a, m, o);
        const double order_s = elapsed(t0);
        const auto t1 = Clock::now();
        const FillReport f = apply_and_factor(a, plan.rows, plan.cols);
        const double factor_s = elapsed(t1);
        row << ',' << f.total;
        if (opts.timing) row << ',' << seconds(order_s) << ',' << seconds(factor_s);
      }
      csv << row.str() << '\n';
    } catch (const std::exception& e) {
      ++failures;
      csv << file.filename().string() << ",,,failed";
      for (std::size_t k = 0; k < opts.methods.size(); ++k) csv << (opts.timing ? ",,," : ",");
      csv << '\n';
      warn << "warning: " << file.filename().string() << ": " << e.what() << '\n';
    }
  }
  return failures;
}

void pretty_table(const std::string& csv, std::ostream& out) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line)) rows.push_back(split_csv_line(line));
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  for (const auto& r : rows) {
    std::string text;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) text += "  ";
      text += r[c] + std::string(width[c] - r[c].size(), ' ');
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fill-reducing row orderings for sparse LU"};
  app.require_subcommand(1);

  // order
  std::string matrix_path, method_name = "naive", checkpoint, output;
  std::uint64_t seed = 0;
  Index max_block = 0;
  int search = 0;
  bool pretty = false;
  auto* order = app.add_subcommand("order", "compute an ordering and write it as a permutation file");
  order->add_option("matrix", matrix_path)->required()->check(CLI::ExistingFile);
  order->add_option("--method", method_name)->transform(CLI::IsMember(kMethodNames));
  order->add_option("--checkpoint", checkpoint, "network checkpoint for --method learned");
  order->add_option("--seed", seed, "seed for --method random");
  order->add_option("--max-block", max_block, "partition bound for large inputs");
  order->add_option("--search", search, "search simulations per move for --method learned (0: greedy policy)")
      ->check(CLI::NonNegativeNumber);
  order->add_option("-o,--output", output, "permutation file (default: <matrix>.perm)");
  order->add_flag("--pretty", pretty);

  // fill
  std::string perm_path, col_perm_path;
  auto* fill = app.add_subcommand("fill", "report L/U counts for a matrix under given permutations");
  fill->add_option("matrix", matrix_path)->required()->check(CLI::ExistingFile);
  fill->add_option("--perm", perm_path, "row permutation file")->check(CLI::ExistingFile);
  fill->add_option("--col-perm", col_perm_path, "column permutation file")->check(CLI::ExistingFile);
  fill->add_flag("--pretty", pretty);

  // bench
  std::string corpus;
  std::vector<std::string> methods;
  bool no_timing = false;
  auto* bench_cmd = app.add_subcommand("bench", "compare orderings over a directory of .mtx files");
  bench_cmd->add_option("corpus", corpus)->required();
  bench_cmd->add_option("--method", methods, "methods to run (repeatable or comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember(kMethodNames));
  bench_cmd->add_option("--checkpoint", checkpoint);
  bench_cmd->add_option("--seed", seed);
  bench_cmd->add_option("--max-block", max_block);
  bench_cmd->add_option("--search", search)->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("-o,--output", output, "CSV path (default: standard output)");
  bench_cmd->add_flag("--no-timing", no_timing, "omit timing columns");
  bench_cmd->add_flag("--pretty", pretty);

  // train
  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "self-play training");
  add_train_args(train_cmd, train_args);

  // ablate
  std::string kind;
  std::vector<double> c_values{0.25, 1.0, 4.0};
  TrainArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "paired training runs: mask or exploration");
  ablate->add_option("kind", kind)->required()->check(CLI::IsMember({"mask", "exploration"}));
  add_train_args(ablate, ablate_args);
  ablate->add_option("--c", c_values, "exploration constants")->delimiter(',');

  // selfplay
  int simulations = 200;
  double c = 1.0;
  std::string evaluator_name = "uniform", reward_mode = "perstep", uct = "parent";
  auto* selfplay = app.add_subcommand("selfplay", "play one search-guided episode on a matrix");
  selfplay->add_option("matrix", matrix_path)->required()->check(CLI::ExistingFile);
  selfplay->add_option("--checkpoint", checkpoint, "network evaluator (default: --evaluator)");
  selfplay->add_option("--evaluator", evaluator_name)->check(CLI::IsMember({"uniform", "degree"}));
  selfplay->add_option("--simulations", simulations)->check(CLI::PositiveNumber);
  selfplay->add_option("--c", c);
  selfplay->add_option("--seed", seed);
  selfplay->add_option("--reward-mode", reward_mode)->check(CLI::IsMember({"perstep", "terminal"}));
  selfplay->add_option("--uct", uct)->check(CLI::IsMember({"parent", "paper"}));
  selfplay->add_option("-o,--output", output, "write the row permutation here");

  // eval
  auto* eval = app.add_subcommand("eval", "learned ordering against the baselines over a corpus");
  eval->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("corpus", corpus)->required();
  eval->add_option("--seed", seed);
  eval->add_option("--max-block", max_block);
  eval->add_option("--search", search)->check(CLI::NonNegativeNumber);
  eval->add_flag("--pretty", pretty);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*order) {
      const OrderingMethod m = kMethodNames.at(method_name);
      const auto learned = load_evaluator(checkpoint);
      const PatternMatrix a = pattern_of(read_matrix_market(fs::path(matrix_path)));
      const OrderingResult r =
          apply_ordering(a, m, {.seed = seed, .learned = learned.get(), .max_block = max_block, .simulations = search});
      const fs::path perm = output.empty() ? fs::path(fs::path(matrix_path).filename().string() + ".perm")
                                           : fs::path(output);
      write_permutation(r.plan.rows, perm);
      std::vector<std::pair<std::string, std::string>> kv{
          {"method", short_name(m)}, {"n", std::to_string(a.n())}, {"nnz", std::to_string(a.nnz())}};
      const auto f = report_fields(r.fill);
      kv.insert(kv.end(), f.begin(), f.end());
      kv.emplace_back("permutation", perm.string());
      if (r.plan.cols != Permutation::identity(a.n())) {
        const fs::path cols = perm.string() + ".cols";
        write_permutation(r.plan.cols, cols);
        kv.emplace_back("column_permutation", cols.string());
      }
      print_report(out, kv, pretty);
      return 0;
    }

    if (*fill) {
      const PatternMatrix a = pattern_of(read_matrix_market(fs::path(matrix_path)));
      const Permutation rows = perm_path.empty() ? Permutation::identity(a.n()) : read_permutation(perm_path);
      const Permutation cols =
          col_perm_path.empty() ? Permutation::identity(a.n()) : read_permutation(col_perm_path);
      if (rows.n() != a.n() || cols.n() != a.n())
        throw std::invalid_argument("permutation length does not match the matrix");
      std::vector<std::pair<std::string, std::string>> kv{{"n", std::to_string(a.n())},
                                                          {"nnz", std::to_string(a.nnz())}};
      const auto f = report_fields(apply_and_factor(a, rows, cols));
      kv.insert(kv.end(), f.begin(), f.end());
      print_report(out, kv, pretty);
      return 0;
    }

    if (*bench_cmd) {
      BenchOptions opts;
      for (const auto& name : methods) opts.methods.push_back(kMethodNames.at(name));
      if (opts.methods.empty()) {
        opts.methods = {OrderingMethod::Naive, OrderingMethod::Random, OrderingMethod::MinimumDegree,
                        OrderingMethod::ReverseCuthillMcKee};
        if (!checkpoint.empty()) opts.methods.push_back(OrderingMethod::Learned);
      }
      opts.checkpoint = checkpoint;
      opts.seed = seed;
      opts.max_block = max_block;
      opts.search = search;
      opts.timing = !no_timing;
      std::ostringstream csv;
      const int failures = bench(fs::path(corpus), opts, csv, err);
      std::string text = csv.str();
      if (pretty) {
        std::ostringstream t;
        pretty_table(text, t);
        text = t.str();
      }
      if (output.empty()) {
        out << text;
      } else {
        std::ofstream f(output);
        if (!f) throw std::runtime_error("cannot write " + output);
        f << text;
      }
      if (failures > 0) err << "warning: " << failures << " matrices failed\n";
      return 0;
    }

    if (*train_cmd) {
      TrainConfig cfg = build_config(train_args);
      cfg.checkpoint_dir = train_args.out_dir;
      const TrainResult r = train(cfg);
      write_run(train_args.out_dir, cfg, r);
      summarize_run(out, "", cfg, r);
      return 0;
    }

    if (*ablate) {
      TrainConfig cfg = build_config(ablate_args);
      const fs::path dir = ablate_args.out_dir;
      if (kind == "mask") {
        cfg.checkpoint_dir = dir;
        const MaskAblation r = ablation_mask(cfg);
        TrainConfig raw = cfg;
        raw.encoding = InputEncoding::RawValues;
        write_run(dir / "masked", cfg, r.masked);
        write_run(dir / "unmasked", raw, r.unmasked);
        summarize_run(out, "masked ", cfg, r.masked);
        summarize_run(out, "unmasked ", raw, r.unmasked);
      } else {
        const auto runs = ablation_exploration(cfg, c_values);
        for (const auto& run : runs) {
          TrainConfig each = cfg;
          each.search.c = run.c;
          std::ostringstream name;
          name << "c_" << run.c;
          write_run(dir / name.str(), each, run.result);
          summarize_run(out, name.str() + " ", each, run.result);
        }
      }
      return 0;
    }

    if (*selfplay) {
      const PatternMatrix a = pattern_of(read_matrix_market(fs::path(matrix_path)));
      const auto learned = load_evaluator(checkpoint);
      UniformEvaluator uniform;
      DegreeHeuristicEvaluator degree;
      const Evaluator& ev = learned ? static_cast<const Evaluator&>(*learned)
                                    : evaluator_name == "degree" ? static_cast<const Evaluator&>(degree)
                                                                 : uniform;
      if (learned && a.n() > learned->params().arch().N)
        throw std::invalid_argument("matrix is larger than the network");
      SearchConfig cfg;
      cfg.num_simulations = simulations;
      cfg.c = c;
      cfg.uct_formula = kUctNames.at(uct);
      cfg.dirichlet_epsilon = 0.0;
      std::mt19937_64 rng(seed);
      const RolloutResult r = search_rollout(a, ev, cfg, kRewardNames.at(reward_mode), rng);
      const SymbolicTrace trace = symbolic_lu_trace(a, r.pivots);
      for (std::size_t k = 0; k < r.pivots.size(); ++k)
        out << "step " << k << " pivot " << r.pivots[k] << " created " << trace.created_per_step[k] << '\n';
      print_report(out, report_fields(r.fill), false);
      if (!output.empty()) write_permutation(r.rows, output);
      return 0;
    }

    if (*eval) {
      const auto learned = load_evaluator(checkpoint);
      std::ostringstream csv;
      csv << "matrix,n,nnz,learned_total,naive_total,random_total,mindeg_total,rcm_total\n";
      int failures = 0;
      for (const fs::path& file : corpus_files(fs::path(corpus))) {
        try {
          const PatternMatrix a = pattern_of(read_matrix_market(file));
          const OrderingOptions o{
              .seed = seed, .learned = learned.get(), .max_block = max_block, .simulations = search};
          csv << file.filename().string() << ',' << a.n() << ',' << a.nnz();
          for (OrderingMethod m : {OrderingMethod::Learned, OrderingMethod::Naive, OrderingMethod::Random,
                                   OrderingMethod::MinimumDegree, OrderingMethod::ReverseCuthillMcKee})
            csv << ',' << apply_ordering(a, m, o).fill.total;
          csv << '\n';
        } catch (const std::exception& e) {
          ++failures;
          err << "warning: " << file.filename().string() << ": " << e.what() << '\n';
        }
      }
      if (pretty)
        pretty_table(csv.str(), out);
      else
        out << csv.str();
      if (failures > 0) err << "warning: " << failures << " matrices failed\n";
      return 0;
    }
  } catch (const ParseError& e) {
    err << "error: line " << e.line() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace fillin::cli
