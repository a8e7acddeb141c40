#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "ampnn/experiments.hpp"
#include "ampnn/io.hpp"
#include "ampnn/network.hpp"
#include "ampnn/training.hpp"

namespace ampnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path output_root(const std::string& dir) {
  fs::path path(dir);
  if (path.is_relative()) {
    if (const char* root = std::getenv(kOutputRootVariable); root != nullptr && *root != '\0') return fs::path(root) / path;
  }
  return path;
}

std::string run_file_name(int k) {
  std::ostringstream name;
  name << "model_run_" << std::setw(2) << std::setfill('0') << k << ".json";
  return name.str();
}

std::string slug(const std::string& name) {
  std::string out;
  for (const char c : name) out += (c == ' ') ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct TrainingOverrides {
  int epochs = 0;
  double learning_rate = 0.0;
  double l2_lambda = 0.0;
  int n_runs = 0;
  std::uint64_t base_seed = 0;
  unsigned threads = 0;
  Index grid = 0;
  std::string output_dir;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* l2_opt = nullptr;
  CLI::Option* runs_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* grid_opt = nullptr;
  CLI::Option* out_opt = nullptr;

  void attach(CLI::App& app) {
    epochs_opt = app.add_option("--epochs", epochs, "Number of passes over the training set");
    lr_opt = app.add_option("--learning-rate", learning_rate, "ADAM step size");
    l2_opt = app.add_option("--l2", l2_lambda, "L2 weight penalty strength");
    runs_opt = app.add_option("--n-runs", n_runs, "Independent runs per configuration");
    seed_opt = app.add_option("--base-seed", base_seed, "Seed of run 0; run k uses base+k");
    threads_opt = app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
    grid_opt = app.add_option("--grid", grid, "Evaluation grid points per dimension");
    out_opt = app.add_option("--output-dir", output_dir, "Directory for results");
  }

  void apply(RunManifest& m) const {
    if (*epochs_opt) m.training.epochs = epochs;
    if (*lr_opt) m.training.learning_rate = learning_rate;
    if (*l2_opt) m.training.l2_lambda = l2_lambda;
    if (*runs_opt) m.n_runs = n_runs;
    if (*seed_opt) m.base_seed = base_seed;
    if (*threads_opt) m.threads = threads;
    if (*grid_opt) m.grid_resolution = grid;
    if (*out_opt) m.output_dir = output_dir;
  }
};

int cmd_train(const std::string& manifest_path, const TrainingOverrides& overrides, std::ostream& out) {
  RunManifest manifest = load_manifest(manifest_path);
  overrides.apply(manifest);
  manifest.validate();
  const NetworkConfigD config = manifest.network_config();
  const TargetFunction fn = manifest.target_function();
  const Dataset data = manifest_dataset(manifest);
  const Index resolution = manifest.grid_resolution.value_or(fn.default_grid_resolution());
  const int n_runs = manifest.n_runs.value_or(1);

  out << "training " << (manifest.preset ? *manifest.preset : std::string("custom network")) << " on " << fn.name()
      << " (" << data.size() << " samples, " << n_runs << " run(s), " << manifest.training.epochs << " epochs)\n";
  const BestOfN result = best_of_n(config, manifest.training, data, n_runs, manifest.base_seed,
                                   make_evaluator(fn, resolution), manifest.threads);

  const fs::path dir = output_root(manifest.output_dir);
  std::string log = "run,epoch,mean_loss\n";
  json failures = json::array();
  for (const auto& run : result.runs) {
    if (!run.result) {
      failures.push_back({{"run", run.run_index}, {"error", run.failure}});
      out << "  run " << run.run_index << ": diverged (" << run.failure << ")\n";
      continue;
    }
    TrainingConfig used = manifest.training;
    used.init_seed = run.init_seed;
    used.shuffle_seed = run.shuffle_seed;
    ModelProvenance provenance{"train", used, run.run_index, data.provenance.kind + ":" + fn.name()};
    save_model(dir / run_file_name(run.run_index), ModelFile{run.result->trained, provenance});
    for (const auto& rec : run.result->loss_log)
      log += std::to_string(run.run_index) + "," + std::to_string(rec.epoch) + "," + format_real(rec.mean_loss) + "\n";
    out << "  run " << run.run_index << ": mae " << run.result->eval.mae << ", sd " << run.result->eval.sd << "\n";
  }
  const auto& best = result.best();
  write_text(dir / "train_log.csv", log);
  write_text(dir / "eval.json", report_to_json(best.eval).dump(2) + "\n");
  const json marker{{"best_run", result.best_index},
                    {"model", run_file_name(static_cast<int>(result.best_index))},
                    {"eval", report_to_json(best.eval)},
                    {"failed_runs", failures}};
  write_text(dir / "best_run.json", marker.dump(2) + "\n");
  out << "best run " << result.best_index << ": mae " << best.eval.mae << ", sd " << best.eval.sd << "\n";
  out << "wrote results to " << dir.string() << "\n";
  return kSuccess;
}

int cmd_eval(const std::string& model_path, const std::string& target, Index grid, const std::string& output_dir,
             std::ostream& out) {
  const ModelFile model = load_model(model_path);
  const TargetFunction fn = target_function(target);
  const Index resolution = grid > 0 ? grid : fn.default_grid_resolution();
  const EvalGrid samples = evaluate_grid(model.network, fn, resolution);
  const EvalReport report = summarize(samples, fn, resolution);
  const fs::path dir = output_root(output_dir);
  write_text(dir / "eval.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "grid.csv", grid_to_csv(samples));
  out << "mae " << format_real(report.mae) << ", sd " << format_real(report.sd) << ", max |error| "
      << format_real(report.max_abs_error) << "\n";
  return kSuccess;
}

struct ReproduceArgs {
  int table = 0;
  std::string manifest;
  std::vector<std::string> networks;
  std::uint64_t dataset_seed = 0;
  CLI::Option* table_opt = nullptr;
  CLI::Option* networks_opt = nullptr;
  CLI::Option* dataset_seed_opt = nullptr;
};

int cmd_reproduce(const ReproduceArgs& args, const TrainingOverrides& overrides, std::ostream& out) {
  RunManifest manifest = args.manifest.empty() ? RunManifest{} : load_manifest(args.manifest);
  overrides.apply(manifest);
  if (*args.table_opt) manifest.table = args.table;
  if (*args.networks_opt) manifest.networks = args.networks;
  if (*args.dataset_seed_opt) manifest.dataset.seed = args.dataset_seed;
  if (!manifest.table) throw ValidationError("reproduce: --table (1 or 2) is required");
  if (manifest.preset || manifest.config) throw ValidationError("reproduce: manifests select rows with 'networks'");
  manifest.validate();

  ReproduceOptions options;
  options.n_runs = manifest.n_runs.value_or(10);
  options.base_seed = manifest.base_seed;
  options.dataset_seed = manifest.dataset.seed;
  if (manifest.dataset.n > 0) {
    options.n_train_1d = manifest.dataset.n;
    options.n_train_2d = manifest.dataset.n;
  }
  options.grid_resolution = manifest.grid_resolution;
  options.networks = manifest.networks;
  options.threads = manifest.threads;

  const int table = *manifest.table;
  out << "reproducing table " << table << " with " << options.n_runs << " run(s) per network, "
      << manifest.training.epochs << " epochs\n";
  const ReproducedTable result = reproduce_table(table, manifest.training, options);

  const fs::path dir = output_root(manifest.output_dir);
  const std::string stem = "table" + std::to_string(table);
  write_text(dir / (stem + ".csv"), table_to_csv(result));
  const std::string summary = table_summary(result);
  write_text(dir / (stem + "_summary.txt"), summary);
  bool any_ok = false;
  for (const auto& row : result.rows) {
    if (!row.result) continue;
    any_ok = true;
    TrainingConfig used = manifest.training;
    const auto& best = row.result->runs[row.result->best_index];
    used.init_seed = best.init_seed;
    used.shuffle_seed = best.shuffle_seed;
    save_model(dir / (stem + "_" + slug(row.preset.name) + "_best.json"),
               ModelFile{best.result->trained,
                         ModelProvenance{"reproduce", used, best.run_index,
                                         result.training.provenance.kind + ":" + result.training.provenance.target}});
  }
  out << summary;
  if (!any_ok) {
    out << "every row failed\n";
    return kReproductionFailed;
  }
  return kSuccess;
}

int cmd_dataset_generate(const std::string& target, Index n, std::uint64_t seed, const std::string& path,
                         std::ostream& out) {
  const TargetFunction fn = target_function(target);
  const Dataset data = fn.kind == Target::OneDimensional ? generate_1d_dataset(n > 0 ? n : 194)
                                                          : generate_2d_dataset(n > 0 ? n : 300, seed);
  const fs::path file = output_root(path);
  save_dataset(file, data);
  out << "wrote " << data.size() << " samples to " << file.string() << "\n";
  return kSuccess;
}

int cmd_dataset_validate(const std::string& target, const std::string& path, std::ostream& out) {
  const Dataset data = load_dataset(path, target_function(target));
  out << path << ": " << data.size() << " valid samples\n";
  return kSuccess;
}

int cmd_demo_multiplier(double x, double y, const std::string& path, std::ostream& out) {
  const NetworkD net = build_multiplier_network();
  Eigen::Vector2d input(x, y);
  const double product = forward<double>(net, input)[0];
  out << format_real(x) << " * " << format_real(y) << " = " << format_real(product) << "\n";
  if (!path.empty()) {
    const fs::path file = output_root(path);
    save_model(file, ModelFile{net, ModelProvenance{"demo-multiplier", std::nullopt, std::nullopt, ""}});
    out << "wrote multiplier model to " << file.string() << "\n";
  }
  return kSuccess;
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Io: return kIo;
    case ErrorCategory::Divergence: return kDivergence;
    case ErrorCategory::Domain:
    case ErrorCategory::Validation:
    case ErrorCategory::Integrity: return kValidation;
  }
  return kValidation;
}

std::string one_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r') c = ' ';
  return text;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Networks with amplifying and attenuating neurons: training and benchmark harness", "ampnn"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train the network described by a manifest");
  std::string manifest_path;
  train->add_option("manifest", manifest_path, "Run manifest (JSON)")->required();
  TrainingOverrides train_overrides;
  train_overrides.attach(*train);

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model against an exact target");
  std::string model_path;
  std::string eval_target;
  Index eval_grid = 0;
  std::string eval_out = ".";
  eval->add_option("model", model_path, "Model file (JSON)")->required();
  eval->add_option("--target", eval_target, "1d or ackley")->required();
  eval->add_option("--grid", eval_grid, "Grid points per dimension (default 2001 for 1d, 201 for ackley)");
  eval->add_option("--output-dir", eval_out, "Directory for eval.json and grid.csv");

  auto* reproduce = app.add_subcommand("reproduce", "Re-run the benchmark table sweeps");
  ReproduceArgs rargs;
  TrainingOverrides reproduce_overrides;
  rargs.table_opt = reproduce->add_option("--table", rargs.table, "1 (1d target) or 2 (ackley)");
  reproduce->add_option("--manifest", rargs.manifest, "Run manifest (JSON); flags take precedence");
  rargs.networks_opt = reproduce->add_option("--networks", rargs.networks, "Subset of rows, e.g. \"Network 5\"");
  rargs.dataset_seed_opt = reproduce->add_option("--dataset-seed", rargs.dataset_seed, "Seed of the ackley samples");
  reproduce_overrides.attach(*reproduce);

  auto* dataset = app.add_subcommand("dataset", "Generate or validate dataset CSV files");
  dataset->require_subcommand(1);
  auto* generate = dataset->add_subcommand("generate", "Write a benchmark training set");
  std::string gen_target;
  Index gen_n = 0;
  std::uint64_t gen_seed = 2020;
  std::string gen_out;
  generate->add_option("--target", gen_target, "1d or ackley")->required();
  generate->add_option("--n", gen_n, "Number of samples (default 194 for 1d, 300 for ackley)");
  generate->add_option("--seed", gen_seed, "Sampling seed (ackley)");
  generate->add_option("--out", gen_out, "Output CSV")->required();
  auto* validate = dataset->add_subcommand("validate", "Check a dataset CSV against its exact target");
  std::string val_target;
  std::string val_in;
  validate->add_option("--target", val_target, "1d or ackley")->required();
  validate->add_option("file", val_in, "Dataset CSV")->required();

  auto* demo = app.add_subcommand("demo-multiplier", "Multiply two numbers with the two-neuron network");
  double demo_x = 2.0;
  double demo_y = 3.0;
  std::string demo_out;
  demo->add_option("--x", demo_x, "First factor");
  demo->add_option("--y", demo_y, "Second factor");
  demo->add_option("--out", demo_out, "Also save the network as a model file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error[validation]: " << one_line(e.what()) << "\n";
    return kValidation;
  }

  try {
    if (*train) return cmd_train(manifest_path, train_overrides, out);
    if (*eval) return cmd_eval(model_path, eval_target, eval_grid, eval_out, out);
    if (*reproduce) return cmd_reproduce(rargs, reproduce_overrides, out);
    if (*generate) return cmd_dataset_generate(gen_target, gen_n, gen_seed, gen_out, out);
    if (*validate) return cmd_dataset_validate(val_target, val_in, out);
    if (*demo) return cmd_demo_multiplier(demo_x, demo_y, demo_out, out);
  } catch (const Error& e) {
    err << "error[" << category_name(e.category()) << "]: " << one_line(e.what()) << "\n";
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "error[io]: " << one_line(e.what()) << "\n";
    return kIo;
  }
  return kValidation;
}

}  // namespace ampnn::cli
