// protoridge: generate synthetic protocols, run incremental-learning experiments, render reports.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <protoridge/dataset.hpp>
#include <protoridge/protocol.hpp>
#include <protoridge/report.hpp>
#include <protoridge/synth.hpp>

namespace fs = std::filesystem;
using namespace protoridge;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// --out, else $PROTORIDGE_OUT, else a usage error.
fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PROTORIDGE_OUT"); env && *env) return env;
  throw UsageError("--out is required (or set PROTORIDGE_OUT)");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--seeds: '" + item + "' is not a non-negative integer");
    }
  }
  if (seeds.empty()) throw UsageError("--seeds: no seeds given");
  return seeds;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string kind = "gaussian";
  std::uint32_t classes = 4;
  std::uint32_t dim = 16;
  std::uint32_t per_class = 50;
  std::uint64_t seed = 1;
  std::optional<std::uint32_t> tasks;
  double separation = 4.0;
  double shift = 2.0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  const fs::path out = output_dir(a.out);
  ProtocolData data;
  if (a.kind == "gaussian") {
    data = gen_gaussian_cil(a.classes, a.tasks.value_or(2), a.dim, a.per_class, a.separation, a.seed);
  } else if (a.kind == "xor") {
    if (a.classes != 2) throw UsageError("--kind xor generates exactly 2 classes (got --classes " + std::to_string(a.classes) + ")");
    data = gen_xor_protocol(a.dim, a.per_class, a.tasks.value_or(3), a.seed, a.separation);
  } else {
    data = gen_domain_shifted(a.classes, a.dim, a.tasks.value_or(3), a.shift, a.per_class, a.separation, a.seed);
  }
  const fs::path manifest = write_protocol_data(data, out);
  fmt::print("wrote {} ({} {} tasks, C={}, H={})\n", manifest.string(), data.manifest.task_count(),
             to_string(data.manifest.protocol), data.manifest.total_classes, data.manifest.embedding_dim);
  return 0;
}

// ---------------------------------------------------------------- run

struct RunArgs {
  std::string manifest;
  std::string methods = "proposed";
  std::uint32_t q = 8192;
  std::string seeds;
  std::string out;
  std::optional<double> lambda_fixed;
  bool no_projection = false;
  bool no_relu = false;
  bool normalize = false;
  std::size_t jobs = 1;
  std::optional<double> probe_lr;
  std::optional<std::size_t> probe_epochs;
};

std::string variant_of(const RunArgs& a) {
  std::vector<std::string> parts;
  if (a.no_projection) parts.emplace_back("no_projection");
  if (a.no_relu) parts.emplace_back("projection_no_relu");
  if (a.lambda_fixed) parts.push_back(fmt::format("lambda_{:g}", *a.lambda_fixed));
  if (a.normalize) parts.emplace_back("l2norm");
  return parts.empty() ? "full" : fmt::format("{}", fmt::join(parts, "_"));
}

int cmd_run(const RunArgs& a) {
  const fs::path out = output_dir(a.out);
  if (a.no_projection && a.no_relu) throw UsageError("--no-projection and --no-relu are mutually exclusive");
  if (a.q == 0) throw UsageError("--q must be positive");
  if (a.lambda_fixed && !(*a.lambda_fixed > 0)) throw UsageError("--lambda-fixed must be positive");

  std::vector<Method> methods;
  std::stringstream ss(a.methods);
  for (std::string name; std::getline(ss, name, ',');) {
    if (name == "all") {
      const auto every = all_methods();
      methods.insert(methods.end(), every.begin(), every.end());
    } else {
      try {
        methods.push_back(method_from_string(name));
      } catch (const InvariantError& e) {
        throw UsageError(e.what());
      }
    }
  }
  if (methods.empty()) throw UsageError("--method: no method given");

  const ProtocolData data = load_protocol_data(a.manifest);
  const auto seeds = a.seeds.empty() ? data.manifest.run_seeds : parse_seeds(a.seeds);

  std::vector<RunRecord> all;
  for (Method m : methods) {
    RunConfig cfg;
    cfg.method = m;
    cfg.proposed.q = a.q;
    cfg.proposed.use_projection = !a.no_projection;
    cfg.proposed.nonlinearity = a.no_relu ? Nonlinearity::kIdentity : Nonlinearity::kRelu;
    cfg.proposed.fixed_lambda = a.lambda_fixed;
    cfg.proposed.normalize_embeddings = a.normalize;
    if (a.probe_lr) cfg.probe.lr = *a.probe_lr;
    if (a.probe_epochs) cfg.probe.max_epochs = *a.probe_epochs;
    cfg.variant = m == Method::kProposed ? variant_of(a) : "full";

    fmt::print("# run {} on {} (manifest {}), seeds {}\n", to_string(m), a.manifest, data.manifest.hash(),
               fmt::join(seeds, ","));
    if (m == Method::kProposed) {
      const auto& grid = cfg.proposed.fixed_lambda ? std::vector<double>{*cfg.proposed.fixed_lambda} : cfg.proposed.search.grid;
      fmt::print("# Q={} projection={} nonlinearity={} lambda grid=[{:g}]\n",
                 cfg.proposed.use_projection ? cfg.proposed.q : data.manifest.embedding_dim,
                 cfg.proposed.use_projection ? "on" : "off",
                 cfg.proposed.use_projection ? to_string(cfg.proposed.nonlinearity) : std::string("none"),
                 fmt::join(grid, ", "));
    }
    fmt::print("# config {}\n", config_to_json(cfg));

    for (auto& r : run_protocol(data, cfg, seeds, a.jobs)) {
      const fs::path path = save_record(r, out);
      fmt::print("{}  AA_T={:.4f}\n", path.string(), average_accuracy(r.ledger, r.ledger.task_count()));
      all.push_back(std::move(r));
    }
  }
  std::cout << '\n' << report_table(aggregate_by_method(all));
  return 0;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  std::string manifest;
  std::string variant = "full";
  std::string qs = "32,128,512";
  std::uint32_t q = 8192;
  std::string seeds;
  std::string out;
  std::size_t jobs = 1;
};

int cmd_ablate(const AblateArgs& a) {
  const fs::path out = output_dir(a.out);
  AblationVariant v;
  if (a.variant == "full") {
    v.kind = AblationKind::kFull;
  } else if (a.variant == "no_projection") {
    v.kind = AblationKind::kNoProjection;
  } else if (a.variant == "projection_no_relu") {
    v.kind = AblationKind::kProjectionNoRelu;
  } else {
    v.kind = AblationKind::kQSweep;
    for (auto q : parse_seeds(a.qs)) {
      if (q == 0 || q > UINT32_MAX) throw UsageError("--qs: Q must be a positive 32-bit value");
      v.q_values.push_back(static_cast<std::uint32_t>(q));
    }
  }
  const ProtocolData data = load_protocol_data(a.manifest);
  const auto seeds = a.seeds.empty() ? data.manifest.run_seeds : parse_seeds(a.seeds);
  RunConfig base;
  base.proposed.q = a.q;
  const auto rows = run_ablation(data, v, base, seeds, a.jobs);
  fs::create_directories(out);
  write_text(out / "ablation.csv", ablation_csv(rows));
  std::cout << ablation_table(rows);
  return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::string& runs, bool stagewise, bool csv) {
  const auto reports = aggregate_by_method(load_records(runs));
  if (stagewise) {
    std::cout << stagewise_csv(reports);
  } else if (csv) {
    std::cout << report_csv(reports);
  } else {
    std::cout << report_table(reports);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protoridge: training-free class prototypes for incremental audio classification"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate datasets");
  auto* synth_cmd = gen_cmd->add_subcommand("synth", "Synthetic embedding protocol (EMB1 files + manifest.json)");
  gen_cmd->require_subcommand(1);
  synth_cmd->add_option("--kind", gen.kind, "gaussian (CIL), xor (DIL), domain (DIL)")
      ->check(CLI::IsMember({"gaussian", "xor", "domain"}));
  synth_cmd->add_option("--classes", gen.classes, "Total classes C")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dim", gen.dim, "Embedding width H")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--per-class", gen.per_class, "Samples per class per task, split 60/20/20")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", gen.seed, "Generator seed");
  synth_cmd->add_option("--tasks", gen.tasks, "Task (or domain) count")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--separation", gen.separation, "Distance of class centers from the origin");
  synth_cmd->add_option("--shift", gen.shift, "Domain offset norm (--kind domain)");
  synth_cmd->add_option("--out", gen.out, "Output directory (default $PROTORIDGE_OUT)");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run methods over a protocol manifest");
  run_cmd->add_option("--manifest", run.manifest, "Protocol manifest")->required();
  run_cmd->add_option("--method", run.methods, "proposed, ncm, lp-online, lp-offline, jlp-online, jlp-offline, comma list or all");
  run_cmd->add_option("--q", run.q, "Projection width Q");
  run_cmd->add_option("--seeds", run.seeds, "Comma-separated run seeds (default: manifest run_seeds)");
  run_cmd->add_option("--out", run.out, "Output directory (default $PROTORIDGE_OUT)");
  run_cmd->add_option("--lambda-fixed", run.lambda_fixed, "Use this lambda instead of the grid search");
  run_cmd->add_flag("--no-projection", run.no_projection, "Ridge head on raw embeddings");
  run_cmd->add_flag("--no-relu", run.no_relu, "Random projection without the nonlinearity");
  run_cmd->add_flag("--l2-normalize", run.normalize, "L2-normalize embeddings before projection");
  run_cmd->add_option("--jobs", run.jobs, "Seeds run in parallel")->check(CLI::PositiveNumber);
  run_cmd->add_option("--probe-lr", run.probe_lr, "Linear-probe learning rate (default 1e-4)");
  run_cmd->add_option("--probe-epochs", run.probe_epochs, "Linear-probe max epochs in offline mode (default 100)");

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Ablations of the projected ridge head");
  ablate_cmd->add_option("--manifest", ablate.manifest, "Protocol manifest")->required();
  ablate_cmd->add_option("--variant", ablate.variant, "full, no_projection, projection_no_relu or q_sweep")
      ->check(CLI::IsMember({"full", "no_projection", "projection_no_relu", "q_sweep"}));
  ablate_cmd->add_option("--qs", ablate.qs, "Q values for q_sweep");
  ablate_cmd->add_option("--q", ablate.q, "Projection width Q for the other variants");
  ablate_cmd->add_option("--seeds", ablate.seeds, "Comma-separated run seeds (default: manifest run_seeds)");
  ablate_cmd->add_option("--out", ablate.out, "Output directory (default $PROTORIDGE_OUT)");
  ablate_cmd->add_option("--jobs", ablate.jobs, "Seeds run in parallel")->check(CLI::PositiveNumber);

  std::string runs_dir;
  bool stagewise = false, csv = false;
  auto* report_cmd = app.add_subcommand("report", "Summarize run records");
  report_cmd->add_option("--runs", runs_dir, "Directory of run records")->required();
  report_cmd->add_flag("--stagewise", stagewise, "Per-stage AA_t / FR_t as CSV");
  report_cmd->add_flag("--csv", csv, "Final-stage table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (*synth_cmd) return cmd_gen(gen);
    if (*run_cmd) return cmd_run(run);
    if (*ablate_cmd) return cmd_ablate(ablate);
    if (*report_cmd) return cmd_report(runs_dir, stagewise, csv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}
