#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "protoridge/dataset.hpp"
#include "protoridge/linear_probe.hpp"
#include "protoridge/metrics.hpp"
#include "protoridge/projector.hpp"
#include "protoridge/ridge_head.hpp"

namespace protoridge {

enum class Method { kProposed, kNcm, kLpOnline, kLpOffline, kJlpOnline, kJlpOffline };

std::string to_string(Method m);                      // "proposed", "ncm", "lp-online", ...
Method method_from_string(const std::string& name);   // accepts '-' or '_' separators
bool is_joint(Method m);
std::vector<Method> all_methods();

/// Settings of the projected ridge head. Defaults follow the reference configuration.
struct ProposedConfig {
  std::uint32_t q = 8192;
  bool use_projection = true;  // false: ridge head on the raw H-dim embeddings
  Nonlinearity nonlinearity = Nonlinearity::kRelu;
  std::optional<double> fixed_lambda;
  LambdaSearchOptions search;
  bool normalize_embeddings = false;  // L2-normalize embeddings before projection
  std::optional<Matrix> projection_override;  // explicit H x Q weights (tests)
};

struct RunConfig {
  Method method = Method::kProposed;
  ProposedConfig proposed;
  ProbeHyper probe;
  bool randomize_classes = true;   // CIL: fresh class-to-task assignment per run
  bool randomize_order = true;     // DIL: fresh task order per run
  std::string variant = "full";    // label carried into records and reports
};

enum class SplitKind { kTrain, kValidation, kTest };

/// Records which task splits a run reads at which stage.
///
/// For non-joint methods, reading train/validation of any task other than the current stage,
/// or test of a future task, is a violation. Violations are also counted process-wide so a
/// test binary can assert none happened across all runs it executed.
class AccessTracker {
 public:
  explicit AccessTracker(bool allow_past_training) : allow_past_training_(allow_past_training) {}

  void begin_stage(std::size_t stage) { stage_ = stage; }
  void record(std::size_t task, SplitKind kind);

  std::size_t stage() const noexcept { return stage_; }
  std::size_t violations() const noexcept { return violations_; }
  std::size_t past_training_reads() const noexcept { return past_training_reads_; }
  std::size_t reads() const noexcept { return reads_; }

  static std::size_t global_violations() noexcept { return global_violations_.load(); }

 private:
  bool allow_past_training_;
  std::size_t stage_ = 0;
  std::size_t reads_ = 0;
  std::size_t violations_ = 0;
  std::size_t past_training_reads_ = 0;
  static inline std::atomic<std::size_t> global_violations_{0};
};

/// Stage-ordered view of one fold of a run. Every split read goes through the tracker.
class TaskStream {
 public:
  TaskStream(std::vector<SplitBatches> stages, AccessTracker& tracker);

  std::size_t size() const noexcept { return stages_.size(); }
  const EmbeddingBatch& train(std::size_t task);
  const EmbeddingBatch& validation(std::size_t task);
  const EmbeddingBatch& test(std::size_t task);

 private:
  const SplitBatches& at(std::size_t task) const;

  std::vector<SplitBatches> stages_;
  AccessTracker& tracker_;
};

struct RunRecord {
  std::string manifest_hash;
  std::string protocol;  // CIL / DIL
  std::string method;
  std::string variant = "full";
  std::uint64_t run_seed = 0;
  std::map<std::string, std::uint64_t> seeds;      // derived sub-seeds by stream name
  std::vector<std::uint32_t> task_order;           // DIL: manifest task ids in stage order
  std::vector<std::vector<std::uint32_t>> class_assignment;  // CIL: classes per stage
  std::vector<std::vector<double>> lambdas;        // [stage][fold], proposed only
  MetricsLedger ledger;
  std::vector<double> stage_seconds;
  std::size_t folds = 1;
  bool protocol_violating = false;  // joint methods read past training data
  std::size_t access_violations = 0;
  std::uint64_t head_parameters = 0;    // trainable classifier parameters at the final stage
  std::uint64_t frozen_parameters = 0;  // projection matrix
  std::string config_json;              // resolved configuration snapshot
};

/// Runs `config.method` once per seed over `data`; `jobs` > 1 runs seeds in parallel.
std::vector<RunRecord> run_protocol(const ProtocolData& data, const RunConfig& config,
                                    const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

/// Single seeded run.
RunRecord run_single(const ProtocolData& data, const RunConfig& config, std::uint64_t seed);

/// Resolved configuration as JSON text (embedded in records and CLI run headers).
std::string config_to_json(const RunConfig& config);

struct StageAggregate {
  std::size_t stage = 0;
  MeanStd aa;
  std::optional<MeanStd> fr;  // absent for stage 1
};

struct MethodReport {
  std::string method;
  std::string variant;
  std::size_t runs = 0;
  std::vector<StageAggregate> stages;
  MeanStd final_aa;
  std::optional<MeanStd> final_fr;
  bool protocol_violating = false;
  std::uint64_t head_parameters = 0;
};

/// Per-stage mean and sample std of AA_t and FR_t over records of one method/variant.
/// Throws InvariantError on an empty list, mixed manifests or mixed methods.
MethodReport aggregate_runs(const std::vector<RunRecord>& records);

/// Groups records by (method, variant) and aggregates each group. All records must share a manifest.
std::vector<MethodReport> aggregate_by_method(const std::vector<RunRecord>& records);

enum class AblationKind { kFull, kNoProjection, kProjectionNoRelu, kQSweep };

struct AblationVariant {
  AblationKind kind = AblationKind::kFull;
  std::vector<std::uint32_t> q_values;  // q_sweep only
};

struct AblationRow {
  std::string variant;
  std::uint32_t q = 0;  // feature width seen by the head (H for no_projection)
  MethodReport report;
  std::uint64_t head_parameters = 0;       // Q x C (H x C without projection)
  std::uint64_t frozen_parameters = 0;     // H x Q projection, 0 without projection
  std::uint64_t linear_probe_parameters = 0;  // H x C reference
};

/// Runs the proposed method under the requested ablation; one row per variant (or per Q).
std::vector<AblationRow> run_ablation(const ProtocolData& data, const AblationVariant& variant,
                                      const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                                      std::size_t jobs = 1);

/// Trainable classifier parameters for a width-`features` head over C classes.
constexpr std::uint64_t head_parameter_count(std::uint64_t features, std::uint64_t classes) {
  return features * classes;
}

}  // namespace protoridge
