#include "protoridge/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "protoridge/ncm.hpp"
#include "protoridge/rng.hpp"

namespace protoridge {

namespace {

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::kProposed, "proposed"},   {Method::kNcm, "ncm"},
    {Method::kLpOnline, "lp-online"},  {Method::kLpOffline, "lp-offline"},
    {Method::kJlpOnline, "jlp-online"}, {Method::kJlpOffline, "jlp-offline"},
};

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  if (truth.empty()) throw InvariantError("evaluation: empty test split");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct StagePlan {
  std::vector<std::uint32_t> task_order;                      // manifest indices (0-based), DIL
  std::vector<std::vector<std::uint32_t>> class_assignment;   // CIL
};

StagePlan plan_stages(const ProtocolData& data, const RunConfig& config, std::uint64_t seed) {
  const auto& m = data.manifest;
  StagePlan plan;
  if (m.protocol == Protocol::kClassIncremental) {
    std::vector<std::uint32_t> classes;
    for (const auto& t : m.tasks) classes.insert(classes.end(), t.classes.begin(), t.classes.end());
    if (config.randomize_classes) {
      std::sort(classes.begin(), classes.end());
      Rng rng(derive_seed(seed, "class-assignment"));
      rng.shuffle(classes.begin(), classes.end());
    }
    std::size_t at = 0;
    for (const auto& t : m.tasks) {
      std::vector<std::uint32_t> chunk(classes.begin() + static_cast<long>(at),
                                       classes.begin() + static_cast<long>(at + t.classes.size()));
      if (config.randomize_classes) std::sort(chunk.begin(), chunk.end());
      plan.class_assignment.push_back(std::move(chunk));
      at += t.classes.size();
    }
  } else {
    plan.task_order.resize(m.tasks.size());
    std::iota(plan.task_order.begin(), plan.task_order.end(), 0u);
    if (config.randomize_order) {
      Rng rng(derive_seed(seed, "task-order"));
      rng.shuffle(plan.task_order.begin(), plan.task_order.end());
    }
  }
  return plan;
}

std::vector<SplitBatches> stage_batches(const ProtocolData& data, const StagePlan& plan, std::size_t fold) {
  std::vector<SplitBatches> stages;
  if (!plan.class_assignment.empty()) {
    std::vector<EmbeddingBatch> train, val, test;
    for (const auto& t : data.tasks) {
      train.push_back(t.folds[fold].train);
      val.push_back(t.folds[fold].validation);
      test.push_back(t.folds[fold].test);
    }
    const auto pooled_train = EmbeddingBatch::concat(train);
    const auto pooled_val = EmbeddingBatch::concat(val);
    const auto pooled_test = EmbeddingBatch::concat(test);
    for (const auto& classes : plan.class_assignment) {
      stages.push_back(SplitBatches{pooled_train.filter_classes(classes), pooled_val.filter_classes(classes),
                                    pooled_test.filter_classes(classes)});
    }
  } else {
    for (auto idx : plan.task_order) stages.push_back(data.tasks[idx].folds[fold]);
  }
  return stages;
}

/// Embedding-to-feature map used by the proposed method.
class Featurizer {
 public:
  Featurizer(const ProposedConfig& cfg, std::uint32_t in_dim, std::uint64_t seed) : normalize_(cfg.normalize_embeddings) {
    if (!cfg.use_projection) return;
    if (cfg.projection_override) {
      projection_.emplace(ProjectionMatrix::from_weights(*cfg.projection_override, cfg.nonlinearity));
    } else {
      if (cfg.q == 0) throw InvariantError("proposed: Q must be positive");
      projection_.emplace(make_projection(in_dim, cfg.q, seed, cfg.nonlinearity));
    }
    if (projection_->in_dim() != in_dim) throw DimensionError("proposed: projection in_dim does not match H");
  }

  std::uint32_t width(std::uint32_t in_dim) const { return projection_ ? projection_->out_dim() : in_dim; }
  std::uint64_t frozen_parameters() const { return projection_ ? projection_->parameter_count() : 0; }

  FeatureBatch operator()(const EmbeddingBatch& batch) const {
    if (!normalize_) return projection_ ? project(*projection_, batch) : identity_features(batch);
    EmbeddingBatch normalized = batch;
    for (long i = 0; i < normalized.vectors.rows(); ++i) {
      const double n = normalized.vectors.row(i).norm();
      if (n > 0) normalized.vectors.row(i) /= n;
    }
    return projection_ ? project(*projection_, normalized) : identity_features(normalized);
  }

 private:
  bool normalize_;
  std::optional<ProjectionMatrix> projection_;
};

struct FoldOutcome {
  std::vector<std::vector<double>> acc;  // [t][j], 0-based, j <= t
  std::vector<double> lambdas;
  std::vector<double> seconds;
  std::uint64_t head_parameters = 0;
  std::uint64_t frozen_parameters = 0;
};

FoldOutcome run_fold(const ProtocolData& data, const RunConfig& config, std::uint64_t seed, TaskStream& stream,
                     AccessTracker& tracker) {
  const auto& m = data.manifest;
  const std::uint32_t H = m.embedding_dim;
  const std::uint32_t C = m.total_classes;
  const std::size_t T = stream.size();
  FoldOutcome out;
  out.acc.resize(T);

  using Clock = std::chrono::steady_clock;
  auto timed_stage = [&](std::size_t t, auto&& train_fn, auto&& predict_fn) {
    tracker.begin_stage(t + 1);
    const auto start = Clock::now();
    train_fn(t);
    for (std::size_t j = 0; j <= t; ++j) {
      const auto& test = stream.test(j);
      out.acc[t].push_back(accuracy(predict_fn(test), test.labels));
    }
    out.seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());
  };

  switch (config.method) {
    case Method::kProposed: {
      const Featurizer featurize(config.proposed, H, derive_seed(seed, "projection"));
      SufficientStats stats(featurize.width(H), C);
      std::optional<RidgeHead> head;
      LearnOptions opts{config.proposed.fixed_lambda, config.proposed.search};
      for (std::size_t t = 0; t < T; ++t) {
        timed_stage(
            t,
            [&](std::size_t s) {
              auto result = learn_task(std::move(stats), featurize(stream.train(s)), derive_seed(seed, "lambda-split", s), opts);
              stats = std::move(result.stats);
              head = std::move(result.head);
              out.lambdas.push_back(head->lambda);
            },
            [&](const EmbeddingBatch& test) { return predict(*head, featurize(test).features).labels; });
      }
      out.head_parameters = head->parameter_count();
      out.frozen_parameters = featurize.frozen_parameters();
      break;
    }
    case Method::kNcm: {
      NcmModel ncm(H, C);
      for (std::size_t t = 0; t < T; ++t) {
        timed_stage(
            t, [&](std::size_t s) { ncm.update(stream.train(s)); },
            [&](const EmbeddingBatch& test) { return ncm.predict(test); });
      }
      out.head_parameters = 0;
      break;
    }
    case Method::kLpOnline:
    case Method::kLpOffline: {
      const ProbeMode mode = config.method == Method::kLpOnline ? ProbeMode::kOnline : ProbeMode::kOfflineEarlyStop;
      LinearProbe probe(H, C, derive_seed(seed, "probe-init"));
      for (std::size_t t = 0; t < T; ++t) {
        timed_stage(
            t,
            [&](std::size_t s) {
              const auto& train = stream.train(s);
              const EmbeddingBatch val =
                  mode == ProbeMode::kOnline ? EmbeddingBatch::empty(H) : stream.validation(s);
              probe_train(probe, train, mode, val, config.probe, derive_seed(seed, "probe-shuffle", s));
            },
            [&](const EmbeddingBatch& test) { return probe.predict(test.vectors); });
      }
      out.head_parameters = probe.parameter_count();
      break;
    }
    case Method::kJlpOnline:
    case Method::kJlpOffline: {
      const ProbeMode mode = config.method == Method::kJlpOnline ? ProbeMode::kOnline : ProbeMode::kOfflineEarlyStop;
      std::optional<LinearProbe> probe;
      for (std::size_t t = 0; t < T; ++t) {
        timed_stage(
            t,
            [&](std::size_t s) {
              std::vector<EmbeddingBatch> history, val_history;
              for (std::size_t j = 0; j <= s; ++j) {
                history.push_back(stream.train(j));
                if (mode == ProbeMode::kOfflineEarlyStop) val_history.push_back(stream.validation(j));
              }
              probe.emplace(probe_joint_train(history, val_history, C, mode, config.probe,
                                              derive_seed(seed, "probe-init"), derive_seed(seed, "probe-shuffle", s)));
            },
            [&](const EmbeddingBatch& test) { return probe->predict(test.vectors); });
      }
      out.head_parameters = probe->parameter_count();
      break;
    }
  }
  return out;
}

}  // namespace

std::string to_string(Method m) {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  std::string norm = name;
  std::replace(norm.begin(), norm.end(), '_', '-');
  for (const auto& [method, n] : kMethodNames) {
    if (norm == n) return method;
  }
  throw InvariantError("unknown method '" + name + "' (expected proposed, ncm, lp-online, lp-offline, jlp-online or jlp-offline)");
}

bool is_joint(Method m) { return m == Method::kJlpOnline || m == Method::kJlpOffline; }

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (const auto& [method, name] : kMethodNames) out.push_back(method);
  return out;
}

void AccessTracker::record(std::size_t task, SplitKind kind) {
  ++reads_;
  bool violation = false;
  if (kind == SplitKind::kTest) {
    violation = task > stage_;
  } else if (task != stage_) {
    if (task < stage_ && allow_past_training_) {
      ++past_training_reads_;
    } else {
      violation = true;
    }
  }
  if (violation) {
    ++violations_;
    global_violations_.fetch_add(1);
  }
}

TaskStream::TaskStream(std::vector<SplitBatches> stages, AccessTracker& tracker)
    : stages_(std::move(stages)), tracker_(tracker) {}

const SplitBatches& TaskStream::at(std::size_t task) const {
  if (task >= stages_.size()) throw InvariantError(fmt::format("task stream: no task {}", task + 1));
  return stages_[task];
}

// Public indices are 0-based; the tracker works with 1-based stage numbers.
const EmbeddingBatch& TaskStream::train(std::size_t task) {
  const auto& s = at(task);
  tracker_.record(task + 1, SplitKind::kTrain);
  return s.train;
}

const EmbeddingBatch& TaskStream::validation(std::size_t task) {
  const auto& s = at(task);
  tracker_.record(task + 1, SplitKind::kValidation);
  return s.validation;
}

const EmbeddingBatch& TaskStream::test(std::size_t task) {
  const auto& s = at(task);
  tracker_.record(task + 1, SplitKind::kTest);
  return s.test;
}

std::string config_to_json(const RunConfig& config) {
  const auto& p = config.proposed;
  nlohmann::json j{
      {"method", to_string(config.method)},
      {"variant", config.variant},
      {"randomize_classes", config.randomize_classes},
      {"randomize_order", config.randomize_order},
  };
  if (config.method == Method::kProposed) {
    j["proposed"] = {{"q", p.use_projection ? (p.projection_override ? p.projection_override->cols() : p.q) : 0},
                     {"use_projection", p.use_projection},
                     {"nonlinearity", to_string(p.nonlinearity)},
                     {"projection_distribution", "normal(0,1)"},
                     {"projection_override", p.projection_override.has_value()},
                     {"normalize_embeddings", p.normalize_embeddings},
                     {"lambda_grid", p.fixed_lambda ? std::vector<double>{*p.fixed_lambda} : p.search.grid},
                     {"lambda_fixed", p.fixed_lambda.has_value()},
                     {"lambda_split", "80/20"},
                     {"lambda_split_stratified", p.search.stratified}};
  } else if (config.method != Method::kNcm) {
    const auto& h = config.probe;
    j["probe"] = {{"lr", h.lr},
                  {"batch_size", h.batch_size},
                  {"max_epochs", h.max_epochs},
                  {"patience", h.patience},
                  {"early_stopping_metric", "validation_loss"},
                  {"beta1", h.adam.beta1},
                  {"beta2", h.adam.beta2},
                  {"eps", h.adam.eps},
                  {"schedule", "cosine_annealing_to_zero"},
                  {"init", "uniform(+-1/sqrt(H))"}};
  }
  return j.dump();
}

RunRecord run_single(const ProtocolData& data, const RunConfig& config, std::uint64_t seed) {
  data.validate();
  const auto& m = data.manifest;
  const StagePlan plan = plan_stages(data, config, seed);
  const std::size_t T = m.tasks.size();
  const std::size_t F = m.fold_slots();

  RunRecord rec;
  rec.manifest_hash = m.hash();
  rec.protocol = to_string(m.protocol);
  rec.method = to_string(config.method);
  rec.variant = config.variant;
  rec.run_seed = seed;
  rec.folds = F;
  rec.protocol_violating = is_joint(config.method);
  rec.config_json = config_to_json(config);
  rec.seeds["projection"] = derive_seed(seed, "projection");
  rec.seeds["lambda-split"] = derive_seed(seed, "lambda-split");
  rec.seeds["probe-init"] = derive_seed(seed, "probe-init");
  rec.seeds["probe-shuffle"] = derive_seed(seed, "probe-shuffle");
  if (m.protocol == Protocol::kClassIncremental) {
    rec.seeds["class-assignment"] = derive_seed(seed, "class-assignment");
    rec.class_assignment = plan.class_assignment;
  } else {
    rec.seeds["task-order"] = derive_seed(seed, "task-order");
    for (auto idx : plan.task_order) rec.task_order.push_back(m.tasks[idx].task_id);
  }

  std::vector<std::vector<double>> acc_sum(T);
  for (std::size_t t = 0; t < T; ++t) acc_sum[t].assign(t + 1, 0.0);
  rec.lambdas.assign(config.method == Method::kProposed ? T : 0, {});
  rec.stage_seconds.assign(T, 0.0);

  for (std::size_t f = 0; f < F; ++f) {
    AccessTracker tracker(is_joint(config.method));
    TaskStream stream(stage_batches(data, plan, f), tracker);
    const FoldOutcome outcome = run_fold(data, config, seed, stream, tracker);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j <= t; ++j) acc_sum[t][j] += outcome.acc[t][j];
      rec.stage_seconds[t] += outcome.seconds[t];
      if (!rec.lambdas.empty()) rec.lambdas[t].push_back(outcome.lambdas[t]);
    }
    rec.access_violations += tracker.violations();
    rec.head_parameters = outcome.head_parameters;
    rec.frozen_parameters = outcome.frozen_parameters;
  }

  rec.ledger = MetricsLedger(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j <= t; ++j) rec.ledger.set(t + 1, j + 1, acc_sum[t][j] / static_cast<double>(F));
  }
  return rec;
}

std::vector<RunRecord> run_protocol(const ProtocolData& data, const RunConfig& config,
                                    const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  if (seeds.empty()) throw InvariantError("run_protocol: no seeds");
  std::vector<RunRecord> records(seeds.size());
  if (jobs <= 1 || seeds.size() == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) records[i] = run_single(data, config, seeds[i]);
    return records;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(jobs, seeds.size()); ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < seeds.size(); i = next++) {
        try {
          records[i] = run_single(data, config, seeds[i]);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

MethodReport aggregate_runs(const std::vector<RunRecord>& records) {
  if (records.empty()) throw InvariantError("aggregate: no run records");
  const auto& first = records.front();
  MethodReport rep;
  rep.method = first.method;
  rep.variant = first.variant;
  rep.runs = records.size();
  rep.head_parameters = first.head_parameters;
  const std::size_t T = first.ledger.task_count();
  for (const auto& r : records) {
    if (r.manifest_hash != first.manifest_hash) {
      throw InvariantError("aggregate: runs come from different manifests (" + first.manifest_hash + " vs " +
                           r.manifest_hash + ")");
    }
    if (r.method != first.method || r.variant != first.variant) {
      throw InvariantError("aggregate: mixed methods (" + first.method + "/" + first.variant + " vs " + r.method + "/" +
                           r.variant + ")");
    }
    if (r.ledger.task_count() != T) throw InvariantError("aggregate: ledgers have different task counts");
    rep.protocol_violating = rep.protocol_violating || r.protocol_violating;
  }
  for (std::size_t t = 1; t <= T; ++t) {
    std::vector<double> aa, fr;
    for (const auto& r : records) {
      aa.push_back(average_accuracy(r.ledger, t));
      if (t >= 2) fr.push_back(average_forgetting(r.ledger, t));
    }
    StageAggregate s{t, mean_std(aa), std::nullopt};
    if (t >= 2) s.fr = mean_std(fr);
    rep.stages.push_back(s);
  }
  rep.final_aa = rep.stages.back().aa;
  rep.final_fr = rep.stages.back().fr;
  return rep;
}

std::vector<MethodReport> aggregate_by_method(const std::vector<RunRecord>& records) {
  if (records.empty()) throw InvariantError("aggregate: no run records");
  for (const auto& r : records) {
    if (r.manifest_hash != records.front().manifest_hash) {
      throw InvariantError("aggregate: runs come from different manifests (" + records.front().manifest_hash +
                           " vs " + r.manifest_hash + ")");
    }
  }
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.method, r.variant);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::vector<MethodReport> out;
  for (const auto& key : keys) {
    std::vector<RunRecord> group;
    for (const auto& r : records) {
      if (r.method == key.first && r.variant == key.second) group.push_back(r);
    }
    out.push_back(aggregate_runs(group));
  }
  return out;
}

std::vector<AblationRow> run_ablation(const ProtocolData& data, const AblationVariant& variant, const RunConfig& base,
                                      const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  const std::uint32_t H = data.manifest.embedding_dim;
  const std::uint32_t C = data.manifest.total_classes;
  std::vector<std::pair<std::string, RunConfig>> configs;
  RunConfig cfg = base;
  cfg.method = Method::kProposed;
  switch (variant.kind) {
    case AblationKind::kFull:
      cfg.proposed.use_projection = true;
      cfg.proposed.nonlinearity = Nonlinearity::kRelu;
      configs.emplace_back("full", cfg);
      break;
    case AblationKind::kNoProjection:
      cfg.proposed.use_projection = false;
      configs.emplace_back("no_projection", cfg);
      break;
    case AblationKind::kProjectionNoRelu:
      cfg.proposed.use_projection = true;
      cfg.proposed.nonlinearity = Nonlinearity::kIdentity;
      configs.emplace_back("projection_no_relu", cfg);
      break;
    case AblationKind::kQSweep:
      if (variant.q_values.empty()) throw InvariantError("ablation: q_sweep needs at least one Q");
      for (auto q : variant.q_values) {
        if (q == 0) throw InvariantError("ablation: Q must be positive");
        RunConfig qc = cfg;
        qc.proposed.use_projection = true;
        qc.proposed.q = q;
        configs.emplace_back(fmt::format("q_sweep_{}", q), qc);
      }
      break;
  }

  std::vector<AblationRow> rows;
  for (auto& [name, c] : configs) {
    if (c.proposed.use_projection && !c.proposed.projection_override && c.proposed.q == 0) {
      throw InvariantError("ablation: Q must be positive");
    }
    c.variant = name;
    AblationRow row;
    row.variant = name;
    row.q = !c.proposed.use_projection ? H
            : c.proposed.projection_override ? static_cast<std::uint32_t>(c.proposed.projection_override->cols())
                                             : c.proposed.q;
    row.report = aggregate_runs(run_protocol(data, c, seeds, jobs));
    row.head_parameters = head_parameter_count(row.q, C);
    row.frozen_parameters = c.proposed.use_projection ? static_cast<std::uint64_t>(H) * row.q : 0;
    row.linear_probe_parameters = head_parameter_count(H, C);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace protoridge
