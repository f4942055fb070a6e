#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace protoridge {

enum class Protocol { kClassIncremental, kDomainIncremental };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

/// Train/validation/test file references of one task (or one fold of a task).
struct SplitPaths {
  std::filesystem::path train;
  std::filesystem::path validation;
  std::filesystem::path test;
};

/// Conventional split file names under `dir`: task{t}_train.emb, or task{t}_fold{f}_train.emb
/// when `fold` is set. `task` and `fold` are 1-based.
SplitPaths split_file_names(const std::filesystem::path& dir, std::size_t task, std::optional<std::size_t> fold = {});

struct TaskSpec {
  std::uint32_t task_id = 0;          // 1-based
  std::vector<std::uint32_t> classes;  // CIL: this task's disjoint subset; DIL: all of [0, C)
  std::string domain;                  // DIL only, free-form
  std::vector<SplitPaths> splits;      // one entry, or fold_count entries when cross-validated
};

struct ProtocolManifest {
  static constexpr int kFormatVersion = 1;

  Protocol protocol = Protocol::kClassIncremental;
  std::uint32_t total_classes = 0;
  std::uint32_t embedding_dim = 0;
  std::vector<TaskSpec> tasks;
  std::vector<std::uint64_t> run_seeds{1, 2, 3, 4, 5};
  std::optional<std::uint32_t> fold_count;
  std::string source;  // optional dataset identity (e.g. generator and seed); part of the hash

  std::size_t task_count() const noexcept { return tasks.size(); }
  std::size_t fold_slots() const noexcept { return fold_count.value_or(1); }

  /// Checks the CIL/DIL shape rules. With `check_files`, every referenced split must exist.
  /// `min_tasks` is 2 for manifests read from disk; in-memory protocols may use a single task.
  void validate(bool check_files = false, std::size_t min_tasks = 2) const;

  /// Stable content hash (hex) of the canonical JSON form; identifies runs of the same experiment.
  std::string hash() const;
};

/// Reads a manifest. Relative split paths are resolved against the manifest's directory.
ProtocolManifest load_manifest(const std::filesystem::path& path);

/// Writes a manifest. Split paths under the manifest's directory are stored relative to it.
void save_manifest(const ProtocolManifest& manifest, const std::filesystem::path& path);

}  // namespace protoridge
