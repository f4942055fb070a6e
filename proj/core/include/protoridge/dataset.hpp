#pragma once

#include <filesystem>
#include <vector>

#include "protoridge/embedding_store.hpp"
#include "protoridge/manifest.hpp"

namespace protoridge {

struct SplitBatches {
  EmbeddingBatch train;
  EmbeddingBatch validation;
  EmbeddingBatch test;
};

struct TaskData {
  std::vector<SplitBatches> folds;  // manifest.fold_slots() entries
};

/// A manifest together with every batch it references, loaded into memory.
struct ProtocolData {
  ProtocolManifest manifest;
  std::vector<TaskData> tasks;

  /// Manifest rules plus: batch widths equal H and every label belongs to its task's classes.
  void validate() const;
};

/// Loads the manifest and all referenced `EMB1` files.
ProtocolData load_protocol_data(const std::filesystem::path& manifest_path);

/// Writes `task<t>[_fold<f>]_{train,validation,test}.emb` plus `manifest.json` into `dir`
/// (created if needed) and returns the manifest path.
std::filesystem::path write_protocol_data(const ProtocolData& data, const std::filesystem::path& dir);

}  // namespace protoridge
