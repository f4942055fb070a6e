#include "protoridge/dataset.hpp"

#include <unordered_set>

#include <fmt/format.h>

#include "protoridge/types.hpp"

namespace protoridge {

namespace fs = std::filesystem;

void ProtocolData::validate() const {
  manifest.validate(false, 1);
  if (tasks.size() != manifest.tasks.size()) {
    throw InvariantError(fmt::format("protocol data: {} task(s) loaded for {} in the manifest", tasks.size(),
                                     manifest.tasks.size()));
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& spec = manifest.tasks[t];
    if (tasks[t].folds.size() != manifest.fold_slots()) {
      throw InvariantError(fmt::format("protocol data: task {} has {} fold(s), expected {}", spec.task_id,
                                       tasks[t].folds.size(), manifest.fold_slots()));
    }
    const std::unordered_set<std::uint32_t> allowed(spec.classes.begin(), spec.classes.end());
    for (const auto& fold : tasks[t].folds) {
      for (const auto* b : {&fold.train, &fold.validation, &fold.test}) {
        if (b->dim != manifest.embedding_dim) {
          throw InvariantError(fmt::format("protocol data: task {} batch has dim {}, manifest says {}", spec.task_id,
                                           b->dim, manifest.embedding_dim));
        }
        b->validate(manifest.total_classes);
        for (auto y : b->labels) {
          if (!allowed.contains(y)) {
            throw InvariantError(
                fmt::format("protocol data: task {} contains label {} outside its class subset", spec.task_id, y));
          }
        }
      }
    }
  }
}

ProtocolData load_protocol_data(const fs::path& manifest_path) {
  ProtocolData data;
  data.manifest = load_manifest(manifest_path);
  for (const auto& spec : data.manifest.tasks) {
    TaskData task;
    for (const auto& s : spec.splits) {
      task.folds.push_back(SplitBatches{read_batch(s.train), read_batch(s.validation), read_batch(s.test)});
    }
    data.tasks.push_back(std::move(task));
  }
  data.validate();
  return data;
}

fs::path write_protocol_data(const ProtocolData& data, const fs::path& dir) {
  data.validate();
  fs::create_directories(dir);
  ProtocolManifest manifest = data.manifest;
  const bool folded = manifest.fold_count.has_value();
  for (std::size_t t = 0; t < data.tasks.size(); ++t) {
    auto& spec = manifest.tasks[t];
    spec.splits.clear();
    for (std::size_t f = 0; f < data.tasks[t].folds.size(); ++f) {
      SplitPaths paths = split_file_names(dir, t + 1, folded ? std::optional<std::size_t>(f + 1) : std::nullopt);
      const auto& fold = data.tasks[t].folds[f];
      write_batch(fold.train, paths.train, manifest.total_classes);
      write_batch(fold.validation, paths.validation, manifest.total_classes);
      write_batch(fold.test, paths.test, manifest.total_classes);
      spec.splits.push_back(std::move(paths));
    }
  }
  const fs::path manifest_path = dir / "manifest.json";
  save_manifest(manifest, manifest_path);
  return manifest_path;
}

}  // namespace protoridge
