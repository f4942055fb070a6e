#include "protoridge/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "protoridge/rng.hpp"
#include "protoridge/types.hpp"

namespace protoridge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Protocol p) { return p == Protocol::kClassIncremental ? "CIL" : "DIL"; }

Protocol protocol_from_string(const std::string& s) {
  if (s == "CIL") return Protocol::kClassIncremental;
  if (s == "DIL") return Protocol::kDomainIncremental;
  throw FormatError("manifest: unknown protocol '" + s + "' (expected CIL or DIL)");
}

void ProtocolManifest::validate(bool check_files, std::size_t min_tasks) const {
  if (total_classes == 0) throw InvariantError("manifest: total_classes must be positive");
  if (embedding_dim == 0) throw InvariantError("manifest: embedding_dim must be positive");
  if (tasks.size() < min_tasks) {
    throw InvariantError(fmt::format("manifest: {} task(s), at least {} required", tasks.size(), min_tasks));
  }
  if (run_seeds.empty()) throw InvariantError("manifest: run_seeds is empty");
  if (fold_count && *fold_count == 0) throw InvariantError("manifest: fold_count must be positive when present");

  std::vector<int> owner(total_classes, 0);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& task = tasks[i];
    if (task.task_id != i + 1) {
      throw InvariantError(fmt::format("manifest: task at position {} has task_id {}", i + 1, task.task_id));
    }
    if (task.splits.size() != fold_slots()) {
      throw InvariantError(fmt::format("manifest: task {} lists {} split set(s), expected {}", task.task_id,
                                       task.splits.size(), fold_slots()));
    }
    if (task.classes.empty()) throw InvariantError(fmt::format("manifest: task {} has no classes", task.task_id));

    std::set<std::uint32_t> seen;
    for (auto c : task.classes) {
      if (c >= total_classes) {
        throw InvariantError(
            fmt::format("manifest: task {} lists class {} outside [0, {})", task.task_id, c, total_classes));
      }
      if (!seen.insert(c).second) {
        throw InvariantError(fmt::format("manifest: task {} lists class {} twice", task.task_id, c));
      }
    }

    if (protocol == Protocol::kClassIncremental) {
      for (auto c : task.classes) {
        if (owner[c] != 0) {
          throw InvariantError(fmt::format("manifest: CIL tasks {} and {} share class {}", owner[c], task.task_id, c));
        }
        owner[c] = static_cast<int>(task.task_id);
      }
    } else if (seen.size() != total_classes) {
      for (std::uint32_t c = 0; c < total_classes; ++c) {
        if (!seen.contains(c)) {
          throw InvariantError(fmt::format("manifest: DIL task {} is missing class {}", task.task_id, c));
        }
      }
    }

    if (check_files) {
      for (const auto& s : task.splits) {
        for (const auto* p : {&s.train, &s.validation, &s.test}) {
          if (!fs::exists(*p)) {
            throw InvariantError(fmt::format("manifest: task {} references missing file '{}'", task.task_id, p->string()));
          }
        }
      }
    }
  }

  if (protocol == Protocol::kClassIncremental) {
    for (std::uint32_t c = 0; c < total_classes; ++c) {
      if (owner[c] == 0) throw InvariantError(fmt::format("manifest: CIL class {} is not assigned to any task", c));
    }
  }
}

SplitPaths split_file_names(const fs::path& dir, std::size_t task, std::optional<std::size_t> fold) {
  const std::string stem = fold ? fmt::format("task{}_fold{}", task, *fold) : fmt::format("task{}", task);
  return {dir / (stem + "_train.emb"), dir / (stem + "_validation.emb"), dir / (stem + "_test.emb")};
}

namespace {

json split_json(const SplitPaths& s, const fs::path& base) {
  auto rel = [&](const fs::path& p) {
    if (base.empty() || p.empty()) return p.generic_string();
    const auto r = fs::absolute(p).lexically_normal().lexically_relative(fs::absolute(base).lexically_normal());
    return (r.empty() || *r.begin() == "..") ? p.generic_string() : r.generic_string();
  };
  return json{{"train", rel(s.train)}, {"validation", rel(s.validation)}, {"test", rel(s.test)}};
}

json to_json(const ProtocolManifest& m, const fs::path& base) {
  json tasks = json::array();
  for (const auto& t : m.tasks) {
    json jt{{"task_id", t.task_id}, {"classes", t.classes}};
    if (!t.domain.empty()) jt["domain"] = t.domain;
    if (m.fold_count) {
      json folds = json::array();
      for (const auto& s : t.splits) folds.push_back(split_json(s, base));
      jt["folds"] = std::move(folds);
    } else if (!t.splits.empty()) {
      jt.update(split_json(t.splits.front(), base));
    }
    tasks.push_back(std::move(jt));
  }
  json j{{"format_version", ProtocolManifest::kFormatVersion},
         {"protocol", to_string(m.protocol)},
         {"total_classes", m.total_classes},
         {"embedding_dim", m.embedding_dim},
         {"run_seeds", m.run_seeds},
         {"tasks", std::move(tasks)}};
  if (m.fold_count) j["fold_count"] = *m.fold_count;
  if (!m.source.empty()) j["source"] = m.source;
  return j;
}

SplitPaths split_from_json(const json& j, const fs::path& base) {
  auto resolve = [&](const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("manifest: split is missing '") + key + "'");
    fs::path p = j.at(key).get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  return SplitPaths{resolve("train"), resolve("validation"), resolve("test")};
}

}  // namespace

std::string ProtocolManifest::hash() const {
  // Split files are reduced to their filenames so the hash survives moving the dataset directory.
  ProtocolManifest canonical = *this;
  canonical.run_seeds = {0};
  for (auto& t : canonical.tasks) {
    for (auto& s : t.splits) s = SplitPaths{s.train.filename(), s.validation.filename(), s.test.filename()};
  }
  return fmt::format("{:016x}", fnv1a(to_json(canonical, {}).dump()));
}

ProtocolManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("manifest '" + path.string() + "': " + e.what());
  }

  const fs::path base = path.parent_path();
  ProtocolManifest m;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != ProtocolManifest::kFormatVersion) {
      throw FormatError(fmt::format("manifest: unsupported format_version {}", version));
    }
    m.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    m.total_classes = j.at("total_classes").get<std::uint32_t>();
    m.embedding_dim = j.at("embedding_dim").get<std::uint32_t>();
    if (j.contains("run_seeds")) m.run_seeds = j.at("run_seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("fold_count")) m.fold_count = j.at("fold_count").get<std::uint32_t>();
    if (j.contains("source")) m.source = j.at("source").get<std::string>();

    for (const auto& jt : j.at("tasks")) {
      TaskSpec t;
      t.task_id = jt.at("task_id").get<std::uint32_t>();
      if (jt.contains("classes")) {
        t.classes = jt.at("classes").get<std::vector<std::uint32_t>>();
      } else if (m.protocol == Protocol::kDomainIncremental) {
        t.classes.resize(m.total_classes);
        for (std::uint32_t c = 0; c < m.total_classes; ++c) t.classes[c] = c;
      }
      if (jt.contains("domain")) t.domain = jt.at("domain").get<std::string>();
      if (jt.contains("folds")) {
        for (const auto& jf : jt.at("folds")) t.splits.push_back(split_from_json(jf, base));
      } else {
        t.splits.push_back(split_from_json(jt, base));
      }
      m.tasks.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw FormatError("manifest '" + path.string() + "': " + e.what());
  }
  m.validate(/*check_files=*/true);
  return m;
}

void save_manifest(const ProtocolManifest& manifest, const fs::path& path) {
  manifest.validate(false, 1);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open manifest '" + path.string() + "' for writing");
  out << to_json(manifest, path.parent_path()).dump(2) << '\n';
  if (!out) throw IoError("write failed on manifest '" + path.string() + "'");
}

}  // namespace protoridge
