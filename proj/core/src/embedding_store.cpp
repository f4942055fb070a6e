#include "protoridge/embedding_store.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "binary_io.hpp"

namespace protoridge {

namespace detail {

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<char> bytes(size);
  in.seekg(0);
  if (size > 0 && !in.read(bytes.data(), static_cast<std::streamsize>(size))) {
    throw IoError("read failed on '" + path + "'");
  }
  return bytes;
}

void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on '" + path + "'");
}

}  // namespace detail

void EmbeddingBatch::validate(std::optional<std::uint32_t> class_count) const {
  if (dim == 0) throw InvariantError("embedding batch: dim must be positive");
  if (static_cast<std::size_t>(vectors.rows()) != labels.size() || vectors.cols() != static_cast<long>(dim)) {
    throw InvariantError("embedding batch: vectors are " + std::to_string(vectors.rows()) + "x" +
                         std::to_string(vectors.cols()) + " but expected " + std::to_string(labels.size()) + "x" +
                         std::to_string(dim));
  }
  if (!vectors.allFinite()) {
    for (long r = 0; r < vectors.rows(); ++r) {
      if (!vectors.row(r).allFinite()) {
        throw InvariantError("embedding batch: non-finite value in row " + std::to_string(r));
      }
    }
  }
  if (class_count) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= *class_count) {
        throw InvariantError("embedding batch: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                             " is not below class count " + std::to_string(*class_count));
      }
    }
  }
}

EmbeddingBatch EmbeddingBatch::select(std::span<const std::size_t> rows) const {
  EmbeddingBatch out{dim, RowMatrix(static_cast<long>(rows.size()), dim), {}};
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.vectors.row(static_cast<long>(i)) = vectors.row(static_cast<long>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

EmbeddingBatch EmbeddingBatch::filter_classes(std::span<const std::uint32_t> classes) const {
  const std::unordered_set<std::uint32_t> keep(classes.begin(), classes.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (keep.contains(labels[i])) rows.push_back(i);
  }
  return select(rows);
}

EmbeddingBatch EmbeddingBatch::concat(std::span<const EmbeddingBatch> parts) {
  if (parts.empty()) throw DimensionError("concat: no batches");
  const auto d = parts.front().dim;
  long total = 0;
  for (const auto& p : parts) {
    if (p.dim != d) throw DimensionError("concat: mixed dimensions");
    total += static_cast<long>(p.count());
  }
  EmbeddingBatch out{d, RowMatrix(total, d), {}};
  out.labels.reserve(static_cast<std::size_t>(total));
  long at = 0;
  for (const auto& p : parts) {
    out.vectors.middleRows(at, static_cast<long>(p.count())) = p.vectors;
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    at += static_cast<long>(p.count());
  }
  return out;
}

void write_batch(const EmbeddingBatch& batch, const std::filesystem::path& path, std::uint32_t class_hint) {
  batch.validate(class_hint == 0 ? std::nullopt : std::optional<std::uint32_t>(class_hint));

  detail::ByteWriter w;
  w.reserve(emb1_file_size(batch.dim, batch.count()));
  w.magic("EMB1");
  w.put<std::uint32_t>(batch.dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(batch.count()));
  w.put<std::uint32_t>(class_hint);
  for (std::size_t i = 0; i < batch.count(); ++i) {
    w.put<std::uint32_t>(batch.labels[i]);
    for (std::uint32_t c = 0; c < batch.dim; ++c) {
      w.put<float>(static_cast<float>(batch.vectors(static_cast<long>(i), c)));
    }
  }
  detail::write_file(path.string(), w.bytes());
}

EmbeddingBatch read_batch(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path.string());
  const std::string what = "EMB1 '" + path.string() + "'";
  detail::ByteReader r(bytes.data(), bytes.size(), what);
  r.expect_magic("EMB1");
  const auto dim = r.get<std::uint32_t>("dim");
  const auto count = r.get<std::uint32_t>("count");
  const auto hint = r.get<std::uint32_t>("class hint");
  if (dim == 0) throw FormatError(what + ": dim is zero");

  const std::uint64_t record = 4 + 4 * static_cast<std::uint64_t>(dim);
  const std::uint64_t expected = emb1_file_size(dim, count);
  if (bytes.size() < expected) {
    const auto complete = (bytes.size() - kEmbHeaderBytes) / record;
    throw FormatError(what + ": truncated in record " + std::to_string(complete) + " of " + std::to_string(count) +
                      " (file has " + std::to_string(bytes.size()) + " bytes, expected " + std::to_string(expected) +
                      ")");
  }
  if (bytes.size() > expected) {
    throw FormatError(what + ": " + std::to_string(bytes.size() - expected) + " trailing bytes after record " +
                      std::to_string(count));
  }

  EmbeddingBatch batch{dim, RowMatrix(count, dim), Labels(count)};
  for (std::uint32_t i = 0; i < count; ++i) {
    batch.labels[i] = r.get<std::uint32_t>("label");
    if (hint != 0 && batch.labels[i] >= hint) {
      throw FormatError(what + ": record " + std::to_string(i) + " has label " + std::to_string(batch.labels[i]) +
                        " >= class hint " + std::to_string(hint));
    }
    for (std::uint32_t c = 0; c < dim; ++c) {
      batch.vectors(i, c) = static_cast<double>(r.get<float>("value"));
    }
  }
  try {
    batch.validate();
  } catch (const InvariantError& e) {
    throw FormatError(what + ": " + e.what());
  }
  return batch;
}

}  // namespace protoridge
