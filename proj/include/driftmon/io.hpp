#pragma once

#include <optional>

#include "driftmon/offline.hpp"

namespace driftmon {

// Shortest decimal rendering that parses back to the identical value.
std::string format_double(double v);
std::string format_float(float v);

void atomic_write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Minimal RFC-4180 parser: records of fields, quotes and embedded newlines honored.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Binary embedding container: "DLEM" v1 header, row-major f32 payload,
// optional u32 label ids. Little-endian throughout.
void write_embedding_file(const std::string& path, const EmbeddingBatch& batch);
EmbeddingBatch read_embedding_file(const std::string& path);

// CSV twin of the same data; a trailing column named "label" carries labels.
void write_embedding_csv(const std::string& path, const EmbeddingBatch& batch);
EmbeddingBatch read_embedding_csv(const std::string& path);

// Dispatch on extension: ".csv" reads as CSV, anything else as binary.
EmbeddingBatch read_embedding_auto(const std::string& path);

struct ModelBundle {
  BaselineModel baseline;
  std::optional<ThresholdSet> thresholds;
  std::uint64_t seed = 0;
  std::string created;  // set only when pinned, so fixed-seed runs stay byte-identical
};

// Stable hex identifier of a fitted baseline (used as baseline_id in logs).
std::string baseline_digest(const BaselineModel& model);

void save_bundle(const std::string& path, const ModelBundle& bundle);

struct BundleLoadResult {
  ModelBundle bundle;
  std::vector<std::string> warnings;  // e.g. config-hash integrity mismatch
};
BundleLoadResult load_bundle(const std::string& path);

}  // namespace driftmon
