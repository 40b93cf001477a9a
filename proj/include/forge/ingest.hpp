#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "forge/model.hpp"

namespace forge::ingest {

namespace fs = std::filesystem;

struct ShardInfo {
  std::string path;  // relative to the manifest directory
  std::uint64_t doc_count = 0;
  std::uint64_t byte_count = 0;

  friend bool operator==(const ShardInfo&, const ShardInfo&) = default;
};

struct CorpusManifest {
  std::string name;
  std::vector<ShardInfo> shards;
  std::uint64_t total_docs = 0;
  std::string created_at;
  std::string config_hash;

  friend bool operator==(const CorpusManifest&, const CorpusManifest&) = default;
};

inline constexpr std::int64_t kDefaultShardSize = 100000;
inline constexpr const char* kManifestName = "manifest.json";

// One JSON object per line: id, text, source, then url and meta when present.
std::string serialize_document(const Document& doc);
// `where` is used in error messages, e.g. "shard.jsonl:3 (byte 120)".
Document parse_document(std::string_view line, const std::string& where);

// Streams documents from a set of shard files, paths visited in
// lexicographic order and records in file order.
class ShardReader {
 public:
  explicit ShardReader(std::vector<fs::path> paths);

  std::optional<Document> next();

 private:
  bool open_next();

  std::vector<fs::path> paths_;
  std::size_t index_ = 0;
  std::ifstream in_;
  std::string current_;
  std::uint64_t line_no_ = 0;
  std::uint64_t offset_ = 0;
  std::string line_;
};

std::vector<Document> read_shards(std::vector<fs::path> paths);
void for_each_document(std::vector<fs::path> paths, const std::function<void(Document&&)>& fn);

// Expands inputs: a manifest.json contributes its shards, a directory its
// manifest (or every *.jsonl when there is none), a file itself.
std::vector<fs::path> resolve_inputs(const std::vector<fs::path>& inputs);

// Writes part-00000.jsonl, part-00001.jsonl, ... plus manifest.json.
class ShardWriter {
 public:
  ShardWriter(fs::path dir, std::int64_t max_docs_per_shard, std::string name = "corpus",
              std::string config_hash = {});

  void add(const Document& doc);
  // Closes the last shard and writes the manifest.
  CorpusManifest finish();

  const fs::path& dir() const { return dir_; }
  std::uint64_t docs_written() const { return total_; }

 private:
  void roll();

  fs::path dir_;
  std::int64_t max_docs_;
  CorpusManifest manifest_;
  std::ofstream out_;
  std::unordered_set<std::string> seen_ids_;
  std::uint64_t total_ = 0;
  bool finished_ = false;
};

CorpusManifest write_shards(const std::vector<Document>& docs, const fs::path& dir,
                            std::int64_t max_docs_per_shard, const std::string& name = "corpus",
                            const std::string& config_hash = {});

nlohmann::ordered_json to_json(const CorpusManifest& manifest);
CorpusManifest read_manifest(const fs::path& path);
void write_manifest(const CorpusManifest& manifest, const fs::path& path);

// ISO-8601 UTC timestamp; honours SOURCE_DATE_EPOCH for reproducible output.
std::string timestamp_now();

// Writes `body` to `path` atomically enough for our purposes; throws IoError.
void write_file(const fs::path& path, std::string_view body);
std::string read_file(const fs::path& path);

}  // namespace forge::ingest
