#include "forge/ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <sstream>

#include "forge/error.hpp"
#include "forge/utf8.hpp"

namespace forge::ingest {

namespace {

// Byte-compatible with nlohmann::json::dump() for valid UTF-8 input.
void append_json_string(std::string& out, std::string_view s) {
  static constexpr char hex[] = "0123456789abcdef";
  out.push_back('"');
  out.reserve(out.size() + s.size() + 1);
  std::size_t run = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c >= 0x20 && c != '"' && c != '\\') continue;
    out.append(s.substr(run, i - run));
    run = i + 1;
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        out += "\\u00";
        out.push_back(hex[c >> 4]);
        out.push_back(hex[c & 0xf]);
    }
  }
  out.append(s.substr(run));
  out.push_back('"');
}

std::string where_of(const fs::path& path, std::uint64_t line, std::uint64_t offset) {
  return path.string() + ":" + std::to_string(line) + " (byte " + std::to_string(offset) + ")";
}

std::string shard_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "part-%05zu.jsonl", index);
  return buf;
}

bool is_shard_name(const std::string& name) {
  return name.size() == 16 && name.rfind("part-", 0) == 0 && name.substr(10) == ".jsonl";
}

}  // namespace

std::string serialize_document(const Document& doc) {
  if (!utf8::is_valid(doc.text) || !utf8::is_valid(doc.id) || !utf8::is_valid(doc.source)) {
    throw DataError("document " + doc.id + ": invalid UTF-8");
  }
  std::string out;
  out.reserve(doc.text.size() + doc.id.size() + doc.source.size() + 40);
  out += "{\"id\":";
  append_json_string(out, doc.id);
  out += ",\"text\":";
  append_json_string(out, doc.text);
  out += ",\"source\":";
  append_json_string(out, doc.source);
  if (doc.url) {
    out += ",\"url\":";
    append_json_string(out, *doc.url);
  }
  if (!doc.meta.empty()) {
    out += ",\"meta\":{";
    bool first = true;
    for (const auto& [k, v] : doc.meta) {
      if (!first) out.push_back(',');
      first = false;
      append_json_string(out, k);
      out.push_back(':');
      append_json_string(out, v);
    }
    out.push_back('}');
  }
  out.push_back('}');
  return out;
}

Document parse_document(std::string_view line, const std::string& where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed record at " + where + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("malformed record at " + where + ": not a JSON object");

  auto required = [&](const char* field) -> std::string {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) throw DataError(std::string("missing field ") + field + " at " + where);
    if (!it->is_string()) throw DataError(std::string("field ") + field + " is not a string at " + where);
    return it->get<std::string>();
  };

  Document doc;
  doc.id = required("id");
  doc.text = required("text");
  doc.source = required("source");
  if (doc.id.empty()) throw DataError("empty id at " + where);
  if (auto it = j.find("url"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw DataError("field url is not a string at " + where);
    doc.url = it->get<std::string>();
  }
  if (auto it = j.find("meta"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw DataError("field meta is not an object at " + where);
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw DataError("meta." + k + " is not a string at " + where);
      doc.meta.emplace(k, v.get<std::string>());
    }
  }
  return doc;
}

ShardReader::ShardReader(std::vector<fs::path> paths) : paths_(std::move(paths)) {
  std::sort(paths_.begin(), paths_.end());
}

bool ShardReader::open_next() {
  if (in_.is_open()) in_.close();
  if (index_ >= paths_.size()) return false;
  const fs::path& path = paths_[index_++];
  in_.open(path, std::ios::binary);
  if (!in_) throw IoError("cannot open shard " + path.string());
  current_ = path.string();
  line_no_ = 0;
  offset_ = 0;
  return true;
}

std::optional<Document> ShardReader::next() {
  for (;;) {
    if (!in_.is_open() && !open_next()) return std::nullopt;
    if (!std::getline(in_, line_)) {
      if (in_.bad()) throw IoError("read failure in " + current_);
      in_.close();
      continue;
    }
    ++line_no_;
    const std::uint64_t start = offset_;
    offset_ += line_.size() + 1;
    if (line_.empty()) continue;
    return parse_document(line_, where_of(current_, line_no_, start));
  }
}

std::vector<Document> read_shards(std::vector<fs::path> paths) {
  std::vector<Document> docs;
  ShardReader reader(std::move(paths));
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  return docs;
}

void for_each_document(std::vector<fs::path> paths, const std::function<void(Document&&)>& fn) {
  ShardReader reader(std::move(paths));
  while (auto doc = reader.next()) fn(std::move(*doc));
}

std::vector<fs::path> resolve_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& input : inputs) {
    std::error_code ec;
    if (fs::is_directory(input, ec)) {
      if (fs::exists(input / kManifestName)) {
        const auto m = read_manifest(input / kManifestName);
        for (const auto& s : m.shards) out.push_back(input / s.path);
        continue;
      }
      for (const auto& entry : fs::directory_iterator(input)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") out.push_back(entry.path());
      }
    } else if (input.filename() == kManifestName) {
      const auto m = read_manifest(input);
      for (const auto& s : m.shards) out.push_back(input.parent_path() / s.path);
    } else if (fs::exists(input, ec)) {
      out.push_back(input);
    } else {
      throw IoError("input does not exist: " + input.string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ShardWriter::ShardWriter(fs::path dir, std::int64_t max_docs_per_shard, std::string name, std::string config_hash)
    : dir_(std::move(dir)), max_docs_(max_docs_per_shard) {
  if (max_docs_ < 1) throw ConfigError("max_docs_per_shard must be >= 1");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  // Shards left over from an earlier, larger run would otherwise linger.
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && is_shard_name(entry.path().filename().string())) fs::remove(entry.path());
  }
  manifest_.name = std::move(name);
  manifest_.config_hash = std::move(config_hash);
}

void ShardWriter::roll() {
  if (out_.is_open()) {
    out_.close();
    if (!out_) throw IoError("write failure in " + (dir_ / manifest_.shards.back().path).string());
  }
  manifest_.shards.push_back({shard_name(manifest_.shards.size()), 0, 0});
  const fs::path path = dir_ / manifest_.shards.back().path;
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
}

void ShardWriter::add(const Document& doc) {
  if (finished_) throw Error("ShardWriter::add after finish");
  if (!seen_ids_.insert(doc.id).second) throw DataError("duplicate id " + doc.id);
  if (manifest_.shards.empty() || static_cast<std::int64_t>(manifest_.shards.back().doc_count) >= max_docs_) roll();
  std::string line = serialize_document(doc);
  line.push_back('\n');
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  auto& shard = manifest_.shards.back();
  ++shard.doc_count;
  shard.byte_count += line.size();
  ++total_;
}

CorpusManifest ShardWriter::finish() {
  if (finished_) return manifest_;
  finished_ = true;
  if (out_.is_open()) {
    out_.close();
    if (!out_) throw IoError("write failure in " + (dir_ / manifest_.shards.back().path).string());
  }
  manifest_.total_docs = total_;
  manifest_.created_at = timestamp_now();
  write_manifest(manifest_, dir_ / kManifestName);
  return manifest_;
}

CorpusManifest write_shards(const std::vector<Document>& docs, const fs::path& dir, std::int64_t max_docs_per_shard,
                            const std::string& name, const std::string& config_hash) {
  ShardWriter writer(dir, max_docs_per_shard, name, config_hash);
  for (const auto& doc : docs) writer.add(doc);
  return writer.finish();
}

nlohmann::ordered_json to_json(const CorpusManifest& manifest) {
  nlohmann::ordered_json j;
  j["name"] = manifest.name;
  j["shards"] = nlohmann::ordered_json::array();
  for (const auto& s : manifest.shards) {
    j["shards"].push_back({{"path", s.path}, {"doc_count", s.doc_count}, {"byte_count", s.byte_count}});
  }
  j["total_docs"] = manifest.total_docs;
  j["created_at"] = manifest.created_at;
  j["config_hash"] = manifest.config_hash;
  return j;
}

void write_manifest(const CorpusManifest& manifest, const fs::path& path) {
  std::uint64_t sum = 0;
  for (const auto& s : manifest.shards) {
    sum += s.doc_count;
    if (!fs::exists(path.parent_path() / s.path)) throw IoError("manifest shard missing: " + s.path);
  }
  if (sum != manifest.total_docs) throw DataError("manifest total_docs does not match shard counts");
  write_file(path, to_json(manifest).dump(2) + "\n");
}

CorpusManifest read_manifest(const fs::path& path) {
  const std::string body = read_file(path);
  try {
    const auto j = nlohmann::json::parse(body);
    CorpusManifest m;
    m.name = j.at("name").get<std::string>();
    for (const auto& s : j.at("shards")) {
      m.shards.push_back(
          {s.at("path").get<std::string>(), s.at("doc_count").get<std::uint64_t>(), s.at("byte_count").get<std::uint64_t>()});
    }
    m.total_docs = j.at("total_docs").get<std::uint64_t>();
    m.created_at = j.value("created_at", "");
    m.config_hash = j.value("config_hash", "");
    std::uint64_t sum = 0;
    for (const auto& s : m.shards) sum += s.doc_count;
    if (sum != m.total_docs) throw DataError("manifest " + path.string() + ": total_docs does not match shard counts");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
}

std::string timestamp_now() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, std::string_view body) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.close();
  if (!out) throw IoError("write failure in " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace forge::ingest
