#include "forge/dedup.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/parallel.hpp"
#include "forge/utf8.hpp"

namespace forge::dedup {

namespace {

constexpr std::uint64_t kShingleTag = 0x7368696e676c65ULL;
constexpr std::uint64_t kFamilyTag = 0x6d696e68617368ULL;
constexpr std::uint64_t kBandTag = 0x62616e64ULL;

inline std::uint64_t reduce61(std::uint64_t x) noexcept {
  std::uint64_t r = (x & kMersenne61) + (x >> 61);
  return r >= kMersenne61 ? r - kMersenne61 : r;
}

inline std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) noexcept {
  const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  std::uint64_t r = (static_cast<std::uint64_t>(prod) & kMersenne61) + static_cast<std::uint64_t>(prod >> 61);
  return r >= kMersenne61 ? r - kMersenne61 : r;
}

}  // namespace

std::uint64_t shingle_seed(std::uint64_t master_seed) { return derive_seed(master_seed, kShingleTag); }

std::vector<std::uint64_t> shingle_hashes(std::string_view text, int size, std::uint64_t seed) {
  if (size < 1) throw ConfigError("shingle size must be >= 1");
  const std::string lowered = utf8::lower(text);
  const auto words = utf8::split_whitespace(lowered);
  if (words.empty()) return {};
  const auto k = static_cast<std::size_t>(size);
  std::vector<std::uint64_t> out;
  std::string window;
  auto hash_window = [&](std::size_t begin, std::size_t end) {
    window.clear();
    for (std::size_t i = begin; i < end; ++i) {
      if (i > begin) window.push_back(' ');
      window.append(words[i]);
    }
    out.push_back(hash64(window, seed));
  };
  if (words.size() < k) {
    hash_window(0, words.size());
  } else {
    out.reserve(words.size() - k + 1);
    for (std::size_t i = 0; i + k <= words.size(); ++i) hash_window(i, i + k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ShingleSet shingle(const Document& doc, int size, std::uint64_t seed) {
  ShingleSet s{doc.id, shingle_hashes(doc.text, size, seed)};
  if (s.shingles.empty()) throw DataError("empty document " + doc.id);
  return s;
}

HashFamily::HashFamily(std::uint64_t master_seed, int num_hashes) {
  if (num_hashes < 1) throw ConfigError("num_hashes must be >= 1");
  CounterRng rng(derive_seed(master_seed, kFamilyTag));
  a_.resize(static_cast<std::size_t>(num_hashes));
  b_.resize(static_cast<std::size_t>(num_hashes));
  for (std::size_t j = 0; j < a_.size(); ++j) {
    a_[j] = 1 + rng.below(kMersenne61 - 1);
    b_[j] = rng.below(kMersenne61);
  }
}

void HashFamily::minima(const std::vector<std::uint64_t>& shingles, std::vector<std::uint64_t>& out) const {
  const std::size_t k = a_.size();
  out.assign(k, std::numeric_limits<std::uint64_t>::max());
  for (std::uint64_t raw : shingles) {
    const std::uint64_t x = reduce61(raw);
    for (std::size_t j = 0; j < k; ++j) {
      std::uint64_t v = mulmod61(a_[j], x) + b_[j];
      if (v >= kMersenne61) v -= kMersenne61;
      if (v < out[j]) out[j] = v;
    }
  }
}

std::vector<std::uint64_t> band_keys(const std::vector<std::uint64_t>& components, int num_bands) {
  if (num_bands < 1 || components.size() % static_cast<std::size_t>(num_bands) != 0) {
    throw ConfigError("components not divisible into bands");
  }
  const std::size_t rows = components.size() / static_cast<std::size_t>(num_bands);
  std::vector<std::uint64_t> keys(static_cast<std::size_t>(num_bands));
  for (std::size_t b = 0; b < keys.size(); ++b) {
    const std::string_view bytes(reinterpret_cast<const char*>(components.data() + b * rows), rows * sizeof(std::uint64_t));
    keys[b] = hash64(bytes, derive_seed(kBandTag, b));
  }
  return keys;
}

MinHashSignature minhash_signature(const ShingleSet& s, const HashFamily& family, int num_bands) {
  if (s.shingles.empty()) throw DataError("empty shingle set for " + s.doc_id);
  MinHashSignature sig;
  sig.doc_id = s.doc_id;
  family.minima(s.shingles, sig.components);
  sig.bands = band_keys(sig.components, num_bands);
  return sig;
}

MinHashSignature minhash_signature(const ShingleSet& s, const PipelineConfig& cfg) {
  validate_config(cfg);
  return minhash_signature(s, HashFamily(cfg.master_seed, cfg.minhash_num_hashes), cfg.minhash_num_bands);
}

double match_fraction(const MinHashSignature& x, const MinHashSignature& y) {
  if (x.components.size() != y.components.size() || x.components.empty()) {
    throw DataError("signatures have different lengths");
  }
  std::size_t same = 0;
  for (std::size_t j = 0; j < x.components.size(); ++j) same += x.components[j] == y.components[j];
  return static_cast<double>(same) / static_cast<double>(x.components.size());
}

double jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++common;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::set<std::string> DuplicateClusters::dropped() const {
  std::set<std::string> out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const std::string& survivor = kept.at(c);
    for (const auto& id : clusters[c]) {
      if (id != survivor) out.insert(id);
    }
  }
  return out;
}

BandIndex::BandIndex(int num_bands, bool verify, double verify_threshold)
    : num_bands_(num_bands), verify_(verify), verify_threshold_(verify_threshold) {
  if (num_bands < 1) throw ConfigError("num_bands must be >= 1");
  if (verify_) {
    members_.resize(static_cast<std::size_t>(num_bands));
  } else {
    first_.resize(static_cast<std::size_t>(num_bands));
  }
}

std::size_t BandIndex::find(std::size_t x) const {
  std::size_t root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) {
    const std::size_t up = parent_[x];
    parent_[x] = static_cast<std::uint32_t>(root);
    x = up;
  }
  return root;
}

void BandIndex::unite(std::size_t x, std::size_t y) {
  x = find(x);
  y = find(y);
  if (x == y) return;
  if (rank_[x] < rank_[y]) std::swap(x, y);
  parent_[y] = static_cast<std::uint32_t>(x);
  if (rank_[x] == rank_[y]) ++rank_[x];
}

void BandIndex::add(std::string id, const std::vector<std::uint64_t>& bands, std::vector<std::uint64_t> shingles) {
  if (bands.size() != static_cast<std::size_t>(num_bands_)) throw DataError("signature for " + id + " has wrong band count");
  if (ids_.size() >= std::numeric_limits<std::uint32_t>::max()) throw DataError("band index is full");
  const auto self = static_cast<std::uint32_t>(ids_.size());
  ids_.push_back(std::move(id));
  parent_.push_back(self);
  rank_.push_back(0);
  if (!verify_) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
      auto [it, inserted] = first_[b].try_emplace(bands[b], self);
      if (!inserted) unite(it->second, self);
    }
    return;
  }
  shingles_.push_back(std::move(shingles));
  for (std::size_t b = 0; b < bands.size(); ++b) {
    auto& bucket = members_[b][bands[b]];
    for (std::uint32_t other : bucket) {
      if (find(other) == find(self)) continue;
      if (jaccard(shingles_[other], shingles_[self]) >= verify_threshold_) unite(other, self);
    }
    bucket.push_back(self);
  }
}

DuplicateClusters BandIndex::resolve() const {
  std::unordered_map<std::size_t, std::set<std::string>> groups;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const std::size_t root = find(i);
    if (root == i && rank_[i] == 0) continue;  // singleton root
    groups[root].insert(ids_[i]);
  }
  std::vector<std::set<std::string>> clusters;
  for (auto& [root, members] : groups) {
    if (members.size() >= 2) clusters.push_back(std::move(members));
  }
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });
  DuplicateClusters out;
  out.clusters = std::move(clusters);
  for (std::size_t c = 0; c < out.clusters.size(); ++c) out.kept.emplace(c, *out.clusters[c].begin());
  return out;
}

std::size_t BandIndex::memory_bytes() const {
  std::size_t bytes = ids_.capacity() * sizeof(std::string) + parent_.capacity() * 4 + rank_.capacity();
  for (const auto& id : ids_) bytes += id.capacity() > 15 ? id.capacity() + 1 : 0;
  for (const auto& m : first_) bytes += m.capacity() * (sizeof(std::uint64_t) + sizeof(std::uint32_t) + 1);
  for (const auto& m : members_) {
    bytes += m.capacity() * (sizeof(std::uint64_t) + sizeof(std::vector<std::uint32_t>) + 1);
    for (const auto& [k, v] : m) bytes += v.capacity() * 4;
  }
  for (const auto& s : shingles_) bytes += s.capacity() * 8;
  return bytes;
}

DuplicateClusters cluster_duplicates(const std::vector<MinHashSignature>& signatures,
                                     const std::vector<ShingleSet>* shingles, double verify_threshold) {
  if (signatures.empty()) return {};
  if (shingles && shingles->size() != signatures.size()) throw ConfigError("shingle sets must parallel signatures");
  const std::size_t bands = signatures.front().bands.size();
  const std::size_t comps = signatures.front().components.size();
  std::unordered_set<std::string_view> seen;
  BandIndex index(static_cast<int>(bands), shingles != nullptr, verify_threshold);
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    const auto& sig = signatures[i];
    if (!seen.insert(sig.doc_id).second) throw DataError("duplicate doc_id " + sig.doc_id);
    if (sig.bands.size() != bands || sig.components.size() != comps) {
      throw DataError("inconsistent signature config for " + sig.doc_id);
    }
    index.add(sig.doc_id, sig.bands, shingles ? (*shingles)[i].shingles : std::vector<std::uint64_t>{});
  }
  return index.resolve();
}

std::string signature_json(const MinHashSignature& sig) {
  nlohmann::ordered_json j;
  j["doc_id"] = sig.doc_id;
  j["components"] = sig.components;
  j["bands"] = sig.bands;
  return j.dump();
}

DedupResult dedup_corpus(std::vector<Document> docs, const PipelineConfig& cfg, const DedupOptions& opts) {
  validate_config(cfg);
  const HashFamily family(cfg.master_seed, cfg.minhash_num_hashes);
  const std::uint64_t seed = shingle_seed(cfg.master_seed);

  std::vector<std::vector<std::uint64_t>> shingles(docs.size());
  std::vector<MinHashSignature> sigs(docs.size());
  parallel_for(docs.size(), opts.jobs, [&](std::size_t i) {
    shingles[i] = shingle_hashes(docs[i].text, cfg.shingle_size, seed);
    if (shingles[i].empty()) return;
    sigs[i] = minhash_signature(ShingleSet{docs[i].id, shingles[i]}, family, cfg.minhash_num_bands);
    if (!cfg.dedup_verify) shingles[i].clear();
  });

  std::unordered_set<std::string_view> seen;
  BandIndex index(cfg.minhash_num_bands, cfg.dedup_verify, cfg.dedup_verify_threshold);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!seen.insert(docs[i].id).second) throw DataError("duplicate doc_id " + docs[i].id);
    if (sigs[i].components.empty()) continue;
    if (opts.emit_signatures) *opts.emit_signatures << signature_json(sigs[i]) << '\n';
    index.add(docs[i].id, sigs[i].bands, std::move(shingles[i]));
  }

  DedupResult result;
  result.clusters = index.resolve();
  const auto dropped = result.clusters.dropped();
  result.report.stage = Stage::dedup;
  result.report.docs_in = docs.size();
  for (auto& doc : docs) {
    if (dropped.count(doc.id)) {
      result.report.drop("near_duplicate");
    } else {
      result.kept.push_back(std::move(doc));
    }
  }
  result.report.docs_out = result.kept.size();
  return result;
}

}  // namespace forge::dedup
