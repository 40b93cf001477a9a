#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "forge/model.hpp"

namespace forge::dedup {

// Mersenne prime 2^61 - 1, modulus of the universal hash family.
inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

struct ShingleSet {
  std::string doc_id;
  std::vector<std::uint64_t> shingles;  // sorted, unique
};

// Hashes every lowercase `size`-word window; documents shorter than `size`
// words contribute their whole text as one shingle. Throws DataError on a
// document with no words.
ShingleSet shingle(const Document& doc, int size, std::uint64_t seed);
std::vector<std::uint64_t> shingle_hashes(std::string_view text, int size, std::uint64_t seed);

// Seed used for shingle hashing under a given master seed.
std::uint64_t shingle_seed(std::uint64_t master_seed);

// The (a_j, b_j) pairs of h_j(x) = (a_j * x + b_j) mod p, drawn from the
// master seed by a counter-mode generator.
class HashFamily {
 public:
  HashFamily(std::uint64_t master_seed, int num_hashes);

  std::size_t size() const { return a_.size(); }
  // Writes the component-wise minima of every h_j over `shingles`.
  void minima(const std::vector<std::uint64_t>& shingles, std::vector<std::uint64_t>& out) const;

 private:
  std::vector<std::uint64_t> a_;
  std::vector<std::uint64_t> b_;
};

struct MinHashSignature {
  std::string doc_id;
  std::vector<std::uint64_t> components;
  std::vector<std::uint64_t> bands;

  friend bool operator==(const MinHashSignature&, const MinHashSignature&) = default;
};

// Band k digests components [k*r, (k+1)*r).
std::vector<std::uint64_t> band_keys(const std::vector<std::uint64_t>& components, int num_bands);

MinHashSignature minhash_signature(const ShingleSet& s, const PipelineConfig& cfg);
MinHashSignature minhash_signature(const ShingleSet& s, const HashFamily& family, int num_bands);

// Fraction of equal components between two signatures of equal length.
double match_fraction(const MinHashSignature& x, const MinHashSignature& y);

// Exact Jaccard similarity of two sorted unique hash sets.
double jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

struct DuplicateClusters {
  std::vector<std::set<std::string>> clusters;
  std::map<std::size_t, std::string> kept;  // cluster index -> survivor

  // Every clustered id that is not its cluster's survivor.
  std::set<std::string> dropped() const;
};

// Groups documents sharing at least one band key into connected components.
// Survivor per cluster is the lexicographically smallest id. With
// `verify`, a candidate link is accepted only when the exact shingle-set
// Jaccard reaches `verify_threshold`; `shingles` must then be parallel to
// `signatures`.
DuplicateClusters cluster_duplicates(const std::vector<MinHashSignature>& signatures,
                                     const std::vector<ShingleSet>* shingles = nullptr,
                                     double verify_threshold = 0.7);

struct DedupResult {
  std::vector<Document> kept;
  StageReport report;
  DuplicateClusters clusters;
};

struct DedupOptions {
  // Receives each signature as JSON `{id, components, bands}`.
  std::ostream* emit_signatures = nullptr;
  int jobs = 1;
};

// Drops every clustered document except its survivor, preserving order.
// Documents without any word are passed through unclustered.
DedupResult dedup_corpus(std::vector<Document> docs, const PipelineConfig& cfg, const DedupOptions& opts = {});

std::string signature_json(const MinHashSignature& sig);

// Reduce phase over compact per-document band keys; used by the streaming
// pipeline, which never materializes full signatures.
class BandIndex {
 public:
  // With `verify`, every bucket member is kept and links need the exact
  // shingle-set Jaccard to reach `verify_threshold`.
  explicit BandIndex(int num_bands, bool verify = false, double verify_threshold = 0.7);

  // Registers a document and links it to earlier holders of its band keys.
  // `shingles` is required in verify mode and ignored otherwise.
  void add(std::string id, const std::vector<std::uint64_t>& bands, std::vector<std::uint64_t> shingles = {});
  // Resolves clusters; the index is read-only afterwards.
  DuplicateClusters resolve() const;
  std::size_t size() const { return ids_.size(); }
  std::size_t memory_bytes() const;

 private:
  std::size_t find(std::size_t x) const;
  void unite(std::size_t x, std::size_t y);

  int num_bands_;
  bool verify_;
  double verify_threshold_;
  std::vector<std::string> ids_;
  mutable std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<absl::flat_hash_map<std::uint64_t, std::uint32_t>> first_;
  std::vector<absl::flat_hash_map<std::uint64_t, std::vector<std::uint32_t>>> members_;
  std::vector<std::vector<std::uint64_t>> shingles_;
};

}  // namespace forge::dedup
