#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "forge/model.hpp"

namespace forge::bpe {

inline constexpr int kDefaultVocabSize = 50368;

// Splits text into the units merges may not cross.
//   whitespace: an optional single leading space plus a run of non-space
//               bytes; other whitespace runs stand alone.
//   gpt2:       the GPT-2 pre-tokenization pattern (contractions, letter,
//               digit and symbol runs with an optional leading space).
enum class Pretokenizer { whitespace, gpt2 };

std::vector<std::string_view> pretokenize(std::string_view text, Pretokenizer mode);

// GPT-2 printable mapping of raw bytes, used in vocab.json and merges.txt.
std::string bytes_to_unicode(std::string_view bytes);
std::string unicode_to_bytes(std::string_view printable);

class BpeModel {
 public:
  // Byte-only model: 256 tokens, no merges.
  explicit BpeModel(Pretokenizer mode = Pretokenizer::whitespace);

  // Builds a model from merges given as raw byte strings, in training order.
  static BpeModel from_merges(const std::vector<std::pair<std::string, std::string>>& merges,
                              Pretokenizer mode = Pretokenizer::whitespace);

  // Appends a merge of two existing token ids; returns the new id.
  int add_merge(int left, int right);

  std::size_t vocab_size() const { return tokens_.size(); }
  const std::vector<std::pair<int, int>>& merges() const { return merges_; }
  const std::string& token_bytes(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  // Raw token bytes -> id.
  std::map<std::string, int> vocab() const;
  Pretokenizer pretokenizer() const { return mode_; }

  int target_vocab = kDefaultVocabSize;

  std::vector<int> encode(std::string_view text) const;
  // Throws DataError naming any id outside the vocabulary.
  std::string decode(std::span<const int> ids) const;
  std::size_t count_tokens(std::string_view text) const;

  // Applies merges to one pre-token.
  void encode_piece(std::string_view piece, std::vector<int>& out) const;

 private:
  static std::uint64_t pair_key(int left, int right) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) | static_cast<std::uint32_t>(right);
  }

  Pretokenizer mode_;
  std::vector<std::string> tokens_;
  std::vector<std::pair<int, int>> merges_;
  absl::flat_hash_map<std::uint64_t, int> rank_;  // pair -> merge index
};

// Memoizes per-piece encodings; one instance per thread.
class CachingEncoder {
 public:
  explicit CachingEncoder(const BpeModel& model) : model_(model) {}
  std::size_t count_tokens(std::string_view text);

 private:
  const BpeModel& model_;
  std::unordered_map<std::string, std::size_t> cache_;
  std::vector<int> scratch_;
};

// Greedy most-frequent-pair training; ties go to the pair whose
// (left bytes, right bytes) sorts first. Stops at target_vocab or when no pair
// occurs twice. Pairs whose bytes already form a token are skipped so ids
// stay unique per byte string. `seed` is recorded only: the tie-break is
// already total.
BpeModel train_bpe(const std::vector<std::string>& texts, int target_vocab, std::uint64_t seed = 0,
                   Pretokenizer mode = Pretokenizer::whitespace);
BpeModel train_bpe(const std::vector<Document>& docs, int target_vocab, std::uint64_t seed = 0,
                   Pretokenizer mode = Pretokenizer::whitespace);

std::size_t count_tokens(const BpeModel& model, const Document& doc);

std::string vocab_json(const BpeModel& model);
std::string merges_txt(const BpeModel& model);
// Writes vocab.json and merges.txt into `dir`.
void save_model(const BpeModel& model, const std::filesystem::path& dir);
// Reads merges.txt and checks vocab.json against the resulting ids.
BpeModel load_model(const std::filesystem::path& dir, Pretokenizer mode = Pretokenizer::whitespace);
// Reads a pretrained merges file alone, e.g. GPT-2's.
BpeModel load_merges(const std::filesystem::path& merges_path, Pretokenizer mode = Pretokenizer::gpt2);

}  // namespace forge::bpe
