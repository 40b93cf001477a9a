#include "forge/bpe.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <sstream>

#include <absl/container/flat_hash_set.h>

#include "forge/error.hpp"
#include "forge/ingest.hpp"
#include "forge/utf8.hpp"

namespace forge::bpe {

namespace {

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string_view> pretokenize_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    if (text[j] == ' ' && j + 1 < n && !is_ascii_space(text[j + 1])) ++j;
    if (!is_ascii_space(text[j])) {
      while (j < n && !is_ascii_space(text[j])) ++j;
      out.push_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    while (j < n && is_ascii_space(text[j])) ++j;
    // Leave a final single space to prefix the following word.
    if (j < n && text[j - 1] == ' ' && j - 1 > i) --j;
    out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

enum class CharClass { letter, digit, space, other };

CharClass classify(std::string_view text, std::size_t pos, std::size_t& next) {
  next = pos;
  const char32_t cp = utf8::next(text, next);
  if (utf8::is_space(cp)) return CharClass::space;
  if (utf8::is_alpha(cp)) return CharClass::letter;
  if (utf8::is_digit(cp)) return CharClass::digit;
  return CharClass::other;
}

std::size_t run_of(std::string_view text, std::size_t pos, CharClass cls) {
  while (pos < text.size()) {
    std::size_t next;
    if (classify(text, pos, next) != cls) break;
    pos = next;
  }
  return pos;
}

std::vector<std::string_view> pretokenize_gpt2(std::string_view text) {
  static constexpr std::array<std::string_view, 7> contractions{"'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};
  std::vector<std::string_view> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    if (text[i] == '\'') {
      bool matched = false;
      for (auto c : contractions) {
        if (text.substr(i, c.size()) == c) {
          out.push_back(text.substr(i, c.size()));
          i += c.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    std::size_t start = i;
    std::size_t body = i;
    if (text[i] == ' ' && i + 1 < n) {
      std::size_t after;
      if (classify(text, i + 1, after) != CharClass::space) body = i + 1;
    }
    std::size_t after;
    const CharClass cls = classify(text, body, after);
    if (cls != CharClass::space) {
      const std::size_t end = run_of(text, body, cls);
      out.push_back(text.substr(start, end - start));
      i = end;
      continue;
    }
    // Whitespace: \s+(?!\S) takes all but the last char when more follows.
    const std::size_t end = run_of(text, i, CharClass::space);
    if (end == n) {
      out.push_back(text.substr(i, end - i));
      i = end;
      continue;
    }
    std::size_t last = i;
    for (std::size_t p = i; p < end;) {
      last = p;
      utf8::next(text, p);
    }
    if (last > i) {
      out.push_back(text.substr(i, last - i));
      i = last;
      continue;
    }
    // A lone non-space whitespace char before a word stands alone; a lone
    // space was already taken as a prefix above.
    out.push_back(text.substr(i, end - i));
    i = end;
  }
  return out;
}

const std::array<char32_t, 256>& byte_encoder() {
  static const std::array<char32_t, 256> table = [] {
    std::array<char32_t, 256> t{};
    std::array<bool, 256> direct{};
    for (int b = '!'; b <= '~'; ++b) direct[static_cast<std::size_t>(b)] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[static_cast<std::size_t>(b)] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[static_cast<std::size_t>(b)] = true;
    char32_t shift = 0;
    for (std::size_t b = 0; b < 256; ++b) t[b] = direct[b] ? static_cast<char32_t>(b) : 256 + shift++;
    return t;
  }();
  return table;
}

const std::unordered_map<char32_t, unsigned char>& byte_decoder() {
  static const std::unordered_map<char32_t, unsigned char> table = [] {
    std::unordered_map<char32_t, unsigned char> t;
    const auto& enc = byte_encoder();
    for (std::size_t b = 0; b < 256; ++b) t.emplace(enc[b], static_cast<unsigned char>(b));
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text, Pretokenizer mode) {
  return mode == Pretokenizer::gpt2 ? pretokenize_gpt2(text) : pretokenize_whitespace(text);
}

std::string bytes_to_unicode(std::string_view bytes) {
  std::string out;
  const auto& enc = byte_encoder();
  for (char c : bytes) utf8::append(out, enc[static_cast<unsigned char>(c)]);
  return out;
}

std::string unicode_to_bytes(std::string_view printable) {
  std::string out;
  const auto& dec = byte_decoder();
  std::size_t pos = 0;
  while (pos < printable.size()) {
    const char32_t cp = utf8::next(printable, pos);
    auto it = dec.find(cp);
    if (it == dec.end()) throw DataError("token contains a character outside the byte alphabet");
    out.push_back(static_cast<char>(it->second));
  }
  return out;
}

BpeModel::BpeModel(Pretokenizer mode) : mode_(mode) {
  tokens_.reserve(256);
  for (int b = 0; b < 256; ++b) tokens_.emplace_back(1, static_cast<char>(b));
}

int BpeModel::add_merge(int left, int right) {
  const auto size = static_cast<int>(tokens_.size());
  if (left < 0 || right < 0 || left >= size || right >= size) throw DataError("merge references unknown token");
  if (!rank_.try_emplace(pair_key(left, right), static_cast<int>(merges_.size())).second) {
    throw DataError("duplicate merge");
  }
  merges_.emplace_back(left, right);
  tokens_.push_back(tokens_[static_cast<std::size_t>(left)] + tokens_[static_cast<std::size_t>(right)]);
  return size;
}

BpeModel BpeModel::from_merges(const std::vector<std::pair<std::string, std::string>>& merges, Pretokenizer mode) {
  BpeModel model(mode);
  std::unordered_map<std::string, int> ids;
  for (int b = 0; b < 256; ++b) ids.emplace(model.tokens_[static_cast<std::size_t>(b)], b);
  for (const auto& [l, r] : merges) {
    auto li = ids.find(l);
    auto ri = ids.find(r);
    if (li == ids.end() || ri == ids.end()) throw DataError("merge references a token not yet defined");
    const int id = model.add_merge(li->second, ri->second);
    if (!ids.emplace(model.tokens_[static_cast<std::size_t>(id)], id).second) {
      throw DataError("merge " + std::to_string(id - 256) + " produces an existing token");
    }
  }
  model.target_vocab = static_cast<int>(model.vocab_size());
  return model;
}

std::map<std::string, int> BpeModel::vocab() const {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) out.emplace(tokens_[i], static_cast<int>(i));
  return out;
}

void BpeModel::encode_piece(std::string_view piece, std::vector<int>& out) const {
  std::vector<int> syms;
  syms.reserve(piece.size());
  for (char c : piece) syms.push_back(static_cast<unsigned char>(c));
  if (!merges_.empty()) {
    for (;;) {
      int best_rank = std::numeric_limits<int>::max();
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        auto it = rank_.find(pair_key(syms[i], syms[i + 1]));
        if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
      }
      if (best_rank == std::numeric_limits<int>::max()) break;
      const auto [l, r] = merges_[static_cast<std::size_t>(best_rank)];
      const int merged = 256 + best_rank;
      std::size_t w = 0;
      for (std::size_t i = 0; i < syms.size(); ++w) {
        if (i + 1 < syms.size() && syms[i] == l && syms[i + 1] == r) {
          syms[w] = merged;
          i += 2;
        } else {
          syms[w] = syms[i];
          ++i;
        }
      }
      syms.resize(w);
    }
  }
  out.insert(out.end(), syms.begin(), syms.end());
}

std::vector<int> BpeModel::encode(std::string_view text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (auto piece : pretokenize(text, mode_)) encode_piece(piece, out);
  return out;
}

std::string BpeModel::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw DataError("token id " + std::to_string(id) + " out of range (vocab size " + std::to_string(tokens_.size()) + ")");
    }
    out += tokens_[static_cast<std::size_t>(id)];
  }
  return out;
}

std::size_t BpeModel::count_tokens(std::string_view text) const {
  std::vector<int> scratch;
  std::size_t n = 0;
  for (auto piece : pretokenize(text, mode_)) {
    scratch.clear();
    encode_piece(piece, scratch);
    n += scratch.size();
  }
  return n;
}

std::size_t CachingEncoder::count_tokens(std::string_view text) {
  std::size_t n = 0;
  for (auto piece : pretokenize(text, model_.pretokenizer())) {
    if (piece.size() <= 1) {
      n += piece.size();
      continue;
    }
    auto it = cache_.find(std::string(piece));
    if (it == cache_.end()) {
      scratch_.clear();
      model_.encode_piece(piece, scratch_);
      if (cache_.size() > (1u << 20)) cache_.clear();
      it = cache_.emplace(std::string(piece), scratch_.size()).first;
    }
    n += it->second;
  }
  return n;
}

std::size_t count_tokens(const BpeModel& model, const Document& doc) { return model.count_tokens(doc.text); }

BpeModel train_bpe(const std::vector<std::string>& texts, int target_vocab, std::uint64_t /*seed*/, Pretokenizer mode) {
  if (target_vocab < 257) throw ConfigError("target_vocab must be >= 257");
  if (texts.empty()) throw DataError("empty corpus");

  absl::flat_hash_map<std::string, std::int64_t> piece_counts;
  for (const auto& text : texts) {
    for (auto piece : pretokenize(text, mode)) ++piece_counts[std::string(piece)];
  }
  if (piece_counts.empty()) throw DataError("empty corpus");

  // Sorted so that every later iteration order is deterministic.
  std::vector<std::pair<std::string, std::int64_t>> pieces(piece_counts.begin(), piece_counts.end());
  std::sort(pieces.begin(), pieces.end());

  BpeModel model(mode);
  model.target_vocab = target_vocab;

  auto key = [](int l, int r) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(l)) << 32) | static_cast<std::uint32_t>(r);
  };
  std::vector<std::vector<int>> words(pieces.size());
  std::vector<std::int64_t> freq(pieces.size());
  absl::flat_hash_map<std::uint64_t, std::int64_t> pair_counts;
  absl::flat_hash_map<std::uint64_t, std::vector<std::uint32_t>> where;
  for (std::size_t w = 0; w < pieces.size(); ++w) {
    freq[w] = pieces[w].second;
    for (char c : pieces[w].first) words[w].push_back(static_cast<unsigned char>(c));
    for (std::size_t i = 0; i + 1 < words[w].size(); ++i) {
      const auto k = key(words[w][i], words[w][i + 1]);
      pair_counts[k] += freq[w];
      where[k].push_back(static_cast<std::uint32_t>(w));
    }
  }

  absl::flat_hash_set<std::string> known;
  for (int b = 0; b < 256; ++b) known.insert(model.token_bytes(b));
  // Pairs whose concatenation is already a token; merging them would give
  // two ids the same bytes.
  absl::flat_hash_set<std::uint64_t> blocked;

  while (static_cast<int>(model.vocab_size()) < target_vocab) {
    std::uint64_t best = 0;
    std::int64_t best_count = 0;
    for (const auto& [k, c] : pair_counts) {
      if (c < best_count || blocked.contains(k)) continue;
      if (c > best_count) {
        best = k;
        best_count = c;
        continue;
      }
      const int bl = static_cast<int>(best >> 32), br = static_cast<int>(best & 0xffffffffu);
      const int kl = static_cast<int>(k >> 32), kr = static_cast<int>(k & 0xffffffffu);
      const auto& kb = model.token_bytes(kl);
      const auto& bb = model.token_bytes(bl);
      if (kb < bb || (kb == bb && model.token_bytes(kr) < model.token_bytes(br))) best = k;
    }
    if (best_count < 2) break;

    const int left = static_cast<int>(best >> 32);
    const int right = static_cast<int>(best & 0xffffffffu);
    if (!known.insert(model.token_bytes(left) + model.token_bytes(right)).second) {
      blocked.insert(best);
      continue;
    }
    const int merged = model.add_merge(left, right);

    std::vector<std::uint32_t> affected = std::move(where[best]);
    where.erase(best);
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
    for (std::uint32_t w : affected) {
      auto& syms = words[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        if (syms[i] == left && syms[i + 1] == right) {
          present = true;
          break;
        }
      }
      if (!present) continue;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        auto it = pair_counts.find(key(syms[i], syms[i + 1]));
        it->second -= freq[w];
        if (it->second == 0) pair_counts.erase(it);
      }
      std::size_t out = 0;
      for (std::size_t i = 0; i < syms.size(); ++out) {
        if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
          syms[out] = merged;
          i += 2;
        } else {
          syms[out] = syms[i];
          ++i;
        }
      }
      syms.resize(out);
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        const auto k = key(syms[i], syms[i + 1]);
        pair_counts[k] += freq[w];
        if (syms[i] == merged || syms[i + 1] == merged) where[k].push_back(w);
      }
    }
  }
  return model;
}

BpeModel train_bpe(const std::vector<Document>& docs, int target_vocab, std::uint64_t seed, Pretokenizer mode) {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  return train_bpe(texts, target_vocab, seed, mode);
}

std::string vocab_json(const BpeModel& model) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t id = 0; id < model.vocab_size(); ++id) {
    j[bytes_to_unicode(model.token_bytes(static_cast<int>(id)))] = id;
  }
  return j.dump() + "\n";
}

std::string merges_txt(const BpeModel& model) {
  std::string out = "#version: 0.2\n";
  for (const auto& [l, r] : model.merges()) {
    out += bytes_to_unicode(model.token_bytes(l));
    out.push_back(' ');
    out += bytes_to_unicode(model.token_bytes(r));
    out.push_back('\n');
  }
  return out;
}

void save_model(const BpeModel& model, const std::filesystem::path& dir) {
  ingest::write_file(dir / "vocab.json", vocab_json(model));
  ingest::write_file(dir / "merges.txt", merges_txt(model));
}

BpeModel load_merges(const std::filesystem::path& merges_path, Pretokenizer mode) {
  std::istringstream in(ingest::read_file(merges_path));
  std::vector<std::pair<std::string, std::string>> merges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("#version", 0) == 0) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || line.find(' ', space + 1) != std::string::npos) {
      throw DataError("malformed merge at " + merges_path.string() + ":" + std::to_string(line_no));
    }
    merges.emplace_back(unicode_to_bytes(line.substr(0, space)), unicode_to_bytes(line.substr(space + 1)));
  }
  return BpeModel::from_merges(merges, mode);
}

BpeModel load_model(const std::filesystem::path& dir, Pretokenizer mode) {
  BpeModel model = load_merges(dir / "merges.txt", mode);
  nlohmann::json vocab;
  try {
    vocab = nlohmann::json::parse(ingest::read_file(dir / "vocab.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed vocab.json: " + std::string(e.what()));
  }
  if (!vocab.is_object() || vocab.size() != model.vocab_size()) {
    throw DataError("vocab.json size does not match merges.txt");
  }
  for (const auto& [token, id] : vocab.items()) {
    const auto i = id.get<std::int64_t>();
    if (i < 0 || static_cast<std::size_t>(i) >= model.vocab_size() ||
        model.token_bytes(static_cast<int>(i)) != unicode_to_bytes(token)) {
      throw DataError("vocab.json disagrees with merges.txt at token " + token);
    }
  }
  return model;
}

}  // namespace forge::bpe
