#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "forge/dedup.hpp"
#include "forge/error.hpp"
#include "forge/hash.hpp"

using namespace forge;
using namespace forge::dedup;

namespace {

Document doc(const std::string& id, const std::string& text) { return {id, text, "s", std::nullopt, {}}; }

std::vector<std::uint64_t> set_of(std::initializer_list<const char*> items, std::uint64_t seed = 3) {
  std::vector<std::uint64_t> out;
  for (const char* s : items) out.push_back(hash64(s, seed));
  std::sort(out.begin(), out.end());
  return out;
}

// Brute-force Jaccard over std::set.
double jaccard_oracle(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::set<std::uint64_t> sa(a.begin(), a.end()), sb(b.begin(), b.end()), u = sa;
  u.insert(sb.begin(), sb.end());
  std::size_t common = 0;
  for (auto x : sa) common += sb.count(x);
  return static_cast<double>(common) / static_cast<double>(u.size());
}

std::string random_text(CounterRng& rng, int words) {
  std::string out;
  for (int i = 0; i < words; ++i) {
    if (i) out.push_back(' ');
    out += "w" + std::to_string(rng.below(1'000'000));
  }
  return out;
}

}  // namespace

TEST_CASE("window count is n - k + 1") {
  const auto s = shingle_hashes("a b c d e f", 5, 1);
  CHECK(s.size() == 2);
  CHECK(s == set_of({"a b c d e", "b c d e f"}, 1));
}

TEST_CASE("short documents are one whole-text shingle") {
  CHECK(shingle_hashes("a b", 5, 1) == set_of({"a b"}, 1));
  CHECK(shingle_hashes("  A\tB \n", 5, 1) == set_of({"a b"}, 1));
}

TEST_CASE("a document with no words is an error for shingle()") {
  CHECK(shingle_hashes(" \n\t", 5, 1).empty());
  CHECK_THROWS_AS(shingle(doc("e", "   "), 5, 1), DataError);
}

TEST_CASE("seed changes values but not cardinality") {
  const std::string text = "o gato viu o rato e o rato viu o gato de novo";
  const auto a = shingle_hashes(text, 5, 1), b = shingle_hashes(text, 5, 2);
  CHECK(a.size() == b.size());
  std::vector<std::uint64_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  CHECK(common.empty());
}

TEST_CASE("identical sets give identical signatures") {
  PipelineConfig cfg;
  const ShingleSet s{"x", set_of({"a", "b", "c"})};
  const auto x = minhash_signature(s, cfg);
  auto y = minhash_signature(ShingleSet{"x", s.shingles}, cfg);
  CHECK(x == y);
  CHECK(x.components.size() == 112);
  CHECK(x.bands.size() == 14);
  for (auto c : x.components) CHECK(c < kMersenne61);
}

TEST_CASE("band keys digest consecutive row blocks") {
  std::vector<std::uint64_t> comps(112);
  for (std::size_t i = 0; i < comps.size(); ++i) comps[i] = i;
  const auto a = band_keys(comps, 14);
  comps[8] = 999;  // first row of band 1
  const auto b = band_keys(comps, 14);
  for (std::size_t k = 0; k < 14; ++k) CHECK((a[k] == b[k]) == (k != 1));
  CHECK_THROWS_AS(band_keys(comps, 13), ConfigError);
}

TEST_CASE("component match fraction estimates Jaccard") {
  const auto s1 = set_of({"a", "b", "c", "d"}), s2 = set_of({"b", "c", "d", "e"});
  CHECK(jaccard(s1, s2) == doctest::Approx(0.6));
  CHECK(jaccard_oracle(s1, s2) == doctest::Approx(0.6));
  const auto d1 = set_of({"p", "q"}), d2 = set_of({"r", "s"});
  double sum = 0.0, disjoint = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const HashFamily f(seed, 112);
    sum += match_fraction(minhash_signature({"1", s1}, f, 14), minhash_signature({"2", s2}, f, 14));
    disjoint += match_fraction(minhash_signature({"1", d1}, f, 14), minhash_signature({"2", d2}, f, 14));
  }
  CHECK(sum / 200 >= 0.55);
  CHECK(sum / 200 <= 0.65);
  CHECK(disjoint / 200 <= 0.05);
}

TEST_CASE("exact Jaccard agrees with the set oracle") {
  CounterRng rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint64_t> a, b;
    for (int i = 0; i < 40; ++i) {
      if (rng.below(2)) a.push_back(rng.below(60));
      if (rng.below(2)) b.push_back(rng.below(60));
    }
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    if (a.empty() || b.empty()) continue;
    CHECK(jaccard(a, b) == doctest::Approx(jaccard_oracle(a, b)));
  }
}

TEST_CASE("byte-identical documents cluster; disjoint ones do not") {
  PipelineConfig cfg;
  const auto seed = shingle_seed(cfg.master_seed);
  const std::string t = "uma frase qualquer com várias palavras para formar shingles";
  std::vector<MinHashSignature> sigs{minhash_signature(shingle(doc("b", t), 5, seed), cfg),
                                     minhash_signature(shingle(doc("a", t), 5, seed), cfg),
                                     minhash_signature(shingle(doc("c", "totalmente outro texto sem nada em comum"), 5, seed), cfg)};
  for (std::size_t k = 0; k < 14; ++k) CHECK(sigs[0].bands[k] == sigs[1].bands[k]);
  const auto c = cluster_duplicates(sigs);
  REQUIRE(c.clusters.size() == 1);
  CHECK(c.clusters[0] == std::set<std::string>{"a", "b"});
  CHECK(c.kept.at(0) == "a");
  CHECK(c.dropped() == std::set<std::string>{"b"});
}

TEST_CASE("banding detection rate at similarity 0.8") {
  // |A & B| = 80, |A | B| = 100.
  const double expected = 1.0 - std::pow(1.0 - std::pow(0.8, 8), 14);
  CHECK(expected == doctest::Approx(0.9235).epsilon(0.001));
  int detected = 0;
  for (std::uint64_t pair = 0; pair < 500; ++pair) {
    std::vector<std::uint64_t> a, b;
    for (std::uint64_t i = 0; i < 100; ++i) {
      const auto v = hash64(std::to_string(i), pair);
      if (i < 90) a.push_back(v);
      if (i >= 10) b.push_back(v);
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    REQUIRE(jaccard(a, b) == doctest::Approx(0.8));
    const HashFamily f(1000 + pair, 112);
    const auto x = minhash_signature({"x", a}, f, 14), y = minhash_signature({"y", b}, f, 14);
    detected += !cluster_duplicates({x, y}).clusters.empty();
  }
  MESSAGE("detected " << detected << "/500, analytic " << expected);
  CHECK(detected >= 445);
  CHECK(detected <= 475);
}

TEST_CASE("band index matches the batch clustering") {
  CounterRng rng(9);
  PipelineConfig cfg;
  cfg.minhash_num_hashes = 16;
  cfg.minhash_num_bands = 8;  // loose bands so chains form
  const auto seed = shingle_seed(cfg.master_seed);
  std::vector<std::string> base;
  for (int i = 0; i < 10; ++i) base.push_back(random_text(rng, 12));
  std::vector<MinHashSignature> sigs;
  BandIndex index(cfg.minhash_num_bands);
  for (int i = 0; i < 60; ++i) {
    std::string text = base[rng.below(base.size())];
    if (rng.below(2)) text += " " + random_text(rng, 2);
    const auto s = minhash_signature(shingle(doc("d" + std::to_string(100 - i), text), 5, seed), cfg);
    sigs.push_back(s);
    index.add(s.doc_id, s.bands);
  }
  const auto batch = cluster_duplicates(sigs);
  const auto streamed = index.resolve();
  CHECK(batch.clusters == streamed.clusters);
  CHECK(batch.kept == streamed.kept);
  CHECK(!batch.clusters.empty());
  // Every cluster is a connected component of the band-sharing graph.
  std::map<std::string, std::size_t> which;
  for (std::size_t c = 0; c < batch.clusters.size(); ++c) {
    for (const auto& id : batch.clusters[c]) which[id] = c;
    CHECK(batch.kept.at(c) == *batch.clusters[c].begin());
  }
  for (std::size_t i = 0; i < sigs.size(); ++i) {
    for (std::size_t j = i + 1; j < sigs.size(); ++j) {
      bool share = false;
      for (std::size_t k = 0; k < sigs[i].bands.size(); ++k) share |= sigs[i].bands[k] == sigs[j].bands[k];
      if (share) {
        REQUIRE(which.count(sigs[i].doc_id));
        CHECK(which.at(sigs[i].doc_id) == which.at(sigs[j].doc_id));
      }
    }
  }
}

TEST_CASE("verify mode rejects low-Jaccard candidates") {
  // Both sets share every band key but have Jaccard 0 at the shingle level:
  // craft identical signatures over different sets.
  MinHashSignature x{"x", std::vector<std::uint64_t>(112, 1), {}}, y{"y", std::vector<std::uint64_t>(112, 1), {}};
  x.bands = band_keys(x.components, 14);
  y.bands = band_keys(y.components, 14);
  const std::vector<ShingleSet> sets{{"x", {1, 2, 3}}, {"y", {4, 5, 6}}};
  CHECK(cluster_duplicates({x, y}).clusters.size() == 1);
  CHECK(cluster_duplicates({x, y}, &sets, 0.7).clusters.empty());
  const std::vector<ShingleSet> close{{"x", {1, 2, 3, 4, 5}}, {"y", {1, 2, 3, 4, 5}}};
  CHECK(cluster_duplicates({x, y}, &close, 0.7).clusters.size() == 1);
}

TEST_CASE("dedup corpus drops one of a duplicated pair") {
  CounterRng rng(21);
  std::vector<Document> docs;
  for (int i = 0; i < 30; ++i) docs.push_back(doc("d" + std::to_string(i), random_text(rng, 40)));
  auto distinct = dedup::dedup_corpus(docs, PipelineConfig{});
  CHECK(distinct.report.docs_out == distinct.report.docs_in);

  docs.push_back(doc("z-copy", docs[3].text));
  std::ostringstream sigs;
  auto r = dedup::dedup_corpus(docs, PipelineConfig{}, {&sigs, 2});
  CHECK(r.report.docs_out == r.report.docs_in - 1);
  CHECK(r.report.drop_reasons.at("near_duplicate") == 1);
  for (const auto& d : r.kept) CHECK(d.id != "z-copy");
  std::size_t lines = 0;
  for (char c : sigs.str()) lines += c == '\n';
  CHECK(lines == docs.size());
  const auto first = nlohmann::json::parse(sigs.str().substr(0, sigs.str().find('\n')));
  CHECK(first.at("components").size() == 112);
  CHECK(first.at("bands").size() == 14);
}

TEST_CASE("duplicate ids are rejected") {
  std::vector<Document> docs{doc("a", "x y z"), doc("a", "p q r")};
  CHECK_THROWS_AS(dedup::dedup_corpus(docs, PipelineConfig{}), DataError);
}

TEST_CASE("1000 -> 588 retention reads 58.80") {
  StageReport r;
  r.docs_in = 1000;
  r.docs_out = 588;
  CHECK(r.retention_pct().str() == "58.80");
}
