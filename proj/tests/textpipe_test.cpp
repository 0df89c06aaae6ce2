#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "earlyrisk/textpipe.hpp"

namespace fs = std::filesystem;
using namespace earlyrisk;
using namespace earlyrisk::textpipe;
using Catch::Matchers::WithinAbs;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("earlyrisk_textpipe_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

TokenStream toks(std::initializer_list<const char*> list) {
  return TokenStream(list.begin(), list.end());
}

}  // namespace

TEST_CASE("tokenizer lowercases, splits, and maps sentinels", "[textpipe]") {
  CHECK(normalize_and_tokenize(
            "I was checking my sleep schedule for 3 years, see "
            "https://example.com/x?q=1 or WWW.Foo.org!") ==
        toks({"checking", "sleep", "schedule", "<num>", "years", "<url>",
              "<url>"}));
  CHECK(normalize_and_tokenize("Don't worry -- it's fine... really fine.") ==
        toks({"worry", "fine", "fine"}));
  CHECK(normalize_and_tokenize("  \t\n ").empty());
  CHECK(normalize_and_tokenize("").empty());
  // Numbers with separators and signs collapse to the sentinel; mixed
  // alphanumerics survive as-is.
  CHECK(normalize_and_tokenize("12,345.67 -42 3.5 a1b2 2nd") ==
        toks({"<num>", "<num>", "<num>", "a1b2", "2nd"}));
  // Punctuation splits within a whitespace token.
  CHECK(normalize_and_tokenize("Mental-Health check: co-occurring symptoms?") ==
        toks({"mental", "health", "check", "occurring", "symptoms"}));
}

TEST_CASE("stopword list keeps content words and drops glue", "[textpipe]") {
  for (const char* w : {"check", "years", "sleep", "worry", "mental",
                        "health", "symptoms", "doctor"}) {
    CAPTURE(w);
    CHECK_FALSE(is_stopword(w));
  }
  for (const char* w : {"really", "alone", "my", "hello", "help", "don", "t",
                        "the", "a", "welcome"}) {
    CAPTURE(w);
    CHECK(is_stopword(w));
  }
}

TEST_CASE("tokenizer output is a fixpoint for sentinel-free text", "[textpipe]") {
  const TokenStream first = normalize_and_tokenize(
      "Sleeping badly again; therapy tomorrow, maybe medication too?");
  REQUIRE_FALSE(first.empty());
  std::string joined;
  for (const auto& t : first) {
    if (is_sentinel(t)) continue;
    if (!joined.empty()) joined += ' ';
    joined += t;
  }
  TokenStream expect;
  for (const auto& t : first) {
    if (!is_sentinel(t)) expect.push_back(t);
  }
  CHECK(normalize_and_tokenize(joined) == expect);
}

TEST_CASE("stemming skips sentinels and joined terms", "[textpipe]") {
  CHECK(stem_stream(toks({"checking", "<url>", "symptoms", "mental_health",
                          "agreed"})) ==
        toks({"check", "<url>", "symptom", "mental_health", "agre"}));
  CHECK(stem_stream({}).empty());
}

TEST_CASE("npmi matches hand-computed values", "[textpipe]") {
  // nPMI(a,b) with count_ab=10, count_a=20, count_b=30, N=1000:
  // ln((10/1000)/((20/1000)(30/1000))) / -ln(10/1000).
  CHECK_THAT(npmi_from_counts(10, 20, 30, 1000),
             WithinAbs(0.61092437480817829, 1e-15));
  // A pair whose members never occur apart scores exactly 1.
  CHECK(npmi_from_counts(5, 5, 5, 100) == 1.0);
  CHECK(npmi_from_counts(1, 1, 1, 50) == 1.0);
  // Independence: p_ab = p_a p_b gives 0.
  CHECK_THAT(npmi_from_counts(4, 20, 20, 100), WithinAbs(0.0, 1e-12));
  // Anti-correlation scores negative.
  CHECK(npmi_from_counts(1, 40, 40, 100) < 0.0);
}

TEST_CASE("npmi stays within [-1, 1] over random counts", "[textpipe]") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t total = 100 + static_cast<std::int64_t>(rng() % 10000);
    const std::int64_t a = 1 + static_cast<std::int64_t>(rng() % (total / 2));
    const std::int64_t b = 1 + static_cast<std::int64_t>(rng() % (total / 2));
    const std::int64_t pair =
        1 + static_cast<std::int64_t>(rng() % std::min(a, b));
    if (pair >= total) continue;
    const double v = npmi_from_counts(pair, a, b, total);
    CAPTURE(pair, a, b, total);
    CHECK(v <= 1.0 + 1e-12);
    CHECK(v >= -1.0 - 1e-12);
  }
}

TEST_CASE("npmi rejects degenerate counts", "[textpipe]") {
  CHECK_THROWS_AS(npmi_from_counts(0, 1, 1, 10), DataError);
  CHECK_THROWS_AS(npmi_from_counts(1, 0, 1, 10), DataError);
  CHECK_THROWS_AS(npmi_from_counts(1, 1, 0, 10), DataError);
  CHECK_THROWS_AS(npmi_from_counts(1, 1, 1, 0), DataError);
  // Pair probability of 1 leaves the normalizer at zero.
  CHECK_THROWS_AS(npmi_from_counts(10, 10, 10, 10), DataError);
}

TEST_CASE("component_count counts underscore-joined parts", "[textpipe]") {
  CHECK(component_count("sleep") == 1);
  CHECK(component_count("mental_health") == 2);
  CHECK(component_count("panic_attack_symptom") == 3);
}

TEST_CASE("collocation extraction merges frequent cohesive pairs",
          "[textpipe]") {
  // "panic attack" occurs 12 times, always together; "feel tired" occurs
  // twice, below min_count. Filler tokens are distinct, keeping cohesion
  // for the planted pair high.
  std::vector<TokenStream> docs;
  for (int i = 0; i < 12; ++i) {
    TokenStream doc = {"panic", "attack"};
    doc.push_back("filler" + std::to_string(i));
    doc.push_back("other" + std::to_string(i));
    if (i < 2) {
      doc.push_back("feel");
      doc.push_back("tired");
    }
    docs.push_back(doc);
  }
  CollocationConfig cfg;
  cfg.min_count = 10;
  cfg.npmi_threshold = 0.5;
  cfg.passes = 2;
  const CollocationModel model = extract_collocations(docs, cfg);
  REQUIRE(model.merges.size() == 2);
  CHECK(model.merges[0].count("panic_attack") == 1);
  CHECK(model.merges[0].count("feel_tired") == 0);
  CHECK(model.merges[1].empty());

  CHECK(model.rewrite(toks({"panic", "attack", "feel", "tired"})) ==
        toks({"panic_attack", "feel", "tired"}));
  // Greedy left-to-right: the middle token pairs with its left neighbor.
  CHECK(model.rewrite(toks({"panic", "attack", "attack"})) ==
        toks({"panic_attack", "attack"}));
}

TEST_CASE("second pass joins a bigram with a unigram", "[textpipe]") {
  // Every document repeats "panic attack disorder", so pass 1 forms
  // panic_attack and pass 2 forms panic_attack_disorder.
  std::vector<TokenStream> docs;
  for (int i = 0; i < 12; ++i) {
    docs.push_back(toks({"panic", "attack", "disorder"}));
    docs.back().push_back("filler" + std::to_string(i));
  }
  CollocationConfig cfg;
  cfg.min_count = 10;
  cfg.npmi_threshold = 0.5;
  cfg.passes = 2;
  const CollocationModel model = extract_collocations(docs, cfg);
  REQUIRE(model.merges.size() == 2);
  CHECK(model.merges[0].count("panic_attack") == 1);
  CHECK(model.merges[1].count("panic_attack_disorder") == 1);
  CHECK(model.rewrite(toks({"panic", "attack", "disorder"})) ==
        toks({"panic_attack_disorder"}));

  // With passes = 1 the trigram never forms.
  cfg.passes = 1;
  const CollocationModel one = extract_collocations(docs, cfg);
  REQUIRE(one.merges.size() == 1);
  CHECK(one.rewrite(toks({"panic", "attack", "disorder"})) ==
        toks({"panic_attack", "disorder"}));
}

TEST_CASE("collocations never straddle a sentinel", "[textpipe]") {
  std::vector<TokenStream> docs;
  for (int i = 0; i < 20; ++i) {
    docs.push_back(toks({"saw", "<url>", "today"}));
    docs.back().push_back("filler" + std::to_string(i));
  }
  CollocationConfig cfg;
  cfg.min_count = 10;
  cfg.npmi_threshold = 0.5;
  cfg.passes = 1;
  const CollocationModel model = extract_collocations(docs, cfg);
  for (const auto& pass : model.merges) {
    for (const auto& term : pass) {
      CAPTURE(term);
      CHECK(term.find('<') == std::string::npos);
    }
  }
  CHECK(model.rewrite(toks({"saw", "<url>", "today"})) ==
        toks({"saw", "<url>", "today"}));
}

TEST_CASE("collocation extraction ignores document order", "[textpipe]") {
  std::vector<TokenStream> docs;
  for (int i = 0; i < 30; ++i) {
    TokenStream doc;
    if (i % 2 == 0) {
      doc = toks({"low", "mood", "lately"});
    } else {
      doc = toks({"new", "coping", "strategy"});
    }
    doc.push_back("filler" + std::to_string(i));
    docs.push_back(doc);
  }
  CollocationConfig cfg;
  cfg.min_count = 10;
  cfg.npmi_threshold = 0.3;
  cfg.passes = 2;
  const CollocationModel a = extract_collocations(docs, cfg);

  std::vector<TokenStream> shuffled = docs;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(5));
  REQUIRE(shuffled != docs);
  const CollocationModel b = extract_collocations(shuffled, cfg);
  CHECK(a.merges == b.merges);

  // Determinism on identical input.
  const CollocationModel c = extract_collocations(docs, cfg);
  CHECK(a.merges == c.merges);
}

TEST_CASE("collocation extraction validates its configuration", "[textpipe]") {
  CollocationConfig cfg;
  cfg.passes = -1;
  CHECK_THROWS_AS(extract_collocations({}, cfg), UsageError);
}

TEST_CASE("vocabulary indexes surviving terms lexicographically",
          "[textpipe]") {
  const std::vector<TokenStream> docs = {
      toks({"zebra", "apple", "apple"}),
      toks({"apple", "mango"}),
      toks({"mango", "zebra"}),
      toks({"apple", "mango", "unique"}),
  };
  const Vocabulary vocab = build_vocabulary(docs, 2, 1.0);
  // "unique" has df 1 < 2 and is dropped; the rest sort lexicographically.
  REQUIRE(vocab.terms == std::vector<std::string>{"apple", "mango", "zebra"});
  CHECK(vocab.index.at("apple") == 0);
  CHECK(vocab.index.at("mango") == 1);
  CHECK(vocab.index.at("zebra") == 2);
  // Document frequency counts documents, not occurrences.
  CHECK(vocab.doc_frequency == std::vector<std::int64_t>{3, 3, 2});
  CHECK(vocab.total_docs == 4);

  // max_df_fraction removes near-ubiquitous terms.
  const Vocabulary capped = build_vocabulary(docs, 1, 0.5);
  CHECK(capped.index.count("apple") == 0);
  CHECK(capped.index.count("mango") == 0);
  CHECK(capped.index.count("zebra") == 1);
  CHECK(capped.index.count("unique") == 1);
}

TEST_CASE("vocabulary construction rejects empty inputs", "[textpipe]") {
  CHECK_THROWS_AS(build_vocabulary({}, 1, 1.0), DataError);
  // All terms filtered out is also an error.
  CHECK_THROWS_AS(build_vocabulary({toks({"once"})}, 2, 1.0), DataError);
}

TEST_CASE("doc_to_counts aggregates known terms in index order",
          "[textpipe]") {
  const std::vector<TokenStream> docs = {toks({"b", "c"}), toks({"b", "c"})};
  const Vocabulary vocab = build_vocabulary(docs, 1, 1.0);
  const SparseCounts counts = doc_to_counts(toks({"b", "b", "c", "zzz"}), vocab);
  REQUIRE(counts.entries.size() == 2);
  CHECK(counts.entries[0] == std::pair<std::int32_t, std::int32_t>{0, 2});
  CHECK(counts.entries[1] == std::pair<std::int32_t, std::int32_t>{1, 1});

  // Token order within the document is irrelevant.
  const SparseCounts again =
      doc_to_counts(toks({"zzz", "c", "b", "b"}), vocab);
  CHECK(counts.entries == again.entries);

  CHECK(doc_to_counts(toks({"unknown"}), vocab).empty());
  CHECK(doc_to_counts({}, vocab).empty());
}

TEST_CASE("process_document runs the full text path", "[textpipe]") {
  CollocationModel model;
  model.config.passes = 1;
  model.merges.push_back({"mental_health"});
  CHECK(process_document("My mental health was slipping; 4 weeks now.",
                         model) ==
        toks({"mental_health", "slip", "<num>", "week"}));
}

TEST_CASE("vocabulary artifact round-trips", "[textpipe]") {
  const std::vector<TokenStream> docs = {
      toks({"sleep", "bad", "week"}),
      toks({"sleep", "therapy"}),
      toks({"bad", "therapy", "week"}),
  };
  Vocabulary vocab = build_vocabulary(docs, 1, 1.0);
  vocab.config_hash = fnv1a64("vocab-settings");
  const fs::path path = temp_file("vocab.txt");
  save_vocabulary(path, vocab);
  const Vocabulary back = load_vocabulary(path);
  CHECK(back.terms == vocab.terms);
  CHECK(back.doc_frequency == vocab.doc_frequency);
  CHECK(back.total_docs == vocab.total_docs);
  CHECK(back.config_hash == vocab.config_hash);
  for (const auto& [term, idx] : vocab.index) {
    CHECK(back.index.at(term) == idx);
  }

  // Tampered headers are rejected.
  write_text_file(path, "not-a-vocab\n");
  CHECK_THROWS_AS(load_vocabulary(path), DataError);
  fs::remove(path);
}

TEST_CASE("collocation artifact round-trips", "[textpipe]") {
  CollocationModel model;
  model.config.min_count = 7;
  model.config.npmi_threshold = 0.625;
  model.config.passes = 2;
  model.merges = {{"mental_health", "panic_attack"},
                  {"mental_health_crisis"}};
  model.config_hash = fnv1a64("colloc-settings");
  const fs::path path = temp_file("colloc.txt");
  save_collocations(path, model);
  const CollocationModel back = load_collocations(path);
  CHECK(back.config.min_count == model.config.min_count);
  CHECK(back.config.npmi_threshold == model.config.npmi_threshold);
  CHECK(back.config.passes == model.config.passes);
  CHECK(back.merges == model.merges);
  CHECK(back.config_hash == model.config_hash);

  write_text_file(path, "garbage\n");
  CHECK_THROWS_AS(load_collocations(path), DataError);
  fs::remove(path);
}
