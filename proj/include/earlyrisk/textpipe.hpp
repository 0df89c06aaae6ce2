#pragma once

// Text normalization and the term pipeline: tokenize -> stem -> collocation
// rewrite -> vocabulary -> sparse counts.
//
// Tokenization order is part of the preprocessing contract and is applied in
// exactly this sequence per whitespace-separated raw token:
//   1. URL detection on the raw token (http://, https://, www. prefixes,
//      case-insensitive) -> the sentinel <url>;
//   2. ASCII lowercasing;
//   3. number detection (only digits '.', ',', '-' with at least one digit)
//      -> the sentinel <num>;
//   4. splitting on non-alphanumeric bytes;
//   5. stopword removal on the split pieces.
// Stemming runs afterwards over the token stream; sentinels pass through.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "earlyrisk/io.hpp"
#include "earlyrisk/porter.hpp"
#include "earlyrisk/stopwords.hpp"

namespace earlyrisk::textpipe {

using TokenStream = std::vector<std::string>;

inline constexpr std::string_view kUrlToken = "<url>";
inline constexpr std::string_view kNumToken = "<num>";

inline bool is_sentinel(std::string_view token) {
  return !token.empty() && token.front() == '<';
}

namespace detail {

inline bool iequals_prefix(std::string_view raw, std::string_view prefix) {
  if (raw.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = raw[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

inline bool looks_like_url(std::string_view raw) {
  return iequals_prefix(raw, "http://") || iequals_prefix(raw, "https://") ||
         iequals_prefix(raw, "www.");
}

inline bool looks_like_number(std::string_view lowered) {
  bool has_digit = false;
  for (char c : lowered) {
    if (c >= '0' && c <= '9') {
      has_digit = true;
    } else if (c != '.' && c != ',' && c != '-') {
      return false;
    }
  }
  return has_digit;
}

inline bool is_ascii_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

}  // namespace detail

inline TokenStream normalize_and_tokenize(std::string_view text) {
  TokenStream out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;
    std::string_view raw = text.substr(start, i - start);

    if (detail::looks_like_url(raw)) {
      out.emplace_back(kUrlToken);
      continue;
    }

    std::string lowered(raw);
    for (char& c : lowered) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }

    if (detail::looks_like_number(lowered)) {
      out.emplace_back(kNumToken);
      continue;
    }

    std::string piece;
    auto flush = [&] {
      if (!piece.empty()) {
        if (!is_stopword(piece)) out.push_back(piece);
        piece.clear();
      }
    };
    for (char c : lowered) {
      if (detail::is_ascii_alnum(c)) {
        piece.push_back(c);
      } else {
        flush();
      }
    }
    flush();
  }
  return out;
}

inline TokenStream stem_stream(const TokenStream& tokens) {
  TokenStream out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    out.push_back(is_sentinel(t) ? t : porter_stem(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Collocations. Multi-pass adjacent-pair merging scored by normalized PMI;
// pass 1 forms bigrams from unigrams, pass 2 forms trigrams by joining a
// bigram with a unigram, and so on (a pass-p merge must produce a term of
// exactly p+1 underscore-joined components).
// ---------------------------------------------------------------------------

struct CollocationConfig {
  int min_count = 10;
  double npmi_threshold = 0.5;
  int passes = 2;
};

inline int component_count(std::string_view term) {
  int n = 1;
  for (char c : term) {
    if (c == '_') ++n;
  }
  return n;
}

// Normalized pointwise mutual information of an adjacent pair, with both
// unigram and pair probabilities estimated against the same token total, so
// a pair whose members never occur apart scores exactly 1.
inline double npmi_from_counts(std::int64_t pair_count, std::int64_t count_a,
                               std::int64_t count_b,
                               std::int64_t total_tokens) {
  if (pair_count <= 0 || count_a <= 0 || count_b <= 0 || total_tokens <= 0) {
    throw DataError("npmi requires positive counts");
  }
  // npmi = ln(p_ab / (p_a p_b)) / -ln(p_ab) with p_* = count / N, expanded
  // into count logarithms and grouped so that a pair whose members never
  // occur apart (all three counts equal) evaluates to exactly 1.0.
  const double log_pair = std::log(static_cast<double>(pair_count));
  const double log_a = std::log(static_cast<double>(count_a));
  const double log_b = std::log(static_cast<double>(count_b));
  const double log_n = std::log(static_cast<double>(total_tokens));
  const double numerator = (log_pair - log_a) + (log_n - log_b);
  const double denominator = log_n - log_pair;
  if (denominator <= 0.0) {
    throw DataError("npmi undefined: pair probability is not below 1");
  }
  return numerator / denominator;
}

struct CollocationModel {
  CollocationConfig config;
  // merges[p] holds the joined terms accepted in pass p+1, e.g. "mental_health".
  std::vector<std::set<std::string>> merges;
  std::uint64_t config_hash = 0;

  // Greedy left-to-right rewrite, one pass at a time in pass order.
  TokenStream rewrite(const TokenStream& tokens) const {
    TokenStream current = tokens;
    for (const auto& pass_set : merges) {
      if (pass_set.empty()) continue;
      TokenStream next;
      next.reserve(current.size());
      std::size_t i = 0;
      while (i < current.size()) {
        if (i + 1 < current.size() && !is_sentinel(current[i]) &&
            !is_sentinel(current[i + 1])) {
          std::string joined = current[i] + "_" + current[i + 1];
          if (pass_set.count(joined)) {
            next.push_back(std::move(joined));
            i += 2;
            continue;
          }
        }
        next.push_back(current[i]);
        ++i;
      }
      current = std::move(next);
    }
    return current;
  }
};

inline CollocationModel extract_collocations(
    const std::vector<TokenStream>& documents, const CollocationConfig& config) {
  if (config.passes < 0) {
    throw UsageError("collocation passes must be non-negative");
  }
  CollocationModel model;
  model.config = config;
  model.merges.assign(static_cast<std::size_t>(config.passes), {});

  std::vector<TokenStream> current = documents;
  for (int pass = 1; pass <= config.passes; ++pass) {
    std::map<std::string, std::int64_t> unigram;
    std::map<std::pair<std::string, std::string>, std::int64_t> pairs;
    std::int64_t total = 0;
    for (const auto& doc : current) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        ++unigram[doc[i]];
        ++total;
        if (i + 1 < doc.size() && !is_sentinel(doc[i]) &&
            !is_sentinel(doc[i + 1])) {
          ++pairs[{doc[i], doc[i + 1]}];
        }
      }
    }
    if (total < 2) break;

    auto& accepted = model.merges[static_cast<std::size_t>(pass - 1)];
    for (const auto& [pair, count] : pairs) {
      if (count < config.min_count) continue;
      if (component_count(pair.first) + component_count(pair.second) !=
          pass + 1) {
        continue;
      }
      const double score = npmi_from_counts(count, unigram[pair.first],
                                            unigram[pair.second], total);
      if (score >= config.npmi_threshold) {
        accepted.insert(pair.first + "_" + pair.second);
      }
    }
    if (accepted.empty()) continue;

    CollocationModel single;
    single.config = config;
    single.merges.push_back(accepted);
    for (auto& doc : current) {
      doc = single.rewrite(doc);
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Vocabulary over the final rewritten streams. Terms are index-ordered
// lexicographically so identical corpora always produce identical indices.
// ---------------------------------------------------------------------------

struct Vocabulary {
  std::vector<std::string> terms;                    // index -> term
  std::unordered_map<std::string, std::int32_t> index;  // term -> index
  std::vector<std::int64_t> doc_frequency;           // per index
  std::int64_t total_docs = 0;
  std::uint64_t config_hash = 0;

  std::size_t size() const { return terms.size(); }
};

inline Vocabulary build_vocabulary(const std::vector<TokenStream>& documents,
                                   int min_df, double max_df_fraction) {
  if (documents.empty()) {
    throw DataError("cannot build a vocabulary from an empty corpus");
  }
  std::map<std::string, std::int64_t> df;
  for (const auto& doc : documents) {
    std::set<std::string> seen(doc.begin(), doc.end());
    for (const auto& term : seen) ++df[term];
  }
  const double max_df =
      max_df_fraction * static_cast<double>(documents.size());

  Vocabulary vocab;
  vocab.total_docs = static_cast<std::int64_t>(documents.size());
  for (const auto& [term, count] : df) {
    if (count < min_df) continue;
    if (static_cast<double>(count) > max_df) continue;
    vocab.index.emplace(term, static_cast<std::int32_t>(vocab.terms.size()));
    vocab.terms.push_back(term);
    vocab.doc_frequency.push_back(count);
  }
  if (vocab.terms.empty()) {
    throw DataError("vocabulary is empty after document-frequency filtering");
  }
  return vocab;
}

struct SparseCounts {
  // (vocabulary index, raw count), strictly increasing by index.
  std::vector<std::pair<std::int32_t, std::int32_t>> entries;

  bool empty() const { return entries.empty(); }
};

inline SparseCounts doc_to_counts(const TokenStream& tokens,
                                  const Vocabulary& vocab) {
  std::map<std::int32_t, std::int32_t> counts;
  for (const auto& t : tokens) {
    auto it = vocab.index.find(t);
    if (it != vocab.index.end()) ++counts[it->second];
  }
  SparseCounts out;
  out.entries.assign(counts.begin(), counts.end());
  return out;
}

// Full document-to-terms path used by every stage that touches text.
inline TokenStream process_document(std::string_view text,
                                    const CollocationModel& collocations) {
  return collocations.rewrite(stem_stream(normalize_and_tokenize(text)));
}

// ---------------------------------------------------------------------------
// Serialization. Both artifacts are line-oriented UTF-8 with a version tag
// and the producing configuration hash, so consumers can detect staleness.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace detail

inline void save_vocabulary(const std::filesystem::path& path,
                            const Vocabulary& vocab) {
  std::ostringstream out;
  out << "earlyrisk-vocab v1\n";
  out << "config " << hash_to_hex(vocab.config_hash) << "\n";
  out << "docs " << vocab.total_docs << "\n";
  out << "terms " << vocab.terms.size() << "\n";
  for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
    out << vocab.terms[i] << "\t" << i << "\t" << vocab.doc_frequency[i]
        << "\n";
  }
  write_text_file(path, out.str());
}

inline Vocabulary load_vocabulary(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  const auto lines = detail::split_lines(content);
  if (lines.size() < 4 || lines[0] != "earlyrisk-vocab v1") {
    throw DataError("not a vocabulary artifact: " + path.string());
  }
  Vocabulary vocab;
  std::size_t term_count = 0;
  try {
    if (lines[1].rfind("config ", 0) != 0 || lines[2].rfind("docs ", 0) != 0 ||
        lines[3].rfind("terms ", 0) != 0) {
      throw DataError("malformed vocabulary header");
    }
    vocab.config_hash = hex_to_hash(std::string_view(lines[1]).substr(7));
    vocab.total_docs = std::stoll(lines[2].substr(5));
    term_count = static_cast<std::size_t>(std::stoull(lines[3].substr(6)));
  } catch (const std::logic_error&) {
    throw DataError("malformed vocabulary header in " + path.string());
  }
  if (lines.size() != 4 + term_count) {
    throw DataError("vocabulary term count mismatch in " + path.string());
  }
  for (std::size_t i = 0; i < term_count; ++i) {
    const std::string& line = lines[4 + i];
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos
                               ? std::string::npos
                               : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw DataError("malformed vocabulary row in " + path.string());
    }
    std::string term = line.substr(0, t1);
    std::size_t index = 0;
    std::int64_t df = 0;
    try {
      index = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
      df = std::stoll(line.substr(t2 + 1));
    } catch (const std::logic_error&) {
      throw DataError("malformed vocabulary row in " + path.string());
    }
    if (index != i) {
      throw DataError("vocabulary indices out of order in " + path.string());
    }
    vocab.index.emplace(term, static_cast<std::int32_t>(i));
    vocab.terms.push_back(std::move(term));
    vocab.doc_frequency.push_back(df);
  }
  return vocab;
}

inline void save_collocations(const std::filesystem::path& path,
                              const CollocationModel& model) {
  std::ostringstream out;
  out << "earlyrisk-collocations v1\n";
  out << "config " << hash_to_hex(model.config_hash) << "\n";
  out << "min_count " << model.config.min_count << "\n";
  out << "npmi_threshold " << detail::format_double(model.config.npmi_threshold)
      << "\n";
  out << "passes " << model.merges.size() << "\n";
  for (std::size_t p = 0; p < model.merges.size(); ++p) {
    out << "pass " << (p + 1) << " " << model.merges[p].size() << "\n";
    for (const auto& term : model.merges[p]) {
      out << term << "\n";
    }
  }
  write_text_file(path, out.str());
}

inline CollocationModel load_collocations(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  const auto lines = detail::split_lines(content);
  if (lines.size() < 5 || lines[0] != "earlyrisk-collocations v1") {
    throw DataError("not a collocations artifact: " + path.string());
  }
  CollocationModel model;
  std::size_t passes = 0;
  try {
    model.config_hash = hex_to_hash(std::string_view(lines[1]).substr(7));
    model.config.min_count = std::stoi(lines[2].substr(10));
    model.config.npmi_threshold = std::stod(lines[3].substr(15));
    passes = std::stoull(lines[4].substr(7));
  } catch (const std::logic_error&) {
    throw DataError("malformed collocations header in " + path.string());
  }
  model.config.passes = static_cast<int>(passes);
  std::size_t row = 5;
  for (std::size_t p = 0; p < passes; ++p) {
    if (row >= lines.size() || lines[row].rfind("pass ", 0) != 0) {
      throw DataError("malformed collocations pass header in " +
                      path.string());
    }
    std::istringstream header(lines[row].substr(5));
    std::size_t pass_index = 0, count = 0;
    header >> pass_index >> count;
    if (!header || pass_index != p + 1) {
      throw DataError("malformed collocations pass header in " +
                      path.string());
    }
    ++row;
    std::set<std::string> terms;
    for (std::size_t i = 0; i < count; ++i, ++row) {
      if (row >= lines.size() || lines[row].empty()) {
        throw DataError("truncated collocations artifact: " + path.string());
      }
      terms.insert(lines[row]);
    }
    model.merges.push_back(std::move(terms));
  }
  if (row != lines.size()) {
    throw DataError("trailing data in collocations artifact: " +
                    path.string());
  }
  return model;
}

}  // namespace earlyrisk::textpipe
