#pragma once

// Synthetic corpus generator. Produces dataset trees in the standard layout
// with a known, controllable signal:
//
//   * pseudo-word vocabularies: a shared pool plus one pool per class
//     (distress words for positives, hobby words for controls);
//   * each body/title token comes from the subject's class pool with
//     probability delta, otherwise from the shared pool, so delta directly
//     controls class separability;
//   * planted collocation pairs whose two members only ever occur adjacent
//     to each other, for exercising the collocation miner end to end.
//
// Pseudo-words are built only from consonants (no 'a e i o u s y'), which
// makes them fixed points of the stemmer and keeps them off the stopword
// list, so the generated vocabulary survives preprocessing verbatim.
// Generation is a pure function of the configuration: same settings, same
// bytes.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "earlyrisk/corpus.hpp"
#include "earlyrisk/io.hpp"
#include "earlyrisk/rng.hpp"

namespace earlyrisk::synthgen {

struct SynthConfig {
  int depressed = 60;
  int control = 120;
  double delta = 0.8;       // probability of drawing from the class pool
  int shared_vocab = 900;
  int class_vocab = 150;
  int posts_min = 2;        // submissions per chunk
  int posts_max = 4;
  double comment_fraction = 0.3;
  int planted_pairs = 4;
  int post_tokens_min = 10;
  int post_tokens_max = 60;
  std::uint64_t seed = 7;
  std::string id_prefix = "subj";
};

namespace detail {

// 19 consonants; excludes vowels (measure stays zero), 's' (no plural
// stripping) and 'y' (never treated as a vowel).
inline constexpr std::string_view kConsonants = "bcdfghjklmnpqrtvwxz";
inline constexpr int kMaxPoolWords = 19 * 19 * 19;

inline std::string make_word(char tag, int index) {
  std::string w(4, tag);
  w[1] = kConsonants[static_cast<std::size_t>((index / 361) % 19)];
  w[2] = kConsonants[static_cast<std::size_t>((index / 19) % 19)];
  w[3] = kConsonants[static_cast<std::size_t>(index % 19)];
  return w;
}

inline std::vector<std::string> make_pool(char tag, int size) {
  std::vector<std::string> pool;
  pool.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) pool.push_back(make_word(tag, i));
  return pool;
}

}  // namespace detail

// Class pools are tagged by first letter: 'w' shared, 'd' distress (positive
// class), 'h' hobby (control class), 'p' planted pair members.
inline char shared_tag() { return 'w'; }
inline char distress_tag() { return 'd'; }
inline char hobby_tag() { return 'h'; }
inline char planted_tag() { return 'p'; }

inline void validate(const SynthConfig& cfg) {
  if (cfg.depressed < 1 || cfg.control < 1) {
    throw UsageError("synthetic corpora need at least one subject per class");
  }
  if (cfg.delta < 0.0 || cfg.delta > 1.0) {
    throw UsageError("delta must lie in [0, 1]");
  }
  if (cfg.shared_vocab < 1 || cfg.shared_vocab > detail::kMaxPoolWords ||
      cfg.class_vocab < 1 || cfg.class_vocab > detail::kMaxPoolWords) {
    throw UsageError("pool sizes must lie in [1, " +
                     std::to_string(detail::kMaxPoolWords) + "]");
  }
  if (cfg.posts_min < 1 || cfg.posts_max < cfg.posts_min) {
    throw UsageError("posts per chunk bounds are inconsistent");
  }
  if (cfg.post_tokens_min < 1 || cfg.post_tokens_max < cfg.post_tokens_min) {
    throw UsageError("post token bounds are inconsistent");
  }
  if (cfg.comment_fraction < 0.0 || cfg.comment_fraction > 1.0) {
    throw UsageError("comment fraction must lie in [0, 1]");
  }
  if (cfg.planted_pairs < 0 ||
      cfg.planted_pairs * 2 > detail::kMaxPoolWords) {
    throw UsageError("planted pair count out of range");
  }
}

struct SynthDataset {
  std::vector<corpus::SubjectHistory> subjects;
  corpus::GoldenTruth truth;
};

inline SynthDataset generate(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(Rng::derive(cfg.seed, "synthgen"));

  const auto shared = detail::make_pool(shared_tag(), cfg.shared_vocab);
  const auto distress = detail::make_pool(distress_tag(), cfg.class_vocab);
  const auto hobby = detail::make_pool(hobby_tag(), cfg.class_vocab);

  const int total = cfg.depressed + cfg.control;
  int id_width = 1;
  for (int v = total - 1; v >= 10; v /= 10) ++id_width;

  const std::int64_t epoch = corpus::parse_timestamp("2017-01-01 00:00:00");

  SynthDataset ds;
  for (int s = 0; s < total; ++s) {
    const bool positive = s < cfg.depressed;
    const auto& class_pool = positive ? distress : hobby;

    char idbuf[64];
    std::snprintf(idbuf, sizeof(idbuf), "%s%0*d", cfg.id_prefix.c_str(),
                  id_width, s);
    corpus::SubjectHistory history;
    history.subject_id = idbuf;

    auto draw_token = [&]() -> const std::string& {
      if (rng.next_unit() < cfg.delta) {
        return class_pool[static_cast<std::size_t>(
            rng.next_below(static_cast<std::uint64_t>(cfg.class_vocab)))];
      }
      return shared[static_cast<std::size_t>(
          rng.next_below(static_cast<std::uint64_t>(cfg.shared_vocab)))];
    };

    std::int64_t when = epoch;
    for (int chunk = 0; chunk < corpus::kNumChunks; ++chunk) {
      const int posts = static_cast<int>(
          rng.next_int(cfg.posts_min, cfg.posts_max));
      for (int post = 0; post < posts; ++post) {
        corpus::Submission sub;
        const bool comment = rng.next_unit() < cfg.comment_fraction;
        if (!comment) {
          const int title_len = static_cast<int>(rng.next_int(2, 4));
          for (int i = 0; i < title_len; ++i) {
            if (i > 0) sub.title += ' ';
            sub.title += draw_token();
          }
        }
        const int body_len = static_cast<int>(
            rng.next_int(cfg.post_tokens_min, cfg.post_tokens_max));
        for (int i = 0; i < body_len; ++i) {
          if (i > 0) sub.body += ' ';
          sub.body += draw_token();
        }
        // The first post of every chunk carries one planted pair, members
        // adjacent, so pair counts grow with corpus size while the members
        // never appear anywhere else.
        if (post == 0 && cfg.planted_pairs > 0) {
          const int pair = (s + chunk) % cfg.planted_pairs;
          sub.body += ' ';
          sub.body += detail::make_word(planted_tag(), 2 * pair);
          sub.body += ' ';
          sub.body += detail::make_word(planted_tag(), 2 * pair + 1);
        }
        sub.timestamp = when;
        when += 3600;
        history.chunks[static_cast<std::size_t>(chunk)].push_back(
            std::move(sub));
      }
    }
    ds.truth.emplace(history.subject_id, positive
                                             ? corpus::Label::kDepressed
                                             : corpus::Label::kControl);
    ds.subjects.push_back(std::move(history));
  }
  return ds;
}

inline std::string describe(const SynthConfig& cfg) {
  char buf[128];
  std::string out;
  auto kv = [&](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  kv("depressed", std::to_string(cfg.depressed));
  kv("control", std::to_string(cfg.control));
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.delta);
  kv("delta", buf);
  kv("shared_vocab", std::to_string(cfg.shared_vocab));
  kv("class_vocab", std::to_string(cfg.class_vocab));
  kv("posts_min", std::to_string(cfg.posts_min));
  kv("posts_max", std::to_string(cfg.posts_max));
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.comment_fraction);
  kv("comment_fraction", buf);
  kv("planted_pairs", std::to_string(cfg.planted_pairs));
  kv("post_tokens_min", std::to_string(cfg.post_tokens_min));
  kv("post_tokens_max", std::to_string(cfg.post_tokens_max));
  kv("seed", std::to_string(cfg.seed));
  kv("id_prefix", cfg.id_prefix);
  return out;
}

// Generates and writes a dataset tree (chunk directories, golden truth, and
// a synth_config.txt echo of the generating parameters).
inline void generate_dataset(const std::filesystem::path& root,
                             const SynthConfig& cfg) {
  const SynthDataset ds = generate(cfg);
  corpus::write_dataset(root, ds.subjects, ds.truth);
  write_text_file(root / "synth_config.txt", describe(cfg));
}

}  // namespace earlyrisk::synthgen
