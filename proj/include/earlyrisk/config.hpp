#pragma once

// Run configuration: one flat struct, one key table. Config files are
// "key = value" lines with '#' comments; the same dotted keys work as
// --set overrides on the command line. Every stage of the pipeline hashes
// the subset of keys it depends on, so the manifest can tell whether an
// artifact on disk still matches the configuration that would regenerate
// it. Path-valued keys are excluded from those hashes: moving a tree
// around must not invalidate its contents.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "earlyrisk/confnet.hpp"
#include "earlyrisk/io.hpp"

namespace earlyrisk::config {

struct RunConfig {
  std::uint64_t seed = 7;

  std::string data_train_dir = "data/train";
  std::string data_test_dir = "data/test";
  std::string artifacts_dir = "artifacts";

  std::int64_t synth_depressed = 60;
  std::int64_t synth_control = 120;
  std::int64_t synth_test_depressed = 40;
  std::int64_t synth_test_control = 80;
  double synth_delta = 0.8;
  std::int64_t synth_shared_vocab = 900;
  std::int64_t synth_class_vocab = 150;
  std::int64_t synth_posts_min = 2;
  std::int64_t synth_posts_max = 4;
  double synth_comment_fraction = 0.3;
  std::int64_t synth_planted_pairs = 4;
  std::int64_t synth_post_tokens_min = 10;
  std::int64_t synth_post_tokens_max = 60;

  double preprocess_downsample_ratio = 2.0;

  std::int64_t colloc_min_count = 10;
  double colloc_npmi_threshold = 0.5;
  std::int64_t colloc_passes = 2;

  std::int64_t vocab_min_df = 2;
  double vocab_max_df_fraction = 1.0;

  std::int64_t lsi_topics = 128;
  std::int64_t lsi_oversample = 64;
  std::int64_t lsi_max_iters = 500;
  double lsi_tol = 1e-7;

  double train_lambda = 0.2;
  double train_learning_rate = 1e-3;
  std::int64_t train_batch_size = 32;
  std::int64_t train_max_epochs = 200;
  std::int64_t train_patience = 10;
  double train_validation_fraction = 0.2;
  double train_dropout = 0.3;
  bool train_confidence = true;
  // Raw topic embeddings by default: the magnitude of a cumulative view
  // grows with the evidence seen so far, which is exactly the signal the
  // week-by-week confidence gate needs. "l2" projects every view onto the
  // unit sphere and is kept for experiments on direction-only features.
  std::string train_feature_norm = "none";
  bool train_use_prefixes = true;

  double policy_initial_threshold = 0.85;
  double policy_final_threshold = 0.40;
  bool policy_force_final = true;
  bool policy_final_only = false;
  bool policy_baseline_gate = false;
  double policy_baseline_threshold = 0.85;

  std::string eval_o_values = "5,50";

  std::string ablate_lambda_grid = "0.01,0.1,0.2,0.4,0.6,0.8";
};

namespace detail {

using FieldRef = std::variant<std::uint64_t*, std::int64_t*, double*, bool*,
                              std::string*>;

struct Field {
  std::string_view key;
  FieldRef ref;
  bool is_path = false;
};

inline std::vector<Field> fields(RunConfig& c) {
  return {
      {"seed", &c.seed},
      {"data.train_dir", &c.data_train_dir, true},
      {"data.test_dir", &c.data_test_dir, true},
      {"artifacts.dir", &c.artifacts_dir, true},
      {"synth.depressed", &c.synth_depressed},
      {"synth.control", &c.synth_control},
      {"synth.test_depressed", &c.synth_test_depressed},
      {"synth.test_control", &c.synth_test_control},
      {"synth.delta", &c.synth_delta},
      {"synth.shared_vocab", &c.synth_shared_vocab},
      {"synth.class_vocab", &c.synth_class_vocab},
      {"synth.posts_min", &c.synth_posts_min},
      {"synth.posts_max", &c.synth_posts_max},
      {"synth.comment_fraction", &c.synth_comment_fraction},
      {"synth.planted_pairs", &c.synth_planted_pairs},
      {"synth.post_tokens_min", &c.synth_post_tokens_min},
      {"synth.post_tokens_max", &c.synth_post_tokens_max},
      {"preprocess.downsample_ratio", &c.preprocess_downsample_ratio},
      {"colloc.min_count", &c.colloc_min_count},
      {"colloc.npmi_threshold", &c.colloc_npmi_threshold},
      {"colloc.passes", &c.colloc_passes},
      {"vocab.min_df", &c.vocab_min_df},
      {"vocab.max_df_fraction", &c.vocab_max_df_fraction},
      {"lsi.topics", &c.lsi_topics},
      {"lsi.oversample", &c.lsi_oversample},
      {"lsi.max_iters", &c.lsi_max_iters},
      {"lsi.tol", &c.lsi_tol},
      {"train.lambda", &c.train_lambda},
      {"train.learning_rate", &c.train_learning_rate},
      {"train.batch_size", &c.train_batch_size},
      {"train.max_epochs", &c.train_max_epochs},
      {"train.patience", &c.train_patience},
      {"train.validation_fraction", &c.train_validation_fraction},
      {"train.dropout", &c.train_dropout},
      {"train.confidence", &c.train_confidence},
      {"train.feature_norm", &c.train_feature_norm},
      {"train.use_prefixes", &c.train_use_prefixes},
      {"policy.initial_threshold", &c.policy_initial_threshold},
      {"policy.final_threshold", &c.policy_final_threshold},
      {"policy.force_final", &c.policy_force_final},
      {"policy.final_only", &c.policy_final_only},
      {"policy.baseline_gate", &c.policy_baseline_gate},
      {"policy.baseline_threshold", &c.policy_baseline_threshold},
      {"eval.o_values", &c.eval_o_values},
      {"ablate.lambda_grid", &c.ablate_lambda_grid},
  };
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() &&
         std::isspace(static_cast<unsigned char>(s[b])) != 0) {
    ++b;
  }
  std::size_t e = s.size();
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) {
    --e;
  }
  return s.substr(b, e - b);
}

inline void parse_into(const Field& field, std::string_view key,
                       std::string_view raw) {
  const std::string text(trim(raw));
  auto bad = [&](const char* want) {
    throw UsageError("config key '" + std::string(key) + "' expects " +
                     want + ", got '" + text + "'");
  };
  std::visit(
      [&](auto* dst) {
        using T = std::remove_pointer_t<decltype(dst)>;
        if constexpr (std::is_same_v<T, std::string>) {
          *dst = text;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1") {
            *dst = true;
          } else if (text == "false" || text == "0") {
            *dst = false;
          } else {
            bad("true or false");
          }
        } else if constexpr (std::is_same_v<T, double>) {
          char* end = nullptr;
          const double v = std::strtod(text.c_str(), &end);
          if (text.empty() || end != text.c_str() + text.size()) {
            bad("a number");
          }
          *dst = v;
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          char* end = nullptr;
          const long long v = std::strtoll(text.c_str(), &end, 10);
          if (text.empty() || end != text.c_str() + text.size()) {
            bad("an integer");
          }
          *dst = static_cast<std::int64_t>(v);
        } else {
          char* end = nullptr;
          const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
          if (text.empty() || end != text.c_str() + text.size() ||
              text.front() == '-') {
            bad("a non-negative integer");
          }
          *dst = static_cast<std::uint64_t>(v);
        }
      },
      field.ref);
}

inline std::string format_field(const Field& field) {
  return std::visit(
      [&](auto* src) -> std::string {
        using T = std::remove_pointer_t<decltype(src)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return *src;
        } else if constexpr (std::is_same_v<T, bool>) {
          return *src ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.17g", *src);
          return buf;
        } else {
          return std::to_string(*src);
        }
      },
      field.ref);
}

}  // namespace detail

// Assigns one key. Unknown keys are an error so typos fail loudly.
inline void set_value(RunConfig& config, std::string_view key,
                      std::string_view value) {
  for (const auto& field : detail::fields(config)) {
    if (field.key == key) {
      detail::parse_into(field, key, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + std::string(key) + "'");
}

// Applies a "key=value" override as given on the command line.
inline void apply_override(RunConfig& config, std::string_view spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string_view::npos) {
    throw UsageError("override '" + std::string(spec) +
                     "' is not of the form key=value");
  }
  set_value(config, detail::trim(spec.substr(0, eq)), spec.substr(eq + 1));
}

// Parses a config file into `config` (on top of whatever it already holds).
// Lines are "key = value"; blank lines and lines starting with '#' are
// skipped. Trailing comments are not supported.
inline void load_config_file(RunConfig& config,
                             const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (nl == std::string::npos ? text.size() : nl) - pos);
    pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string_view stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) +
                       ": expected 'key = value'");
    }
    set_value(config, detail::trim(stripped.substr(0, eq)),
              stripped.substr(eq + 1));
  }
}

// Full canonical dump, one "key = value" line per entry in table order.
inline std::string serialize(const RunConfig& config) {
  RunConfig copy = config;
  std::string out;
  for (const auto& field : detail::fields(copy)) {
    out += field.key;
    out += " = ";
    out += detail::format_field(field);
    out += '\n';
  }
  return out;
}

// Hash of the keys a stage depends on. A selector either names a key
// exactly or, when it ends in '.', selects every key under that prefix.
// Path keys never participate: artifacts must not go stale just because
// the tree was relocated.
inline std::uint64_t stage_config_hash(
    const RunConfig& config, std::span<const std::string_view> selectors) {
  RunConfig copy = config;
  std::uint64_t h = kFnvOffsetBasis;
  for (const auto& field : detail::fields(copy)) {
    if (field.is_path) continue;
    bool selected = false;
    for (const std::string_view sel : selectors) {
      if (sel.empty()) continue;
      if (sel.back() == '.' ? field.key.substr(0, sel.size()) == sel
                            : field.key == sel) {
        selected = true;
        break;
      }
    }
    if (!selected) continue;
    h = fnv1a64(field.key, h);
    h = fnv1a64("=", h);
    h = fnv1a64(detail::format_field(field), h);
    h = fnv1a64("\n", h);
  }
  return h;
}

// Comma-separated parsing for the two list-valued keys.
inline std::vector<std::int64_t> parse_int_list(std::string_view text,
                                                std::string_view key) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view piece = detail::trim(
        text.substr(pos, (comma == std::string_view::npos ? text.size()
                                                          : comma) -
                             pos));
    pos = (comma == std::string_view::npos) ? text.size() + 1 : comma + 1;
    if (piece.empty()) continue;
    const std::string item(piece);
    char* end = nullptr;
    const long long v = std::strtoll(item.c_str(), &end, 10);
    if (end != item.c_str() + item.size()) {
      throw UsageError("config key '" + std::string(key) +
                       "' expects integers, got '" + item + "'");
    }
    out.push_back(static_cast<std::int64_t>(v));
  }
  if (out.empty()) {
    throw UsageError("config key '" + std::string(key) + "' is empty");
  }
  return out;
}

inline std::vector<double> parse_double_list(std::string_view text,
                                             std::string_view key) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view piece = detail::trim(
        text.substr(pos, (comma == std::string_view::npos ? text.size()
                                                          : comma) -
                             pos));
    pos = (comma == std::string_view::npos) ? text.size() + 1 : comma + 1;
    if (piece.empty()) continue;
    const std::string item(piece);
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end != item.c_str() + item.size()) {
      throw UsageError("config key '" + std::string(key) +
                       "' expects numbers, got '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) {
    throw UsageError("config key '" + std::string(key) + "' is empty");
  }
  return out;
}

inline confnet::FeatureNorm parse_feature_norm(std::string_view name) {
  if (name == "none") return confnet::FeatureNorm::kNone;
  if (name == "l2") return confnet::FeatureNorm::kL2;
  throw UsageError("train.feature_norm must be 'none' or 'l2', got '" +
                   std::string(name) + "'");
}

}  // namespace earlyrisk::config
