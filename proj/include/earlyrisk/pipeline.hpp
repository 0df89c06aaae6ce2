#pragma once

// Pipeline stages and the artifact bookkeeping around them.
//
//   generate    synthetic train + test corpora
//   preprocess  downsampling, collocation mining, vocabulary
//   fit-lsi     tf-idf matrix + truncated SVD topic model
//   train       confidence classifier over cumulative-prefix embeddings
//   simulate    week-by-week decisions on the test corpus
//   evaluate    scores + report
//   ablate      baseline gate and a lambda sweep, trained from scratch
//
// Every stage records what it read and wrote in artifacts/manifest.txt.
// Re-running a stage whose inputs, outputs and configuration slice are all
// unchanged is a no-op; running a stage whose prerequisites are missing or
// out of date fails with a StaleArtifactError naming the stage to rerun.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "earlyrisk/config.hpp"
#include "earlyrisk/confnet.hpp"
#include "earlyrisk/corpus.hpp"
#include "earlyrisk/earlydecision.hpp"
#include "earlyrisk/evalmetrics.hpp"
#include "earlyrisk/io.hpp"
#include "earlyrisk/lsi.hpp"
#include "earlyrisk/manifest.hpp"
#include "earlyrisk/rng.hpp"
#include "earlyrisk/synthgen.hpp"
#include "earlyrisk/textpipe.hpp"

namespace earlyrisk::pipeline {

struct Context {
  config::RunConfig config;
  bool force = false;       // rerun the requested stage even if up to date
  bool emit_trace = false;  // simulate also writes trace.txt (untracked)
  bool quiet = false;
};

struct Paths {
  std::filesystem::path train_data;
  std::filesystem::path test_data;
  std::filesystem::path artifacts;
  std::filesystem::path manifest;
  std::filesystem::path vocab;
  std::filesystem::path collocations;
  std::filesystem::path train_subjects;
  std::filesystem::path lsi_model;
  std::filesystem::path topics;
  std::filesystem::path net;
  std::filesystem::path train_report;
  std::filesystem::path decisions;
  std::filesystem::path trace;
  std::filesystem::path report;
  std::filesystem::path ablation_report;
};

inline Paths make_paths(const config::RunConfig& c) {
  Paths p;
  p.train_data = c.data_train_dir;
  p.test_data = c.data_test_dir;
  p.artifacts = c.artifacts_dir;
  p.manifest = p.artifacts / "manifest.txt";
  p.vocab = p.artifacts / "vocab.txt";
  p.collocations = p.artifacts / "collocations.txt";
  p.train_subjects = p.artifacts / "train_subjects.txt";
  p.lsi_model = p.artifacts / "lsi_model.bin";
  p.topics = p.artifacts / "topics_top_terms.txt";
  p.net = p.artifacts / "confnet.bin";
  p.train_report = p.artifacts / "train_report.txt";
  p.decisions = p.artifacts / "decisions.txt";
  p.trace = p.artifacts / "trace.txt";
  p.report = p.artifacts / "report.txt";
  p.ablation_report = p.artifacts / "ablation_report.txt";
  return p;
}

namespace stages {
inline constexpr std::string_view kGenerate[] = {"seed", "synth."};
inline constexpr std::string_view kPreprocess[] = {"seed", "preprocess.",
                                                   "colloc.", "vocab."};
inline constexpr std::string_view kFitLsi[] = {"seed", "lsi."};
inline constexpr std::string_view kTrain[] = {"seed", "train."};
inline constexpr std::string_view kSimulate[] = {"seed", "policy."};
inline constexpr std::string_view kEvaluate[] = {"eval."};
inline constexpr std::string_view kAblate[] = {"seed", "train.", "policy.",
                                               "eval.", "ablate."};

inline std::span<const std::string_view> selectors(std::string_view stage) {
  if (stage == "generate") return kGenerate;
  if (stage == "preprocess") return kPreprocess;
  if (stage == "fit-lsi") return kFitLsi;
  if (stage == "train") return kTrain;
  if (stage == "simulate") return kSimulate;
  if (stage == "evaluate") return kEvaluate;
  if (stage == "ablate") return kAblate;
  throw UsageError("unknown stage '" + std::string(stage) + "'");
}
}  // namespace stages

namespace detail {

inline void log_line(const Context& ctx, const std::string& msg) {
  if (ctx.quiet) return;
  std::fprintf(stderr, "%s\n", msg.c_str());
}

inline std::uint64_t hash_existing(const std::filesystem::path& path,
                                   std::string_view stage,
                                   std::string_view role) {
  if (!std::filesystem::exists(path)) {
    throw DataError(std::string(role) + " '" + path.generic_string() +
                    "' for stage '" + std::string(stage) +
                    "' does not exist");
  }
  return hash_path(path);
}

inline std::vector<manifest::HashedPath> hash_all(
    const std::vector<std::filesystem::path>& paths, std::string_view stage,
    std::string_view role) {
  std::vector<manifest::HashedPath> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    out.push_back({hash_existing(p, stage, role), p.generic_string()});
  }
  return out;
}

}  // namespace detail

// Checks that `stage` has run, that its configuration slice is unchanged,
// and that everything it read and wrote still hashes the same. Called for
// every (transitive) prerequisite before a stage does any work.
inline void require_fresh(const Context& ctx, const manifest::Manifest& m,
                          std::string_view stage) {
  const std::string name(stage);
  const manifest::StageEntry* entry = m.find(stage);
  if (entry == nullptr) {
    throw StaleArtifactError("no artifacts from stage '" + name +
                             "'; run `earlyrisk " + name + "` first");
  }
  if (entry->config_hash !=
      config::stage_config_hash(ctx.config, stages::selectors(stage))) {
    throw StaleArtifactError("configuration for stage '" + name +
                             "' has changed; rerun `earlyrisk " + name + "`");
  }
  for (const auto& in : entry->inputs) {
    const std::filesystem::path p(in.path);
    if (!std::filesystem::exists(p) || hash_path(p) != in.hash) {
      throw StaleArtifactError("input '" + in.path + "' of stage '" + name +
                               "' changed since it ran; rerun `earlyrisk " +
                               name + "`");
    }
  }
  for (const auto& out : entry->outputs) {
    const std::filesystem::path p(out.path);
    if (!std::filesystem::exists(p) || hash_path(p) != out.hash) {
      throw StaleArtifactError("artifact '" + out.path +
                               "' is missing or was modified; rerun "
                               "`earlyrisk " +
                               name + "`");
    }
  }
}

// Runs one stage under the manifest: skips it when nothing changed (unless
// forced), otherwise executes `body` and records the new input/output
// hashes. Returns whether the body ran.
template <typename Body>
bool run_stage(const Context& ctx, std::string_view stage,
               const std::vector<std::filesystem::path>& inputs,
               const std::vector<std::filesystem::path>& outputs,
               Body&& body) {
  const Paths paths = make_paths(ctx.config);
  manifest::Manifest m = manifest::load(paths.manifest);
  const std::uint64_t config_hash =
      config::stage_config_hash(ctx.config, stages::selectors(stage));
  const std::vector<manifest::HashedPath> current_inputs =
      detail::hash_all(inputs, stage, "input");

  const manifest::StageEntry* entry = m.find(stage);
  if (!ctx.force && entry != nullptr && entry->config_hash == config_hash &&
      entry->inputs == current_inputs &&
      entry->outputs.size() == outputs.size()) {
    bool fresh = true;
    for (std::size_t i = 0; i < outputs.size() && fresh; ++i) {
      const auto& recorded = entry->outputs[i];
      fresh = recorded.path == outputs[i].generic_string() &&
              std::filesystem::exists(outputs[i]) &&
              hash_path(outputs[i]) == recorded.hash;
    }
    if (fresh) {
      detail::log_line(ctx, "[" + std::string(stage) +
                                "] up to date; skipping (--force reruns)");
      return false;
    }
  }

  body();

  manifest::StageEntry fresh_entry;
  fresh_entry.stage = std::string(stage);
  fresh_entry.config_hash = config_hash;
  fresh_entry.inputs = current_inputs;
  for (const auto& out : outputs) {
    if (!std::filesystem::exists(out)) {
      throw DataError("stage '" + std::string(stage) +
                      "' did not produce '" + out.generic_string() + "'");
    }
    fresh_entry.outputs.push_back({hash_path(out), out.generic_string()});
  }
  m.put(std::move(fresh_entry));
  manifest::save(paths.manifest, m);
  return true;
}

// ---------------------------------------------------------------------------
// Small shared helpers.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_subject_list(
    const std::filesystem::path& path,
    const std::vector<corpus::SubjectHistory>& subjects) {
  std::string out;
  for (const auto& s : subjects) {
    out += s.subject_id;
    out += '\n';
  }
  write_text_file(path, out);
}

inline std::vector<std::string> load_subject_list(
    const std::filesystem::path& path) {
  std::vector<std::string> ids;
  for (const auto& line : textpipe::detail::split_lines(read_text_file(path))) {
    if (!line.empty()) ids.push_back(line);
  }
  if (ids.empty()) {
    throw DataError("subject list is empty: " + path.string());
  }
  return ids;
}

// The corpus subset a stage works on, in the order the list gives.
inline std::vector<const corpus::SubjectHistory*> select_subjects(
    const corpus::Dataset& ds, const std::vector<std::string>& ids) {
  std::vector<const corpus::SubjectHistory*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const corpus::SubjectHistory* h = ds.find(id);
    if (h == nullptr) {
      throw DataError("subject '" + id + "' from the training list is not "
                      "in the corpus");
    }
    out.push_back(h);
  }
  return out;
}

// One document per submission, fully preprocessed.
inline std::vector<textpipe::TokenStream> submission_documents(
    const std::vector<const corpus::SubjectHistory*>& subjects,
    const textpipe::CollocationModel& colloc) {
  std::vector<textpipe::TokenStream> docs;
  for (const auto* subject : subjects) {
    for (const auto& chunk : subject->chunks) {
      for (const auto& sub : chunk) {
        docs.push_back(textpipe::process_document(
            corpus::submission_text(sub), colloc));
      }
    }
  }
  return docs;
}

struct Artifacts {
  textpipe::Vocabulary vocab;
  textpipe::CollocationModel colloc;
  lsi::LsiModel lsi;
};

inline Artifacts load_embedding_artifacts(const Paths& paths) {
  Artifacts a;
  a.vocab = textpipe::load_vocabulary(paths.vocab);
  a.colloc = textpipe::load_collocations(paths.collocations);
  a.lsi = lsi::load_model(paths.lsi_model);
  if (static_cast<std::size_t>(a.lsi.vocab_size) != a.vocab.size()) {
    throw DataError("topic model and vocabulary disagree on term count; "
                    "rerun `earlyrisk fit-lsi`");
  }
  return a;
}

inline confnet::TrainConfig train_config_from(const config::RunConfig& c) {
  confnet::TrainConfig tc;
  tc.lambda = c.train_lambda;
  tc.learning_rate = c.train_learning_rate;
  tc.batch_size = static_cast<int>(c.train_batch_size);
  tc.max_epochs = static_cast<int>(c.train_max_epochs);
  tc.patience = static_cast<int>(c.train_patience);
  tc.validation_fraction = c.train_validation_fraction;
  tc.dropout = c.train_dropout;
  tc.confidence_enabled = c.train_confidence;
  tc.feature_norm = config::parse_feature_norm(c.train_feature_norm);
  tc.seed = Rng::derive(c.seed, "train");
  return tc;
}

// Training examples: one per (subject, cumulative prefix). Prefixes with
// no submissions yet carry no evidence and are skipped.
inline std::vector<confnet::Sample> build_training_samples(
    const std::vector<const corpus::SubjectHistory*>& subjects,
    const corpus::GoldenTruth& truth, const Artifacts& art,
    bool use_prefixes) {
  std::vector<confnet::Sample> samples;
  for (const auto* subject : subjects) {
    const auto it = truth.find(subject->subject_id);
    if (it == truth.end()) {
      throw DataError("subject '" + subject->subject_id +
                      "' is not in the golden truth");
    }
    const int label = it->second == corpus::Label::kDepressed ? 1 : 0;
    const int first_week = use_prefixes ? 0 : corpus::kNumChunks - 1;
    for (int w = first_week; w < corpus::kNumChunks; ++w) {
      const corpus::CumulativeView view = corpus::cumulative_view(*subject, w);
      if (view.submission_count() == 0) continue;
      samples.push_back(
          {earlydecision::embed_view(view, art.vocab, art.colloc, art.lsi),
           label});
    }
  }
  if (samples.empty()) {
    throw DataError("no training examples could be built from the corpus");
  }
  return samples;
}

inline std::string format_train_report(const confnet::TrainReport& report) {
  std::string out;
  char buf[64];
  auto kv = [&](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  kv("train_size", std::to_string(report.train_size));
  kv("val_size", std::to_string(report.val_size));
  kv("epochs_run", std::to_string(report.epochs.size()));
  kv("best_epoch", std::to_string(report.best_epoch));
  std::snprintf(buf, sizeof(buf), "%.17g", report.best_val_loss);
  kv("best_val_loss", buf);
  std::snprintf(buf, sizeof(buf), "%.17g", report.min_confidence);
  kv("min_confidence", buf);
  std::snprintf(buf, sizeof(buf), "%.17g", report.mean_confidence);
  kv("mean_confidence", buf);
  std::snprintf(buf, sizeof(buf), "%.17g", report.std_confidence);
  kv("std_confidence", buf);
  return out;
}

inline std::string format_trace(
    const std::vector<earlydecision::DecisionRecord>& records) {
  std::string out =
      "subject\tweek\tk\tp_control\tp_depressed\tconfidence\tthreshold"
      "\tdecided\n";
  char buf[160];
  for (const auto& rec : records) {
    for (const auto& wt : rec.trace) {
      std::snprintf(buf, sizeof(buf),
                    "%s\t%d\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%d\n",
                    rec.subject_id.c_str(), wt.week,
                    wt.cumulative_submissions, wt.p[0], wt.p[1],
                    wt.confidence, wt.threshold, wt.decided_here ? 1 : 0);
      out += buf;
    }
  }
  return out;
}

inline std::string class_counts_line(const corpus::GoldenTruth& truth) {
  std::size_t pos = 0;
  for (const auto& [id, label] : truth) {
    if (label == corpus::Label::kDepressed) ++pos;
  }
  return std::to_string(truth.size()) + " subjects (" + std::to_string(pos) +
         " positive, " + std::to_string(truth.size() - pos) + " control)";
}

// Every report carries the effective configuration, indented under its own
// heading, so a report alone is enough to rerun the experiment.
inline std::string config_echo(const config::RunConfig& c) {
  std::string out = "config:\n";
  for (const auto& line : textpipe::detail::split_lines(config::serialize(c))) {
    out += "  ";
    out += line;
    out += '\n';
  }
  return out;
}

inline std::string lambda_slug(double lambda) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", lambda);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

namespace detail {

inline synthgen::SynthConfig synth_config_from(const config::RunConfig& c,
                                               bool test_split) {
  synthgen::SynthConfig sc;
  sc.depressed =
      static_cast<int>(test_split ? c.synth_test_depressed : c.synth_depressed);
  sc.control =
      static_cast<int>(test_split ? c.synth_test_control : c.synth_control);
  sc.delta = c.synth_delta;
  sc.shared_vocab = static_cast<int>(c.synth_shared_vocab);
  sc.class_vocab = static_cast<int>(c.synth_class_vocab);
  sc.posts_min = static_cast<int>(c.synth_posts_min);
  sc.posts_max = static_cast<int>(c.synth_posts_max);
  sc.comment_fraction = c.synth_comment_fraction;
  sc.planted_pairs = static_cast<int>(c.synth_planted_pairs);
  sc.post_tokens_min = static_cast<int>(c.synth_post_tokens_min);
  sc.post_tokens_max = static_cast<int>(c.synth_post_tokens_max);
  sc.seed = Rng::derive(c.seed, test_split ? "test-corpus" : "train-corpus");
  sc.id_prefix = test_split ? "test" : "train";
  return sc;
}

// Only replaces trees this tool generated (marked by synth_config.txt);
// anything else in the way is treated as user data and left alone.
inline void replace_synthetic_tree(const std::filesystem::path& root) {
  if (!std::filesystem::exists(root)) return;
  if (!std::filesystem::exists(root / "synth_config.txt")) {
    throw DataError("refusing to overwrite '" + root.generic_string() +
                    "': it exists but was not generated by this tool");
  }
  std::filesystem::remove_all(root);
}

}  // namespace detail

inline bool cmd_generate(const Context& ctx) {
  const Paths paths = make_paths(ctx.config);
  return run_stage(ctx, "generate", {}, {paths.train_data, paths.test_data},
                   [&] {
                     detail::log_line(ctx, "[generate] writing synthetic "
                                           "corpora");
                     detail::replace_synthetic_tree(paths.train_data);
                     detail::replace_synthetic_tree(paths.test_data);
                     synthgen::generate_dataset(
                         paths.train_data,
                         detail::synth_config_from(ctx.config, false));
                     synthgen::generate_dataset(
                         paths.test_data,
                         detail::synth_config_from(ctx.config, true));
                   });
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

inline bool cmd_preprocess(const Context& ctx) {
  const Paths paths = make_paths(ctx.config);
  const config::RunConfig& c = ctx.config;
  return run_stage(
      ctx, "preprocess", {paths.train_data},
      {paths.train_subjects, paths.collocations, paths.vocab}, [&] {
        corpus::Dataset ds = corpus::load_dataset(paths.train_data);
        for (const auto& w : ds.warnings) {
          detail::log_line(ctx, "[preprocess] warning: " + w);
        }
        const std::vector<corpus::SubjectHistory> kept =
            corpus::downsample_controls(ds.subjects, ds.truth,
                                        c.preprocess_downsample_ratio,
                                        c.seed);
        detail::log_line(ctx, "[preprocess] training pool: " +
                                  std::to_string(kept.size()) + " of " +
                                  std::to_string(ds.subjects.size()) +
                                  " subjects after downsampling");
        detail::write_subject_list(paths.train_subjects, kept);

        std::vector<const corpus::SubjectHistory*> refs;
        refs.reserve(kept.size());
        for (const auto& s : kept) refs.push_back(&s);
        const textpipe::CollocationModel empty_model;
        std::vector<textpipe::TokenStream> docs =
            detail::submission_documents(refs, empty_model);

        textpipe::CollocationConfig cc;
        cc.min_count = static_cast<int>(c.colloc_min_count);
        cc.npmi_threshold = c.colloc_npmi_threshold;
        cc.passes = static_cast<int>(c.colloc_passes);
        textpipe::CollocationModel colloc =
            textpipe::extract_collocations(docs, cc);
        std::size_t merged = 0;
        for (const auto& pass : colloc.merges) merged += pass.size();
        detail::log_line(ctx, "[preprocess] collocations: " +
                                  std::to_string(merged) + " merged terms");
        colloc.config_hash = config::stage_config_hash(
            ctx.config, stages::selectors("preprocess"));
        textpipe::save_collocations(paths.collocations, colloc);

        for (auto& doc : docs) doc = colloc.rewrite(doc);
        textpipe::Vocabulary vocab = textpipe::build_vocabulary(
            docs, static_cast<int>(c.vocab_min_df), c.vocab_max_df_fraction);
        vocab.config_hash = colloc.config_hash;
        detail::log_line(ctx, "[preprocess] vocabulary: " +
                                  std::to_string(vocab.size()) + " terms over " +
                                  std::to_string(docs.size()) + " documents");
        textpipe::save_vocabulary(paths.vocab, vocab);
      });
}

// ---------------------------------------------------------------------------
// fit-lsi
// ---------------------------------------------------------------------------

inline bool cmd_fit_lsi(const Context& ctx) {
  const Paths paths = make_paths(ctx.config);
  const config::RunConfig& c = ctx.config;
  {
    const manifest::Manifest m = manifest::load(paths.manifest);
    require_fresh(ctx, m, "preprocess");
  }
  return run_stage(
      ctx, "fit-lsi",
      {paths.train_data, paths.train_subjects, paths.collocations,
       paths.vocab},
      {paths.lsi_model, paths.topics}, [&] {
        const textpipe::Vocabulary vocab =
            textpipe::load_vocabulary(paths.vocab);
        const textpipe::CollocationModel colloc =
            textpipe::load_collocations(paths.collocations);
        const corpus::Dataset ds = corpus::load_dataset(paths.train_data);
        const auto refs = detail::select_subjects(
            ds, detail::load_subject_list(paths.train_subjects));
        const std::vector<textpipe::TokenStream> docs =
            detail::submission_documents(refs, colloc);

        std::vector<textpipe::SparseCounts> counts;
        counts.reserve(docs.size());
        for (const auto& doc : docs) {
          counts.push_back(textpipe::doc_to_counts(doc, vocab));
        }
        const lsi::TermDocMatrix tdm =
            lsi::build_tfidf_matrix(counts, vocab);
        if (tdm.dropped_docs > 0) {
          detail::log_line(ctx, "[fit-lsi] dropped " +
                                    std::to_string(tdm.dropped_docs) +
                                    " documents with no vocabulary terms");
        }

        lsi::FitOptions opts;
        const std::int64_t max_rank =
            std::min<std::int64_t>(tdm.matrix.rows, tdm.matrix.cols);
        opts.topics = static_cast<std::int32_t>(c.lsi_topics);
        if (c.lsi_topics > max_rank) {
          detail::log_line(ctx, "[fit-lsi] warning: lsi.topics=" +
                                    std::to_string(c.lsi_topics) +
                                    " exceeds min(terms, documents)=" +
                                    std::to_string(max_rank) +
                                    "; clamping");
          opts.topics = static_cast<std::int32_t>(max_rank);
        }
        opts.svd.oversample = static_cast<int>(c.lsi_oversample);
        opts.svd.max_iters = static_cast<int>(c.lsi_max_iters);
        opts.svd.tol = c.lsi_tol;
        opts.svd.seed = Rng::derive(c.seed, "lsi");
        detail::log_line(ctx, "[fit-lsi] factorizing " +
                                  std::to_string(tdm.matrix.rows) + " x " +
                                  std::to_string(tdm.matrix.cols) +
                                  " matrix into " +
                                  std::to_string(opts.topics) + " topics");
        lsi::LsiModel model = lsi::fit_lsi(tdm, opts);
        model.config_hash = config::stage_config_hash(
            ctx.config, stages::selectors("fit-lsi"));
        lsi::save_model(paths.lsi_model, model);

        const auto top = lsi::top_terms_per_topic(model, vocab, 10);
        std::string listing;
        char buf[64];
        for (std::size_t t = 0; t < top.size(); ++t) {
          std::snprintf(buf, sizeof(buf), "topic %3zu (sigma %.6f):", t,
                        model.singular_values[t]);
          listing += buf;
          for (const auto& [term, loading] : top[t]) {
            listing += ' ';
            listing += term;
          }
          listing += '\n';
        }
        write_text_file(paths.topics, listing);
      });
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline bool cmd_train(const Context& ctx) {
  const Paths paths = make_paths(ctx.config);
  const config::RunConfig& c = ctx.config;
  {
    const manifest::Manifest m = manifest::load(paths.manifest);
    require_fresh(ctx, m, "preprocess");
    require_fresh(ctx, m, "fit-lsi");
  }
  return run_stage(
      ctx, "train",
      {paths.train_data, paths.train_subjects, paths.collocations,
       paths.vocab, paths.lsi_model},
      {paths.net, paths.train_report}, [&] {
        const detail::Artifacts art = detail::load_embedding_artifacts(paths);
        const corpus::Dataset ds = corpus::load_dataset(paths.train_data);
        const auto refs = detail::select_subjects(
            ds, detail::load_subject_list(paths.train_subjects));
        const std::vector<confnet::Sample> samples =
            detail::build_training_samples(refs, ds.truth, art,
                                           c.train_use_prefixes);
        detail::log_line(ctx, "[train] " + std::to_string(samples.size()) +
                                  " examples from " +
                                  std::to_string(refs.size()) + " subjects");
        const confnet::TrainConfig tc = detail::train_config_from(c);
        auto [params, report] = confnet::train(samples, tc);
        detail::log_line(
            ctx, "[train] best epoch " + std::to_string(report.best_epoch) +
                     " of " + std::to_string(report.epochs.size()) +
                     ", val loss " + std::to_string(report.best_val_loss));

        confnet::NetArtifact artifact;
        artifact.params = std::move(params);
        artifact.config = tc;
        artifact.config_hash = config::stage_config_hash(
            ctx.config, stages::selectors("train"));
        artifact.min_confidence = report.min_confidence;
        artifact.mean_confidence = report.mean_confidence;
        artifact.std_confidence = report.std_confidence;
        artifact.best_epoch = report.best_epoch;
        artifact.epochs_run = static_cast<std::int32_t>(report.epochs.size());
        confnet::save_net(paths.net, artifact);
        write_text_file(paths.train_report,
                        detail::format_train_report(report));
      });
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

namespace detail {

inline earlydecision::SimulationOptions simulation_options_from(
    const config::RunConfig& c, double min_train_confidence,
    bool keep_trace) {
  earlydecision::SimulationOptions opts;
  opts.policy = earlydecision::make_policy(
      c.policy_initial_threshold, c.policy_final_threshold,
      min_train_confidence, corpus::kNumChunks, c.policy_force_final);
  opts.baseline_gate = c.policy_baseline_gate;
  opts.baseline_threshold = c.policy_baseline_threshold;
  opts.final_only = c.policy_final_only;
  opts.keep_trace = keep_trace;
  return opts;
}

}  // namespace detail

inline bool cmd_simulate(const Context& ctx) {
  const Paths paths = make_paths(ctx.config);
  const config::RunConfig& c = ctx.config;
  {
    const manifest::Manifest m = manifest::load(paths.manifest);
    require_fresh(ctx, m, "preprocess");
    require_fresh(ctx, m, "fit-lsi");
    require_fresh(ctx, m, "train");
  }
  return run_stage(
      ctx, "simulate",
      {paths.test_data, paths.collocations, paths.vocab, paths.lsi_model,
       paths.net},
      {paths.decisions}, [&] {
        const detail::Artifacts art = detail::load_embedding_artifacts(paths);
        const confnet::NetArtifact net = confnet::load_net(paths.net);
        const corpus::Dataset ds = corpus::load_dataset(paths.test_data);
        for (const auto& w : ds.warnings) {
          detail::log_line(ctx, "[simulate] warning: " + w);
        }
        const earlydecision::SimulationOptions opts =
            detail::simulation_options_from(c, net.min_confidence,
                                            ctx.emit_trace);
        detail::log_line(
            ctx, "[simulate] " + std::to_string(ds.subjects.size()) +
                     " subjects, threshold " +
                     std::to_string(opts.policy.initial_threshold) +
                     " decaying to " + std::to_string(opts.policy.floor));
        const std::vector<earlydecision::DecisionRecord> records =
            earlydecision::run_simulation(ds.subjects, art.vocab, art.colloc,
                                          art.lsi, net.params, opts);
        earlydecision::save_decisions(paths.decisions, records);
        if (ctx.emit_trace) {
          write_text_file(paths.trace, detail::format_trace(records));
          detail::log_line(ctx, "[simulate] trace written to " +
                                    paths.trace.generic_string());
        }
      });
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

inline bool cmd_evaluate(const Context& ctx) {
  const Paths paths = make_paths(ctx.config);
  const config::RunConfig& c = ctx.config;
  {
    const manifest::Manifest m = manifest::load(paths.manifest);
    require_fresh(ctx, m, "preprocess");
    require_fresh(ctx, m, "fit-lsi");
    require_fresh(ctx, m, "train");
    require_fresh(ctx, m, "simulate");
  }
  return run_stage(
      ctx, "evaluate", {paths.test_data, paths.decisions}, {paths.report},
      [&] {
        const corpus::GoldenTruth truth = corpus::load_golden_truth(
            paths.test_data / "risk_golden_truth.txt");
        const std::vector<earlydecision::DecisionRecord> records =
            earlydecision::load_decisions(paths.decisions);
        const std::vector<double> o_values =
            config::parse_double_list(c.eval_o_values, "eval.o_values");

        evalmetrics::MethodRow row;
        row.name = c.policy_baseline_gate
                       ? "baseline"
                       : (c.policy_final_only ? "confidence-final"
                                              : "confidence");
        row.score = evalmetrics::score_run(records, truth, o_values);

        const std::string header =
            "test corpus: " + detail::class_counts_line(truth) + "\n" +
            detail::config_echo(c);
        write_text_file(paths.report,
                        evalmetrics::format_report({row}, o_values, header));
      });
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

inline bool cmd_ablate(const Context& ctx) {
  const Paths paths = make_paths(ctx.config);
  const config::RunConfig& c = ctx.config;
  {
    const manifest::Manifest m = manifest::load(paths.manifest);
    require_fresh(ctx, m, "preprocess");
    require_fresh(ctx, m, "fit-lsi");
  }
  const std::vector<double> grid =
      config::parse_double_list(c.ablate_lambda_grid, "ablate.lambda_grid");
  const std::vector<double> o_values =
      config::parse_double_list(c.eval_o_values, "eval.o_values");

  std::vector<std::filesystem::path> outputs = {paths.ablation_report};
  outputs.push_back(paths.artifacts / "decisions-baseline.txt");
  for (const double lambda : grid) {
    outputs.push_back(paths.artifacts /
                      ("decisions-lambda-" + detail::lambda_slug(lambda) +
                       ".txt"));
  }

  return run_stage(
      ctx, "ablate",
      {paths.train_data, paths.test_data, paths.train_subjects,
       paths.collocations, paths.vocab, paths.lsi_model},
      outputs, [&] {
        const detail::Artifacts art = detail::load_embedding_artifacts(paths);
        const corpus::Dataset train_ds =
            corpus::load_dataset(paths.train_data);
        const auto refs = detail::select_subjects(
            train_ds, detail::load_subject_list(paths.train_subjects));
        const std::vector<confnet::Sample> samples =
            detail::build_training_samples(refs, train_ds.truth, art,
                                           c.train_use_prefixes);
        const corpus::Dataset test_ds = corpus::load_dataset(paths.test_data);

        std::vector<evalmetrics::MethodRow> rows;
        std::size_t out_index = 1;  // outputs[0] is the report itself

        auto run_variant = [&](const std::string& name,
                               const confnet::TrainConfig& tc,
                               bool baseline_gate) {
          detail::log_line(ctx, "[ablate] training variant '" + name + "'");
          auto [params, report] = confnet::train(samples, tc);
          config::RunConfig variant = c;
          variant.policy_baseline_gate = baseline_gate;
          const earlydecision::SimulationOptions opts =
              detail::simulation_options_from(variant, report.min_confidence,
                                              false);
          const auto records = earlydecision::run_simulation(
              test_ds.subjects, art.vocab, art.colloc, art.lsi, params, opts);
          earlydecision::save_decisions(outputs[out_index++], records);

          evalmetrics::MethodRow row;
          row.name = name;
          row.score =
              evalmetrics::score_run(records, test_ds.truth, o_values);
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.6f", report.min_confidence);
          row.extras["min_confidence"] = buf;
          std::snprintf(buf, sizeof(buf), "%.6f", report.mean_confidence);
          row.extras["mean_confidence"] = buf;
          std::snprintf(buf, sizeof(buf), "%.6f", report.std_confidence);
          row.extras["std_confidence"] = buf;
          row.extras["best_epoch"] = std::to_string(report.best_epoch);
          rows.push_back(std::move(row));
        };

        confnet::TrainConfig base_tc = detail::train_config_from(c);
        base_tc.confidence_enabled = false;
        run_variant("baseline", base_tc, true);
        for (const double lambda : grid) {
          confnet::TrainConfig tc = detail::train_config_from(c);
          tc.lambda = lambda;
          run_variant("lambda=" + detail::lambda_slug(lambda), tc, false);
        }

        const std::string header =
            "test corpus: " + detail::class_counts_line(test_ds.truth) +
            "\ntraining examples: " + std::to_string(samples.size()) + "\n" +
            detail::config_echo(c);
        write_text_file(paths.ablation_report,
                        evalmetrics::format_report(rows, o_values, header));
      });
}

}  // namespace earlyrisk::pipeline
