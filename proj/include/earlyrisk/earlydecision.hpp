#pragma once

// Week-by-week decision policy. After week w (0-based) a subject's cumulative
// text is embedded and classified; the classifier's confidence c is compared
// against a decaying threshold
//
//   threshold(w) = T * exp(-s * w^2),
//
// and the label is emitted as soon as c exceeds it. The scale s is chosen so
// the final week's threshold lands on a floor F the trained model can
// actually clear: F = min(configured final threshold, min train confidence -
// 1e-3), bounded below by 1e-3. Decisions are final; by default any subject
// still undecided after the last week is forced to the plain argmax label.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "earlyrisk/confnet.hpp"
#include "earlyrisk/corpus.hpp"
#include "earlyrisk/io.hpp"
#include "earlyrisk/lsi.hpp"
#include "earlyrisk/textpipe.hpp"

namespace earlyrisk::earlydecision {

struct DecisionPolicy {
  double initial_threshold = 0.85;  // week-0 gate
  double floor = 0.40;              // final-week gate after adaptation
  double scaling = 0.0;             // s in T * exp(-s w^2)
  int num_weeks = corpus::kNumChunks;
  bool force_final = true;
};

inline DecisionPolicy make_policy(double initial_threshold,
                                  double final_threshold,
                                  double min_train_confidence, int num_weeks,
                                  bool force_final) {
  if (num_weeks < 2) {
    throw UsageError("the decision schedule needs at least two weeks");
  }
  if (initial_threshold <= 0.0 || initial_threshold >= 1.0) {
    throw UsageError("initial threshold must lie in (0, 1)");
  }
  DecisionPolicy policy;
  policy.initial_threshold = initial_threshold;
  policy.num_weeks = num_weeks;
  policy.force_final = force_final;
  double floor = std::min(final_threshold, min_train_confidence - 1e-3);
  floor = std::max(floor, 1e-3);
  if (floor >= initial_threshold) {
    throw DataError(
        "threshold floor " + std::to_string(floor) +
        " is not below the initial threshold; the schedule cannot decay");
  }
  policy.floor = floor;
  const double span = static_cast<double>(num_weeks - 1);
  policy.scaling = std::log(initial_threshold / floor) / (span * span);
  return policy;
}

inline double threshold_at_week(const DecisionPolicy& policy, int week) {
  if (week < 0 || week >= policy.num_weeks) {
    throw UsageError("week out of range: " + std::to_string(week));
  }
  const double w = static_cast<double>(week);
  return policy.initial_threshold * std::exp(-policy.scaling * w * w);
}

// ---------------------------------------------------------------------------
// Embedding a cumulative view: concatenated text -> tokens -> counts ->
// topic coordinates. Shared by training-example construction and simulation.
// ---------------------------------------------------------------------------

inline std::vector<double> embed_view(const corpus::CumulativeView& view,
                                      const textpipe::Vocabulary& vocab,
                                      const textpipe::CollocationModel& colloc,
                                      const lsi::LsiModel& model) {
  const std::string text = corpus::gather_text(view);
  const textpipe::TokenStream tokens =
      textpipe::process_document(text, colloc);
  return model.fold_in(textpipe::doc_to_counts(tokens, vocab));
}

// ---------------------------------------------------------------------------
// Simulation.
// ---------------------------------------------------------------------------

struct WeekTrace {
  int week = 0;
  std::size_t cumulative_submissions = 0;
  std::array<double, 2> p{};
  double confidence = 0.0;
  double threshold = 0.0;
  bool decided_here = false;
};

struct DecisionRecord {
  std::string subject_id;
  bool decided = false;
  int label = -1;                     // -1 while undecided
  int week = -1;                      // decision week, -1 if none
  std::size_t submissions_seen = 0;   // k at decision (total if undecided)
  double confidence = 0.0;            // gate value at decision (or last week)
  std::vector<WeekTrace> trace;
};

struct SimulationOptions {
  DecisionPolicy policy;
  bool baseline_gate = false;       // gate on max softmax vs fixed threshold
  double baseline_threshold = 0.85;
  bool final_only = false;          // ablation: never decide before the end
  bool keep_trace = false;
};

inline DecisionRecord simulate_subject(const corpus::SubjectHistory& history,
                                       const textpipe::Vocabulary& vocab,
                                       const textpipe::CollocationModel& colloc,
                                       const lsi::LsiModel& model,
                                       const confnet::NetParams& net,
                                       const SimulationOptions& options) {
  const DecisionPolicy& policy = options.policy;
  DecisionRecord record;
  record.subject_id = history.subject_id;

  for (int w = 0; w < policy.num_weeks; ++w) {
    const corpus::CumulativeView view = corpus::cumulative_view(history, w);
    const std::size_t k = view.submission_count();
    const std::vector<double> x = embed_view(view, vocab, colloc, model);
    const confnet::Prediction pred = confnet::predict(net, x);

    const double gate_value =
        options.baseline_gate ? std::max(pred.p[0], pred.p[1])
                              : pred.confidence;
    const double gate_threshold = options.baseline_gate
                                      ? options.baseline_threshold
                                      : threshold_at_week(policy, w);

    // No decision without evidence, and none before the final week when the
    // final-only ablation is active.
    const bool gate_open = !options.final_only && k > 0;
    bool decide = gate_open && gate_value > gate_threshold;
    bool forced = false;
    if (!decide && w == policy.num_weeks - 1 && policy.force_final) {
      decide = true;
      forced = true;
    }

    if (options.keep_trace) {
      record.trace.push_back({w, k, pred.p, gate_value, gate_threshold,
                              decide});
    }
    record.submissions_seen = k;
    record.confidence = gate_value;

    if (decide) {
      record.decided = true;
      record.week = w;
      record.label = forced ? (pred.p[1] > pred.p[0] ? 1 : 0) : pred.label;
      return record;
    }
  }
  return record;  // undecided: only possible when force_final is off
}

inline std::vector<DecisionRecord> run_simulation(
    const std::vector<corpus::SubjectHistory>& subjects,
    const textpipe::Vocabulary& vocab,
    const textpipe::CollocationModel& colloc, const lsi::LsiModel& model,
    const confnet::NetParams& net, const SimulationOptions& options) {
  std::vector<DecisionRecord> records;
  records.reserve(subjects.size());
  for (const auto& subject : subjects) {
    records.push_back(
        simulate_subject(subject, vocab, colloc, model, net, options));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Decisions artifact: one line per subject,
//   subject_id <TAB> week <TAB> k <TAB> label <TAB> confidence
// with week and label set to -1 for undecided subjects. Fixed six-decimal
// confidence keeps reruns byte-identical.
// ---------------------------------------------------------------------------

inline std::string format_decisions(const std::vector<DecisionRecord>& records) {
  std::string out;
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d\t%llu\t%d\t%.6f\n",
                  r.decided ? r.week : -1,
                  static_cast<unsigned long long>(r.submissions_seen),
                  r.decided ? r.label : -1, r.confidence);
    out += r.subject_id;
    out += '\t';
    out += buf;
  }
  return out;
}

inline void save_decisions(const std::filesystem::path& path,
                           const std::vector<DecisionRecord>& records) {
  write_text_file(path, format_decisions(records));
}

inline std::vector<DecisionRecord> load_decisions(
    const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  std::vector<DecisionRecord> records;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    std::string line = content.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (line.empty()) continue;

    std::array<std::string, 5> fields;
    std::size_t field = 0;
    std::size_t pos = 0;
    while (field < 4) {
      const std::size_t tab = line.find('\t', pos);
      if (tab == std::string::npos) break;
      fields[field++] = line.substr(pos, tab - pos);
      pos = tab + 1;
    }
    fields[field] = line.substr(pos);
    if (field != 4) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 5 tab-separated fields");
    }
    DecisionRecord rec;
    try {
      rec.subject_id = fields[0];
      rec.week = std::stoi(fields[1]);
      rec.submissions_seen = std::stoull(fields[2]);
      rec.label = std::stoi(fields[3]);
      rec.confidence = std::stod(fields[4]);
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed decision row");
    }
    if (rec.subject_id.empty() || rec.week < -1 || rec.label < -1 ||
        rec.label > 1 || (rec.week == -1) != (rec.label == -1)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": inconsistent decision row");
    }
    rec.decided = rec.week >= 0;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace earlyrisk::earlydecision
