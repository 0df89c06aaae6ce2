#pragma once

// Early-detection scoring. Each subject contributes one cost:
//
//   false positive: c_fp        (set to the corpus positive rate, 0.1296)
//   false negative: c_fn = 1
//   true positive:  lc_o(k) * c_tp, lc_o(k) = 1 - 1 / (1 + e^(k - o))
//   true negative:  0
//
// where k is the number of submissions seen before the decision and o is the
// latency knee: catching a positive after o submissions is nearly as bad as
// missing them. ERDE_o is 100 times the mean cost, reported to two decimals.
// Undecided subjects are charged as misses when positive (cost c_fn) and as
// clean rejections when negative (cost 0), and are counted in exactly that
// way for precision/recall/F1.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "earlyrisk/corpus.hpp"
#include "earlyrisk/earlydecision.hpp"
#include "earlyrisk/io.hpp"

namespace earlyrisk::evalmetrics {

struct ErdeParams {
  double c_fp = 0.1296;
  double c_fn = 1.0;
  double c_tp = 1.0;
};

// lc_o(k) = 1 - 1/(1 + e^(k-o)), evaluated in the overflow-safe form.
inline double latency_cost(double k, double o) {
  return 1.0 / (1.0 + std::exp(o - k));
}

enum class Outcome { kTruePositive, kFalsePositive, kTrueNegative, kFalseNegative };

inline double subject_cost(Outcome outcome, double k, double o,
                           const ErdeParams& params = {}) {
  switch (outcome) {
    case Outcome::kFalsePositive: return params.c_fp;
    case Outcome::kFalseNegative: return params.c_fn;
    case Outcome::kTruePositive: return latency_cost(k, o) * params.c_tp;
    case Outcome::kTrueNegative: return 0.0;
  }
  throw UsageError("unknown outcome");
}

struct SubjectOutcome {
  std::string subject_id;
  Outcome outcome;
  std::size_t k = 0;
  bool decided = false;
  int week = -1;
};

struct ScoredRun {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t decided = 0, undecided = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double mean_decision_week = 0.0;  // over decided subjects
  std::vector<std::pair<double, double>> erde;  // (o, percentage)
  std::vector<SubjectOutcome> outcomes;
};

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

inline ScoredRun score_run(
    const std::vector<earlydecision::DecisionRecord>& records,
    const corpus::GoldenTruth& truth, const std::vector<double>& o_values,
    const ErdeParams& params = {}) {
  if (records.empty()) {
    throw DataError("cannot score an empty decision list");
  }
  ScoredRun run;
  double week_sum = 0.0;
  for (const auto& rec : records) {
    const auto it = truth.find(rec.subject_id);
    if (it == truth.end()) {
      throw DataError("decision for unknown subject '" + rec.subject_id +
                      "'");
    }
    const bool positive_truth = it->second == corpus::Label::kDepressed;

    Outcome outcome;
    if (rec.decided) {
      if (rec.label == 1) {
        outcome = positive_truth ? Outcome::kTruePositive
                                 : Outcome::kFalsePositive;
      } else {
        outcome = positive_truth ? Outcome::kFalseNegative
                                 : Outcome::kTrueNegative;
      }
      ++run.decided;
      week_sum += static_cast<double>(rec.week);
    } else {
      outcome = positive_truth ? Outcome::kFalseNegative
                               : Outcome::kTrueNegative;
      ++run.undecided;
    }
    switch (outcome) {
      case Outcome::kTruePositive: ++run.tp; break;
      case Outcome::kFalsePositive: ++run.fp; break;
      case Outcome::kTrueNegative: ++run.tn; break;
      case Outcome::kFalseNegative: ++run.fn; break;
    }
    run.outcomes.push_back({rec.subject_id, outcome, rec.submissions_seen,
                            rec.decided, rec.week});
  }

  const double tp = static_cast<double>(run.tp);
  const double fp = static_cast<double>(run.fp);
  const double fn = static_cast<double>(run.fn);
  run.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  run.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  run.f1 = run.precision + run.recall > 0.0
               ? 2.0 * run.precision * run.recall /
                     (run.precision + run.recall)
               : 0.0;
  run.mean_decision_week =
      run.decided > 0 ? week_sum / static_cast<double>(run.decided) : 0.0;

  for (double o : o_values) {
    double total = 0.0;
    for (const auto& outcome : run.outcomes) {
      total += subject_cost(outcome.outcome,
                            static_cast<double>(outcome.k), o, params);
    }
    run.erde.emplace_back(
        o, round2(100.0 * total / static_cast<double>(run.outcomes.size())));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Report. A human-readable table plus a machine-readable key=value block.
// ---------------------------------------------------------------------------

struct MethodRow {
  std::string name;
  ScoredRun score;
  std::map<std::string, std::string> extras;  // appended to the kv block
};

namespace detail {

inline std::string format_o(double o) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", o);
  return buf;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

inline std::string format_report(const std::vector<MethodRow>& rows,
                                 const std::vector<double>& o_values,
                                 const std::string& header_block) {
  if (rows.empty()) {
    throw UsageError("report needs at least one method row");
  }
  std::string out = "earlyrisk evaluation report\n";
  out += "===========================\n\n";
  out += header_block;
  if (!header_block.empty() && header_block.back() != '\n') out += '\n';
  out += '\n';

  std::size_t name_width = 6;  // "method"
  for (const auto& row : rows) {
    name_width = std::max(name_width, row.name.size());
  }
  auto pad = [](const std::string& s, std::size_t w) {
    std::string p = s;
    while (p.size() < w) p += ' ';
    return p;
  };
  auto lead = [](const std::string& s, std::size_t w) {
    std::string p;
    while (p.size() + s.size() < w) p += ' ';
    return p + s;
  };

  std::vector<std::string> heads = {"method"};
  for (double o : o_values) heads.push_back("ERDE_" + detail::format_o(o));
  heads.push_back("F1");
  heads.push_back("precision");
  heads.push_back("recall");

  out += pad(heads[0], name_width);
  for (std::size_t i = 1; i < heads.size(); ++i) {
    out += "  " + lead(heads[i], 9);
  }
  out += '\n';
  out += std::string(name_width, '-');
  for (std::size_t i = 1; i < heads.size(); ++i) {
    out += "  " + std::string(9, '-');
  }
  out += '\n';
  for (const auto& row : rows) {
    out += pad(row.name, name_width);
    for (const auto& [o, pct] : row.score.erde) {
      out += "  " + lead(detail::fixed(pct, 2), 9);
    }
    out += "  " + lead(detail::fixed(row.score.f1, 2), 9);
    out += "  " + lead(detail::fixed(row.score.precision, 2), 9);
    out += "  " + lead(detail::fixed(row.score.recall, 2), 9);
    out += '\n';
  }

  out += "\n[metrics]\n";
  for (const auto& row : rows) {
    const std::string prefix = "method." + row.name + ".";
    for (const auto& [o, pct] : row.score.erde) {
      out += prefix + "erde" + detail::format_o(o) + " = " +
             detail::fixed(pct, 2) + "\n";
    }
    out += prefix + "f1 = " + detail::fixed(row.score.f1, 6) + "\n";
    out += prefix + "precision = " + detail::fixed(row.score.precision, 6) +
           "\n";
    out += prefix + "recall = " + detail::fixed(row.score.recall, 6) + "\n";
    out += prefix + "tp = " + std::to_string(row.score.tp) + "\n";
    out += prefix + "fp = " + std::to_string(row.score.fp) + "\n";
    out += prefix + "tn = " + std::to_string(row.score.tn) + "\n";
    out += prefix + "fn = " + std::to_string(row.score.fn) + "\n";
    out += prefix + "decided = " + std::to_string(row.score.decided) + "\n";
    out += prefix + "undecided = " + std::to_string(row.score.undecided) +
           "\n";
    out += prefix + "mean_decision_week = " +
           detail::fixed(row.score.mean_decision_week, 6) + "\n";
    for (const auto& [key, value] : row.extras) {
      out += prefix + key + " = " + value + "\n";
    }
  }
  return out;
}

}  // namespace earlyrisk::evalmetrics
