#pragma once

// Longitudinal corpus handling. A dataset root looks like
//
//   root/
//     chunk1/ ... chunk10/     one XML file per subject per chunk,
//                              named {subject_id}_{chunk}.xml
//     risk_golden_truth.txt    subject_id <TAB> label (1 positive, 0 control)
//
// Each subject file holds that subject's submissions for one tenth of their
// history, oldest chunk first. The XML schema is fixed:
//
//   <INDIVIDUAL>
//     <ID>subject</ID>
//     <WRITING>
//       <TITLE>optional title</TITLE>
//       <DATE>YYYY-MM-DD HH:MM:SS</DATE>
//       <TEXT>body</TEXT>
//     </WRITING>
//     ...
//   </INDIVIDUAL>
//
// Comments have no title; the canonical writer omits the TITLE element for
// them, and write(parse(f)) reproduces a canonical file byte for byte.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "earlyrisk/io.hpp"
#include "earlyrisk/rng.hpp"

namespace earlyrisk::corpus {

inline constexpr int kNumChunks = 10;

enum class Label : int { kControl = 0, kDepressed = 1 };

using GoldenTruth = std::map<std::string, Label>;

struct Submission {
  std::string title;  // empty for comments
  std::int64_t timestamp = 0;
  std::string body;

  bool is_comment() const { return title.empty(); }
  bool operator==(const Submission&) const = default;
};

struct SubjectHistory {
  std::string subject_id;
  std::array<std::vector<Submission>, kNumChunks> chunks;

  std::size_t total_submissions() const {
    std::size_t n = 0;
    for (const auto& c : chunks) n += c.size();
    return n;
  }
};

// ---------------------------------------------------------------------------
// Timestamps: "YYYY-MM-DD HH:MM:SS" <-> seconds since the Unix epoch.
// Calendar conversion uses the standard civil-days algorithm so results do
// not depend on the host time zone database.
// ---------------------------------------------------------------------------

namespace detail {

inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
      static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return static_cast<std::int64_t>(era) * 146097 +
         static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460u + doe / 36524u - doe / 146096u) / 365u;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365u * yoe + yoe / 4u - yoe / 100u);
  const unsigned mp = (5u * doy + 2u) / 153u;
  d = static_cast<int>(doy - (153u * mp + 2u) / 5u + 1u);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(yy + (m <= 2));
}

inline bool all_digits(std::string_view s) {
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return !s.empty();
}

inline int days_in_month(int y, int m) {
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30,
                                    31, 31, 30, 31, 30, 31};
  if (m == 2) {
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return leap ? 29 : 28;
  }
  return kDays[m - 1];
}

}  // namespace detail

inline std::int64_t parse_timestamp(std::string_view s) {
  auto fail = [&] {
    throw DataError("malformed timestamp: '" + std::string(s) +
                    "' (expected YYYY-MM-DD HH:MM:SS)");
  };
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != ' ' ||
      s[13] != ':' || s[16] != ':') {
    fail();
  }
  const std::string_view parts[6] = {s.substr(0, 4),  s.substr(5, 2),
                                     s.substr(8, 2),  s.substr(11, 2),
                                     s.substr(14, 2), s.substr(17, 2)};
  int v[6];
  for (int i = 0; i < 6; ++i) {
    if (!detail::all_digits(parts[i])) fail();
    v[i] = std::stoi(std::string(parts[i]));
  }
  const auto [year, month, day, hour, minute, second] =
      std::tuple(v[0], v[1], v[2], v[3], v[4], v[5]);
  if (month < 1 || month > 12 || day < 1 ||
      day > detail::days_in_month(year, month) || hour > 23 || minute > 59 ||
      second > 59) {
    fail();
  }
  return detail::days_from_civil(year, month, day) * 86400 + hour * 3600 +
         minute * 60 + second;
}

inline std::string format_timestamp(std::int64_t t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y, m, d;
  detail::civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02lld:%02lld:%02lld", y, m,
                d, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

// ---------------------------------------------------------------------------
// Subject XML files.
// ---------------------------------------------------------------------------

struct ParsedSubjectFile {
  std::string subject_id;
  std::vector<Submission> writings;
};

namespace detail {

class XmlCursor {
 public:
  explicit XmlCursor(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= text_.size(); }

  void skip_whitespace() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool try_consume(std::string_view literal) {
    if (text_.substr(pos_, literal.size()) != literal) return false;
    pos_ += literal.size();
    return true;
  }

  void expect(std::string_view literal) {
    if (!try_consume(literal)) {
      throw ParseError("expected '" + std::string(literal) + "'", pos_);
    }
  }

  // Reads element content up to (but not past) close_tag, decoding entities.
  std::string read_content(std::string_view close_tag) {
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) {
        throw ParseError("unterminated element, expected '" +
                             std::string(close_tag) + "'",
                         pos_);
      }
      const char c = text_[pos_];
      if (c == '<') {
        if (text_.substr(pos_, close_tag.size()) == close_tag) return out;
        throw ParseError("unescaped '<' in element content", pos_);
      }
      if (c == '&') {
        out.push_back(read_entity());
        continue;
      }
      out.push_back(c);
      ++pos_;
    }
  }

 private:
  char read_entity() {
    const std::size_t start = pos_;
    const std::size_t semi = text_.find(';', pos_);
    if (semi == std::string_view::npos || semi - pos_ > 8) {
      throw ParseError("malformed entity", start);
    }
    const std::string_view body = text_.substr(pos_ + 1, semi - pos_ - 1);
    pos_ = semi + 1;
    if (body == "amp") return '&';
    if (body == "lt") return '<';
    if (body == "gt") return '>';
    if (body == "quot") return '"';
    if (body == "apos") return '\'';
    if (body.size() >= 2 && body[0] == '#') {
      int value = 0;
      bool ok = false;
      if (body[1] == 'x' || body[1] == 'X') {
        for (std::size_t i = 2; i < body.size(); ++i) {
          const char h = body[i];
          int d;
          if (h >= '0' && h <= '9') d = h - '0';
          else if (h >= 'a' && h <= 'f') d = h - 'a' + 10;
          else if (h >= 'A' && h <= 'F') d = h - 'A' + 10;
          else { ok = false; break; }
          value = value * 16 + d;
          ok = true;
        }
      } else {
        for (std::size_t i = 1; i < body.size(); ++i) {
          const char h = body[i];
          if (h < '0' || h > '9') { ok = false; break; }
          value = value * 10 + (h - '0');
          ok = true;
        }
      }
      if (ok && value > 0 && value < 256) return static_cast<char>(value);
    }
    throw ParseError("unknown entity '&" + std::string(body) + ";'", start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline std::string escape_content(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

inline ParsedSubjectFile parse_subject_file(std::string_view raw) {
  detail::XmlCursor cur(raw);
  ParsedSubjectFile parsed;

  cur.skip_whitespace();
  cur.expect("<INDIVIDUAL>");
  cur.skip_whitespace();
  cur.expect("<ID>");
  parsed.subject_id = cur.read_content("</ID>");
  cur.expect("</ID>");
  if (parsed.subject_id.empty()) {
    throw ParseError("empty subject id", cur.pos());
  }

  while (true) {
    cur.skip_whitespace();
    if (cur.try_consume("</INDIVIDUAL>")) break;
    cur.expect("<WRITING>");
    cur.skip_whitespace();

    Submission sub;
    if (cur.try_consume("<TITLE>")) {
      sub.title = cur.read_content("</TITLE>");
      cur.expect("</TITLE>");
      cur.skip_whitespace();
    }
    const std::size_t date_pos = cur.pos();
    cur.expect("<DATE>");
    const std::string date = cur.read_content("</DATE>");
    cur.expect("</DATE>");
    try {
      sub.timestamp = parse_timestamp(date);
    } catch (const DataError& e) {
      throw ParseError(e.what(), date_pos);
    }
    cur.skip_whitespace();
    cur.expect("<TEXT>");
    sub.body = cur.read_content("</TEXT>");
    cur.expect("</TEXT>");
    cur.skip_whitespace();
    cur.expect("</WRITING>");
    parsed.writings.push_back(std::move(sub));
  }

  cur.skip_whitespace();
  if (!cur.at_end()) {
    throw ParseError("trailing content after </INDIVIDUAL>", cur.pos());
  }
  return parsed;
}

inline std::string write_subject_file(std::string_view subject_id,
                                      const std::vector<Submission>& writings) {
  std::string out;
  out += "<INDIVIDUAL>\n";
  out += "  <ID>";
  out += detail::escape_content(subject_id);
  out += "</ID>\n";
  for (const auto& sub : writings) {
    out += "  <WRITING>\n";
    if (!sub.title.empty()) {
      out += "    <TITLE>";
      out += detail::escape_content(sub.title);
      out += "</TITLE>\n";
    }
    out += "    <DATE>";
    out += format_timestamp(sub.timestamp);
    out += "</DATE>\n";
    out += "    <TEXT>";
    out += detail::escape_content(sub.body);
    out += "</TEXT>\n";
    out += "  </WRITING>\n";
  }
  out += "</INDIVIDUAL>\n";
  return out;
}

// ---------------------------------------------------------------------------
// Golden truth and dataset loading.
// ---------------------------------------------------------------------------

inline GoldenTruth load_golden_truth(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  GoldenTruth truth;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    std::string_view line(content.data() + start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected subject_id<TAB>label");
    }
    const std::string id(line.substr(0, tab));
    const std::string_view label = line.substr(tab + 1);
    if (id.empty() || (label != "0" && label != "1")) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": labels must be 0 or 1");
    }
    const auto [it, inserted] = truth.emplace(
        id, label == "1" ? Label::kDepressed : Label::kControl);
    if (!inserted) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": duplicate subject id '" + id + "'");
    }
  }
  if (truth.empty()) {
    throw DataError("golden truth file is empty: " + path.string());
  }
  return truth;
}

inline std::string format_golden_truth(const GoldenTruth& truth) {
  std::string out;
  for (const auto& [id, label] : truth) {
    out += id;
    out += '\t';
    out += label == Label::kDepressed ? '1' : '0';
    out += '\n';
  }
  return out;
}

struct Dataset {
  std::vector<SubjectHistory> subjects;  // sorted by subject_id
  GoldenTruth truth;
  std::vector<std::string> warnings;

  const SubjectHistory* find(std::string_view id) const {
    auto it = std::lower_bound(
        subjects.begin(), subjects.end(), id,
        [](const SubjectHistory& h, std::string_view v) {
          return h.subject_id < v;
        });
    return it != subjects.end() && it->subject_id == id ? &*it : nullptr;
  }
};

inline Dataset load_dataset(const std::filesystem::path& root) {
  Dataset ds;
  ds.truth = load_golden_truth(root / "risk_golden_truth.txt");

  std::map<std::string, SubjectHistory> by_id;
  for (const auto& [id, label] : ds.truth) {
    by_id[id].subject_id = id;
  }

  for (int chunk = 1; chunk <= kNumChunks; ++chunk) {
    const std::filesystem::path dir = root / ("chunk" + std::to_string(chunk));
    if (!std::filesystem::is_directory(dir)) {
      throw DataError("missing chunk directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".xml") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());

    const std::string suffix = "_" + std::to_string(chunk);
    for (const auto& file : files) {
      const std::string stem = file.stem().string();
      if (stem.size() <= suffix.size() ||
          stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) !=
              0) {
        throw DataError("file name does not match {subject}_" +
                        std::to_string(chunk) + ".xml: " + file.string());
      }
      const std::string name_id = stem.substr(0, stem.size() - suffix.size());

      ParsedSubjectFile parsed;
      try {
        parsed = parse_subject_file(read_text_file(file));
      } catch (const DataError& e) {
        throw DataError(file.string() + ": " + e.what());
      }
      if (parsed.subject_id != name_id) {
        throw DataError(file.string() + ": ID element '" + parsed.subject_id +
                        "' does not match file name");
      }
      auto it = by_id.find(parsed.subject_id);
      if (it == by_id.end()) {
        throw DataError(file.string() + ": subject '" + parsed.subject_id +
                        "' is not in the golden truth");
      }

      bool ordered = true;
      for (std::size_t i = 1; i < parsed.writings.size(); ++i) {
        if (parsed.writings[i].timestamp < parsed.writings[i - 1].timestamp) {
          ordered = false;
          break;
        }
      }
      if (!ordered) {
        std::stable_sort(parsed.writings.begin(), parsed.writings.end(),
                         [](const Submission& a, const Submission& b) {
                           return a.timestamp < b.timestamp;
                         });
        ds.warnings.push_back("reordered out-of-order submissions in " +
                              file.string());
      }
      it->second.chunks[static_cast<std::size_t>(chunk - 1)] =
          std::move(parsed.writings);
    }
  }

  for (auto& [id, history] : by_id) {
    if (history.total_submissions() == 0) {
      ds.warnings.push_back("subject '" + id + "' has no writings");
    }
    ds.subjects.push_back(std::move(history));
  }
  return ds;
}

inline void write_dataset(const std::filesystem::path& root,
                          const std::vector<SubjectHistory>& subjects,
                          const GoldenTruth& truth) {
  for (int chunk = 1; chunk <= kNumChunks; ++chunk) {
    std::filesystem::create_directories(root /
                                        ("chunk" + std::to_string(chunk)));
  }
  for (const auto& subject : subjects) {
    for (int chunk = 1; chunk <= kNumChunks; ++chunk) {
      const auto& writings = subject.chunks[static_cast<std::size_t>(chunk - 1)];
      const std::filesystem::path file =
          root / ("chunk" + std::to_string(chunk)) /
          (subject.subject_id + "_" + std::to_string(chunk) + ".xml");
      write_text_file(file, write_subject_file(subject.subject_id, writings));
    }
  }
  write_text_file(root / "risk_golden_truth.txt", format_golden_truth(truth));
}

// ---------------------------------------------------------------------------
// Cumulative views: everything a subject wrote in chunks 0..week, the unit
// the weekly decision loop scores.
// ---------------------------------------------------------------------------

struct CumulativeView {
  std::string_view subject_id;
  int week = 0;  // 0-based
  std::vector<const Submission*> submissions;

  std::size_t submission_count() const { return submissions.size(); }
};

inline CumulativeView cumulative_view(const SubjectHistory& history,
                                      int week) {
  if (week < 0 || week >= kNumChunks) {
    throw UsageError("week out of range: " + std::to_string(week));
  }
  CumulativeView view;
  view.subject_id = history.subject_id;
  view.week = week;
  for (int c = 0; c <= week; ++c) {
    for (const auto& sub : history.chunks[static_cast<std::size_t>(c)]) {
      view.submissions.push_back(&sub);
    }
  }
  return view;
}

inline std::string submission_text(const Submission& sub) {
  std::string text;
  if (!sub.title.empty()) {
    text += sub.title;
    text += '\n';
  }
  text += sub.body;
  text += '\n';
  return text;
}

inline std::string gather_text(const CumulativeView& view) {
  std::string text;
  for (const Submission* sub : view.submissions) {
    text += submission_text(*sub);
  }
  return text;
}

// Keeps every positive subject and at most ratio-times-as-many controls,
// chosen by a seeded shuffle; original subject order is preserved.
inline std::vector<SubjectHistory> downsample_controls(
    const std::vector<SubjectHistory>& subjects, const GoldenTruth& truth,
    double ratio, std::uint64_t seed) {
  if (ratio <= 0.0) {
    throw UsageError("downsample ratio must be positive");
  }
  auto label_of = [&](const std::string& id) {
    auto it = truth.find(id);
    if (it == truth.end()) {
      throw DataError("subject '" + id + "' is not in the golden truth");
    }
    return it->second;
  };

  std::size_t positives = 0;
  std::vector<std::size_t> control_idx;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (label_of(subjects[i].subject_id) == Label::kDepressed) {
      ++positives;
    } else {
      control_idx.push_back(i);
    }
  }
  if (positives == 0) {
    throw DataError("cannot downsample: no positive subjects present");
  }
  const std::size_t target =
      static_cast<std::size_t>(ratio * static_cast<double>(positives));
  if (control_idx.size() <= target) {
    return subjects;
  }

  Rng rng(Rng::derive(seed, "downsample"));
  rng.shuffle(control_idx);
  control_idx.resize(target);
  std::vector<bool> keep(subjects.size(), false);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (label_of(subjects[i].subject_id) == Label::kDepressed) keep[i] = true;
  }
  for (std::size_t idx : control_idx) keep[idx] = true;

  std::vector<SubjectHistory> out;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (keep[i]) out.push_back(subjects[i]);
  }
  return out;
}

}  // namespace earlyrisk::corpus
