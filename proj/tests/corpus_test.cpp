#include <algorithm>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "earlyrisk/corpus.hpp"

namespace fs = std::filesystem;
using namespace earlyrisk;
using namespace earlyrisk::corpus;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() /
                       ("earlyrisk_corpus_" + tag + "_" +
                        std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Submission make_sub(std::string title, std::int64_t ts, std::string body) {
  Submission s;
  s.title = std::move(title);
  s.timestamp = ts;
  s.body = std::move(body);
  return s;
}

// A small two-subject dataset exercising titles, comments, and entities.
std::vector<SubjectHistory> tiny_subjects() {
  SubjectHistory a;
  a.subject_id = "subj_a";
  a.chunks[0] = {make_sub("First post", 1483228800, "sleep & worry <badly>"),
                 make_sub("", 1483232400, "a comment body")};
  a.chunks[3] = {make_sub("Later", 1483236000, "more text")};
  SubjectHistory b;
  b.subject_id = "subj_b";
  b.chunks[9] = {make_sub("", 1483239600, "only one comment at the end")};
  return {a, b};
}

GoldenTruth tiny_truth() {
  return {{"subj_a", Label::kDepressed}, {"subj_b", Label::kControl}};
}

}  // namespace

TEST_CASE("timestamps parse to epoch seconds", "[corpus]") {
  CHECK(parse_timestamp("1970-01-01 00:00:00") == 0);
  CHECK(parse_timestamp("1970-01-02 00:00:00") == 86400);
  CHECK(parse_timestamp("2017-01-01 00:00:00") == 1483228800);
  CHECK(parse_timestamp("2016-02-29 12:00:00") == 1456747200);
  CHECK(parse_timestamp("2000-02-29 23:59:59") == 951868799);
  CHECK(parse_timestamp("1969-12-31 23:59:59") == -1);
  CHECK(parse_timestamp("2020-12-31 00:00:01") == 1609372801);
  CHECK(parse_timestamp("1999-03-07 18:30:15") == 920831415);
}

TEST_CASE("timestamps round-trip through formatting", "[corpus]") {
  for (const char* s :
       {"1970-01-01 00:00:00", "2017-06-15 09:30:00", "2016-02-29 12:00:00",
        "1969-12-31 23:59:59", "1999-03-07 18:30:15", "2024-02-29 00:00:00"}) {
    CAPTURE(s);
    CHECK(format_timestamp(parse_timestamp(s)) == s);
  }
  CHECK(format_timestamp(0) == "1970-01-01 00:00:00");
  CHECK(format_timestamp(-1) == "1969-12-31 23:59:59");
}

TEST_CASE("timestamp parsing rejects malformed inputs", "[corpus]") {
  for (const char* s :
       {"2017-01-01", "2017/01/01 00:00:00", "2017-13-01 00:00:00",
        "2017-00-10 00:00:00", "2017-02-29 00:00:00", "1900-02-29 00:00:00",
        "2017-04-31 00:00:00", "2017-01-01 24:00:00", "2017-01-01 00:60:00",
        "2017-01-01 00:00:60", "2017-01-01T00:00:00", "17-01-01 00:00:00",
        "2017-01-0a 00:00:00", ""}) {
    CAPTURE(s);
    CHECK_THROWS_AS(parse_timestamp(s), DataError);
  }
  // Leap years divisible by 400 are fine.
  CHECK_NOTHROW(parse_timestamp("2000-02-29 00:00:00"));
}

TEST_CASE("subject files round-trip with escaping", "[corpus]") {
  const std::vector<Submission> writings = {
      make_sub("Tough week <again> & counting", 1483228800,
               "body with &amp; raw > and <angle> brackets"),
      make_sub("", 1483232400, "comment\nwith\nnewlines"),
  };
  const std::string xml = write_subject_file("subject one", writings);
  const ParsedSubjectFile parsed = parse_subject_file(xml);
  CHECK(parsed.subject_id == "subject one");
  REQUIRE(parsed.writings.size() == 2);
  CHECK(parsed.writings[0] == writings[0]);
  CHECK(parsed.writings[1] == writings[1]);
  CHECK(parsed.writings[1].is_comment());
  CHECK_FALSE(parsed.writings[0].is_comment());
}

TEST_CASE("subject file parser decodes entities", "[corpus]") {
  const ParsedSubjectFile parsed = parse_subject_file(
      "<INDIVIDUAL><ID>s1</ID><WRITING>"
      "<TITLE>a &lt;b&gt; &amp; c &quot;d&quot; &apos;e&apos;</TITLE>"
      "<DATE>2017-01-01 00:00:00</DATE>"
      "<TEXT>num &#65; hex &#x41;</TEXT>"
      "</WRITING></INDIVIDUAL>");
  REQUIRE(parsed.writings.size() == 1);
  CHECK(parsed.writings[0].title == "a <b> & c \"d\" 'e'");
  CHECK(parsed.writings[0].body == "num A hex A");
}

TEST_CASE("subject file parser reports the failing byte", "[corpus]") {
  const std::string good =
      "<INDIVIDUAL><ID>s1</ID><WRITING>"
      "<DATE>2017-01-01 00:00:00</DATE>"
      "<TEXT>ok</TEXT></WRITING></INDIVIDUAL>";
  CHECK_NOTHROW(parse_subject_file(good));

  // Missing <DATE> where one is required.
  const std::string missing_date =
      "<INDIVIDUAL><ID>s1</ID><WRITING><TEXT>ok</TEXT></WRITING></INDIVIDUAL>";
  try {
    parse_subject_file(missing_date);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() == std::string("<INDIVIDUAL><ID>s1</ID><WRITING>")
                                 .size());
  }

  CHECK_THROWS_AS(parse_subject_file("<INDIVIDUAL><ID></ID></INDIVIDUAL>"),
                  ParseError);
  CHECK_THROWS_AS(parse_subject_file("nonsense"), ParseError);
  CHECK_THROWS_AS(
      parse_subject_file("<INDIVIDUAL><ID>s1</ID></INDIVIDUAL>extra"),
      ParseError);
  // Unescaped '<' inside content.
  CHECK_THROWS_AS(
      parse_subject_file("<INDIVIDUAL><ID>s1</ID><WRITING>"
                         "<DATE>2017-01-01 00:00:00</DATE>"
                         "<TEXT>a < b</TEXT></WRITING></INDIVIDUAL>"),
      ParseError);
  // Bad timestamp inside a writing.
  CHECK_THROWS_AS(
      parse_subject_file("<INDIVIDUAL><ID>s1</ID><WRITING>"
                         "<DATE>yesterday</DATE>"
                         "<TEXT>ok</TEXT></WRITING></INDIVIDUAL>"),
      ParseError);
  // Unknown entity.
  CHECK_THROWS_AS(
      parse_subject_file("<INDIVIDUAL><ID>s1</ID><WRITING>"
                         "<DATE>2017-01-01 00:00:00</DATE>"
                         "<TEXT>&bogus;</TEXT></WRITING></INDIVIDUAL>"),
      ParseError);
}

TEST_CASE("golden truth parses and formats canonically", "[corpus]") {
  const fs::path dir = temp_dir("truth");
  const fs::path file = dir / "risk_golden_truth.txt";
  write_text_file(file, "s2\t0\r\ns1\t1\n\ns3\t0\n");
  const GoldenTruth truth = load_golden_truth(file);
  REQUIRE(truth.size() == 3);
  CHECK(truth.at("s1") == Label::kDepressed);
  CHECK(truth.at("s2") == Label::kControl);
  CHECK(truth.at("s3") == Label::kControl);
  // Canonical output is sorted, tab-separated, newline-terminated.
  CHECK(format_golden_truth(truth) == "s1\t1\ns2\t0\ns3\t0\n");

  write_text_file(file, "s1 1\n");
  CHECK_THROWS_AS(load_golden_truth(file), DataError);
  write_text_file(file, "s1\t2\n");
  CHECK_THROWS_AS(load_golden_truth(file), DataError);
  write_text_file(file, "s1\t1\ns1\t0\n");
  CHECK_THROWS_AS(load_golden_truth(file), DataError);
  write_text_file(file, "\n\n");
  CHECK_THROWS_AS(load_golden_truth(file), DataError);
  fs::remove_all(dir);
}

TEST_CASE("datasets round-trip through the chunked layout", "[corpus]") {
  const fs::path dir = temp_dir("roundtrip");
  write_dataset(dir, tiny_subjects(), tiny_truth());

  // Layout: chunk1..chunk10 plus the golden truth file.
  for (int c = 1; c <= kNumChunks; ++c) {
    CHECK(fs::is_directory(dir / ("chunk" + std::to_string(c))));
  }
  CHECK(fs::is_regular_file(dir / "risk_golden_truth.txt"));
  CHECK(fs::is_regular_file(dir / "chunk1" / "subj_a_1.xml"));
  CHECK(fs::is_regular_file(dir / "chunk10" / "subj_b_10.xml"));

  const Dataset ds = load_dataset(dir);
  CHECK(ds.warnings.empty());
  CHECK(ds.truth == tiny_truth());
  REQUIRE(ds.subjects.size() == 2);
  CHECK(ds.subjects[0].subject_id == "subj_a");
  CHECK(ds.subjects[1].subject_id == "subj_b");
  const auto expected = tiny_subjects();
  for (int c = 0; c < kNumChunks; ++c) {
    CHECK(ds.subjects[0].chunks[c] == expected[0].chunks[c]);
    CHECK(ds.subjects[1].chunks[c] == expected[1].chunks[c]);
  }
  CHECK(ds.find("subj_a") == &ds.subjects[0]);
  CHECK(ds.find("subj_b") == &ds.subjects[1]);
  CHECK(ds.find("missing") == nullptr);
  fs::remove_all(dir);
}

TEST_CASE("dataset loader sorts out-of-order submissions with a warning",
          "[corpus]") {
  const fs::path dir = temp_dir("ooo");
  auto subjects = tiny_subjects();
  write_dataset(dir, subjects, tiny_truth());
  // Rewrite subj_a chunk1 with its two writings swapped.
  auto swapped = subjects[0].chunks[0];
  std::swap(swapped[0], swapped[1]);
  write_text_file(dir / "chunk1" / "subj_a_1.xml",
                  write_subject_file("subj_a", swapped));

  const Dataset ds = load_dataset(dir);
  REQUIRE(ds.warnings.size() == 1);
  CHECK(ds.warnings[0].find("reordered") != std::string::npos);
  CHECK(ds.warnings[0].find("subj_a_1.xml") != std::string::npos);
  // Sorted back into timestamp order.
  CHECK(ds.subjects[0].chunks[0] == subjects[0].chunks[0]);
  fs::remove_all(dir);
}

TEST_CASE("dataset loader flags structural problems", "[corpus]") {
  const fs::path dir = temp_dir("structure");
  write_dataset(dir, tiny_subjects(), tiny_truth());

  SECTION("missing chunk directory") {
    fs::remove_all(dir / "chunk5");
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  SECTION("file name does not match its chunk") {
    fs::rename(dir / "chunk1" / "subj_a_1.xml",
               dir / "chunk1" / "subj_a_2.xml");
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  SECTION("ID element disagrees with the file name") {
    write_text_file(dir / "chunk1" / "subj_a_1.xml",
                    write_subject_file("subj_zzz", {}));
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  SECTION("subject missing from the golden truth") {
    write_text_file(dir / "chunk1" / "ghost_1.xml",
                    write_subject_file("ghost", {}));
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }
  SECTION("subject with no writings anywhere warns") {
    GoldenTruth truth = tiny_truth();
    truth.emplace("subj_c", Label::kControl);
    write_text_file(dir / "risk_golden_truth.txt",
                    format_golden_truth(truth));
    const Dataset ds = load_dataset(dir);
    REQUIRE(ds.warnings.size() == 1);
    CHECK(ds.warnings[0].find("subj_c") != std::string::npos);
    REQUIRE(ds.subjects.size() == 3);
    CHECK(ds.subjects[2].total_submissions() == 0);
  }
  fs::remove_all(dir);
}

TEST_CASE("cumulative views accumulate chunks through a week", "[corpus]") {
  const auto subjects = tiny_subjects();
  const SubjectHistory& a = subjects[0];

  const CumulativeView w0 = cumulative_view(a, 0);
  CHECK(w0.submission_count() == 2);
  const CumulativeView w2 = cumulative_view(a, 2);
  CHECK(w2.submission_count() == 2);
  const CumulativeView w3 = cumulative_view(a, 3);
  CHECK(w3.submission_count() == 3);
  const CumulativeView w9 = cumulative_view(a, 9);
  CHECK(w9.submission_count() == 3);
  CHECK(w9.subject_id == "subj_a");

  CHECK_THROWS_AS(cumulative_view(a, -1), UsageError);
  CHECK_THROWS_AS(cumulative_view(a, kNumChunks), UsageError);

  CHECK(gather_text(w0) ==
        "First post\nsleep & worry <badly>\na comment body\n");
  CHECK(gather_text(w3) ==
        "First post\nsleep & worry <badly>\na comment body\n"
        "Later\nmore text\n");
  // Titles are folded in only when present.
  CHECK(submission_text(a.chunks[0][1]) == "a comment body\n");
}

TEST_CASE("control downsampling keeps positives and the requested ratio",
          "[corpus]") {
  std::vector<SubjectHistory> subjects;
  GoldenTruth truth;
  for (int i = 0; i < 50; ++i) {
    SubjectHistory h;
    char id[16];
    std::snprintf(id, sizeof(id), "s%02d", i);
    h.subject_id = id;
    subjects.push_back(h);
    truth.emplace(id, i < 10 ? Label::kDepressed : Label::kControl);
  }

  const auto kept = downsample_controls(subjects, truth, 2.0, 7);
  std::size_t positives = 0, controls = 0;
  for (const auto& h : kept) {
    (truth.at(h.subject_id) == Label::kDepressed ? positives : controls)++;
  }
  CHECK(positives == 10);
  CHECK(controls == 20);
  // Original order is preserved.
  CHECK(std::is_sorted(kept.begin(), kept.end(),
                       [](const SubjectHistory& x, const SubjectHistory& y) {
                         return x.subject_id < y.subject_id;
                       }));
  // Deterministic for a fixed seed; different seeds pick different controls.
  auto ids = [](const std::vector<SubjectHistory>& v) {
    std::vector<std::string> out;
    for (const auto& h : v) out.push_back(h.subject_id);
    return out;
  };
  CHECK(ids(downsample_controls(subjects, truth, 2.0, 7)) == ids(kept));
  CHECK(ids(downsample_controls(subjects, truth, 2.0, 8)) != ids(kept));

  // Already at or below the ratio: unchanged.
  const auto untouched = downsample_controls(subjects, truth, 4.0, 7);
  CHECK(untouched.size() == subjects.size());

  CHECK_THROWS_AS(downsample_controls(subjects, truth, 0.0, 7), UsageError);
  CHECK_THROWS_AS(downsample_controls(subjects, truth, -1.0, 7), UsageError);

  // No positives at all is a data error.
  GoldenTruth all_control;
  for (const auto& h : subjects) {
    all_control.emplace(h.subject_id, Label::kControl);
  }
  CHECK_THROWS_AS(downsample_controls(subjects, all_control, 2.0, 7),
                  DataError);

  // A subject absent from the truth is a data error.
  std::vector<SubjectHistory> extra = subjects;
  SubjectHistory ghost;
  ghost.subject_id = "ghost";
  extra.push_back(ghost);
  CHECK_THROWS_AS(downsample_controls(extra, truth, 2.0, 7), DataError);
}
