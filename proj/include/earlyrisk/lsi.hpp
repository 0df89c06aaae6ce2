#pragma once

// Latent semantic indexing over tf-idf weighted term-document matrices.
// Terms are rows, documents are columns; a truncated SVD A ~ U S V^T gives
// the topic space, and new documents are folded in as e = S^-1 U^T q, where
// q is the document's tf-idf column. The weighting uses raw term counts and
// idf(t) = ln(D / df(t)), both taken from the vocabulary that produced the
// counts, so weights are non-negative by construction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "earlyrisk/io.hpp"
#include "earlyrisk/svd.hpp"
#include "earlyrisk/textpipe.hpp"

namespace earlyrisk::lsi {

struct TermDocMatrix {
  linalg::SparseMatrix matrix;           // vocab_size x kept documents
  std::vector<double> idf;               // per vocabulary index
  std::vector<std::int32_t> kept_docs;   // original indices of kept columns
  std::int32_t dropped_docs = 0;         // all-zero columns removed
};

inline std::vector<double> compute_idf(const textpipe::Vocabulary& vocab) {
  std::vector<double> idf(vocab.size(), 0.0);
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    const std::int64_t df = vocab.doc_frequency[t];
    if (df <= 0 || df > vocab.total_docs) {
      throw DataError("vocabulary document frequency out of range for term '" +
                      vocab.terms[t] + "'");
    }
    idf[t] = std::log(static_cast<double>(vocab.total_docs) /
                      static_cast<double>(df));
  }
  return idf;
}

inline TermDocMatrix build_tfidf_matrix(
    const std::vector<textpipe::SparseCounts>& documents,
    const textpipe::Vocabulary& vocab) {
  if (documents.empty()) {
    throw DataError("cannot build a term-document matrix from zero documents");
  }
  TermDocMatrix tdm;
  tdm.idf = compute_idf(vocab);

  std::vector<std::vector<std::pair<std::int32_t, double>>> columns;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    std::vector<std::pair<std::int32_t, double>> col;
    for (const auto& [index, count] : documents[d].entries) {
      if (index < 0 || static_cast<std::size_t>(index) >= vocab.size()) {
        throw DataError("document term index outside the vocabulary");
      }
      const double w =
          static_cast<double>(count) * tdm.idf[static_cast<std::size_t>(index)];
      if (w != 0.0) col.emplace_back(index, w);
    }
    if (col.empty()) {
      ++tdm.dropped_docs;
      continue;
    }
    tdm.kept_docs.push_back(static_cast<std::int32_t>(d));
    columns.push_back(std::move(col));
  }
  if (columns.empty()) {
    throw DataError(
        "all documents are empty under the vocabulary; nothing to factorize");
  }
  tdm.matrix = linalg::SparseMatrix::from_columns(
      static_cast<std::int32_t>(vocab.size()), columns);
  return tdm;
}

struct LsiModel {
  std::int32_t vocab_size = 0;
  std::int32_t topic_count = 0;
  std::vector<double> singular_values;  // descending
  linalg::DenseMatrix term_topics;      // vocab_size x topic_count
  std::vector<double> idf;              // per vocabulary index
  std::uint64_t config_hash = 0;

  // e = S^-1 U^T q with q_t = count_t * idf_t. Topics whose singular value
  // has collapsed to zero contribute nothing.
  std::vector<double> fold_in(const textpipe::SparseCounts& counts) const {
    std::vector<double> e(static_cast<std::size_t>(topic_count), 0.0);
    for (const auto& [index, count] : counts.entries) {
      if (index < 0 || index >= vocab_size) {
        throw DataError("fold-in term index outside the vocabulary");
      }
      const double q =
          static_cast<double>(count) * idf[static_cast<std::size_t>(index)];
      if (q == 0.0) continue;
      const double* u = term_topics.row(index);
      for (std::int32_t j = 0; j < topic_count; ++j) {
        e[static_cast<std::size_t>(j)] += u[j] * q;
      }
    }
    const double floor =
        singular_values.empty()
            ? 0.0
            : std::max(singular_values[0], 1e-300) * 1e-14;
    for (std::int32_t j = 0; j < topic_count; ++j) {
      const double s = singular_values[static_cast<std::size_t>(j)];
      e[static_cast<std::size_t>(j)] = s > floor ? e[static_cast<std::size_t>(j)] / s : 0.0;
    }
    return e;
  }
};

struct FitOptions {
  std::int32_t topics = 128;
  linalg::SvdOptions svd;
};

inline LsiModel fit_lsi(const TermDocMatrix& tdm, const FitOptions& opts) {
  const std::int32_t max_rank =
      std::min(tdm.matrix.rows, tdm.matrix.cols);
  if (opts.topics < 1 || opts.topics > max_rank) {
    throw DataError("topic count k=" + std::to_string(opts.topics) +
                    " outside [1, min(terms, documents)=" +
                    std::to_string(max_rank) + "]");
  }
  const linalg::TruncatedSvd svd =
      linalg::truncated_svd(tdm.matrix, opts.topics, opts.svd);

  LsiModel model;
  model.vocab_size = tdm.matrix.rows;
  model.topic_count = opts.topics;
  model.singular_values = svd.singular_values;
  model.term_topics = svd.u;
  model.idf = tdm.idf;
  return model;
}

// Highest-|loading| terms per topic, ties broken toward the lower index.
inline std::vector<std::vector<std::pair<std::string, double>>>
top_terms_per_topic(const LsiModel& model, const textpipe::Vocabulary& vocab,
                    std::size_t n) {
  if (static_cast<std::size_t>(model.vocab_size) != vocab.size()) {
    throw DataError("model and vocabulary sizes do not match");
  }
  std::vector<std::vector<std::pair<std::string, double>>> out;
  for (std::int32_t j = 0; j < model.topic_count; ++j) {
    std::vector<std::int32_t> idx(static_cast<std::size_t>(model.vocab_size));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::int32_t a, std::int32_t b) {
                       return std::abs(model.term_topics.at(a, j)) >
                              std::abs(model.term_topics.at(b, j));
                     });
    std::vector<std::pair<std::string, double>> topic;
    for (std::size_t i = 0; i < n && i < idx.size(); ++i) {
      topic.emplace_back(vocab.terms[static_cast<std::size_t>(idx[i])],
                         model.term_topics.at(idx[i], j));
    }
    out.push_back(std::move(topic));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization (binary, little-endian, bit-exact round trip).
// ---------------------------------------------------------------------------

inline constexpr std::string_view kLsiMagic = "ERLSIMD1";

inline void save_model(const std::filesystem::path& path,
                       const LsiModel& model) {
  BinaryWriter w(path);
  w.bytes(kLsiMagic.data(), kLsiMagic.size());
  w.u64(model.config_hash);
  w.u32(static_cast<std::uint32_t>(model.vocab_size));
  w.u32(static_cast<std::uint32_t>(model.topic_count));
  w.f64_array(model.singular_values);
  w.f64_array(model.term_topics.data);
  w.f64_array(model.idf);
}

inline LsiModel load_model(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.require_magic(kLsiMagic);
  LsiModel model;
  model.config_hash = r.u64();
  model.vocab_size = static_cast<std::int32_t>(r.u32());
  model.topic_count = static_cast<std::int32_t>(r.u32());
  model.singular_values = r.f64_array();
  model.term_topics = linalg::DenseMatrix(model.vocab_size, model.topic_count);
  model.term_topics.data = r.f64_array();
  model.idf = r.f64_array();
  if (model.singular_values.size() !=
          static_cast<std::size_t>(model.topic_count) ||
      model.term_topics.data.size() !=
          static_cast<std::size_t>(model.vocab_size) *
              static_cast<std::size_t>(model.topic_count) ||
      model.idf.size() != static_cast<std::size_t>(model.vocab_size)) {
    throw DataError("inconsistent model dimensions in " + path.string());
  }
  return model;
}

}  // namespace earlyrisk::lsi
