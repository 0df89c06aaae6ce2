#pragma once

// Minimal dense/sparse linear algebra plus a deterministic randomized
// truncated SVD. The factorization runs blocked subspace iteration (random
// range finder, alternating orthonormalized power steps) and extracts Ritz
// values from the small Gram matrix B B^T, B = Q^T A, with a cyclic Jacobi
// eigensolver. Iteration continues until the leading k Ritz values are
// stationary to a relative tolerance, so accuracy is limited by conditioning
// rather than by a fixed iteration count; failure to converge is an error,
// never a silently degraded model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "earlyrisk/io.hpp"
#include "earlyrisk/rng.hpp"

namespace earlyrisk::linalg {

// ---------------------------------------------------------------------------
// Dense row-major matrix, just enough for the factorization code and tests.
// ---------------------------------------------------------------------------

struct DenseMatrix {
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<double> data;  // row-major

  DenseMatrix() = default;
  DenseMatrix(std::int32_t r, std::int32_t c)
      : rows(r), cols(c),
        data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  double& at(std::int32_t i, std::int32_t j) {
    return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(j)];
  }
  double at(std::int32_t i, std::int32_t j) const {
    return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(j)];
  }
  double* row(std::int32_t i) {
    return data.data() +
           static_cast<std::size_t>(i) * static_cast<std::size_t>(cols);
  }
  const double* row(std::int32_t i) const {
    return data.data() +
           static_cast<std::size_t>(i) * static_cast<std::size_t>(cols);
  }
};

// ---------------------------------------------------------------------------
// Sparse matrix in compressed-sparse-column form.
// ---------------------------------------------------------------------------

struct SparseMatrix {
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<std::int64_t> col_ptr;  // size cols + 1
  std::vector<std::int32_t> row_idx;
  std::vector<double> values;

  // Build from per-column (row, value) entries; entries need not be sorted.
  static SparseMatrix from_columns(
      std::int32_t rows,
      const std::vector<std::vector<std::pair<std::int32_t, double>>>&
          columns) {
    SparseMatrix m;
    m.rows = rows;
    m.cols = static_cast<std::int32_t>(columns.size());
    m.col_ptr.assign(static_cast<std::size_t>(m.cols) + 1, 0);
    std::size_t nnz = 0;
    for (const auto& col : columns) nnz += col.size();
    m.row_idx.reserve(nnz);
    m.values.reserve(nnz);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto sorted = columns[c];
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [r, v] : sorted) {
        if (r < 0 || r >= rows) {
          throw DataError("sparse entry row index out of range");
        }
        m.row_idx.push_back(r);
        m.values.push_back(v);
      }
      m.col_ptr[c + 1] = static_cast<std::int64_t>(m.row_idx.size());
    }
    return m;
  }

  std::size_t nonzeros() const { return values.size(); }

  // Y (rows x l) = A * X (cols x l)
  void multiply(const DenseMatrix& x, DenseMatrix& y) const {
    y = DenseMatrix(rows, x.cols);
    for (std::int32_t c = 0; c < cols; ++c) {
      const double* xr = x.row(c);
      for (std::int64_t e = col_ptr[static_cast<std::size_t>(c)];
           e < col_ptr[static_cast<std::size_t>(c) + 1]; ++e) {
        const double v = values[static_cast<std::size_t>(e)];
        double* yr = y.row(row_idx[static_cast<std::size_t>(e)]);
        for (std::int32_t j = 0; j < x.cols; ++j) yr[j] += v * xr[j];
      }
    }
  }

  // Z (cols x l) = A^T * Y (rows x l)
  void multiply_transpose(const DenseMatrix& y, DenseMatrix& z) const {
    z = DenseMatrix(cols, y.cols);
    for (std::int32_t c = 0; c < cols; ++c) {
      double* zr = z.row(c);
      for (std::int64_t e = col_ptr[static_cast<std::size_t>(c)];
           e < col_ptr[static_cast<std::size_t>(c) + 1]; ++e) {
        const double v = values[static_cast<std::size_t>(e)];
        const double* yr = y.row(row_idx[static_cast<std::size_t>(e)]);
        for (std::int32_t j = 0; j < y.cols; ++j) zr[j] += v * yr[j];
      }
    }
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows, cols);
    for (std::int32_t c = 0; c < cols; ++c) {
      for (std::int64_t e = col_ptr[static_cast<std::size_t>(c)];
           e < col_ptr[static_cast<std::size_t>(c) + 1]; ++e) {
        d.at(row_idx[static_cast<std::size_t>(e)], c) =
            values[static_cast<std::size_t>(e)];
      }
    }
    return d;
  }
};

// ---------------------------------------------------------------------------
// Building blocks.
// ---------------------------------------------------------------------------

namespace detail {

inline double column_dot(const DenseMatrix& m, std::int32_t a,
                         std::int32_t b) {
  double s = 0.0;
  for (std::int32_t i = 0; i < m.rows; ++i) s += m.at(i, a) * m.at(i, b);
  return s;
}

// Modified Gram-Schmidt with a second re-orthogonalization sweep. Columns
// that collapse (rank deficiency) are replaced by fresh seeded Gaussian
// vectors so the basis always has full column rank.
inline void orthonormalize_columns(DenseMatrix& m, Rng& rng) {
  for (std::int32_t j = 0; j < m.cols; ++j) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (int sweep = 0; sweep < 2; ++sweep) {
        for (std::int32_t i = 0; i < j; ++i) {
          const double r = column_dot(m, j, i);
          for (std::int32_t row = 0; row < m.rows; ++row) {
            m.at(row, j) -= r * m.at(row, i);
          }
        }
      }
      const double norm = std::sqrt(column_dot(m, j, j));
      if (norm > 1e-150) {
        for (std::int32_t row = 0; row < m.rows; ++row) m.at(row, j) /= norm;
        break;
      }
      if (attempt == 63) {
        throw DataError("orthonormalization failed: matrix rank collapsed");
      }
      for (std::int32_t row = 0; row < m.rows; ++row) {
        m.at(row, j) = rng.next_gaussian();
      }
    }
  }
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix. s is destroyed;
// on return eigvecs columns hold eigenvectors and eigvals is descending.
inline void jacobi_eigh(DenseMatrix s, DenseMatrix& eigvecs,
                        std::vector<double>& eigvals) {
  const std::int32_t n = s.rows;
  eigvecs = DenseMatrix(n, n);
  for (std::int32_t i = 0; i < n; ++i) eigvecs.at(i, i) = 1.0;

  double frob = 0.0;
  for (double v : s.data) frob += v * v;
  frob = std::sqrt(frob);
  const double off_target = std::max(frob, 1e-300) * 1e-15;

  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (std::int32_t p = 0; p < n; ++p) {
      for (std::int32_t q = p + 1; q < n; ++q) {
        off += 2.0 * s.at(p, q) * s.at(p, q);
      }
    }
    if (std::sqrt(off) <= off_target) break;

    for (std::int32_t p = 0; p < n; ++p) {
      for (std::int32_t q = p + 1; q < n; ++q) {
        const double apq = s.at(p, q);
        if (std::abs(apq) <= off_target / (static_cast<double>(n) * n)) {
          continue;
        }
        const double theta = (s.at(q, q) - s.at(p, p)) / (2.0 * apq);
        const double t =
            (theta >= 0 ? 1.0 : -1.0) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;

        for (std::int32_t i = 0; i < n; ++i) {
          const double sip = s.at(i, p);
          const double siq = s.at(i, q);
          s.at(i, p) = c * sip - sn * siq;
          s.at(i, q) = sn * sip + c * siq;
        }
        for (std::int32_t i = 0; i < n; ++i) {
          const double spi = s.at(p, i);
          const double sqi = s.at(q, i);
          s.at(p, i) = c * spi - sn * sqi;
          s.at(q, i) = sn * spi + c * sqi;
        }
        for (std::int32_t i = 0; i < n; ++i) {
          const double vip = eigvecs.at(i, p);
          const double viq = eigvecs.at(i, q);
          eigvecs.at(i, p) = c * vip - sn * viq;
          eigvecs.at(i, q) = sn * vip + c * viq;
        }
      }
    }
  }

  double final_off = 0.0;
  for (std::int32_t p = 0; p < n; ++p) {
    for (std::int32_t q = p + 1; q < n; ++q) {
      final_off += 2.0 * s.at(p, q) * s.at(p, q);
    }
  }
  if (std::sqrt(final_off) > std::max(frob, 1e-300) * 1e-10) {
    throw DataError("jacobi eigensolver failed to converge");
  }

  eigvals.resize(static_cast<std::size_t>(n));
  std::vector<std::int32_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (std::int32_t i = 0; i < n; ++i) {
    eigvals[static_cast<std::size_t>(i)] = s.at(i, i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) {
                     return eigvals[static_cast<std::size_t>(a)] >
                            eigvals[static_cast<std::size_t>(b)];
                   });

  DenseMatrix sorted_vecs(n, n);
  std::vector<double> sorted_vals(static_cast<std::size_t>(n));
  for (std::int32_t j = 0; j < n; ++j) {
    const std::int32_t src = order[static_cast<std::size_t>(j)];
    sorted_vals[static_cast<std::size_t>(j)] =
        eigvals[static_cast<std::size_t>(src)];
    for (std::int32_t i = 0; i < n; ++i) {
      sorted_vecs.at(i, j) = eigvecs.at(i, src);
    }
  }
  eigvecs = std::move(sorted_vecs);
  eigvals = std::move(sorted_vals);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Truncated SVD.
// ---------------------------------------------------------------------------

struct SvdOptions {
  int oversample = 16;
  int min_iters = 6;
  int max_iters = 300;
  double tol = 1e-13;  // relative stationarity of the leading k Ritz values
  std::uint64_t seed = 0x9e3779b97f4a7c15ull;
};

struct TruncatedSvd {
  std::int32_t k = 0;
  std::vector<double> singular_values;  // descending, size k
  DenseMatrix u;                        // rows x k
  DenseMatrix v;                        // cols x k (zero column where sigma ~ 0)
  int iterations = 0;
};

inline TruncatedSvd truncated_svd(const SparseMatrix& a, std::int32_t k,
                                  const SvdOptions& opts = {}) {
  const std::int32_t max_rank = std::min(a.rows, a.cols);
  if (k < 1 || k > max_rank) {
    throw DataError("svd rank k=" + std::to_string(k) +
                    " outside [1, min(rows, cols)=" +
                    std::to_string(max_rank) + "]");
  }
  const std::int32_t l = std::min<std::int32_t>(
      k + std::max(0, opts.oversample), max_rank);

  Rng rng(opts.seed);

  // Range finder: Q spans A * G for a seeded Gaussian G.
  DenseMatrix g(a.cols, l);
  for (auto& v : g.data) v = rng.next_gaussian();
  DenseMatrix q;
  a.multiply(g, q);
  detail::orthonormalize_columns(q, rng);

  std::vector<double> sigma(static_cast<std::size_t>(k), 0.0);
  std::vector<double> prev(static_cast<std::size_t>(k), -1.0);
  DenseMatrix eigvecs;
  std::vector<double> eigvals;
  bool converged = false;
  int iterations = 0;
  double drift = 0.0;

  DenseMatrix z, b, gram;
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    iterations = iter;
    a.multiply_transpose(q, z);
    detail::orthonormalize_columns(z, rng);
    a.multiply(z, q);
    detail::orthonormalize_columns(q, rng);

    // B = Q^T A (l x cols), accumulated column by column of A.
    b = DenseMatrix(l, a.cols);
    for (std::int32_t c = 0; c < a.cols; ++c) {
      for (std::int64_t e = a.col_ptr[static_cast<std::size_t>(c)];
           e < a.col_ptr[static_cast<std::size_t>(c) + 1]; ++e) {
        const double v = a.values[static_cast<std::size_t>(e)];
        const double* qr = q.row(a.row_idx[static_cast<std::size_t>(e)]);
        for (std::int32_t j = 0; j < l; ++j) {
          b.at(j, c) += v * qr[j];
        }
      }
    }
    gram = DenseMatrix(l, l);
    for (std::int32_t i = 0; i < l; ++i) {
      for (std::int32_t j = i; j < l; ++j) {
        double s = 0.0;
        const double* bi = b.row(i);
        const double* bj = b.row(j);
        for (std::int32_t c = 0; c < a.cols; ++c) s += bi[c] * bj[c];
        gram.at(i, j) = s;
        gram.at(j, i) = s;
      }
    }

    detail::jacobi_eigh(gram, eigvecs, eigvals);
    for (std::int32_t i = 0; i < k; ++i) {
      sigma[static_cast<std::size_t>(i)] =
          std::sqrt(std::max(0.0, eigvals[static_cast<std::size_t>(i)]));
    }

    drift = 0.0;
    for (std::int32_t i = 0; i < k; ++i) {
      drift = std::max(drift, std::abs(sigma[static_cast<std::size_t>(i)] -
                                       prev[static_cast<std::size_t>(i)]));
    }
    prev = sigma;
    if (iter >= opts.min_iters &&
        drift <= opts.tol * std::max(sigma[0], 1e-300)) {
      converged = true;
      break;
    }
  }

  if (!converged) {
    throw DataError(
        "randomized svd did not converge after " +
        std::to_string(opts.max_iters) +
        " iterations; leading singular value drift = " + std::to_string(drift));
  }

  TruncatedSvd result;
  result.k = k;
  result.singular_values = sigma;
  result.iterations = iterations;

  // U = Q * W_k, where W_k holds the top-k eigenvectors of B B^T.
  result.u = DenseMatrix(a.rows, k);
  for (std::int32_t i = 0; i < a.rows; ++i) {
    const double* qr = q.row(i);
    double* ur = result.u.row(i);
    for (std::int32_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::int32_t t = 0; t < l; ++t) s += qr[t] * eigvecs.at(t, j);
      ur[j] = s;
    }
  }

  // Sign convention: the largest-magnitude entry of each left singular
  // vector is positive (first such entry wins ties), making the
  // factorization unique for distinct singular values.
  std::vector<bool> flip(static_cast<std::size_t>(k), false);
  for (std::int32_t j = 0; j < k; ++j) {
    double best = -1.0;
    double best_val = 0.0;
    for (std::int32_t i = 0; i < a.rows; ++i) {
      const double mag = std::abs(result.u.at(i, j));
      if (mag > best) {
        best = mag;
        best_val = result.u.at(i, j);
      }
    }
    if (best_val < 0.0) {
      flip[static_cast<std::size_t>(j)] = true;
      for (std::int32_t i = 0; i < a.rows; ++i) {
        result.u.at(i, j) = -result.u.at(i, j);
      }
    }
  }

  // V = A^T U diag(1/sigma); columns with vanishing sigma stay zero.
  DenseMatrix atu;
  a.multiply_transpose(result.u, atu);
  result.v = DenseMatrix(a.cols, k);
  const double sigma_floor = std::max(sigma[0], 1e-300) * 1e-14;
  for (std::int32_t i = 0; i < a.cols; ++i) {
    for (std::int32_t j = 0; j < k; ++j) {
      const double s = sigma[static_cast<std::size_t>(j)];
      result.v.at(i, j) = s > sigma_floor ? atu.at(i, j) / s : 0.0;
    }
  }
  return result;
}

}  // namespace earlyrisk::linalg
