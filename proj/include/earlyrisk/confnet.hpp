#pragma once

// Feed-forward classifier with a learned confidence output.
//
// Architecture: input -> 512 -> 256 -> 256, leaky-ReLU activations with
// inverted dropout after each hidden layer; a 2-way softmax class head and a
// sigmoid confidence head both read the last hidden layer. During training
// the predicted distribution is interpolated toward the one-hot target by
// the confidence c,
//
//   p'_i = c * p_i + (1 - c) * y_i,
//
// and the loss charges for hedging:
//
//   L = -sum_i y_i ln p'_i - lambda * ln c.
//
// Low confidence buys the network forgiveness on hard examples at a
// lambda-controlled price, so c becomes a calibrated self-assessment that
// the decision policy can threshold. All gradients below are derived by
// hand from these two equations; optimization is plain Adam.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "earlyrisk/io.hpp"
#include "earlyrisk/rng.hpp"

namespace earlyrisk::confnet {

enum class FeatureNorm : std::int32_t { kNone = 0, kL2 = 1 };

// Loss-side clamp: ln c is evaluated on max(c, kConfidenceClamp) so a
// collapsing confidence head cannot produce infinities.
inline constexpr double kConfidenceClamp = 1e-6;

struct TrainConfig {
  double lambda = 0.2;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 10;
  double validation_fraction = 0.2;
  double dropout = 0.3;
  double lrelu_slope = 0.01;
  bool confidence_enabled = true;  // false: plain cross-entropy baseline
  FeatureNorm feature_norm = FeatureNorm::kNone;
  std::uint64_t seed = 7;
};

struct Sample {
  std::vector<double> x;
  int label = 0;  // 0 control, 1 positive
};

struct NetParams {
  std::int32_t input_dim = 0;
  std::array<std::int32_t, 3> hidden = {512, 256, 256};
  double lrelu_slope = 0.01;
  double dropout = 0.3;
  FeatureNorm feature_norm = FeatureNorm::kNone;

  // Row-major weights; wN maps layer N-1 activations to layer N.
  std::vector<double> w1, b1, w2, b2, w3, b3;
  std::vector<double> wc, bc;  // class head: 2 x hidden[2]
  std::vector<double> wf, bf;  // confidence head: 1 x hidden[2]

  std::vector<std::vector<double>*> tensors() {
    return {&w1, &b1, &w2, &b2, &w3, &b3, &wc, &bc, &wf, &bf};
  }
  std::vector<const std::vector<double>*> tensors() const {
    return {&w1, &b1, &w2, &b2, &w3, &b3, &wc, &bc, &wf, &bf};
  }
};

inline NetParams init_params(std::int32_t input_dim,
                             const TrainConfig& config) {
  if (input_dim < 1) {
    throw DataError("network input dimension must be positive");
  }
  NetParams p;
  p.input_dim = input_dim;
  p.lrelu_slope = config.lrelu_slope;
  p.dropout = config.dropout;
  p.feature_norm = config.feature_norm;

  Rng rng(Rng::derive(config.seed, "confnet-init"));
  auto he_fill = [&](std::vector<double>& w, std::int32_t rows,
                     std::int32_t cols) {
    w.resize(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    const double stddev = std::sqrt(2.0 / static_cast<double>(cols));
    for (auto& v : w) v = stddev * rng.next_gaussian();
  };
  he_fill(p.w1, p.hidden[0], input_dim);
  p.b1.assign(static_cast<std::size_t>(p.hidden[0]), 0.0);
  he_fill(p.w2, p.hidden[1], p.hidden[0]);
  p.b2.assign(static_cast<std::size_t>(p.hidden[1]), 0.0);
  he_fill(p.w3, p.hidden[2], p.hidden[1]);
  p.b3.assign(static_cast<std::size_t>(p.hidden[2]), 0.0);
  he_fill(p.wc, 2, p.hidden[2]);
  p.bc.assign(2, 0.0);
  he_fill(p.wf, 1, p.hidden[2]);
  p.bf.assign(1, 0.0);
  return p;
}

inline NetParams zeros_like(const NetParams& p) {
  NetParams z = p;
  for (auto* t : z.tensors()) {
    std::fill(t->begin(), t->end(), 0.0);
  }
  return z;
}

// ---------------------------------------------------------------------------
// Forward pass.
// ---------------------------------------------------------------------------

struct Forward {
  std::vector<double> x;                 // input after feature normalization
  std::vector<double> z1, h1, z2, h2, z3, h3;
  std::vector<double> m1, m2, m3;        // dropout scale factors (0 or 1/keep)
  std::array<double, 2> logits{};
  std::array<double, 2> p{};
  double u = 0.0;
  double c = 1.0;
};

namespace detail {

inline void matvec(const std::vector<double>& w, const std::vector<double>& b,
                   const std::vector<double>& x, std::vector<double>& z) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  z.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = w.data() + i * cols;
    double s = b[i];
    for (std::size_t j = 0; j < cols; ++j) s += wr[j] * x[j];
    z[i] = s;
  }
}

inline void hidden_layer(const std::vector<double>& w,
                         const std::vector<double>& b,
                         const std::vector<double>& x, double slope,
                         double dropout, Rng* dropout_rng,
                         std::vector<double>& z, std::vector<double>& h,
                         std::vector<double>& mask) {
  matvec(w, b, x, z);
  const std::size_t n = z.size();
  h.resize(n);
  mask.assign(n, 1.0);
  if (dropout_rng != nullptr && dropout > 0.0) {
    const double keep = 1.0 - dropout;
    for (std::size_t i = 0; i < n; ++i) {
      mask[i] = dropout_rng->next_unit() < dropout ? 0.0 : 1.0 / keep;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double a = z[i] > 0.0 ? z[i] : slope * z[i];
    h[i] = a * mask[i];
  }
}

}  // namespace detail

// dropout_rng == nullptr runs the deterministic inference path.
inline void forward(const NetParams& params, const std::vector<double>& input,
                    Rng* dropout_rng, Forward& f) {
  if (input.size() != static_cast<std::size_t>(params.input_dim)) {
    throw DataError("input dimension does not match the network");
  }
  f.x = input;
  if (params.feature_norm == FeatureNorm::kL2) {
    double norm = 0.0;
    for (double v : f.x) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : f.x) v /= norm;
    }
  }

  detail::hidden_layer(params.w1, params.b1, f.x, params.lrelu_slope,
                       params.dropout, dropout_rng, f.z1, f.h1, f.m1);
  detail::hidden_layer(params.w2, params.b2, f.h1, params.lrelu_slope,
                       params.dropout, dropout_rng, f.z2, f.h2, f.m2);
  detail::hidden_layer(params.w3, params.b3, f.h2, params.lrelu_slope,
                       params.dropout, dropout_rng, f.z3, f.h3, f.m3);

  std::vector<double> logits;
  detail::matvec(params.wc, params.bc, f.h3, logits);
  const double shift = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - shift);
  const double e1 = std::exp(logits[1] - shift);
  f.logits = {logits[0], logits[1]};
  f.p = {e0 / (e0 + e1), e1 / (e0 + e1)};

  double u = params.bf[0];
  const std::size_t h = f.h3.size();
  for (std::size_t j = 0; j < h; ++j) u += params.wf[j] * f.h3[j];
  f.u = u;
  f.c = 1.0 / (1.0 + std::exp(-u));
}

struct Prediction {
  int label = 0;
  std::array<double, 2> p{};
  double confidence = 1.0;
};

inline Prediction predict(const NetParams& params,
                          const std::vector<double>& input) {
  Forward f;
  forward(params, input, nullptr, f);
  Prediction out;
  out.p = f.p;
  out.confidence = f.c;
  out.label = f.p[1] > f.p[0] ? 1 : 0;  // ties resolve to control
  return out;
}

// ---------------------------------------------------------------------------
// Loss and gradients.
// ---------------------------------------------------------------------------

// L = -ln p'_t - lambda * ln max(c, clamp), with p'_t = c p_t + (1 - c).
inline double confidence_loss(const std::array<double, 2>& p, double c,
                              int label, double lambda) {
  const double pt = p[static_cast<std::size_t>(label)];
  const double p_prime = c * pt + (1.0 - c);
  return -std::log(std::max(p_prime, 1e-300)) -
         lambda * std::log(std::max(c, kConfidenceClamp));
}

inline double cross_entropy_loss(const std::array<double, 2>& p, int label) {
  return -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
}

struct BatchResult {
  NetParams gradients;  // same shapes as the parameters; mean over the batch
  double mean_loss = 0.0;
};

// Mean loss and gradients over a batch. Passing dropout_rng == nullptr
// disables dropout, which also makes the result a deterministic function of
// (params, samples) - the form finite-difference checks verify.
inline BatchResult compute_gradients(const NetParams& params,
                                     const std::vector<Sample>& samples,
                                     std::size_t begin, std::size_t end,
                                     const std::vector<std::size_t>* order,
                                     double lambda, bool confidence_enabled,
                                     Rng* dropout_rng) {
  if (end <= begin) {
    throw UsageError("empty gradient batch");
  }
  BatchResult out;
  out.gradients = zeros_like(params);
  NetParams& g = out.gradients;

  const std::size_t h1n = static_cast<std::size_t>(params.hidden[0]);
  const std::size_t h2n = static_cast<std::size_t>(params.hidden[1]);
  const std::size_t h3n = static_cast<std::size_t>(params.hidden[2]);
  const std::size_t dn = static_cast<std::size_t>(params.input_dim);

  Forward f;
  std::vector<double> dh3(h3n), dz3(h3n), dh2(h2n), dz2(h2n), dh1(h1n),
      dz1(h1n);

  for (std::size_t s = begin; s < end; ++s) {
    const Sample& sample = samples[order ? (*order)[s] : s];
    forward(params, sample.x, dropout_rng, f);

    const int t = sample.label;
    const double pt = f.p[static_cast<std::size_t>(t)];

    std::array<double, 2> dlogits{};
    double du = 0.0;
    if (confidence_enabled) {
      const double c = f.c;
      const double p_prime = std::max(c * pt + (1.0 - c), 1e-300);
      out.mean_loss += -std::log(p_prime) -
                       lambda * std::log(std::max(c, kConfidenceClamp));
      // d(-ln p'_t)/ds_j = (-c / p'_t) * pt * (delta_tj - p_j)
      const double dpt = -c / p_prime;
      for (int j = 0; j < 2; ++j) {
        const double delta = j == t ? 1.0 : 0.0;
        dlogits[static_cast<std::size_t>(j)] =
            dpt * pt * (delta - f.p[static_cast<std::size_t>(j)]);
      }
      // dL/dc = (1 - pt) / p'_t - lambda / c (penalty inactive under clamp)
      double dc = (1.0 - pt) / p_prime;
      if (c > kConfidenceClamp) dc -= lambda / c;
      du = dc * c * (1.0 - c);  // sigmoid
    } else {
      out.mean_loss += -std::log(std::max(pt, 1e-300));
      for (int j = 0; j < 2; ++j) {
        const double delta = j == t ? 1.0 : 0.0;
        dlogits[static_cast<std::size_t>(j)] =
            f.p[static_cast<std::size_t>(j)] - delta;
      }
      du = 0.0;
    }

    // Heads.
    for (std::size_t j = 0; j < h3n; ++j) {
      dh3[j] = params.wc[j] * dlogits[0] + params.wc[h3n + j] * dlogits[1] +
               params.wf[j] * du;
    }
    for (int r = 0; r < 2; ++r) {
      const double d = dlogits[static_cast<std::size_t>(r)];
      double* row = g.wc.data() + static_cast<std::size_t>(r) * h3n;
      for (std::size_t j = 0; j < h3n; ++j) row[j] += d * f.h3[j];
      g.bc[static_cast<std::size_t>(r)] += d;
    }
    for (std::size_t j = 0; j < h3n; ++j) g.wf[j] += du * f.h3[j];
    g.bf[0] += du;

    // Layer 3.
    for (std::size_t j = 0; j < h3n; ++j) {
      const double da = dh3[j] * f.m3[j];
      dz3[j] = da * (f.z3[j] > 0.0 ? 1.0 : params.lrelu_slope);
    }
    for (std::size_t i = 0; i < h3n; ++i) {
      double* row = g.w3.data() + i * h2n;
      const double d = dz3[i];
      for (std::size_t j = 0; j < h2n; ++j) row[j] += d * f.h2[j];
      g.b3[i] += d;
    }
    std::fill(dh2.begin(), dh2.end(), 0.0);
    for (std::size_t i = 0; i < h3n; ++i) {
      const double* row = params.w3.data() + i * h2n;
      const double d = dz3[i];
      for (std::size_t j = 0; j < h2n; ++j) dh2[j] += row[j] * d;
    }

    // Layer 2.
    for (std::size_t j = 0; j < h2n; ++j) {
      const double da = dh2[j] * f.m2[j];
      dz2[j] = da * (f.z2[j] > 0.0 ? 1.0 : params.lrelu_slope);
    }
    for (std::size_t i = 0; i < h2n; ++i) {
      double* row = g.w2.data() + i * h1n;
      const double d = dz2[i];
      for (std::size_t j = 0; j < h1n; ++j) row[j] += d * f.h1[j];
      g.b2[i] += d;
    }
    std::fill(dh1.begin(), dh1.end(), 0.0);
    for (std::size_t i = 0; i < h2n; ++i) {
      const double* row = params.w2.data() + i * h1n;
      const double d = dz2[i];
      for (std::size_t j = 0; j < h1n; ++j) dh1[j] += row[j] * d;
    }

    // Layer 1.
    for (std::size_t j = 0; j < h1n; ++j) {
      const double da = dh1[j] * f.m1[j];
      dz1[j] = da * (f.z1[j] > 0.0 ? 1.0 : params.lrelu_slope);
    }
    for (std::size_t i = 0; i < h1n; ++i) {
      double* row = g.w1.data() + i * dn;
      const double d = dz1[i];
      for (std::size_t j = 0; j < dn; ++j) row[j] += d * f.x[j];
      g.b1[i] += d;
    }
  }

  const double inv = 1.0 / static_cast<double>(end - begin);
  for (auto* tensor : g.tensors()) {
    for (double& v : *tensor) v *= inv;
  }
  out.mean_loss *= inv;
  return out;
}

// ---------------------------------------------------------------------------
// Training: Adam, stratified validation split, early stopping on validation
// loss with best-parameter restoration.
// ---------------------------------------------------------------------------

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  double min_confidence = 1.0;   // over all provided samples, inference mode
  double mean_confidence = 1.0;
  double std_confidence = 0.0;
};

namespace detail {

struct AdamState {
  NetParams m, v;
  std::int64_t t = 0;
};

inline void adam_step(NetParams& params, const NetParams& grads,
                      AdamState& state, double lr) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++state.t;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.t));
  auto pt = params.tensors();
  auto gt = grads.tensors();
  auto mt = state.m.tensors();
  auto vt = state.v.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k) {
    auto& p = *pt[k];
    const auto& g = *gt[k];
    auto& m = *mt[k];
    auto& v = *vt[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

}  // namespace detail

inline std::pair<NetParams, TrainReport> train(
    const std::vector<Sample>& samples, const TrainConfig& config) {
  if (samples.size() < 4) {
    throw DataError("training requires at least 4 examples");
  }
  const std::size_t dim = samples[0].x.size();
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != dim) {
      throw DataError("training examples have inconsistent dimensions");
    }
    if (samples[i].label == 1) {
      positives.push_back(i);
    } else if (samples[i].label == 0) {
      negatives.push_back(i);
    } else {
      throw DataError("labels must be 0 or 1");
    }
  }
  if (positives.empty() || negatives.empty()) {
    throw DataError("training data contains a single class");
  }
  if (config.validation_fraction <= 0.0 || config.validation_fraction >= 1.0) {
    throw UsageError("validation fraction must lie in (0, 1)");
  }
  if (config.batch_size < 1 || config.max_epochs < 1 || config.patience < 1) {
    throw UsageError("batch size, epochs and patience must be positive");
  }

  // Stratified split: a seeded shuffle within each class, validation takes
  // the prefix, and every class keeps at least one training example.
  Rng split_rng(Rng::derive(config.seed, "confnet-split"));
  split_rng.shuffle(positives);
  split_rng.shuffle(negatives);
  auto take = [&](std::vector<std::size_t>& pool) {
    std::size_t n_val = static_cast<std::size_t>(
        config.validation_fraction * static_cast<double>(pool.size()) + 0.5);
    if (n_val >= pool.size()) n_val = pool.size() - 1;
    return n_val;
  };
  const std::size_t val_pos = take(positives);
  const std::size_t val_neg = take(negatives);
  std::vector<std::size_t> val_idx, train_idx;
  val_idx.insert(val_idx.end(), positives.begin(),
                 positives.begin() + static_cast<std::ptrdiff_t>(val_pos));
  val_idx.insert(val_idx.end(), negatives.begin(),
                 negatives.begin() + static_cast<std::ptrdiff_t>(val_neg));
  train_idx.insert(train_idx.end(),
                   positives.begin() + static_cast<std::ptrdiff_t>(val_pos),
                   positives.end());
  train_idx.insert(train_idx.end(),
                   negatives.begin() + static_cast<std::ptrdiff_t>(val_neg),
                   negatives.end());
  if (val_idx.empty()) {
    // Tiny datasets: surrender one sample from the larger class.
    auto& donor = positives.size() > negatives.size() ? positives : negatives;
    val_idx.push_back(donor.front());
    train_idx.erase(
        std::find(train_idx.begin(), train_idx.end(), donor.front()));
  }

  NetParams params = init_params(static_cast<std::int32_t>(dim), config);
  detail::AdamState adam{zeros_like(params), zeros_like(params), 0};
  Rng train_rng(Rng::derive(config.seed, "confnet-train"));

  auto eval_loss = [&](const NetParams& p,
                       const std::vector<std::size_t>& idx) {
    Forward f;
    double total = 0.0;
    for (std::size_t i : idx) {
      forward(p, samples[i].x, nullptr, f);
      total += config.confidence_enabled
                   ? confidence_loss(f.p, f.c, samples[i].label, config.lambda)
                   : cross_entropy_loss(f.p, samples[i].label);
    }
    return total / static_cast<double>(idx.size());
  };

  TrainReport report;
  report.train_size = train_idx.size();
  report.val_size = val_idx.size();
  NetParams best = params;
  double best_val = eval_loss(params, val_idx);
  report.best_epoch = 0;
  int patience_left = config.patience;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    train_rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    const std::size_t n = train_idx.size();
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(config.batch_size));
      Rng* dropout = config.dropout > 0.0 ? &train_rng : nullptr;
      BatchResult batch = compute_gradients(
          params, samples, start, stop, &train_idx, config.lambda,
          config.confidence_enabled, dropout);
      epoch_loss += batch.mean_loss * static_cast<double>(stop - start);
      detail::adam_step(params, batch.gradients, adam, config.learning_rate);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(n);
    stats.val_loss = eval_loss(params, val_idx);
    report.epochs.push_back(stats);

    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      best = params;
      report.best_epoch = epoch;
      patience_left = config.patience;
    } else {
      --patience_left;
      if (patience_left == 0) break;
    }
  }
  report.best_val_loss = best_val;

  // Confidence statistics over every provided example, inference mode; the
  // minimum anchors the decision policy's threshold floor.
  Forward f;
  double sum = 0.0, sum_sq = 0.0, min_c = 1.0;
  for (const auto& sample : samples) {
    forward(best, sample.x, nullptr, f);
    sum += f.c;
    sum_sq += f.c * f.c;
    min_c = std::min(min_c, f.c);
  }
  const double n = static_cast<double>(samples.size());
  report.min_confidence = min_c;
  report.mean_confidence = sum / n;
  const double var = std::max(0.0, sum_sq / n - report.mean_confidence *
                                                    report.mean_confidence);
  report.std_confidence = std::sqrt(var);

  return {std::move(best), std::move(report)};
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

struct NetArtifact {
  NetParams params;
  TrainConfig config;
  std::uint64_t config_hash = 0;
  double min_confidence = 1.0;
  double mean_confidence = 1.0;
  double std_confidence = 0.0;
  std::int32_t best_epoch = 0;
  std::int32_t epochs_run = 0;
};

inline constexpr std::string_view kNetMagic = "ERCONFN1";

inline void save_net(const std::filesystem::path& path,
                     const NetArtifact& artifact) {
  BinaryWriter w(path);
  w.bytes(kNetMagic.data(), kNetMagic.size());
  w.u64(artifact.config_hash);
  const TrainConfig& c = artifact.config;
  w.f64(c.lambda);
  w.f64(c.learning_rate);
  w.u32(static_cast<std::uint32_t>(c.batch_size));
  w.u32(static_cast<std::uint32_t>(c.max_epochs));
  w.u32(static_cast<std::uint32_t>(c.patience));
  w.f64(c.validation_fraction);
  w.f64(c.dropout);
  w.f64(c.lrelu_slope);
  w.u8(c.confidence_enabled ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(c.feature_norm));
  w.u64(c.seed);
  w.f64(artifact.min_confidence);
  w.f64(artifact.mean_confidence);
  w.f64(artifact.std_confidence);
  w.u32(static_cast<std::uint32_t>(artifact.best_epoch));
  w.u32(static_cast<std::uint32_t>(artifact.epochs_run));
  const NetParams& p = artifact.params;
  w.u32(static_cast<std::uint32_t>(p.input_dim));
  for (auto h : p.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.f64(p.lrelu_slope);
  w.f64(p.dropout);
  w.u32(static_cast<std::uint32_t>(p.feature_norm));
  for (const auto* t : p.tensors()) w.f64_array(*t);
}

inline NetArtifact load_net(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.require_magic(kNetMagic);
  NetArtifact a;
  a.config_hash = r.u64();
  a.config.lambda = r.f64();
  a.config.learning_rate = r.f64();
  a.config.batch_size = static_cast<int>(r.u32());
  a.config.max_epochs = static_cast<int>(r.u32());
  a.config.patience = static_cast<int>(r.u32());
  a.config.validation_fraction = r.f64();
  a.config.dropout = r.f64();
  a.config.lrelu_slope = r.f64();
  a.config.confidence_enabled = r.u8() != 0;
  a.config.feature_norm = static_cast<FeatureNorm>(r.u32());
  a.config.seed = r.u64();
  a.min_confidence = r.f64();
  a.mean_confidence = r.f64();
  a.std_confidence = r.f64();
  a.best_epoch = static_cast<std::int32_t>(r.u32());
  a.epochs_run = static_cast<std::int32_t>(r.u32());
  a.params.input_dim = static_cast<std::int32_t>(r.u32());
  for (auto& h : a.params.hidden) h = static_cast<std::int32_t>(r.u32());
  a.params.lrelu_slope = r.f64();
  a.params.dropout = r.f64();
  a.params.feature_norm = static_cast<FeatureNorm>(r.u32());
  for (auto* t : a.params.tensors()) *t = r.f64_array();

  const auto& p = a.params;
  const auto expect = [&](const std::vector<double>& t, std::size_t n) {
    if (t.size() != n) {
      throw DataError("inconsistent tensor shape in " + path.string());
    }
  };
  const auto d = static_cast<std::size_t>(p.input_dim);
  const auto h1 = static_cast<std::size_t>(p.hidden[0]);
  const auto h2 = static_cast<std::size_t>(p.hidden[1]);
  const auto h3 = static_cast<std::size_t>(p.hidden[2]);
  expect(p.w1, h1 * d);
  expect(p.b1, h1);
  expect(p.w2, h2 * h1);
  expect(p.b2, h2);
  expect(p.w3, h3 * h2);
  expect(p.b3, h3);
  expect(p.wc, 2 * h3);
  expect(p.bc, 2);
  expect(p.wf, h3);
  expect(p.bf, 1);
  return a;
}

}  // namespace earlyrisk::confnet
