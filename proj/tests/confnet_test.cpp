#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <unistd.h>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "earlyrisk/confnet.hpp"

namespace fs = std::filesystem;
using namespace earlyrisk;
using namespace earlyrisk::confnet;
using Catch::Matchers::WithinAbs;

namespace {

// Hand-sized network for exhaustive gradient checks; init_params always
// allocates the production shape, so small shapes are assembled directly.
NetParams small_net(std::int32_t input_dim, std::array<std::int32_t, 3> hidden,
                    std::uint64_t seed,
                    FeatureNorm norm = FeatureNorm::kL2) {
  NetParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.lrelu_slope = 0.01;
  p.dropout = 0.0;
  p.feature_norm = norm;
  Rng rng(seed);
  auto fill = [&](std::vector<double>& t, std::size_t n, double scale) {
    t.resize(n);
    for (auto& v : t) v = scale * rng.next_gaussian();
  };
  const auto d = static_cast<std::size_t>(input_dim);
  const auto h1 = static_cast<std::size_t>(hidden[0]);
  const auto h2 = static_cast<std::size_t>(hidden[1]);
  const auto h3 = static_cast<std::size_t>(hidden[2]);
  fill(p.w1, h1 * d, 0.6);
  fill(p.b1, h1, 0.1);
  fill(p.w2, h2 * h1, 0.6);
  fill(p.b2, h2, 0.1);
  fill(p.w3, h3 * h2, 0.6);
  fill(p.b3, h3, 0.1);
  fill(p.wc, 2 * h3, 0.6);
  fill(p.bc, 2, 0.1);
  fill(p.wf, h3, 0.6);
  fill(p.bf, 1, 0.1);
  return p;
}

std::vector<Sample> small_batch(std::int32_t input_dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> samples(3);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].x.resize(static_cast<std::size_t>(input_dim));
    for (auto& v : samples[i].x) v = rng.next_gaussian();
    samples[i].label = i % 2 == 0 ? 1 : 0;
  }
  return samples;
}

double batch_loss(const NetParams& params, const std::vector<Sample>& samples,
                  double lambda, bool confidence_enabled) {
  return compute_gradients(params, samples, 0, samples.size(), nullptr,
                           lambda, confidence_enabled, nullptr)
      .mean_loss;
}

// Linearly separable toy problem along the first coordinate.
std::vector<Sample> separable_samples(std::size_t per_class,
                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    Sample s;
    s.label = i < per_class ? 1 : 0;
    const double center = s.label == 1 ? 1.0 : -1.0;
    s.x = {center + 0.1 * rng.next_gaussian(), 0.1 * rng.next_gaussian(),
           0.1 * rng.next_gaussian(), 0.1 * rng.next_gaussian()};
    samples.push_back(std::move(s));
  }
  return samples;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("earlyrisk_confnet_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("confidence loss matches the hand-worked example", "[confnet]") {
  // p = (0.4, 0.6), c = 0.5, true label 1, lambda = 0.2:
  // -ln(0.5 * 0.6 + 0.5) - 0.2 * ln(0.5) = 0.36177298742619879.
  CHECK_THAT(confidence_loss({0.4, 0.6}, 0.5, 1, 0.2),
             WithinAbs(0.36177298742619879, 1e-12));
  // Full confidence reduces to plain cross-entropy.
  CHECK_THAT(confidence_loss({0.4, 0.6}, 1.0, 1, 0.2),
             WithinAbs(-std::log(0.6), 1e-15));
  CHECK_THAT(cross_entropy_loss({0.4, 0.6}, 1),
             WithinAbs(-std::log(0.6), 1e-15));
  CHECK_THAT(cross_entropy_loss({0.4, 0.6}, 0),
             WithinAbs(-std::log(0.4), 1e-15));
  // Hinting (c -> 0) pushes p' to 1, so only the penalty term remains.
  CHECK_THAT(confidence_loss({0.4, 0.6}, 1e-6, 1, 0.2),
             WithinAbs(-std::log(1e-6 * 0.6 + (1.0 - 1e-6)) -
                           0.2 * std::log(1e-6),
                       1e-12));
  // The clamp keeps the penalty finite even below it.
  CHECK(std::isfinite(confidence_loss({0.4, 0.6}, 1e-12, 1, 0.2)));
}

TEST_CASE("forward produces a distribution and a bounded confidence",
          "[confnet]") {
  const NetParams params = small_net(6, {5, 4, 4}, 11);
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(6);
    for (auto& v : x) v = 2.0 * rng.next_gaussian();
    Forward f;
    forward(params, x, nullptr, f);
    CAPTURE(trial);
    CHECK_THAT(f.p[0] + f.p[1], WithinAbs(1.0, 1e-9));
    CHECK(f.p[0] >= 0.0);
    CHECK(f.p[1] >= 0.0);
    CHECK(f.c > 0.0);
    CHECK(f.c < 1.0);
  }
  std::vector<double> wrong(5, 0.0);
  Forward f;
  CHECK_THROWS_AS(forward(params, wrong, nullptr, f), DataError);
}

TEST_CASE("l2 feature normalization makes the input scale-free", "[confnet]") {
  const NetParams params = small_net(4, {4, 3, 3}, 21, FeatureNorm::kL2);
  const std::vector<double> x = {0.5, -1.0, 2.0, 0.25};
  std::vector<double> scaled = x;
  for (auto& v : scaled) v *= 10.0;
  Forward fa, fb;
  forward(params, x, nullptr, fa);
  forward(params, scaled, nullptr, fb);
  CHECK_THAT(fa.p[1], WithinAbs(fb.p[1], 1e-12));
  CHECK_THAT(fa.c, WithinAbs(fb.c, 1e-12));

  // Without normalization, scale changes the outputs.
  const NetParams raw = small_net(4, {4, 3, 3}, 21, FeatureNorm::kNone);
  forward(raw, x, nullptr, fa);
  forward(raw, scaled, nullptr, fb);
  CHECK(std::abs(fa.p[1] - fb.p[1]) > 1e-6);

  // The zero vector passes through unnormalized rather than dividing by 0.
  Forward fz;
  forward(params, {0.0, 0.0, 0.0, 0.0}, nullptr, fz);
  CHECK(std::isfinite(fz.p[1]));
  CHECK(std::isfinite(fz.c));
}

TEST_CASE("prediction breaks probability ties toward control", "[confnet]") {
  NetParams p = small_net(3, {4, 3, 3}, 5);
  for (auto* t : p.tensors()) std::fill(t->begin(), t->end(), 0.0);
  const Prediction pred = predict(p, {1.0, 2.0, 3.0});
  CHECK(pred.p[0] == 0.5);
  CHECK(pred.p[1] == 0.5);
  CHECK(pred.label == 0);
  CHECK(pred.confidence == 0.5);
}

TEST_CASE("dropout masks scale surviving activations", "[confnet]") {
  NetParams params = small_net(5, {64, 8, 8}, 13);
  params.dropout = 0.5;
  const std::vector<double> x = {1.0, -0.5, 0.25, 2.0, -1.0};

  Rng rng(99);
  Forward f;
  forward(params, x, &rng, f);
  std::size_t zeros = 0, scaled = 0;
  for (double m : f.m1) {
    if (m == 0.0) {
      ++zeros;
    } else {
      CHECK_THAT(m, WithinAbs(2.0, 1e-15));  // 1 / (1 - 0.5)
      ++scaled;
    }
  }
  // With 64 units at rate 0.5 both outcomes all but surely appear.
  CHECK(zeros > 0);
  CHECK(scaled > 0);

  // Inference mode applies no mask at all.
  Forward g;
  forward(params, x, nullptr, g);
  for (double m : g.m1) CHECK(m == 1.0);
  // And is deterministic.
  Forward h;
  forward(params, x, nullptr, h);
  CHECK(g.p[1] == h.p[1]);
  CHECK(g.c == h.c);
}

TEST_CASE("initialization scales weights by fan-in", "[confnet]") {
  TrainConfig config;
  config.seed = 42;
  const NetParams p = init_params(128, config);
  REQUIRE(p.hidden == std::array<std::int32_t, 3>{512, 256, 256});
  REQUIRE(p.w1.size() == 512u * 128u);

  auto variance = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return var / static_cast<double>(v.size());
  };
  // He initialization: Var = 2 / fan_in, within 20% over 65536 draws.
  const double want1 = 2.0 / 128.0;
  CHECK(variance(p.w1) > 0.8 * want1);
  CHECK(variance(p.w1) < 1.2 * want1);
  const double want2 = 2.0 / 512.0;
  CHECK(variance(p.w2) > 0.8 * want2);
  CHECK(variance(p.w2) < 1.2 * want2);

  // Biases start at zero.
  for (double b : p.b1) CHECK(b == 0.0);
  for (double b : p.bc) CHECK(b == 0.0);

  // Deterministic per seed, distinct across seeds.
  const NetParams q = init_params(128, config);
  CHECK(p.w1 == q.w1);
  config.seed = 43;
  const NetParams r = init_params(128, config);
  CHECK(p.w1 != r.w1);

  CHECK_THROWS_AS(init_params(0, config), DataError);
}

TEST_CASE("analytic gradients match central finite differences", "[confnet]") {
  const std::int32_t dim = 5;
  const FeatureNorm norm =
      GENERATE(FeatureNorm::kNone, FeatureNorm::kL2);
  NetParams params = small_net(dim, {4, 3, 3}, 2001, norm);
  const std::vector<Sample> samples = small_batch(dim, 77);

  for (double lambda : {0.01, 0.2, 0.8}) {
    for (bool enabled : {true, false}) {
      CAPTURE(static_cast<int>(norm), lambda, enabled);
      const BatchResult analytic = compute_gradients(
          params, samples, 0, samples.size(), nullptr, lambda, enabled,
          nullptr);

      auto tensors = params.tensors();
      const auto grads = analytic.gradients.tensors();
      for (std::size_t t = 0; t < tensors.size(); ++t) {
        for (std::size_t i = 0; i < tensors[t]->size(); ++i) {
          double& w = (*tensors[t])[i];
          const double saved = w;
          const double h = 1e-6 * std::max(1.0, std::abs(saved));
          w = saved + h;
          const double up = batch_loss(params, samples, lambda, enabled);
          w = saved - h;
          const double down = batch_loss(params, samples, lambda, enabled);
          w = saved;
          const double fd = (up - down) / (2.0 * h);
          const double an = (*grads[t])[i];
          // The 1e-5 floor keeps roundoff noise in the central difference
          // (about eps * loss / h ~ 1e-10) from dominating the ratio when
          // the true gradient is essentially zero.
          const double rel =
              std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-5});
          CAPTURE(t, i, an, fd);
          CHECK(rel < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("gradient batches reject empty ranges", "[confnet]") {
  const NetParams params = small_net(5, {4, 3, 3}, 1);
  const std::vector<Sample> samples = small_batch(5, 2);
  CHECK_THROWS_AS(compute_gradients(params, samples, 2, 2, nullptr, 0.2,
                                    true, nullptr),
                  UsageError);
}

TEST_CASE("training separates an easy problem deterministically",
          "[confnet]") {
  const std::vector<Sample> samples = separable_samples(12, 31);
  TrainConfig config;
  config.seed = 9;
  config.batch_size = 8;
  config.max_epochs = 40;
  config.patience = 40;
  config.learning_rate = 0.01;
  config.dropout = 0.3;

  auto [net, report] = train(samples, config);
  CHECK(report.train_size == 20);
  CHECK(report.val_size == 4);
  CHECK(report.epochs.size() == 40);
  CHECK(report.best_epoch >= 1);
  for (const auto& e : report.epochs) {
    CHECK(report.best_val_loss <= e.val_loss);
  }

  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (predict(net, s.x).label == s.label) ++correct;
  }
  CHECK(correct >= samples.size() * 9 / 10);

  // Confidence summary statistics are coherent. On a problem this easy the
  // confidence head may saturate to 1.0 in double precision, so the upper
  // bound is inclusive.
  CHECK(report.min_confidence > 0.0);
  CHECK(report.min_confidence <= report.mean_confidence);
  CHECK(report.mean_confidence <= 1.0);
  CHECK(report.std_confidence >= 0.0);

  // Bitwise deterministic across runs.
  auto [net2, report2] = train(samples, config);
  for (std::size_t t = 0; t < net.tensors().size(); ++t) {
    CHECK(*net.tensors()[t] == *net2.tensors()[t]);
  }
  CHECK(report2.best_epoch == report.best_epoch);
  CHECK(report2.best_val_loss == report.best_val_loss);
}

TEST_CASE("early stopping halts after patience expires", "[confnet]") {
  const std::vector<Sample> samples = separable_samples(10, 55);
  TrainConfig config;
  config.seed = 77;
  config.batch_size = 8;
  config.max_epochs = 200;
  config.patience = 3;
  config.learning_rate = 0.01;
  config.dropout = 0.0;

  auto [net, report] = train(samples, config);
  (void)net;
  if (report.epochs.size() < 200) {
    // Stopped early: the final `patience` epochs brought no improvement.
    REQUIRE(report.epochs.size() >= 3u);
    for (std::size_t i = report.epochs.size() - 3; i < report.epochs.size();
         ++i) {
      CHECK(report.epochs[i].val_loss >= report.best_val_loss);
    }
    CHECK(report.best_epoch <=
          static_cast<int>(report.epochs.size()) - 3);
  }
}

TEST_CASE("training rejects degenerate inputs", "[confnet]") {
  TrainConfig config;
  const std::vector<Sample> ok = separable_samples(4, 8);

  std::vector<Sample> three(ok.begin(), ok.begin() + 3);
  CHECK_THROWS_AS(train(three, config), DataError);

  std::vector<Sample> one_class = ok;
  for (auto& s : one_class) s.label = 1;
  CHECK_THROWS_AS(train(one_class, config), DataError);

  std::vector<Sample> bad_label = ok;
  bad_label[0].label = 2;
  CHECK_THROWS_AS(train(bad_label, config), DataError);

  std::vector<Sample> ragged = ok;
  ragged[1].x.push_back(0.0);
  CHECK_THROWS_AS(train(ragged, config), DataError);

  TrainConfig bad = config;
  bad.validation_fraction = 0.0;
  CHECK_THROWS_AS(train(ok, bad), UsageError);
  bad.validation_fraction = 1.0;
  CHECK_THROWS_AS(train(ok, bad), UsageError);
  bad = config;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(ok, bad), UsageError);
  bad = config;
  bad.patience = 0;
  CHECK_THROWS_AS(train(ok, bad), UsageError);
}

TEST_CASE("the baseline configuration trains without a confidence head",
          "[confnet]") {
  const std::vector<Sample> samples = separable_samples(8, 3);
  TrainConfig config;
  config.seed = 5;
  config.batch_size = 8;
  config.max_epochs = 20;
  config.patience = 20;
  config.learning_rate = 0.01;
  config.dropout = 0.0;
  config.confidence_enabled = false;

  auto [net, report] = train(samples, config);
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (predict(net, s.x).label == s.label) ++correct;
  }
  CHECK(correct >= samples.size() * 9 / 10);
  CHECK(report.epochs.size() == 20);
}

TEST_CASE("network artifacts round-trip bit-exactly", "[confnet]") {
  const std::vector<Sample> samples = separable_samples(6, 17);
  TrainConfig config;
  config.seed = 23;
  config.batch_size = 4;
  config.max_epochs = 5;
  config.patience = 5;
  config.dropout = 0.3;
  auto [net, report] = train(samples, config);

  NetArtifact artifact;
  artifact.params = net;
  artifact.config = config;
  artifact.config_hash = fnv1a64("train-settings");
  artifact.min_confidence = report.min_confidence;
  artifact.mean_confidence = report.mean_confidence;
  artifact.std_confidence = report.std_confidence;
  artifact.best_epoch = report.best_epoch;
  artifact.epochs_run = static_cast<std::int32_t>(report.epochs.size());

  const fs::path path = temp_file("net.bin");
  save_net(path, artifact);
  const NetArtifact back = load_net(path);
  CHECK(back.config_hash == artifact.config_hash);
  CHECK(back.config.lambda == config.lambda);
  CHECK(back.config.seed == config.seed);
  CHECK(back.config.confidence_enabled == config.confidence_enabled);
  CHECK(back.min_confidence == artifact.min_confidence);
  CHECK(back.best_epoch == artifact.best_epoch);
  CHECK(back.epochs_run == artifact.epochs_run);
  CHECK(back.params.input_dim == net.input_dim);
  CHECK(back.params.hidden == net.hidden);
  auto at = artifact.params.tensors();
  auto bt = back.params.tensors();
  for (std::size_t t = 0; t < at.size(); ++t) {
    CHECK(*at[t] == *bt[t]);
  }
  // Identical behavior after the round trip.
  const Prediction before = predict(net, samples[0].x);
  const Prediction after = predict(back.params, samples[0].x);
  CHECK(before.p[1] == after.p[1]);
  CHECK(before.confidence == after.confidence);

  write_text_file(path, "not a network");
  CHECK_THROWS_AS(load_net(path), DataError);
  fs::remove(path);
}
