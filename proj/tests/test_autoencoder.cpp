#include <catch2/catch_amalgamated.hpp>

#include "blade/nn/autoencoder.hpp"
#include "blade/rng.hpp"

using namespace blade;

namespace {

EncoderConfig tiny_config(int hidden = 8, int latent = 4, int layers = 1) {
  EncoderConfig cfg;
  cfg.hidden_size = hidden;
  cfg.latent_dim = latent;
  cfg.num_recurrent_layers = layers;
  cfg.attention_heads = 1;
  cfg.attention_dim = 4;
  cfg.training.epochs = 30;
  cfg.training.batch_size = 16;
  cfg.training.learning_rate = 3e-3;
  cfg.training.seed = 5;
  return cfg;
}

std::vector<Matrix> random_flows(int count, int n, int l, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<Matrix> flows(count);
  for (auto& f : flows) {
    f.resize(n, l);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = scale * rng.normal(10.0, 4.0);
  }
  return flows;
}

std::vector<const Matrix*> ptrs(const std::vector<Matrix>& flows) {
  std::vector<const Matrix*> out;
  for (const auto& f : flows) out.push_back(&f);
  return out;
}

}  // namespace

TEST_CASE("encode emits latent vectors of the configured width", "[autoencoder]") {
  // Table I defaults: hidden 128, latent 64, 2 BiGRU layers
  EncoderConfig cfg;
  cfg.training.epochs = 1;
  FlowAutoencoder ae(3, 50, cfg);
  auto flows = random_flows(2, 3, 50, 21);
  REQUIRE_THROWS_AS(ae.encode(flows[0]), ModelError);  // unfitted is fatal

  ae.restore(std::vector<double>(ae.parameter_count(), 0.01), Vector::Zero(3), Vector::Ones(3));
  Vector z = ae.encode(flows[0]);
  REQUIRE(z.size() == 64);
  Matrix rec = ae.decode(z);
  REQUIRE(rec.rows() == 3);
  REQUIRE(rec.cols() == 50);
}

TEST_CASE("shape round-trip holds for assorted N and L", "[autoencoder][property]") {
  Rng rng(22);
  for (int rep = 0; rep < 6; ++rep) {
    int n = static_cast<int>(rng.uniform_int(1, 5));
    int l = static_cast<int>(rng.uniform_int(2, 12));
    FlowAutoencoder ae(n, l, tiny_config(6, 3));
    std::vector<double> w(ae.parameter_count());
    for (auto& v : w) v = rng.uniform(-0.2, 0.2);
    ae.restore(std::move(w), Vector::Zero(n), Vector::Ones(n));
    Matrix f = Matrix::Random(n, l);
    Matrix rec = ae.decode(ae.encode(f));
    REQUIRE(rec.rows() == n);
    REQUIRE(rec.cols() == l);
  }
}

TEST_CASE("inference is deterministic and shape mismatches are fatal", "[autoencoder]") {
  FlowAutoencoder ae(3, 10, tiny_config());
  auto flows = random_flows(30, 3, 10, 23);
  ae.train(ptrs(flows));
  Vector z1 = ae.encode(flows[0]);
  Vector z2 = ae.encode(flows[0]);
  REQUIRE((z1.array() == z2.array()).all());

  Matrix wrong = Matrix::Zero(3, 11);
  REQUIRE_THROWS_AS(ae.encode(wrong), ModelError);
  Vector bad_latent = Vector::Zero(5);
  REQUIRE_THROWS_AS(ae.decode(bad_latent), ModelError);
}

TEST_CASE("permuting packet order changes the latent of a trained model", "[autoencoder]") {
  FlowAutoencoder ae(2, 8, tiny_config(6, 3));
  auto flows = random_flows(40, 2, 8, 24);
  ae.train(ptrs(flows));
  Matrix f = flows[0];
  Matrix permuted = f;
  permuted.col(0).swap(permuted.col(5));
  permuted.col(2).swap(permuted.col(7));
  REQUIRE((f.array() != permuted.array()).any());
  Vector z = ae.encode(f), zp = ae.encode(permuted);
  REQUIRE((z - zp).norm() > 1e-8);
}

TEST_CASE("analytic gradient matches central finite differences", "[autoencoder][oracle]") {
  // miniature configuration: N=2, L=4, hidden=3, latent=2
  EncoderConfig cfg = tiny_config(3, 2);
  cfg.attention_dim = 2;
  FlowAutoencoder ae(2, 4, cfg);
  Rng rng(25);
  std::vector<double> w(ae.parameter_count());
  for (auto& v : w) v = rng.uniform(-0.4, 0.4);
  ae.restore(std::move(w), Vector::Zero(2), Vector::Ones(2));

  Matrix f(2, 4);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal(0.0, 1.0);

  std::vector<double> grad(ae.parameter_count(), 0.0);
  ae.loss_and_grad(f, grad);

  const double h = 1e-6;
  double worst_rel = 0.0;
  std::vector<double> dummy(ae.parameter_count());
  for (std::size_t i = 0; i < ae.parameter_count(); ++i) {
    double orig = ae.weights()[i];
    ae.weights()[i] = orig + h;
    std::fill(dummy.begin(), dummy.end(), 0.0);
    double lp = ae.loss_and_grad(f, dummy);
    ae.weights()[i] = orig - h;
    std::fill(dummy.begin(), dummy.end(), 0.0);
    double lm = ae.loss_and_grad(f, dummy);
    ae.weights()[i] = orig;
    double fd = (lp - lm) / (2.0 * h);
    double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-4});
    worst_rel = std::max(worst_rel, std::abs(fd - grad[i]) / denom);
  }
  REQUIRE(worst_rel < 1e-4);
}

TEST_CASE("training reduces the Eq. 6 loss on a toy set", "[autoencoder]") {
  FlowAutoencoder ae(3, 6, tiny_config());
  auto flows = random_flows(50, 3, 6, 26);
  auto curve = ae.train(ptrs(flows));
  REQUIRE(curve.size() == 30);
  REQUIRE(curve.back() <= curve.front());
  for (double v : curve) REQUIRE(std::isfinite(v));
}

TEST_CASE("a dataset of identical flows is memorized", "[autoencoder]") {
  EncoderConfig cfg = tiny_config(8, 4);
  cfg.training.epochs = 250;
  cfg.training.learning_rate = 5e-3;
  FlowAutoencoder ae(2, 5, cfg);
  Matrix f(2, 5);
  f << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  std::vector<Matrix> flows(12, f);
  auto curve = ae.train(ptrs(flows));
  REQUIRE(curve.back() < 5e-3);
}

TEST_CASE("reported training loss equals the mean of per-flow channel means", "[autoencoder][oracle]") {
  FlowAutoencoder ae(3, 7, tiny_config());
  auto flows = random_flows(20, 3, 7, 27);
  ae.train(ptrs(flows));
  double reported = ae.training_loss(ptrs(flows));
  // oracle: recompute Eq. 6 from per-flow Eq. 5 values
  double oracle = 0.0;
  for (const auto& f : flows) oracle += ae.channel_losses(f).mean();
  oracle /= static_cast<double>(flows.size());
  REQUIRE(reported == Catch::Approx(oracle).margin(1e-6));
}

TEST_CASE("channel losses are non-negative and zero only for perfect reconstruction", "[autoencoder]") {
  FlowAutoencoder ae(3, 6, tiny_config());
  auto flows = random_flows(25, 3, 6, 28);
  ae.train(ptrs(flows));
  for (const auto& f : flows) {
    Vector l = ae.channel_losses(f);
    for (int c = 0; c < 3; ++c) REQUIRE(l(c) >= 0.0);
    REQUIRE(l.sum() > 0.0);  // imperfect model keeps losses positive
  }
}

TEST_CASE("reconstruction after convergence stays near the training plateau", "[autoencoder]") {
  EncoderConfig cfg = tiny_config(10, 5);
  cfg.training.epochs = 120;
  FlowAutoencoder ae(3, 6, cfg);
  // two repeating motifs: learnable structure
  auto base = random_flows(2, 3, 6, 29);
  std::vector<Matrix> flows;
  Rng rng(30);
  for (int i = 0; i < 40; ++i) {
    Matrix f = base[i % 2];
    for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] += rng.normal(0.0, 0.05);
    flows.push_back(f);
  }
  auto curve = ae.train(ptrs(flows));
  double plateau = curve.back();
  double sample = ae.channel_losses(flows[0]).mean();
  REQUIRE(sample < 10.0 * plateau + 1e-4);
}

TEST_CASE("invalid configurations are rejected", "[autoencoder]") {
  EncoderConfig bad;
  bad.latent_dim = 300;  // > 2 * hidden
  bad.hidden_size = 64;
  REQUIRE_THROWS_AS(FlowAutoencoder(3, 10, bad), ModelError);
  EncoderConfig zero;
  zero.hidden_size = 0;
  REQUIRE_THROWS_AS(FlowAutoencoder(3, 10, zero), ModelError);
  REQUIRE_THROWS_AS(FlowAutoencoder(3, 5, tiny_config()).train({}), DataError);
}
