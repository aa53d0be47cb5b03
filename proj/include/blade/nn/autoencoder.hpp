#pragma once

#include <numeric>
#include <vector>

#include "blade/nn/layers.hpp"
#include "blade/types.hpp"

namespace blade {

struct TrainingConfig {
  int epochs = 100;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // true: curve entries are full-dataset losses evaluated after each epoch;
  // false: running batch means (cheaper on large sets).
  bool track_full_loss = true;
};

struct EncoderConfig {
  int hidden_size = 128;
  int latent_dim = 64;
  int num_recurrent_layers = 2;
  int attention_heads = 1;
  int attention_dim = 64;  // query/key projection width
  TrainingConfig training;

  void validate() const {
    if (hidden_size < 1 || latent_dim < 1 || num_recurrent_layers < 1 || attention_heads < 1 || attention_dim < 1)
      throw ModelError("encoder sizes must be positive");
    if (latent_dim > 2 * hidden_size)
      throw ModelError("latent_dim must be <= 2 * hidden_size");
    if (training.epochs < 1 || training.batch_size < 1 || !(training.learning_rate > 0))
      throw ModelError("invalid training configuration");
  }
};

// Eq. 5: per-channel mean squared error between two N x L feature matrices.
inline Vector channel_mse(const Matrix& f, const Matrix& f_hat) {
  if (f.rows() != f_hat.rows() || f.cols() != f_hat.cols())
    throw ModelError("channel_mse: shape mismatch");
  return ((f - f_hat).array().square().rowwise().sum() / static_cast<double>(f.cols())).matrix();
}

// Sequence autoencoder over N x L feature matrices. The encoder runs a
// bidirectional GRU stack along the packet axis, adds self-attention over the
// L positions residually, mean-pools and maps through an MLP to the latent
// vector Z. The decoder broadcasts Z to L steps, conditions each step with a
// learned position encoding, and mirrors the recurrence with a per-step
// projection back to N channels. Inputs are standardized per channel with
// statistics fitted on training data only; reconstruction losses are reported
// in that normalized space.
class FlowAutoencoder {
 public:
  FlowAutoencoder(int channels, int length, EncoderConfig config)
      : n_(channels), l_(length), cfg_(std::move(config)) {
    cfg_.validate();
    if (n_ < 1 || l_ < 1) throw ModelError("autoencoder needs positive channel count and length");
    const Eigen::Index d = 2 * cfg_.hidden_size;
    encoder_.build(params_, "enc", n_, cfg_.hidden_size, cfg_.num_recurrent_layers);
    attention_.build(params_, "attn", d, cfg_.attention_dim, cfg_.attention_heads);
    mlp_hidden_.build(params_, "mlp1", d, cfg_.hidden_size);
    mlp_out_.build(params_, "mlp2", cfg_.hidden_size, cfg_.latent_dim);
    posenc_ = params_.add("dec.pos", l_, cfg_.latent_dim, nn::ParamStore::Init::kSmall);
    decoder_.build(params_, "dec", cfg_.latent_dim, cfg_.hidden_size, cfg_.num_recurrent_layers);
    output_.build(params_, "out", d, n_);
    params_.seal();
    mean_ = Vector::Zero(n_);
    std_ = Vector::Ones(n_);
  }

  int channels() const { return n_; }
  int length() const { return l_; }
  const EncoderConfig& config() const { return cfg_; }
  bool fitted() const { return fitted_; }

  struct Cache {
    nn::BiGruStack::Cache enc, dec;
    nn::SelfAttention::Cache attn;
    nn::Dense::Cache mlp1, mlp2, out;
    Matrix Xn, Yd;
    RowVector h1, z;
  };

  // --- inference ---------------------------------------------------------

  Vector encode(const Matrix& flow_matrix) const {
    require_fitted();
    Cache c;
    forward_encode(normalize(flow_matrix), c);
    return c.z.transpose();
  }

  Vector encode(const FeatureSequence& f) const { return encode(f.matrix); }

  Matrix decode(const Vector& latent) const {
    require_fitted();
    if (latent.size() != cfg_.latent_dim) throw ModelError("decode: latent size mismatch");
    Cache c;
    c.z = latent.transpose();
    return denormalize(forward_decode(c));
  }

  struct FlowAnalysis {
    Vector latent;          // Z
    Vector channel_losses;  // Eq. 5 values in normalized space, length N
  };

  FlowAnalysis analyze(const Matrix& flow_matrix) const {
    require_fitted();
    Cache c;
    forward_encode(normalize(flow_matrix), c);
    forward_decode(c);
    FlowAnalysis out;
    out.latent = c.z.transpose();
    out.channel_losses = channel_mse(c.Xn.transpose(), c.Yd.transpose());
    return out;
  }

  Vector channel_losses(const Matrix& flow_matrix) const { return analyze(flow_matrix).channel_losses; }

  // --- training ----------------------------------------------------------

  // Minimizes the Eq. 6 objective (mean over flows of mean over channels of
  // Eq. 5) with adaptive-moment gradient descent. Deterministic for a fixed
  // seed: gradients are accumulated per fixed-size chunk and reduced in chunk
  // order, so the result does not depend on the worker count.
  std::vector<double> train(const std::vector<const Matrix*>& flows) {
    if (flows.empty()) throw DataError("autoencoder training set is empty");
    for (const Matrix* f : flows) check_shape(*f);
    fit_normalization(flows);
    Rng rng(derive_seed(cfg_.training.seed, 0xAEu));
    params_.init_weights(rng);
    fitted_ = true;

    nn::AdamOptimizer adam(params_.size(), cfg_.training.learning_rate);
    const std::size_t n = flows.size();
    const std::size_t batch = std::min<std::size_t>(cfg_.training.batch_size, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> curve;
    curve.reserve(cfg_.training.epochs);
    std::vector<double> grad(params_.size());
    for (int epoch = 0; epoch < cfg_.training.epochs; ++epoch) {
      rng.shuffle(order);
      double running = 0.0;
      for (std::size_t s = 0; s < n; s += batch) {
        const std::size_t bsz = std::min(batch, n - s);
        const std::size_t nchunks = (bsz + kChunk - 1) / kChunk;
        std::vector<nn::Buf> chunk_grads(nchunks);
        std::vector<double> chunk_loss(nchunks, 0.0);
        parallel_for(nchunks, [&](std::size_t ci) {
          chunk_grads[ci].assign(params_.size(), 0.0);
          Cache c;
          for (std::size_t i = ci * kChunk; i < std::min(bsz, (ci + 1) * kChunk); ++i)
            chunk_loss[ci] += forward_backward(*flows[order[s + i]], c, chunk_grads[ci]);
        });
        std::fill(grad.begin(), grad.end(), 0.0);
        double batch_loss = 0.0;
        for (std::size_t ci = 0; ci < nchunks; ++ci) {
          const auto& g = chunk_grads[ci];
          for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
          batch_loss += chunk_loss[ci];
        }
        const double inv = 1.0 / static_cast<double>(bsz);
        for (double& g : grad) g *= inv;
        adam.step(params_.values(), grad);
        running += batch_loss;
      }
      double epoch_loss = cfg_.training.track_full_loss ? training_loss(flows) : running / static_cast<double>(n);
      if (!std::isfinite(epoch_loss))
        throw ModelError("autoencoder training diverged: non-finite loss at epoch " + std::to_string(epoch + 1));
      curve.push_back(epoch_loss);
    }
    return curve;
  }

  // Eq. 6 evaluated over a flow set with the current weights.
  double training_loss(const std::vector<const Matrix*>& flows) const {
    require_fitted();
    if (flows.empty()) throw DataError("empty flow set");
    const std::size_t nchunks = (flows.size() + kChunk - 1) / kChunk;
    std::vector<double> chunk_loss(nchunks, 0.0);
    parallel_for(nchunks, [&](std::size_t ci) {
      Cache c;
      for (std::size_t i = ci * kChunk; i < std::min(flows.size(), (ci + 1) * kChunk); ++i) {
        forward_encode(normalize(*flows[i]), c);
        forward_decode(c);
        chunk_loss[ci] += (c.Yd - c.Xn).array().square().sum() / static_cast<double>(n_ * l_);
      }
    });
    double total = 0.0;
    for (double v : chunk_loss) total += v;
    return total / static_cast<double>(flows.size());
  }

  // Loss plus full analytic gradient for one flow; used by the
  // finite-difference harness.
  double loss_and_grad(const Matrix& flow_matrix, std::vector<double>& grad_out) {
    require_fitted();
    check_shape(flow_matrix);
    if (grad_out.size() != params_.size()) grad_out.assign(params_.size(), 0.0);
    Cache c;
    return forward_backward(flow_matrix, c, grad_out);
  }

  // --- state -------------------------------------------------------------

  std::size_t parameter_count() const { return params_.size(); }
  std::vector<double>& weights() { return params_.values(); }
  const std::vector<double>& weights() const { return params_.values(); }
  const Vector& channel_mean() const { return mean_; }
  const Vector& channel_std() const { return std_; }

  void restore(std::vector<double> weights, Vector mean, Vector std) {
    if (weights.size() != params_.size()) throw ModelError("weight blob size mismatch");
    if (mean.size() != n_ || std.size() != n_) throw ModelError("normalization size mismatch");
    params_.values() = std::move(weights);
    mean_ = std::move(mean);
    std_ = std::move(std);
    fitted_ = true;
  }

 private:
  static constexpr std::size_t kChunk = 16;

  void require_fitted() const {
    if (!fitted_) throw ModelError("autoencoder is not fitted");
  }

  void check_shape(const Matrix& f) const {
    if (f.rows() != n_ || f.cols() != l_)
      throw ModelError("feature matrix shape mismatch: expected " + std::to_string(n_) + "x" +
                       std::to_string(l_) + ", got " + std::to_string(f.rows()) + "x" +
                       std::to_string(f.cols()));
  }

  void fit_normalization(const std::vector<const Matrix*>& flows) {
    mean_.setZero(n_);
    std_.setOnes(n_);
    const double count = static_cast<double>(flows.size()) * static_cast<double>(l_);
    Vector sum = Vector::Zero(n_), sq = Vector::Zero(n_);
    for (const Matrix* f : flows) {
      sum += f->rowwise().sum();
      sq += f->array().square().rowwise().sum().matrix();
    }
    mean_ = sum / count;
    for (int i = 0; i < n_; ++i) {
      double var = (sq(i) - count * mean_(i) * mean_(i)) / std::max(1.0, count - 1.0);
      std_(i) = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
  }

  // (N x L raw) -> (L x N standardized)
  Matrix normalize(const Matrix& f) const {
    check_shape(f);
    return ((f.colwise() - mean_).array().colwise() / std_.array()).matrix().transpose();
  }

  // (L x N standardized) -> (N x L raw)
  Matrix denormalize(const Matrix& y) const {
    return ((y.transpose().array().colwise() * std_.array()).colwise() + mean_.array()).matrix();
  }

  void forward_encode(Matrix xn, Cache& c) const {
    const auto& vb = params_.values();
    c.Xn = std::move(xn);
    Matrix h = encoder_.forward(vb, c.Xn, c.enc);
    Matrix y = attention_.forward(vb, h, c.attn);
    RowVector pooled = y.colwise().mean();
    c.h1 = mlp_hidden_.forward(vb, pooled, c.mlp1).array().tanh().matrix();
    c.z = mlp_out_.forward(vb, c.h1, c.mlp2);
  }

  const Matrix& forward_decode(Cache& c) const {
    const auto& vb = params_.values();
    Matrix u = posenc_.view(vb);
    u.rowwise() += c.z.row(0);
    Matrix hd = decoder_.forward(vb, u, c.dec);
    c.Yd = output_.forward(vb, hd, c.out);
    return c.Yd;
  }

  double forward_backward(const Matrix& flow_matrix, Cache& c, nn::Buf& gb) const {
    const auto& vb = params_.values();
    forward_encode(normalize(flow_matrix), c);
    forward_decode(c);
    const double scale = 2.0 / static_cast<double>(n_ * l_);
    Matrix diff = c.Yd - c.Xn;
    double loss = diff.array().square().sum() / static_cast<double>(n_ * l_);

    Matrix d_yd = scale * diff;
    Matrix d_hd = output_.backward(vb, c.out, d_yd, gb);
    Matrix d_u = decoder_.backward(vb, c.dec, d_hd, gb);
    posenc_.view(gb) += d_u;
    RowVector dz = d_u.colwise().sum();
    RowVector dh1 = mlp_out_.backward(vb, c.mlp2, dz, gb);
    RowVector da1 = (dh1.array() * (1.0 - c.h1.array().square())).matrix();
    RowVector dm = mlp_hidden_.backward(vb, c.mlp1, da1, gb);
    Matrix dy = dm.replicate(l_, 1) / static_cast<double>(l_);
    Matrix dh = attention_.backward(vb, c.attn, dy, gb);
    encoder_.backward(vb, c.enc, dh, gb);
    return loss;
  }

  int n_, l_;
  EncoderConfig cfg_;
  nn::ParamStore params_;
  nn::BiGruStack encoder_, decoder_;
  nn::SelfAttention attention_;
  nn::Dense mlp_hidden_, mlp_out_, output_;
  nn::ParamRef posenc_;
  Vector mean_, std_;
  bool fitted_ = false;
};

}  // namespace blade
