#pragma once

#include <vector>

#include "blade/nn/params.hpp"

namespace blade::nn {

using Buf = std::vector<double>;
using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;

// Gated recurrent unit, one direction. Sequences are (L x dim) matrices,
// row t = timestep t. Gate blocks are ordered [r | z | n]; the candidate gate
// keeps its own recurrent bias:
//   r = sig(x Wir + h Whr + br), z = sig(x Wiz + h Whz + bz),
//   n = tanh(x Win + bn + r .* (h Whn + bhn)), h' = (1-z).*n + z.*h
struct GruDirection {
  ParamRef Wi, bi, Wh, bh;
  Eigen::Index in = 0, hidden = 0;

  struct Cache {
    Matrix X, Xp, R, Z, Ng, Hpn, H;
  };

  void build(ParamStore& ps, const std::string& name, Eigen::Index input, Eigen::Index h) {
    in = input;
    hidden = h;
    Wi = ps.add(name + ".Wi", in, 3 * h);
    bi = ps.add(name + ".bi", 1, 3 * h, ParamStore::Init::kZero);
    Wh = ps.add(name + ".Wh", h, 3 * h);
    bh = ps.add(name + ".bh", 1, 3 * h, ParamStore::Init::kZero);
  }

  Matrix forward(const Buf& vb, const Matrix& X, Cache& c) const {
    const Eigen::Index L = X.rows(), h = hidden;
    c.X = X;
    c.Xp.noalias() = X * Wi.view(vb);
    c.Xp.rowwise() += bi.view(vb).row(0);
    c.R.resize(L, h);
    c.Z.resize(L, h);
    c.Ng.resize(L, h);
    c.Hpn.resize(L, h);
    c.H.resize(L, h);
    auto Wh_ = Wh.view(vb);
    auto bh_ = bh.view(vb);
    RowVector hprev = RowVector::Zero(h), hp(3 * h);
    for (Eigen::Index t = 0; t < L; ++t) {
      hp.noalias() = hprev * Wh_;
      hp += bh_.row(0);
      RowArray r = 1.0 / (1.0 + (-(c.Xp.row(t).segment(0, h).array() + hp.segment(0, h).array())).exp());
      RowArray z = 1.0 / (1.0 + (-(c.Xp.row(t).segment(h, h).array() + hp.segment(h, h).array())).exp());
      RowArray hpn = hp.segment(2 * h, h).array();
      RowArray n = (c.Xp.row(t).segment(2 * h, h).array() + r * hpn).tanh();
      c.R.row(t) = r.matrix();
      c.Z.row(t) = z.matrix();
      c.Hpn.row(t) = hpn.matrix();
      c.Ng.row(t) = n.matrix();
      c.H.row(t) = ((1.0 - z) * n + z * hprev.array()).matrix();
      hprev = c.H.row(t);
    }
    return c.H;
  }

  Matrix backward(const Buf& vb, const Cache& c, const Matrix& dH, Buf& gb) const {
    const Eigen::Index L = c.X.rows(), h = hidden;
    auto Wi_ = Wi.view(vb);
    auto Wh_ = Wh.view(vb);
    auto gWi = Wi.view(gb);
    auto gbi = bi.view(gb);
    auto gWh = Wh.view(gb);
    auto gbh = bh.view(gb);
    Matrix dXp(L, 3 * h);
    RowVector dh = RowVector::Zero(h), dhp(3 * h);
    for (Eigen::Index t = L - 1; t >= 0; --t) {
      dh += dH.row(t);
      RowVector hprev = t > 0 ? RowVector(c.H.row(t - 1)) : RowVector::Zero(h);
      RowArray r = c.R.row(t).array();
      RowArray z = c.Z.row(t).array();
      RowArray n = c.Ng.row(t).array();
      RowArray hpn = c.Hpn.row(t).array();
      RowArray dha = dh.array();
      RowArray dz = dha * (hprev.array() - n);
      RowArray dnpre = dha * (1.0 - z) * (1.0 - n * n);
      RowArray drpre = dnpre * hpn * r * (1.0 - r);
      RowArray dzpre = dz * z * (1.0 - z);
      dhp.segment(0, h) = drpre.matrix();
      dhp.segment(h, h) = dzpre.matrix();
      dhp.segment(2 * h, h) = (dnpre * r).matrix();  // d(h Whn + bhn)
      gWh.noalias() += hprev.transpose() * dhp;
      gbh.row(0) += dhp;
      dXp.row(t).segment(0, h) = drpre.matrix();
      dXp.row(t).segment(h, h) = dzpre.matrix();
      dXp.row(t).segment(2 * h, h) = dnpre.matrix();
      dh = (dha * z).matrix();  // direct path through h' = ... + z .* hprev
      dh.noalias() += dhp * Wh_.transpose();
    }
    gWi.noalias() += c.X.transpose() * dXp;
    gbi.row(0) += dXp.colwise().sum();
    return dXp * Wi_.transpose();
  }
};

// Bidirectional layer: forward and reversed passes concatenated per position
// into (L x 2h).
struct BiGruLayer {
  GruDirection fwd, bwd;

  struct Cache {
    GruDirection::Cache f, b;
  };

  void build(ParamStore& ps, const std::string& name, Eigen::Index input, Eigen::Index h) {
    fwd.build(ps, name + ".fwd", input, h);
    bwd.build(ps, name + ".bwd", input, h);
  }

  Matrix forward(const Buf& vb, const Matrix& X, Cache& c) const {
    const Eigen::Index L = X.rows(), h = fwd.hidden;
    Matrix H(L, 2 * h);
    H.leftCols(h) = fwd.forward(vb, X, c.f);
    Matrix Xrev = X.colwise().reverse();
    H.rightCols(h) = bwd.forward(vb, Xrev, c.b).colwise().reverse();
    return H;
  }

  Matrix backward(const Buf& vb, const Cache& c, const Matrix& dH, Buf& gb) const {
    const Eigen::Index h = fwd.hidden;
    Matrix dX = fwd.backward(vb, c.f, dH.leftCols(h), gb);
    Matrix dHb = dH.rightCols(h).colwise().reverse();
    dX += Matrix(bwd.backward(vb, c.b, dHb, gb)).colwise().reverse();
    return dX;
  }
};

struct BiGruStack {
  std::vector<BiGruLayer> layers;

  struct Cache {
    std::vector<BiGruLayer::Cache> per_layer;
  };

  void build(ParamStore& ps, const std::string& name, Eigen::Index input, Eigen::Index h, int num_layers) {
    layers.resize(num_layers);
    for (int l = 0; l < num_layers; ++l)
      layers[l].build(ps, name + ".l" + std::to_string(l), l == 0 ? input : 2 * h, h);
  }

  Matrix forward(const Buf& vb, const Matrix& X, Cache& c) const {
    c.per_layer.resize(layers.size());
    Matrix cur = X;
    for (std::size_t l = 0; l < layers.size(); ++l) cur = layers[l].forward(vb, cur, c.per_layer[l]);
    return cur;
  }

  Matrix backward(const Buf& vb, const Cache& c, Matrix dH, Buf& gb) const {
    for (std::size_t l = layers.size(); l-- > 0;) dH = layers[l].backward(vb, c.per_layer[l], dH, gb);
    return dH;
  }
};

// Scaled dot-product self-attention over sequence positions with a residual
// connection: forward returns X + Attention(X). Queries/keys project to dk
// columns; values keep the model width so the residual adds up directly.
struct SelfAttention {
  ParamRef Wq, Wk, Wv;
  Eigen::Index d = 0, dk = 0;
  int heads = 1;

  struct Cache {
    Matrix X, Q, K, V;
    std::vector<Matrix> A;
  };

  void build(ParamStore& ps, const std::string& name, Eigen::Index model_dim, Eigen::Index key_dim, int n_heads) {
    d = model_dim;
    heads = n_heads;
    if (n_heads < 1) throw ModelError("attention_heads must be >= 1");
    if (d % n_heads != 0) throw ModelError("attention heads must divide the model width");
    dk = key_dim - key_dim % n_heads;
    if (dk <= 0) dk = n_heads;
    Wq = ps.add(name + ".Wq", d, dk);
    Wk = ps.add(name + ".Wk", d, dk);
    Wv = ps.add(name + ".Wv", d, d);
  }

  Matrix forward(const Buf& vb, const Matrix& X, Cache& c) const {
    c.X = X;
    c.Q.noalias() = X * Wq.view(vb);
    c.K.noalias() = X * Wk.view(vb);
    c.V.noalias() = X * Wv.view(vb);
    const Eigen::Index dkh = dk / heads, dvh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dkh));
    c.A.assign(heads, Matrix());
    Matrix Y = X;
    for (int i = 0; i < heads; ++i) {
      Matrix S = scale * (c.Q.middleCols(i * dkh, dkh) * c.K.middleCols(i * dkh, dkh).transpose());
      Eigen::ArrayXXd E = (S.array().colwise() - S.rowwise().maxCoeff().array()).exp();
      c.A[i] = (E.colwise() / E.rowwise().sum()).matrix();
      Y.middleCols(i * dvh, dvh).noalias() += c.A[i] * c.V.middleCols(i * dvh, dvh);
    }
    return Y;
  }

  Matrix backward(const Buf& vb, const Cache& c, const Matrix& dY, Buf& gb) const {
    const Eigen::Index dkh = dk / heads, dvh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dkh));
    Matrix dQ = Matrix::Zero(c.X.rows(), dk), dK = Matrix::Zero(c.X.rows(), dk),
           dV = Matrix::Zero(c.X.rows(), d);
    for (int i = 0; i < heads; ++i) {
      const Matrix& A = c.A[i];
      Matrix dO = dY.middleCols(i * dvh, dvh);
      dV.middleCols(i * dvh, dvh).noalias() = A.transpose() * dO;
      Matrix dA = dO * c.V.middleCols(i * dvh, dvh).transpose();
      Eigen::ArrayXd rowdot = (dA.array() * A.array()).rowwise().sum();
      Matrix dS = (A.array() * (dA.array().colwise() - rowdot)).matrix() * scale;
      dQ.middleCols(i * dkh, dkh).noalias() = dS * c.K.middleCols(i * dkh, dkh);
      dK.middleCols(i * dkh, dkh).noalias() = dS.transpose() * c.Q.middleCols(i * dkh, dkh);
    }
    Wq.view(gb).noalias() += c.X.transpose() * dQ;
    Wk.view(gb).noalias() += c.X.transpose() * dK;
    Wv.view(gb).noalias() += c.X.transpose() * dV;
    Matrix dX = dY;
    dX.noalias() += dQ * Wq.view(vb).transpose();
    dX.noalias() += dK * Wk.view(vb).transpose();
    dX.noalias() += dV * Wv.view(vb).transpose();
    return dX;
  }
};

struct Dense {
  ParamRef W, b;

  struct Cache {
    Matrix X;
  };

  void build(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index out) {
    W = ps.add(name + ".W", in, out);
    b = ps.add(name + ".b", 1, out, ParamStore::Init::kZero);
  }

  Matrix forward(const Buf& vb, const Matrix& X, Cache& c) const {
    c.X = X;
    Matrix Y = X * W.view(vb);
    Y.rowwise() += b.view(vb).row(0);
    return Y;
  }

  Matrix backward(const Buf& vb, const Cache& c, const Matrix& dY, Buf& gb) const {
    W.view(gb).noalias() += c.X.transpose() * dY;
    b.view(gb).row(0) += dY.colwise().sum();
    return dY * W.view(vb).transpose();
  }
};

}  // namespace blade::nn
