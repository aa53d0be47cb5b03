#pragma once

#include <vector>

#include "blade/core.hpp"

namespace blade {

// Eq. 7 preprocessing: low-variance filtering followed by PCA whitening.
// Fitted once on the training latents; apply() is the affine map
// mask -> center -> project -> scale.
struct LatentTransform {
  std::vector<int> variance_mask;  // per input dim, 1 = kept
  Vector mean;                     // length kept_dims
  Matrix components;               // kept_dims x k, columns are principal axes
  Vector scales;                   // k, 1/sqrt(eigenvalue)
  double variance_threshold = 0.01;
  double variance_target = 0.95;
  double explained_variance = 0.0;

  Eigen::Index input_dim() const { return static_cast<Eigen::Index>(variance_mask.size()); }
  Eigen::Index kept_dims() const { return mean.size(); }
  Eigen::Index output_dim() const { return components.cols(); }

  Vector apply(const Vector& z) const {
    if (z.size() != input_dim()) throw ModelError("latent transform: input length mismatch");
    Vector x(kept_dims());
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
      if (variance_mask[i]) x(j++) = z(i);
    x -= mean;
    return (components.transpose() * x).cwiseProduct(scales);
  }

  // Rows of `latents` transformed one by one.
  Matrix apply_rows(const Matrix& latents) const {
    Matrix out(latents.rows(), output_dim());
    for (Eigen::Index i = 0; i < latents.rows(); ++i)
      out.row(i) = apply(latents.row(i).transpose()).transpose();
    return out;
  }
};

// Fits the variance filter on empirical per-dimension variance (> theta is
// kept), then PCA on the surviving dims, retaining the smallest component
// count whose explained variance reaches variance_target, with whitening
// scales. `latents` holds one latent vector per row.
inline LatentTransform fit_transform_params(const Matrix& latents, double theta = 0.01,
                                            double variance_target = 0.95) {
  const Eigen::Index n = latents.rows(), dim = latents.cols();
  if (n < 2) throw DataError("latent transform needs at least 2 latents");
  if (!(variance_target > 0.0 && variance_target <= 1.0))
    throw ModelError("variance_target must be in (0, 1]");

  LatentTransform t;
  t.variance_threshold = theta;
  t.variance_target = variance_target;
  t.variance_mask.assign(dim, 0);

  RowVector col_mean = latents.colwise().mean();
  Eigen::Index kept = 0;
  for (Eigen::Index j = 0; j < dim; ++j) {
    double var = (latents.col(j).array() - col_mean(j)).square().sum() / static_cast<double>(n - 1);
    if (var > theta) {
      t.variance_mask[j] = 1;
      ++kept;
    }
  }
  if (kept == 0)
    throw ModelError("low-variance filter removed every latent dimension; lower variance_threshold");

  Matrix x(n, kept);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < dim; ++j)
    if (t.variance_mask[j]) x.col(c++) = latents.col(j);
  t.mean = x.colwise().mean().transpose();
  Matrix centered = x.rowwise() - t.mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw ModelError("PCA eigendecomposition failed");
  // ascending from the solver; walk from the largest down
  const Vector& vals = eig.eigenvalues();
  double total = 0.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i) total += std::max(0.0, vals(i));
  if (!(total > 0.0)) throw ModelError("latent covariance has no variance after filtering");

  const double floor_val = 1e-12 * vals(vals.size() - 1);
  double cum = 0.0;
  Eigen::Index k = 0;
  for (Eigen::Index i = vals.size() - 1; i >= 0; --i) {
    if (vals(i) <= floor_val) break;
    cum += vals(i);
    ++k;
    if (cum >= variance_target * total - 1e-15) break;
  }
  if (k == 0) throw ModelError("PCA retained no components");

  t.components.resize(kept, k);
  t.scales.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::Index src = vals.size() - 1 - i;
    t.components.col(i) = eig.eigenvectors().col(src);
    t.scales(i) = 1.0 / std::sqrt(vals(src));
  }
  t.explained_variance = cum / total;
  return t;
}

}  // namespace blade
