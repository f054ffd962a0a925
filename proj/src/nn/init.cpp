#include "drq/nn/init.hpp"

#include <Eigen/QR>

#include "drq/core/error.hpp"

namespace drq::nn {

template <typename T>
void orthogonal_init(Tensor<T>& weight, double gain, Rng& rng) {
  require(weight.rank() >= 2, "orthogonal_init: weight must have rank >= 2");
  const auto rows = static_cast<Eigen::Index>(weight.dim(0));
  const auto cols = static_cast<Eigen::Index>(weight.size() / weight.dim(0));
  const bool transpose = rows < cols;
  const Eigen::Index tall = transpose ? cols : rows;
  const Eigen::Index wide = transpose ? rows : cols;

  Eigen::MatrixXd gaussian(tall, wide);
  for (Eigen::Index j = 0; j < wide; ++j)
    for (Eigen::Index i = 0; i < tall; ++i) gaussian(i, j) = standard_normal(rng);

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
  // Sign fix makes the result uniformly distributed over orthogonal matrices.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(wide).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < wide; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }

  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double v = transpose ? q(j, i) : q(i, j);
      weight[static_cast<std::size_t>(i * cols + j)] = static_cast<T>(gain * v);
    }
  }
}

template void orthogonal_init<float>(Tensor<float>&, double, Rng&);
template void orthogonal_init<double>(Tensor<double>&, double, Rng&);

}  // namespace drq::nn
