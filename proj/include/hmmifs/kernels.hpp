#pragma once

#include <Eigen/Core>

// Dense building blocks shared by the operators, the filter and its tangent.
// All of them take Eigen expressions and work for any scalar type.

namespace hmmifs::kernels {

/// sum_y m(y) p(y, x) f(y) h(y): integration over the first kernel argument.
template <typename KernelT, typename WeightT, typename DensityT, typename FuncT>
auto forward_apply(const Eigen::MatrixBase<KernelT>& kernel, const Eigen::MatrixBase<WeightT>& weights,
                   const Eigen::MatrixBase<DensityT>& density, const Eigen::MatrixBase<FuncT>& h) {
  return (kernel.transpose() * weights.cwiseProduct(density).cwiseProduct(h)).eval();
}

/// sum_y p(x, y) f(y) h(y) m(y): integration over the second kernel argument.
template <typename KernelT, typename WeightT, typename DensityT, typename FuncT>
auto backward_apply(const Eigen::MatrixBase<KernelT>& kernel, const Eigen::MatrixBase<WeightT>& weights,
                    const Eigen::MatrixBase<DensityT>& density, const Eigen::MatrixBase<FuncT>& h) {
  return (kernel * weights.cwiseProduct(density).cwiseProduct(h)).eval();
}

/// Quadrature of a grid function: sum_x h(x) m(x).
template <typename WeightT, typename FuncT>
typename FuncT::Scalar integrate(const Eigen::MatrixBase<WeightT>& weights, const Eigen::MatrixBase<FuncT>& h) {
  return weights.dot(h);
}

}  // namespace hmmifs::kernels
