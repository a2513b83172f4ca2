#pragma once

#include <vector>

#include <Eigen/Dense>

namespace domainrank {

// Weighted least-squares isotonic fit (pool-adjacent-violators). Blocks are
// merged until the sequence of block means is non-decreasing; each merged
// block takes the weighted mean of its members, so weighted block sums are
// preserved exactly.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> isotonic_non_decreasing(
    const Eigen::Ref<const Eigen::Vector<Scalar, Eigen::Dynamic>>& y,
    const Eigen::Ref<const Eigen::Vector<Scalar, Eigen::Dynamic>>& w) {
  const Eigen::Index n = y.size();
  Eigen::Vector<Scalar, Eigen::Dynamic> out(n);
  if (n == 0) return out;

  std::vector<Scalar> mean(n), weight(n);
  std::vector<Eigen::Index> size(n);
  Eigen::Index m = 0;  // number of blocks
  for (Eigen::Index i = 0; i < n; ++i) {
    mean[m] = y[i];
    weight[m] = w[i];
    size[m] = 1;
    ++m;
    while (m > 1 && mean[m - 2] > mean[m - 1]) {
      const Scalar tw = weight[m - 2] + weight[m - 1];
      mean[m - 2] = (weight[m - 2] * mean[m - 2] + weight[m - 1] * mean[m - 1]) / tw;
      weight[m - 2] = tw;
      size[m - 2] += size[m - 1];
      --m;
    }
  }

  Eigen::Index pos = 0;
  for (Eigen::Index b = 0; b < m; ++b)
    for (Eigen::Index k = 0; k < size[b]; ++k) out[pos++] = mean[b];
  return out;
}

template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> isotonic_non_increasing(
    const Eigen::Ref<const Eigen::Vector<Scalar, Eigen::Dynamic>>& y,
    const Eigen::Ref<const Eigen::Vector<Scalar, Eigen::Dynamic>>& w) {
  Eigen::Vector<Scalar, Eigen::Dynamic> neg = -y;
  return -isotonic_non_decreasing<Scalar>(neg, w);
}

inline Eigen::VectorXd isotonic_non_decreasing(const Eigen::VectorXd& y) {
  return isotonic_non_decreasing<double>(y, Eigen::VectorXd::Ones(y.size()));
}

inline Eigen::VectorXd isotonic_non_increasing(const Eigen::VectorXd& y) {
  return isotonic_non_increasing<double>(y, Eigen::VectorXd::Ones(y.size()));
}

}  // namespace domainrank
