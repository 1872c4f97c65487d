#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ciwave/types.hpp"

namespace ciwave {

/// Euclidean projection onto the probability simplex {z : 1'z = 1, z >= 0}
/// by the sorted-threshold rule: sort descending, find the largest L with
/// q_[L] - (sum_{j<=L} q_[j] - 1)/L > 0, set theta to that average and clip
/// z_i = max(q_i - theta, 0).
template <typename Scalar>
Vector<Scalar> project_simplex(const Vector<Scalar>& q) {
  const Eigen::Index n = q.size();
  if (n == 0) throw std::invalid_argument("project_simplex: empty input");
  if (!q.allFinite()) throw std::invalid_argument("project_simplex: non-finite input");
  std::vector<Scalar> sorted(q.data(), q.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());
  Scalar running = 0;
  Scalar theta = sorted[0] - 1;  // L = 1 fallback
  for (Eigen::Index l = 1; l <= n; ++l) {
    running += sorted[l - 1];
    const Scalar candidate = (running - 1) / static_cast<Scalar>(l);
    if (sorted[l - 1] - candidate > 0) theta = candidate;
  }
  return (q.array() - theta).cwiseMax(Scalar(0)).matrix();
}

/// Projection onto {z : 1'z = 1, z_i >= 0 for masked i}; unmasked entries
/// are sign-free. Falls back to the plain simplex when everything is masked.
template <typename Scalar>
Vector<Scalar> project_simplex(const Vector<Scalar>& q,
                               const std::vector<bool>& nonneg) {
  const Eigen::Index n = q.size();
  if (static_cast<Eigen::Index>(nonneg.size()) != n) {
    throw std::invalid_argument("project_simplex: mask size mismatch");
  }
  if (std::all_of(nonneg.begin(), nonneg.end(), [](bool b) { return b; })) {
    return project_simplex(q);
  }
  Scalar free_sum = 0;
  Eigen::Index free_count = 0;
  std::vector<Scalar> masked;
  masked.reserve(nonneg.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (nonneg[i]) {
      masked.push_back(q(i));
    } else {
      free_sum += q(i);
      ++free_count;
    }
  }
  std::sort(masked.begin(), masked.end(), std::greater<Scalar>());
  // Active masked entries keep z = q - theta; with free entries present the
  // balance function is strictly decreasing, so the threshold is unique.
  const Eigen::Index nm = static_cast<Eigen::Index>(masked.size());
  Scalar theta = (free_sum - 1) / static_cast<Scalar>(free_count);  // L = 0
  Scalar running = 0;
  for (Eigen::Index l = 1; l <= nm; ++l) {
    running += masked[l - 1];
    const Scalar candidate =
        (free_sum + running - 1) / static_cast<Scalar>(free_count + l);
    if (masked[l - 1] - candidate > 0) theta = candidate;
  }
  Vector<Scalar> z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z(i) = nonneg[i] ? std::max(q(i) - theta, Scalar(0)) : q(i) - theta;
  }
  return z;
}

}  // namespace ciwave
