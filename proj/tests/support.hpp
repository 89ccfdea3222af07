#pragma once

#include <initializer_list>

#include "ndfo/ndfo.hpp"

namespace ndfo::test {

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline DirectionSet rows(std::initializer_list<std::initializer_list<double>> r, DirectionKind kind) {
  const auto N = static_cast<Eigen::Index>(r.size());
  const auto n = static_cast<Eigen::Index>(r.begin()->size());
  Matrix Q(N, n);
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double x : row) Q(i, j++) = x;
    ++i;
  }
  return DirectionSet{Q, kind, 0};
}

}  // namespace ndfo::test
