#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "peerscore/signal_model.hpp"

namespace testsupport {

/// Random probability vector of length c (Dirichlet(1)).
inline std::vector<double> random_simplex(std::mt19937_64& g, std::size_t c) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> v(c);
  double s = 0;
  for (auto& x : v) s += (x = ex(g));
  for (auto& x : v) x /= s;
  return v;
}

inline peerscore::InfoStructure random_structure(std::mt19937_64& g, std::size_t c) {
  peerscore::RealMatrix j(c, c);
  const auto w = random_simplex(g, c * c);
  for (std::size_t i = 0; i < c * c; ++i) j(i / c, i % c) = w[i];
  double s = 0;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t k = 0; k < c; ++k) s += j(i, k);
  j(0, 0) += 1.0 - s;
  return peerscore::InfoStructure(j);
}

/// Binary, symmetric-free, self-predicting: p00 > p10 and p11 > p01.
inline peerscore::InfoStructure random_self_predicting_binary(std::mt19937_64& g) {
  for (;;) {
    auto info = random_structure(g, 2);
    if (peerscore::classify(info).self_predicting) return info;
  }
}

/// Every nonnegative integer matrix with the given margins, in
/// lexicographic (row-major) order.
inline void enumerate_margins(const std::vector<int>& rows, const std::vector<int>& cols,
                              const std::function<void(const peerscore::CountMatrix&)>& visit) {
  const std::size_t r = rows.size(), c = cols.size();
  peerscore::CountMatrix m(r, c);
  std::vector<int> left = cols;
  std::function<void(std::size_t, std::size_t, int)> rec = [&](std::size_t i, std::size_t j, int row_left) {
    if (i == r) {
      for (int x : left)
        if (x != 0) return;
      visit(m);
      return;
    }
    if (j == c - 1) {
      if (row_left > left[j]) return;
      m(i, j) = row_left;
      left[j] -= row_left;
      rec(i + 1, 0, i + 1 < r ? rows[i + 1] : 0);
      left[j] += row_left;
      return;
    }
    for (int v = 0; v <= std::min(row_left, left[j]); ++v) {
      m(i, j) = v;
      left[j] -= v;
      rec(i, j + 1, row_left - v);
      left[j] += v;
    }
  };
  rec(0, 0, rows[0]);
}

}  // namespace testsupport
