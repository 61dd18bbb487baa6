#pragma once

// Random transverse local configurations for product tests.

#include <random>

#include "geostate/geometry.hpp"
#include "geostate/product.hpp"
#include "oracles.hpp"

namespace configurations {

using geostate::Complex;
using geostate::Matrix;

inline Matrix gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

/// Tangent frames a, b sharing an m-dimensional subspace spanned by s, with
/// conormal frames recombined by random nonsingular matrices. Generic
/// Gaussian choices are transverse with probability one.
inline geostate::LocalProductData random_local_data(std::mt19937_64& rng, int n, int m, int extra_c) {
  const int kc = m + extra_c;
  const int kd = n - extra_c;  // kc + kd - n = m
  const Matrix s = gaussian(rng, n, m);
  const Matrix a = geostate::hcat(s, gaussian(rng, n, kc - m)) * (kc > 0 ? oracles::random_nonsingular(rng, kc) : Matrix(0, 0));
  const Matrix b = geostate::hcat(s, gaussian(rng, n, kd - m)) * (kd > 0 ? oracles::random_nonsingular(rng, kd) : Matrix(0, 0));
  geostate::LocalProductData d;
  d.s = s;
  d.a = a;
  d.b = b;
  const int q = n - kc;
  const int p = n - kd;
  d.nu_c = q > 0 ? Matrix(oracles::random_nonsingular(rng, q) * geostate::orthonormal_conormal(a)) : Matrix(0, n);
  d.nu_d = p > 0 ? Matrix(oracles::random_nonsingular(rng, p) * geostate::orthonormal_conormal(b)) : Matrix(0, n);
  std::uniform_real_distribution<double> coef(0.5, 2.0);
  d.g1 = Complex(coef(rng), coef(rng) - 1.0);
  d.g2 = Complex(coef(rng), 0.0);
  return d;
}

}  // namespace configurations
