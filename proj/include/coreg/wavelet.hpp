#pragma once

#include "coreg/types.hpp"

#include <array>
#include <string>

namespace coreg {

// Coordinates of a vector of H in the wavelet basis, Mallat ordering:
// index 0 is the coarsest scaling coefficient, followed by detail bands
// from coarse to fine.
struct CoefficientVector {
  Vector values;

  Index size() const { return values.size(); }
};

// {λ : |c_λ| > rel_tol·‖c‖}. The zero vector has empty support.
IndexSet support(const CoefficientVector& c, double rel_tol = 1e-12);

// Zeroes every coefficient outside omega (π_Ω in coefficient space).
CoefficientVector project(const CoefficientVector& c, const IndexSet& omega);

/// Periodic orthonormal Daubechies wavelet basis with two vanishing moments
/// (db2, four taps) on R^n, n a power of two.
///
/// With the default depth the transform runs down to a single scaling
/// coefficient. The transform is orthogonal, so synthesize is both the
/// inverse and the adjoint of analyze. Instances are immutable.
class WaveletBasis {
 public:
  explicit WaveletBasis(Index n);
  WaveletBasis(Index n, int levels);

  Index n() const { return n_; }
  int levels() const { return levels_; }
  static constexpr int vanishing_moments() { return 2; }

  CoefficientVector analyze(const Vector& h) const;
  Vector synthesize(const CoefficientVector& c) const;

  // φ_λ as a vector of H.
  Vector atom(Index lambda) const;

  // Low-pass filter taps h_0..h_3; the high-pass filter is g_k = (-1)^k h_{3-k}.
  static const std::array<double, 4>& lowpass();
  static std::array<double, 4> highpass();

  std::string descriptor() const;

 private:
  Index n_;
  int levels_;
};

}  // namespace coreg
