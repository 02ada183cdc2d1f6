#include "coreg/wavelet.hpp"

#include "coreg/error.hpp"

#include <cmath>

namespace coreg {

namespace {

bool is_power_of_two(Index n) { return n >= 1 && (n & (n - 1)) == 0; }

int log2_exact(Index n) {
  int l = 0;
  while ((Index{1} << l) < n) ++l;
  return l;
}

// db2 taps from the closed-form solution of
//   Σh_k = √2, Σh_k² = 1, Σh_k h_{k+2} = 0, Σ(-1)^k k h_k = 0.
std::array<double, 4> make_lowpass() {
  const double s3 = std::sqrt(3.0);
  const double d = 4.0 * std::sqrt(2.0);
  return {(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d};
}

}  // namespace

IndexSet support(const CoefficientVector& c, double rel_tol) {
  IndexSet out;
  const double norm = c.values.norm();
  if (norm == 0.0) return out;
  const double thr = rel_tol * norm;
  for (Index i = 0; i < c.size(); ++i) {
    if (std::abs(c.values[i]) > thr) out.push_back(i);
  }
  return out;
}

CoefficientVector project(const CoefficientVector& c, const IndexSet& omega) {
  CoefficientVector out{Vector::Zero(c.size())};
  for (Index i : omega) {
    if (i < 0 || i >= c.size()) throw Error("project: index out of range");
    out.values[i] = c.values[i];
  }
  return out;
}

const std::array<double, 4>& WaveletBasis::lowpass() {
  static const std::array<double, 4> taps = make_lowpass();
  return taps;
}

std::array<double, 4> WaveletBasis::highpass() {
  const auto& h = lowpass();
  return {h[3], -h[2], h[1], -h[0]};
}

WaveletBasis::WaveletBasis(Index n) : WaveletBasis(n, -1) {}

WaveletBasis::WaveletBasis(Index n, int levels) : n_(n) {
  if (!is_power_of_two(n)) {
    throw Error("wavelet basis dimension must be a power of two, got " + std::to_string(n));
  }
  const int max_levels = log2_exact(n);
  levels_ = levels < 0 ? max_levels : levels;
  if (levels_ > max_levels) {
    throw Error("wavelet depth " + std::to_string(levels_) + " exceeds log2(n) = " +
                std::to_string(max_levels));
  }
}

CoefficientVector WaveletBasis::analyze(const Vector& h) const {
  check_length("WaveletBasis::analyze", n_, h.size());
  const auto& lo = lowpass();
  const auto hi = highpass();
  Vector work = h;
  Vector tmp(n_);
  Index len = n_;
  for (int level = 0; level < levels_; ++level) {
    const Index half = len / 2;
    for (Index k = 0; k < half; ++k) {
      double a = 0.0, d = 0.0;
      for (int j = 0; j < 4; ++j) {
        const double v = work[(2 * k + j) % len];
        a += lo[j] * v;
        d += hi[j] * v;
      }
      tmp[k] = a;
      tmp[half + k] = d;
    }
    work.head(len) = tmp.head(len);
    len = half;
  }
  return CoefficientVector{std::move(work)};
}

Vector WaveletBasis::synthesize(const CoefficientVector& c) const {
  check_length("WaveletBasis::synthesize", n_, c.size());
  const auto& lo = lowpass();
  const auto hi = highpass();
  Vector work = c.values;
  Vector tmp(n_);
  Index len = n_ >> levels_;
  for (int level = 0; level < levels_; ++level) {
    const Index half = len;
    len *= 2;
    tmp.head(len).setZero();
    for (Index k = 0; k < half; ++k) {
      const double a = work[k];
      const double d = work[half + k];
      for (int j = 0; j < 4; ++j) {
        tmp[(2 * k + j) % len] += lo[j] * a + hi[j] * d;
      }
    }
    work.head(len) = tmp.head(len);
  }
  return work;
}

Vector WaveletBasis::atom(Index lambda) const {
  if (lambda < 0 || lambda >= n_) throw Error("wavelet atom index out of range");
  CoefficientVector e{Vector::Zero(n_)};
  e.values[lambda] = 1.0;
  return synthesize(e);
}

std::string WaveletBasis::descriptor() const {
  return "db2(n=" + std::to_string(n_) + ",levels=" + std::to_string(levels_) +
         ",boundary=periodic)";
}

}  // namespace coreg
