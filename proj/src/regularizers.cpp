#include "coreg/regularizers.hpp"

#include "coreg/error.hpp"

#include <cmath>
#include <limits>

namespace coreg {

WeightedL1::WeightedL1(std::shared_ptr<const WaveletBasis> basis)
    : WeightedL1(basis, Vector::Ones(basis->n())) {}

WeightedL1::WeightedL1(std::shared_ptr<const WaveletBasis> basis, Vector kappa)
    : basis_(std::move(basis)), kappa_(std::move(kappa)) {
  check_length("WeightedL1 weights", basis_->n(), kappa_.size());
  lower_bound_ = kappa_.size() > 0 ? kappa_.minCoeff() : 1.0;
  if (!(lower_bound_ > 0.0) || !kappa_.allFinite()) {
    throw Error("weighted l1: weights must be finite and bounded below by a > 0");
  }
}

double WeightedL1::eval_coefficients(const Vector& c) const {
  check_length("WeightedL1::eval_coefficients", n(), c.size());
  return kappa_.dot(c.cwiseAbs());
}

double WeightedL1::eval(const Vector& h) const {
  return eval_coefficients(basis_->analyze(h).values);
}

Vector soft_threshold(const Vector& v, const Vector& thresholds) {
  check_length("soft_threshold", v.size(), thresholds.size());
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]) - thresholds[i];
    out[i] = a > 0.0 ? std::copysign(a, v[i]) : 0.0;
  }
  return out;
}

Vector WeightedL1::prox_coefficients(const Vector& c, double t) const {
  if (!(t > 0.0)) throw Error("prox step must be positive");
  return soft_threshold(c, t * kappa_);
}

Vector WeightedL1::prox(const Vector& h, double t) const {
  return basis_->synthesize(CoefficientVector{prox_coefficients(basis_->analyze(h).values, t)});
}

Subgradient make_subgradient(const WeightedL1& f, Vector eta_coefficients) {
  check_length("subgradient", f.n(), eta_coefficients.size());
  Subgradient out;
  out.margin = std::numeric_limits<double>::infinity();
  const Vector& kappa = f.kappa();
  for (Index i = 0; i < f.n(); ++i) {
    const double gap = kappa[i] - std::abs(eta_coefficients[i]);
    if (gap <= kSaturationTol * kappa[i]) {
      out.omega.push_back(i);
    } else {
      out.margin = std::min(out.margin, gap);
    }
  }
  out.eta.values = std::move(eta_coefficients);
  return out;
}

Subgradient canonical_subgradient(const WeightedL1& f, const Vector& h_star) {
  return canonical_subgradient(f, h_star, Vector::Zero(f.n()));
}

Subgradient canonical_subgradient(const WeightedL1& f, const Vector& h_star, const Vector& fill) {
  check_length("canonical_subgradient fill", f.n(), fill.size());
  const CoefficientVector c = f.basis().analyze(h_star);
  const IndexSet supp = support(c);
  Vector eta = fill;
  std::size_t k = 0;
  for (Index i = 0; i < f.n(); ++i) {
    if (k < supp.size() && supp[k] == i) {
      eta[i] = f.kappa()[i] * (c.values[i] > 0.0 ? 1.0 : -1.0);
      ++k;
    } else if (std::abs(fill[i]) > f.kappa()[i]) {
      throw Error("canonical_subgradient: fill value at index " + std::to_string(i) +
                  " lies outside [-kappa, kappa]");
    }
  }
  Subgradient out = make_subgradient(f, std::move(eta));
  if (!(out.margin > 0.0)) throw Error("canonical_subgradient: margin m[eta] <= 0");
  return out;
}

void validate_subgradient(const WeightedL1& f, const Subgradient& eta, const Vector& h_star,
                          double tol) {
  check_length("validate_subgradient", f.n(), eta.eta.size());
  const CoefficientVector c = f.basis().analyze(h_star);
  const IndexSet supp = support(c);
  std::size_t k = 0;
  for (Index i = 0; i < f.n(); ++i) {
    const double kap = f.kappa()[i];
    const double e = eta.eta.values[i];
    if (k < supp.size() && supp[k] == i) {
      const double want = kap * (c.values[i] > 0.0 ? 1.0 : -1.0);
      if (std::abs(e - want) > tol * kap) {
        throw Error("subgradient mismatch on support at index " + std::to_string(i));
      }
      ++k;
    } else if (std::abs(e) > kap * (1.0 + tol)) {
      throw Error("subgradient leaves the box at index " + std::to_string(i));
    }
  }
}

double bregman_l1(const WeightedL1& f, const Subgradient& eta, const Vector& h,
                  const Vector& h_star) {
  validate_subgradient(f, eta, h_star);
  const Vector ch = f.basis().analyze(h).values;
  const Vector cs = f.basis().analyze(h_star).values;
  const double d = f.eval_coefficients(ch) - f.eval_coefficients(cs) - eta.eta.values.dot(ch - cs);
  return std::max(d, 0.0);
}

double bregman_quadratic(const Vector& x, const Vector& x_star) {
  check_length("bregman_quadratic", x_star.size(), x.size());
  return 0.5 * (x - x_star).squaredNorm();
}

}  // namespace coreg
