#pragma once

#include "coreg/types.hpp"
#include "coreg/wavelet.hpp"

#include <memory>

namespace coreg {

// Relative tolerance for |η_λ| = κ_λ when forming Ω[η].
inline constexpr double kSaturationTol = 1e-12;

/// ‖h‖_{1,κ} = Σ κ_λ |⟨φ_λ, h⟩| over a wavelet ONB, with κ_λ ≥ a > 0.
class WeightedL1 {
 public:
  // κ ≡ 1.
  explicit WeightedL1(std::shared_ptr<const WaveletBasis> basis);
  WeightedL1(std::shared_ptr<const WaveletBasis> basis, Vector kappa);

  const WaveletBasis& basis() const { return *basis_; }
  const std::shared_ptr<const WaveletBasis>& basis_ptr() const { return basis_; }
  const Vector& kappa() const { return kappa_; }
  double lower_bound() const { return lower_bound_; }
  Index n() const { return basis_->n(); }

  double eval(const Vector& h) const;
  double eval_coefficients(const Vector& c) const;

  // argmin_g ½‖g − h‖² + t‖g‖_{1,κ}.
  Vector prox(const Vector& h, double t) const;
  // Same problem in coefficient space: soft-threshold c_λ at t·κ_λ.
  Vector prox_coefficients(const Vector& c, double t) const;

 private:
  std::shared_ptr<const WaveletBasis> basis_;
  Vector kappa_;
  double lower_bound_;
};

// R(x) = ‖x‖²/2. Other penalties would provide the same three members.
struct QuadraticPenalty {
  double eval(const Vector& x) const { return 0.5 * x.squaredNorm(); }
  Vector gradient(const Vector& x) const { return x; }
  // prox of t·R.
  Vector prox(const Vector& x, double t) const { return x / (1.0 + t); }
};

// Soft thresholding with per-entry thresholds.
Vector soft_threshold(const Vector& v, const Vector& thresholds);

/// η ∈ ∂‖h⋆‖_{1,κ} in coefficient form, with its saturated set Ω[η] and
/// margin m[η] = min{κ_λ − |η_λ| : λ ∉ Ω[η]} (+∞ when Ω[η] is everything).
struct Subgradient {
  CoefficientVector eta;
  IndexSet omega;
  double margin = 0.0;
};

// Ω[η] and m[η] for a coefficient vector already known to satisfy the box.
Subgradient make_subgradient(const WeightedL1& f, Vector eta_coefficients);

// η_λ = κ_λ sign⟨φ_λ, h⋆⟩ on supp(h⋆) and fill_λ elsewhere. Throws when the
// fill leaves the box [-κ_λ, κ_λ] or when m[η] ≤ 0 would result.
Subgradient canonical_subgradient(const WeightedL1& f, const Vector& h_star, const Vector& fill);
Subgradient canonical_subgradient(const WeightedL1& f, const Vector& h_star);

// Throws unless eta ∈ ∂‖h⋆‖_{1,κ} up to tol (relative to κ).
void validate_subgradient(const WeightedL1& f, const Subgradient& eta, const Vector& h_star,
                          double tol = 1e-9);

// D_η(h, h⋆) = ‖h‖_{1,κ} − ‖h⋆‖_{1,κ} − ⟨η, h − h⋆⟩, clamped at 0 against
// roundoff.
double bregman_l1(const WeightedL1& f, const Subgradient& eta, const Vector& h,
                  const Vector& h_star);

// Bregman distance of ‖·‖²/2 at subgradient x⋆: ‖x − x⋆‖²/2.
double bregman_quadratic(const Vector& x, const Vector& x_star);

}  // namespace coreg
