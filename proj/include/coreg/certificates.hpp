#pragma once

#include "coreg/linear_map.hpp"
#include "coreg/regularizers.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace coreg {

// Ordered key/value block used for plain-text reports.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string format_key_values(const KeyValues& kv, const std::string& line_prefix = "");
std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& line_prefix = "");

/// Restricted injectivity of A_Ω = A ∘ i_Ω on span{φ_λ : λ ∈ Ω}.
struct InjectivityReport {
  IndexSet omega;
  double sigma_min = 0.0;         // +inf for Ω = ∅
  double a_omega_inv_norm = 0.0;  // 1/sigma_min when injective, 0 for Ω = ∅
  double a_norm = 0.0;            // ‖A‖
  bool injective = false;

  KeyValues to_key_values() const;
};

// Dense SVD of the materialized restriction. |Ω| > dim Y is reported as
// non-injective; injective means sigma_min > 1e-10·‖A‖.
InjectivityReport check_restricted_injectivity(const MapPtr& a, const WeightedL1& l1,
                                               const IndexSet& omega);

struct CertificateOptions {
  double source_tol = 1e-8;   // ‖W*u − x⋆‖ ≤ source_tol·max(1, ‖x⋆‖)
  double support_tol = 1e-8;  // |η_λ − κ_λ sign| on supp(h⋆), relative to κ
  // Box targets tried in order by the projection search when the
  // minimum-norm candidate leaves the box.
  std::vector<double> box_targets{0.5, 0.75, 0.9, 0.99};
  int max_alternations = 20000;
  double alternation_tol = 1e-12;
};

/// (u, v) with W*u ∈ ∂R(x⋆) = {x⋆} and η = A*v − u ∈ ∂‖h⋆‖_{1,κ}.
struct SourceCertificateRelaxed {
  Vector u;
  Vector v;
  Subgradient eta;  // coefficients of A*v − u
  IndexSet support;  // supp(h⋆)
  double residual_u = 0.0;
  double support_residual = 0.0;
  double saturation_margin = 0.0;  // min_{λ∉supp} κ_λ − |η_λ|; +inf if supp is everything
  bool source_ok = false;
  bool support_ok = false;
  bool box_ok = false;
  bool strictly_complementary = false;
  bool valid = false;
  std::string method;  // "trivial", "min-norm" or "projection(τ)"

  double source_norm() const;  // ‖(u, v)‖
  KeyValues to_key_values() const;
};

/// ν with W*A*ν = ξ + W*η, ξ = x⋆ ∈ ∂R(x⋆), η ∈ ∂‖Wx⋆‖_{1,κ}.
struct SourceCertificateStrict {
  Vector nu;
  Vector xi;
  Subgradient eta;
  IndexSet support;
  double split_residual = 0.0;
  double support_residual = 0.0;
  double saturation_margin = 0.0;
  bool split_ok = false;
  bool support_ok = false;
  bool box_ok = false;
  bool strictly_complementary = false;
  bool valid = false;
  std::string method;

  KeyValues to_key_values() const;
};

SourceCertificateRelaxed find_certificate_relaxed(const MapPtr& w, const MapPtr& a,
                                                  const WeightedL1& l1, const Vector& x_star,
                                                  const CertificateOptions& opts = {});

SourceCertificateStrict find_certificate_strict(const MapPtr& w, const MapPtr& a,
                                                const WeightedL1& l1, const Vector& x_star,
                                                const CertificateOptions& opts = {});

// ‖W*A*ν − ξ − W*η‖ recomputed from scratch.
double strict_split_residual(const MapPtr& w, const MapPtr& a, const WeightedL1& l1,
                             const SourceCertificateStrict& cert);

struct RateConstants {
  double c = 0.0;
  double d = 0.0;
  double big_c = 0.0;
  double source_norm = 0.0;  // ‖(u, v)‖ or ‖ν‖
  double m_eta = 0.0;
  double a_norm = 0.0;
  double a_inv_norm = 0.0;

  // c = (1 + C s)²/(2C), d = 2‖A_Ω⁻¹‖(1 + C s) + (1 + ‖A_Ω⁻¹‖‖A‖)/m · c.
  static RateConstants compute(double big_c, double source_norm, double m_eta, double a_norm,
                               double a_inv_norm);
  KeyValues to_key_values() const;
};

// inj must describe Ω[η] of the certificate. Throws when the certificate is
// invalid, A_Ω is not injective, m[η] ≤ 0 or C ≤ 0.
RateConstants rate_constants_relaxed(const SourceCertificateRelaxed& cert,
                                     const InjectivityReport& inj, double big_c, double a_norm);
RateConstants rate_constants_strict(const SourceCertificateStrict& cert,
                                    const InjectivityReport& inj, double big_c, double a_norm);

struct BoundSlack {
  double relative = 1e-6;
  double absolute = 1e-10;

  bool holds(double lhs, double rhs) const { return lhs <= rhs * (1.0 + relative) + absolute; }
};

struct VariationalBoundReport {
  double residual_lhs = 0.0;  // ‖M x − y^δ‖
  double residual_rhs = 0.0;  // δ + 2α‖η‖
  double bregman_lhs = 0.0;
  double bregman_rhs = 0.0;   // (δ + α‖η‖)²/(2α)
  BoundSlack slack;
  bool residual_pass = false;
  bool bregman_pass = false;
  bool pass() const { return residual_pass && bregman_pass; }
};

// Residual and Bregman bounds of variational regularization with source
// element `source` (M*source ∈ ∂Q(x⋆)). q_bregman is D^Q_{M*source}(x, x⋆).
VariationalBoundReport check_variational_bounds(const LinearMap& m, const Vector& source,
                                                const Vector& x_sol, const Vector& y_delta,
                                                double delta, double alpha, double q_bregman,
                                                BoundSlack slack = {});

struct NormBoundReport {
  double lhs = 0.0;            // ‖h − h⋆‖
  double rhs_l1 = 0.0;         // ℓ¹ tail variant
  double rhs_bregman = 0.0;    // Bregman variant (only when a subgradient is given)
  bool l1_pass = false;
  bool bregman_pass = false;
  bool has_bregman = false;
};

// Norm bound through the restricted inverse, plus its Bregman form when eta
// is supplied (then omega must be Ω[η]). Throws when h⋆ ∉ H_Ω.
NormBoundReport check_norm_bound(const MapPtr& a, const WeightedL1& l1, const IndexSet& omega,
                                 const Vector& h, const Vector& h_star,
                                 const InjectivityReport& inj, const Subgradient* eta = nullptr,
                                 BoundSlack slack = {0.0, 1e-12});

}  // namespace coreg
