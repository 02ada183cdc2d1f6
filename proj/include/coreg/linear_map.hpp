#pragma once

#include "coreg/types.hpp"
#include "coreg/wavelet.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace coreg {

enum class MapKind { dense, identity, integration, bernoulli, composed, product, restricted };

const char* to_string(MapKind kind);

/// Bounded linear map between finite-dimensional Euclidean spaces.
///
/// Implementations are immutable after construction, so apply and
/// adjoint_apply may be called concurrently on one instance. Both entry
/// points validate the input length and throw DimensionError on mismatch.
class LinearMap {
 public:
  virtual ~LinearMap() = default;

  Index domain_dim() const { return domain_dim_; }
  Index codomain_dim() const { return codomain_dim_; }
  MapKind kind() const { return kind_; }

  Vector apply(const Vector& x) const;
  Vector adjoint_apply(const Vector& y) const;

  // Plain-text replay descriptor, e.g. "bernoulli(m=4,n=8,seed=7)".
  virtual std::string descriptor() const = 0;

 protected:
  LinearMap(MapKind kind, Index domain_dim, Index codomain_dim);

  virtual Vector apply_impl(const Vector& x) const = 0;
  virtual Vector adjoint_impl(const Vector& y) const = 0;

 private:
  MapKind kind_;
  Index domain_dim_;
  Index codomain_dim_;
};

using MapPtr = std::shared_ptr<const LinearMap>;

class DenseMap final : public LinearMap {
 public:
  explicit DenseMap(Matrix matrix);

  const Matrix& matrix() const { return matrix_; }
  std::string descriptor() const override;

 protected:
  Vector apply_impl(const Vector& x) const override;
  Vector adjoint_impl(const Vector& y) const override;

 private:
  Matrix matrix_;
};

class IdentityMap final : public LinearMap {
 public:
  explicit IdentityMap(Index n);
  std::string descriptor() const override;

 protected:
  Vector apply_impl(const Vector& x) const override { return x; }
  Vector adjoint_impl(const Vector& y) const override { return y; }
};

// Left-endpoint discretization of f ↦ ∫₀ᵗ f: (Wx)_i = scale·Σ_{j≤i} x_j.
// The default scale is the grid spacing 1/n on [0, 1].
class IntegrationOp final : public LinearMap {
 public:
  explicit IntegrationOp(Index n);
  IntegrationOp(Index n, double scale);

  Index n() const { return domain_dim(); }
  double scale() const { return scale_; }

  // Scaled first difference; exact inverse of apply.
  Vector apply_inverse(const Vector& h) const;
  // Inverse of the adjoint (scaled backward difference).
  Vector adjoint_inverse(const Vector& x) const;

  std::string descriptor() const override;

 protected:
  Vector apply_impl(const Vector& x) const override;
  Vector adjoint_impl(const Vector& y) const override;

 private:
  double scale_;
};

// m×n matrix with independent {0,1} entries, P(1) = 1/2. Entry (i, j) is bit
// 63 of the counter-based generator keyed by seed at counter j·m + i, so the
// matrix depends only on (m, n, seed).
class BernoulliSensing final : public LinearMap {
 public:
  BernoulliSensing(Index m, Index n, std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  const Matrix& matrix() const { return matrix_; }
  std::string descriptor() const override;

 protected:
  Vector apply_impl(const Vector& x) const override;
  Vector adjoint_impl(const Vector& y) const override;

 private:
  std::uint64_t seed_;
  Matrix matrix_;
};

// outer ∘ inner.
class ComposedMap final : public LinearMap {
 public:
  ComposedMap(MapPtr outer, MapPtr inner);

  const MapPtr& outer() const { return outer_; }
  const MapPtr& inner() const { return inner_; }
  std::string descriptor() const override;

 protected:
  Vector apply_impl(const Vector& x) const override;
  Vector adjoint_impl(const Vector& y) const override;

 private:
  MapPtr outer_;
  MapPtr inner_;
};

/// M(x, h) = (Wx − h, Ah) on X × H → H × Y, with adjoint
/// M*(r, s) = (W*r, A*s − r). Stacked vectors put the first factor first.
class ProductMap final : public LinearMap {
 public:
  ProductMap(MapPtr w, MapPtr a);

  const MapPtr& w() const { return w_; }
  const MapPtr& a() const { return a_; }
  std::string descriptor() const override;

 protected:
  Vector apply_impl(const Vector& z) const override;
  Vector adjoint_impl(const Vector& r) const override;

 private:
  MapPtr w_;
  MapPtr a_;
};

// A_Ω = A ∘ i_Ω: coordinates on span{φ_λ : λ ∈ Ω} mapped through A. Without a
// basis, φ_λ is the standard unit vector e_λ.
class RestrictedMap final : public LinearMap {
 public:
  RestrictedMap(MapPtr a, IndexSet omega, std::shared_ptr<const WaveletBasis> basis);

  const IndexSet& omega() const { return omega_; }
  std::string descriptor() const override;

 protected:
  Vector apply_impl(const Vector& c) const override;
  Vector adjoint_impl(const Vector& y) const override;

 private:
  MapPtr a_;
  IndexSet omega_;
  std::shared_ptr<const WaveletBasis> basis_;
};

inline constexpr std::int64_t kDefaultMaterializeBudget = std::int64_t{1} << 24;

// Dense matrix D with D·x = apply(x), probed column by column (dense and
// Bernoulli maps copy their storage). Throws BudgetError when
// domain_dim·codomain_dim exceeds budget.
Matrix materialize(const LinearMap& op, std::int64_t budget = kDefaultMaterializeBudget);

MapPtr compose(MapPtr outer, MapPtr inner);

MapPtr restrict(MapPtr a, const IndexSet& omega,
                std::shared_ptr<const WaveletBasis> basis = nullptr);

struct NormOptions {
  double tol = 1e-8;
  int max_iters = 10000;
  std::uint64_t seed = 0x6e6f726dULL;
  std::int64_t dense_budget = kDefaultMaterializeBudget;
};

// Largest singular value. Power iteration on A*A from a seeded start vector,
// falling back to a dense SVD when the iteration stalls and the map fits the
// materialization budget.
double operator_norm(const LinearMap& op, const NormOptions& opts = {});

// Rebuilds a map from its descriptor (inverse of LinearMap::descriptor).
MapPtr parse_map(const std::string& descriptor);

}  // namespace coreg
