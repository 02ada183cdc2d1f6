#include "coreg/linear_map.hpp"

#include "coreg/error.hpp"
#include "coreg/rng.hpp"
#include "coreg/text.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <map>

namespace coreg {

const char* to_string(MapKind kind) {
  switch (kind) {
    case MapKind::dense: return "dense";
    case MapKind::identity: return "identity";
    case MapKind::integration: return "integration";
    case MapKind::bernoulli: return "bernoulli";
    case MapKind::composed: return "composed";
    case MapKind::product: return "product";
    case MapKind::restricted: return "restricted";
  }
  return "unknown";
}

LinearMap::LinearMap(MapKind kind, Index domain_dim, Index codomain_dim)
    : kind_(kind), domain_dim_(domain_dim), codomain_dim_(codomain_dim) {
  if (domain_dim < 0 || codomain_dim < 0) throw Error("negative operator dimension");
}

Vector LinearMap::apply(const Vector& x) const {
  check_length(to_string(kind_), domain_dim_, x.size());
  return apply_impl(x);
}

Vector LinearMap::adjoint_apply(const Vector& y) const {
  check_length(to_string(kind_), codomain_dim_, y.size());
  return adjoint_impl(y);
}

// ---------------------------------------------------------------- dense

DenseMap::DenseMap(Matrix matrix)
    : LinearMap(MapKind::dense, matrix.cols(), matrix.rows()), matrix_(std::move(matrix)) {}

Vector DenseMap::apply_impl(const Vector& x) const { return matrix_ * x; }
Vector DenseMap::adjoint_impl(const Vector& y) const { return matrix_.transpose() * y; }

std::string DenseMap::descriptor() const {
  std::string s = "dense(rows=" + std::to_string(matrix_.rows()) +
                  ",cols=" + std::to_string(matrix_.cols()) + ",data=";
  for (Index i = 0; i < matrix_.rows(); ++i) {
    for (Index j = 0; j < matrix_.cols(); ++j) {
      if (i + j > 0) s += ';';
      s += text::format_double(matrix_(i, j));
    }
  }
  return s + ")";
}

IdentityMap::IdentityMap(Index n) : LinearMap(MapKind::identity, n, n) {}

std::string IdentityMap::descriptor() const {
  return "identity(n=" + std::to_string(domain_dim()) + ")";
}

// ---------------------------------------------------------------- integration

IntegrationOp::IntegrationOp(Index n) : IntegrationOp(n, n > 0 ? 1.0 / static_cast<double>(n) : 1.0) {}

IntegrationOp::IntegrationOp(Index n, double scale)
    : LinearMap(MapKind::integration, n, n), scale_(scale) {
  if (n <= 0) throw Error("integration operator needs n > 0");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("integration scale must be positive");
}

Vector IntegrationOp::apply_impl(const Vector& x) const {
  Vector out(x.size());
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    acc += x[i];
    out[i] = scale_ * acc;
  }
  return out;
}

Vector IntegrationOp::adjoint_impl(const Vector& y) const {
  Vector out(y.size());
  double acc = 0.0;
  for (Index i = y.size() - 1; i >= 0; --i) {
    acc += y[i];
    out[i] = scale_ * acc;
  }
  return out;
}

Vector IntegrationOp::apply_inverse(const Vector& h) const {
  check_length("IntegrationOp::apply_inverse", n(), h.size());
  Vector out(h.size());
  double prev = 0.0;
  for (Index i = 0; i < h.size(); ++i) {
    out[i] = (h[i] - prev) / scale_;
    prev = h[i];
  }
  return out;
}

Vector IntegrationOp::adjoint_inverse(const Vector& x) const {
  check_length("IntegrationOp::adjoint_inverse", n(), x.size());
  Vector out(x.size());
  double next = 0.0;
  for (Index i = x.size() - 1; i >= 0; --i) {
    out[i] = (x[i] - next) / scale_;
    next = x[i];
  }
  return out;
}

std::string IntegrationOp::descriptor() const {
  return "integration(n=" + std::to_string(n()) + ",scale=" + text::format_double(scale_) + ")";
}

// ---------------------------------------------------------------- bernoulli

BernoulliSensing::BernoulliSensing(Index m, Index n, std::uint64_t seed)
    : LinearMap(MapKind::bernoulli, n, m), seed_(seed), matrix_(m, n) {
  const CounterRng rng(seed);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      const auto counter = static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(m) +
                           static_cast<std::uint64_t>(i);
      matrix_(i, j) = static_cast<double>(rng.bits(counter) >> 63);
    }
  }
}

Vector BernoulliSensing::apply_impl(const Vector& x) const { return matrix_ * x; }
Vector BernoulliSensing::adjoint_impl(const Vector& y) const { return matrix_.transpose() * y; }

std::string BernoulliSensing::descriptor() const {
  return "bernoulli(m=" + std::to_string(codomain_dim()) + ",n=" + std::to_string(domain_dim()) +
         ",seed=" + std::to_string(seed_) + ")";
}

// ---------------------------------------------------------------- composed

ComposedMap::ComposedMap(MapPtr outer, MapPtr inner)
    : LinearMap(MapKind::composed, inner->domain_dim(), outer->codomain_dim()),
      outer_(std::move(outer)),
      inner_(std::move(inner)) {
  if (outer_->domain_dim() != inner_->codomain_dim()) {
    throw DimensionError("compose: outer domain vs inner codomain", outer_->domain_dim(),
                         inner_->codomain_dim());
  }
}

Vector ComposedMap::apply_impl(const Vector& x) const { return outer_->apply(inner_->apply(x)); }

Vector ComposedMap::adjoint_impl(const Vector& y) const {
  return inner_->adjoint_apply(outer_->adjoint_apply(y));
}

std::string ComposedMap::descriptor() const {
  return "composed(outer=" + outer_->descriptor() + ",inner=" + inner_->descriptor() + ")";
}

// ---------------------------------------------------------------- product

ProductMap::ProductMap(MapPtr w, MapPtr a)
    : LinearMap(MapKind::product, w->domain_dim() + w->codomain_dim(),
                w->codomain_dim() + a->codomain_dim()),
      w_(std::move(w)),
      a_(std::move(a)) {
  if (a_->domain_dim() != w_->codomain_dim()) {
    throw DimensionError("product map: A domain vs W codomain", w_->codomain_dim(),
                         a_->domain_dim());
  }
}

Vector ProductMap::apply_impl(const Vector& z) const {
  const Index nx = w_->domain_dim();
  const Index nh = w_->codomain_dim();
  const Vector x = z.head(nx);
  const Vector h = z.tail(nh);
  Vector out(codomain_dim());
  out.head(nh) = w_->apply(x) - h;
  out.tail(a_->codomain_dim()) = a_->apply(h);
  return out;
}

Vector ProductMap::adjoint_impl(const Vector& rs) const {
  const Index nh = w_->codomain_dim();
  const Vector r = rs.head(nh);
  const Vector s = rs.tail(a_->codomain_dim());
  Vector out(domain_dim());
  out.head(w_->domain_dim()) = w_->adjoint_apply(r);
  out.tail(nh) = a_->adjoint_apply(s) - r;
  return out;
}

std::string ProductMap::descriptor() const {
  return "product(w=" + w_->descriptor() + ",a=" + a_->descriptor() + ")";
}

// ---------------------------------------------------------------- restricted

RestrictedMap::RestrictedMap(MapPtr a, IndexSet omega, std::shared_ptr<const WaveletBasis> basis)
    : LinearMap(MapKind::restricted, static_cast<Index>(omega.size()), a->codomain_dim()),
      a_(std::move(a)),
      omega_(std::move(omega)),
      basis_(std::move(basis)) {
  if (basis_ && basis_->n() != a_->domain_dim()) {
    throw DimensionError("restrict: basis dimension vs A domain", a_->domain_dim(), basis_->n());
  }
}

Vector RestrictedMap::apply_impl(const Vector& c) const {
  const Index n = a_->domain_dim();
  Vector full = Vector::Zero(n);
  for (std::size_t k = 0; k < omega_.size(); ++k) full[omega_[k]] = c[static_cast<Index>(k)];
  if (basis_) full = basis_->synthesize(CoefficientVector{std::move(full)});
  return a_->apply(full);
}

Vector RestrictedMap::adjoint_impl(const Vector& y) const {
  Vector back = a_->adjoint_apply(y);
  if (basis_) back = basis_->analyze(back).values;
  Vector out(static_cast<Index>(omega_.size()));
  for (std::size_t k = 0; k < omega_.size(); ++k) out[static_cast<Index>(k)] = back[omega_[k]];
  return out;
}

std::string RestrictedMap::descriptor() const {
  std::string idx;
  for (std::size_t k = 0; k < omega_.size(); ++k) {
    if (k > 0) idx += ';';
    idx += std::to_string(omega_[k]);
  }
  return "restricted(omega=" + idx + ",basis=" + (basis_ ? "db2" : "standard") +
         ",a=" + a_->descriptor() + ")";
}

// ---------------------------------------------------------------- free functions

Matrix materialize(const LinearMap& op, std::int64_t budget) {
  const auto entries =
      static_cast<std::int64_t>(op.domain_dim()) * static_cast<std::int64_t>(op.codomain_dim());
  if (entries > budget) {
    throw BudgetError("materialize " + std::string(to_string(op.kind())) + ": " +
                      std::to_string(entries) + " entries exceed budget " + std::to_string(budget));
  }
  if (const auto* d = dynamic_cast<const DenseMap*>(&op)) return d->matrix();
  if (const auto* b = dynamic_cast<const BernoulliSensing*>(&op)) return b->matrix();
  Matrix out(op.codomain_dim(), op.domain_dim());
  Vector e = Vector::Zero(op.domain_dim());
  for (Index j = 0; j < op.domain_dim(); ++j) {
    e[j] = 1.0;
    out.col(j) = op.apply(e);
    e[j] = 0.0;
  }
  return out;
}

MapPtr compose(MapPtr outer, MapPtr inner) {
  return std::make_shared<ComposedMap>(std::move(outer), std::move(inner));
}

MapPtr restrict(MapPtr a, const IndexSet& omega, std::shared_ptr<const WaveletBasis> basis) {
  auto normalized = normalize_index_set(omega, a->domain_dim());
  return std::make_shared<RestrictedMap>(std::move(a), std::move(normalized), std::move(basis));
}

double operator_norm(const LinearMap& op, const NormOptions& opts) {
  if (!(opts.tol > 0.0)) throw Error("operator_norm: tol must be positive");
  const Index n = op.domain_dim();
  if (n == 0 || op.codomain_dim() == 0) return 0.0;

  const CounterRng rng(opts.seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal(static_cast<std::uint64_t>(i));
  v.normalize();

  double sigma_sq = 0.0;
  for (int it = 0; it < opts.max_iters; ++it) {
    Vector w = op.adjoint_apply(op.apply(v));
    const double next = v.dot(w);  // Rayleigh quotient of A*A
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (it > 0 && std::abs(next - sigma_sq) <= opts.tol * std::abs(next)) {
      // One more step so the returned value matches the refined vector.
      const Vector av = op.apply(v);
      return std::sqrt(std::max(next, av.squaredNorm()));
    }
    sigma_sq = next;
  }

  const auto entries = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(op.codomain_dim());
  if (entries <= opts.dense_budget) {
    Eigen::JacobiSVD<Matrix> svd(materialize(op, opts.dense_budget));
    return svd.singularValues()(0);
  }
  return std::sqrt(sigma_sq);
}

// ---------------------------------------------------------------- descriptor parsing

namespace {

struct Parsed {
  std::string kind;
  std::map<std::string, std::string> args;
};

Parsed parse_call(const std::string& s) {
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')') {
    throw Error("malformed operator descriptor: " + s);
  }
  Parsed out;
  out.kind = std::string(text::trim(s.substr(0, open)));
  const std::string body = s.substr(open + 1, s.size() - open - 2);
  int depth = 0;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    const std::string item = body.substr(start, end - start);
    if (text::trim(item).empty()) return;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("descriptor argument without '=': " + item);
    out.args[std::string(text::trim(item.substr(0, eq)))] = std::string(text::trim(item.substr(eq + 1)));
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '(') ++depth;
    if (body[i] == ')') --depth;
    if (body[i] == ',' && depth == 0) {
      flush(i);
      start = i + 1;
    }
  }
  flush(body.size());
  return out;
}

const std::string& arg(const Parsed& p, const std::string& key) {
  auto it = p.args.find(key);
  if (it == p.args.end()) throw Error("descriptor '" + p.kind + "' lacks argument '" + key + "'");
  return it->second;
}

}  // namespace

MapPtr parse_map(const std::string& descriptor) {
  const Parsed p = parse_call(std::string(text::trim(descriptor)));
  if (p.kind == "identity") {
    return std::make_shared<IdentityMap>(text::parse_int(arg(p, "n")));
  }
  if (p.kind == "integration") {
    return std::make_shared<IntegrationOp>(text::parse_int(arg(p, "n")),
                                           text::parse_double(arg(p, "scale")));
  }
  if (p.kind == "bernoulli") {
    return std::make_shared<BernoulliSensing>(
        text::parse_int(arg(p, "m")), text::parse_int(arg(p, "n")),
        static_cast<std::uint64_t>(std::stoull(arg(p, "seed"))));
  }
  if (p.kind == "dense") {
    const Index rows = text::parse_int(arg(p, "rows"));
    const Index cols = text::parse_int(arg(p, "cols"));
    Matrix m(rows, cols);
    const auto& data = arg(p, "data");
    const auto parts = data.empty() ? std::vector<std::string>{} : text::split(data, ';');
    if (static_cast<Index>(parts.size()) != rows * cols) {
      throw Error("dense descriptor: expected " + std::to_string(rows * cols) + " values");
    }
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = text::parse_double(parts[i * cols + j]);
    return std::make_shared<DenseMap>(std::move(m));
  }
  if (p.kind == "composed") {
    return compose(parse_map(arg(p, "outer")), parse_map(arg(p, "inner")));
  }
  if (p.kind == "product") {
    return std::make_shared<ProductMap>(parse_map(arg(p, "w")), parse_map(arg(p, "a")));
  }
  if (p.kind == "restricted") {
    auto a = parse_map(arg(p, "a"));
    IndexSet omega;
    const auto& idx = arg(p, "omega");
    if (!idx.empty()) {
      for (const auto& s : text::split(idx, ';')) omega.push_back(text::parse_int(s));
    }
    std::shared_ptr<const WaveletBasis> basis;
    if (arg(p, "basis") == "db2") basis = std::make_shared<WaveletBasis>(a->domain_dim());
    return restrict(std::move(a), omega, std::move(basis));
  }
  throw Error("unknown operator kind '" + p.kind + "'");
}

}  // namespace coreg
