#include "coreg/certificates.hpp"

#include "coreg/error.hpp"
#include "coreg/text.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>

namespace coreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string join_indices(const IndexSet& s) {
  std::string out;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k > 0) out += ';';
    out += std::to_string(s[k]);
  }
  return out;
}

std::string flag(bool b) { return b ? "1" : "0"; }

Matrix analysis_matrix(const WaveletBasis& basis) {
  const Index n = basis.n();
  Matrix phi(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    phi.col(j) = basis.analyze(e).values;
    e[j] = 0.0;
  }
  return phi;
}

Vector min_norm_lstsq(const Matrix& m, const Vector& rhs) {
  if (m.cols() == 0) return Vector::Zero(0);
  if (m.rows() == 0) return Vector::Zero(m.cols());
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
  Vector sol = cod.solve(rhs);
  if (!sol.allFinite()) throw Error("certificate: least-squares solve produced non-finite values");
  return sol;
}

// Dual-element search shared by both certificate kinds. In coefficient space
// the candidate is η = B v − r with B = Φ A*, and it must equal κ·sign(h⋆) on
// the support and stay in the box [-κ, κ] elsewhere.
struct DualSearch {
  const Matrix& b;
  const Vector& r;
  const Vector& kappa;
  const IndexSet& supp;
  const Vector& target;  // κ_λ sign(c⋆_λ) on supp, unused elsewhere
  const CertificateOptions& opts;

  Vector eta_of(const Vector& v) const { return b * v - r; }

  // Minimum-norm v satisfying the support equalities in least squares.
  Vector min_norm() const {
    const Index k = static_cast<Index>(supp.size());
    Matrix bs(k, b.cols());
    Vector rhs(k);
    for (Index i = 0; i < k; ++i) {
      bs.row(i) = b.row(supp[i]);
      rhs[i] = target[supp[i]] + r[supp[i]];
    }
    return min_norm_lstsq(bs, rhs);
  }

  // Minimum-norm correction restoring the support equalities exactly.
  Vector fix_support(const Vector& v) const {
    const Vector eta = eta_of(v);
    const Index k = static_cast<Index>(supp.size());
    if (k == 0) return v;
    Matrix bs(k, b.cols());
    Vector defect(k);
    for (Index i = 0; i < k; ++i) {
      bs.row(i) = b.row(supp[i]);
      defect[i] = target[supp[i]] - eta[supp[i]];
    }
    return v + min_norm_lstsq(bs, defect);
  }

  bool strictly_inside(const Vector& eta, double tau) const {
    std::size_t k = 0;
    for (Index i = 0; i < eta.size(); ++i) {
      if (k < supp.size() && supp[k] == i) {
        ++k;
        continue;
      }
      if (std::abs(eta[i]) > tau * kappa[i]) return false;
    }
    return true;
  }

  // Alternating projections between the affine set {Bv − r} and the box with
  // off-support bound τκ. Returns false when no point was found.
  bool project(Vector& v, double tau) const {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(b);
    const Matrix pinv = cod.pseudoInverse();
    Vector eta = eta_of(v);
    for (int it = 0; it < opts.max_alternations; ++it) {
      Vector boxed = eta;
      std::size_t k = 0;
      for (Index i = 0; i < boxed.size(); ++i) {
        if (k < supp.size() && supp[k] == i) {
          boxed[i] = target[i];
          ++k;
        } else {
          boxed[i] = std::clamp(boxed[i], -tau * kappa[i], tau * kappa[i]);
        }
      }
      v = pinv * (boxed + r);
      eta = eta_of(v);
      const double gap = (eta - boxed).norm();
      if (gap <= opts.alternation_tol * std::max(1.0, eta.norm())) break;
    }
    v = fix_support(v);
    return strictly_inside(eta_of(v), 1.0) && strictly_inside(eta_of(v), tau * (1.0 + 1e-6));
  }

  std::pair<Vector, std::string> run() const {
    if (supp.empty() && r.norm() == 0.0) return {Vector::Zero(b.cols()), "trivial"};
    Vector v = min_norm();
    if (strictly_inside(eta_of(v), 1.0)) return {v, "min-norm"};
    for (double tau : opts.box_targets) {
      Vector trial = v;
      if (project(trial, tau)) return {trial, "projection(" + text::format_double(tau) + ")"};
    }
    return {v, "min-norm"};
  }
};

struct DualCheck {
  double support_residual = 0.0;
  double margin = kInf;
  bool box_ok = true;
};

DualCheck check_dual(const Vector& eta, const Vector& kappa, const IndexSet& supp,
                     const Vector& target) {
  DualCheck out;
  std::size_t k = 0;
  for (Index i = 0; i < eta.size(); ++i) {
    if (k < supp.size() && supp[k] == i) {
      out.support_residual = std::max(out.support_residual, std::abs(eta[i] - target[i]) / kappa[i]);
      ++k;
      continue;
    }
    const double gap = kappa[i] - std::abs(eta[i]);
    out.margin = std::min(out.margin, gap);
    if (std::abs(eta[i]) > kappa[i] * (1.0 + kSaturationTol)) out.box_ok = false;
  }
  return out;
}

struct Setup {
  Vector h_star;
  CoefficientVector c_star;
  IndexSet supp;
  Vector target;
  Matrix b;  // Φ A*
};

Setup prepare(const MapPtr& w, const MapPtr& a, const WeightedL1& l1, const Vector& x_star) {
  check_length("certificate: x_star vs W domain", w->domain_dim(), x_star.size());
  check_length("certificate: weighted l1 vs W codomain", w->codomain_dim(), l1.n());
  Setup s;
  s.h_star = w->apply(x_star);
  s.c_star = l1.basis().analyze(s.h_star);
  s.supp = support(s.c_star);
  s.target = Vector::Zero(l1.n());
  for (Index i : s.supp) s.target[i] = l1.kappa()[i] * (s.c_star.values[i] > 0.0 ? 1.0 : -1.0);
  s.b = analysis_matrix(l1.basis()) * materialize(*a).transpose();
  return s;
}

}  // namespace

// ------------------------------------------------------------------ key/value text

std::string format_key_values(const KeyValues& kv, const std::string& line_prefix) {
  std::string out;
  for (const auto& [k, v] : kv) out += line_prefix + k + "=" + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& line_prefix) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line_prefix.empty()) {
      if (line.rfind(line_prefix, 0) != 0) continue;
      line = line.substr(line_prefix.size());
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[std::string(text::trim(line.substr(0, eq)))] = std::string(text::trim(line.substr(eq + 1)));
  }
  return out;
}

// ------------------------------------------------------------------ injectivity

KeyValues InjectivityReport::to_key_values() const {
  return {{"omega", join_indices(omega)},
          {"sigma_min", text::format_double(sigma_min)},
          {"a_omega_inv_norm", text::format_double(a_omega_inv_norm)},
          {"a_norm", text::format_double(a_norm)},
          {"injective", flag(injective)}};
}

InjectivityReport check_restricted_injectivity(const MapPtr& a, const WeightedL1& l1,
                                               const IndexSet& omega) {
  InjectivityReport rep;
  rep.omega = normalize_index_set(omega, a->domain_dim());
  rep.a_norm = operator_norm(*a);
  if (rep.omega.empty()) {
    rep.sigma_min = kInf;
    rep.a_omega_inv_norm = 0.0;
    rep.injective = true;
    return rep;
  }
  const Matrix a_omega = materialize(*restrict(a, rep.omega, l1.basis_ptr()));
  if (static_cast<Index>(rep.omega.size()) > a->codomain_dim()) {
    rep.sigma_min = 0.0;
  } else {
    Eigen::JacobiSVD<Matrix> svd(a_omega);
    rep.sigma_min = svd.singularValues().minCoeff();
  }
  rep.injective = rep.sigma_min > 1e-10 * rep.a_norm;
  rep.a_omega_inv_norm = rep.injective ? 1.0 / rep.sigma_min : kInf;
  return rep;
}

// ------------------------------------------------------------------ certificates

double SourceCertificateRelaxed::source_norm() const {
  return std::sqrt(u.squaredNorm() + v.squaredNorm());
}

KeyValues SourceCertificateRelaxed::to_key_values() const {
  return {{"certificate", "relaxed"},
          {"method", method},
          {"support", join_indices(support)},
          {"omega_eta", join_indices(eta.omega)},
          {"norm_u", text::format_double(u.norm())},
          {"norm_v", text::format_double(v.norm())},
          {"norm_uv", text::format_double(source_norm())},
          {"residual_u", text::format_double(residual_u)},
          {"support_residual", text::format_double(support_residual)},
          {"saturation_margin", text::format_double(saturation_margin)},
          {"m_eta", text::format_double(eta.margin)},
          {"source_ok", flag(source_ok)},
          {"support_ok", flag(support_ok)},
          {"box_ok", flag(box_ok)},
          {"strictly_complementary", flag(strictly_complementary)},
          {"valid", flag(valid)}};
}

KeyValues SourceCertificateStrict::to_key_values() const {
  return {{"certificate", "strict"},
          {"method", method},
          {"support", join_indices(support)},
          {"omega_eta", join_indices(eta.omega)},
          {"norm_nu", text::format_double(nu.norm())},
          {"split_residual", text::format_double(split_residual)},
          {"support_residual", text::format_double(support_residual)},
          {"saturation_margin", text::format_double(saturation_margin)},
          {"m_eta", text::format_double(eta.margin)},
          {"split_ok", flag(split_ok)},
          {"support_ok", flag(support_ok)},
          {"box_ok", flag(box_ok)},
          {"strictly_complementary", flag(strictly_complementary)},
          {"valid", flag(valid)}};
}

SourceCertificateRelaxed find_certificate_relaxed(const MapPtr& w, const MapPtr& a,
                                                  const WeightedL1& l1, const Vector& x_star,
                                                  const CertificateOptions& opts) {
  const Setup s = prepare(w, a, l1, x_star);
  SourceCertificateRelaxed cert;
  cert.support = s.supp;

  // Step 1: W*u = x⋆ in least squares.
  const Matrix wt = materialize(*w).transpose();
  cert.u = min_norm_lstsq(wt, x_star);
  cert.residual_u = (wt * cert.u - x_star).norm();
  cert.source_ok = cert.residual_u <= opts.source_tol * std::max(x_star.norm(), 1e-300);

  // Step 2: v with A*v − u ∈ ∂‖h⋆‖_{1,κ}.
  const Vector r = l1.basis().analyze(cert.u).values;
  const DualSearch search{s.b, r, l1.kappa(), s.supp, s.target, opts};
  auto [v, method] = search.run();
  cert.v = std::move(v);
  cert.method = std::move(method);
  Vector eta = search.eta_of(cert.v);
  const DualCheck chk = check_dual(eta, l1.kappa(), s.supp, s.target);
  cert.support_residual = chk.support_residual;
  cert.saturation_margin = chk.margin;
  cert.support_ok = chk.support_residual <= opts.support_tol;
  cert.box_ok = chk.box_ok;
  cert.strictly_complementary = chk.margin > 0.0;
  cert.eta = make_subgradient(l1, std::move(eta));
  cert.valid = cert.source_ok && cert.support_ok && cert.box_ok;
  return cert;
}

double strict_split_residual(const MapPtr& w, const MapPtr& a, const WeightedL1& l1,
                             const SourceCertificateStrict& cert) {
  const Vector eta_h = l1.basis().synthesize(cert.eta.eta);
  return (w->adjoint_apply(a->adjoint_apply(cert.nu)) - cert.xi - w->adjoint_apply(eta_h)).norm();
}

SourceCertificateStrict find_certificate_strict(const MapPtr& w, const MapPtr& a,
                                                const WeightedL1& l1, const Vector& x_star,
                                                const CertificateOptions& opts) {
  const Setup s = prepare(w, a, l1, x_star);
  SourceCertificateStrict cert;
  cert.support = s.supp;
  cert.xi = x_star;

  // W*(A*ν − η) = x⋆: least-squares pre-image p of x⋆ under W*, then a dual
  // element with A*ν − η = p and η admissible.
  const Matrix wt = materialize(*w).transpose();
  const Vector p = min_norm_lstsq(wt, x_star);
  const Vector r = l1.basis().analyze(p).values;
  const DualSearch search{s.b, r, l1.kappa(), s.supp, s.target, opts};
  auto [nu, method] = search.run();
  cert.nu = std::move(nu);
  cert.method = std::move(method);
  Vector eta = search.eta_of(cert.nu);
  const DualCheck chk = check_dual(eta, l1.kappa(), s.supp, s.target);
  cert.support_residual = chk.support_residual;
  cert.saturation_margin = chk.margin;
  cert.support_ok = chk.support_residual <= opts.support_tol;
  cert.box_ok = chk.box_ok;
  cert.strictly_complementary = chk.margin > 0.0;
  cert.eta = make_subgradient(l1, std::move(eta));
  cert.split_residual = strict_split_residual(w, a, l1, cert);
  cert.split_ok = cert.split_residual <= opts.source_tol * std::max(1.0, x_star.norm());
  cert.valid = cert.split_ok && cert.support_ok && cert.box_ok;
  return cert;
}

// ------------------------------------------------------------------ constants

RateConstants RateConstants::compute(double big_c, double source_norm, double m_eta,
                                     double a_norm, double a_inv_norm) {
  if (!(big_c > 0.0)) throw Error("rate constants: C must be positive");
  if (!(m_eta > 0.0)) throw Error("rate constants: m[eta] must be positive");
  RateConstants k;
  k.big_c = big_c;
  k.source_norm = source_norm;
  k.m_eta = m_eta;
  k.a_norm = a_norm;
  k.a_inv_norm = a_inv_norm;
  const double lin = 1.0 + big_c * source_norm;
  k.c = lin * lin / (2.0 * big_c);
  // m[η] = +inf (every index saturated) drops the tail term.
  const double tail = std::isinf(m_eta) ? 0.0 : (1.0 + a_inv_norm * a_norm) / m_eta * k.c;
  k.d = 2.0 * a_inv_norm * lin + tail;
  return k;
}

KeyValues RateConstants::to_key_values() const {
  return {{"C", text::format_double(big_c)},
          {"c", text::format_double(c)},
          {"d", text::format_double(d)},
          {"source_norm", text::format_double(source_norm)},
          {"m_eta", text::format_double(m_eta)},
          {"a_norm", text::format_double(a_norm)},
          {"a_inv_norm", text::format_double(a_inv_norm)}};
}

namespace {

void require_rate_inputs(bool valid, const Subgradient& eta, const InjectivityReport& inj) {
  if (!valid) throw Error("rate constants: certificate is not valid");
  if (!inj.injective) throw Error("rate constants: restricted operator is not injective");
  if (inj.omega != eta.omega) throw Error("rate constants: injectivity report is not for Omega[eta]");
}

}  // namespace

RateConstants rate_constants_relaxed(const SourceCertificateRelaxed& cert,
                                     const InjectivityReport& inj, double big_c, double a_norm) {
  require_rate_inputs(cert.valid, cert.eta, inj);
  return RateConstants::compute(big_c, cert.source_norm(), cert.eta.margin, a_norm,
                                inj.a_omega_inv_norm);
}

RateConstants rate_constants_strict(const SourceCertificateStrict& cert,
                                    const InjectivityReport& inj, double big_c, double a_norm) {
  require_rate_inputs(cert.valid, cert.eta, inj);
  return RateConstants::compute(big_c, cert.nu.norm(), cert.eta.margin, a_norm,
                                inj.a_omega_inv_norm);
}

// ------------------------------------------------------------------ bound checks

VariationalBoundReport check_variational_bounds(const LinearMap& m, const Vector& source,
                                                const Vector& x_sol, const Vector& y_delta,
                                                double delta, double alpha, double q_bregman,
                                                BoundSlack slack) {
  check_length("variational bounds: source vs M codomain", m.codomain_dim(), source.size());
  if (!(alpha > 0.0)) throw Error("variational bounds: alpha must be positive");
  VariationalBoundReport rep;
  rep.slack = slack;
  const double eta_norm = source.norm();
  rep.residual_lhs = (m.apply(x_sol) - y_delta).norm();
  rep.residual_rhs = delta + 2.0 * alpha * eta_norm;
  rep.bregman_lhs = q_bregman;
  rep.bregman_rhs = (delta + alpha * eta_norm) * (delta + alpha * eta_norm) / (2.0 * alpha);
  rep.residual_pass = slack.holds(rep.residual_lhs, rep.residual_rhs);
  rep.bregman_pass = slack.holds(rep.bregman_lhs, rep.bregman_rhs);
  return rep;
}

NormBoundReport check_norm_bound(const MapPtr& a, const WeightedL1& l1, const IndexSet& omega,
                                 const Vector& h, const Vector& h_star,
                                 const InjectivityReport& inj, const Subgradient* eta,
                                 BoundSlack slack) {
  const IndexSet om = normalize_index_set(omega, l1.n());
  if (inj.omega != om) throw Error("norm bound: injectivity report is for a different index set");
  if (!inj.injective) throw Error("norm bound: A restricted to omega is not injective");
  const Vector cs = l1.basis().analyze(h_star).values;
  const Vector ch = l1.basis().analyze(h).values;
  const IndexSet off = complement(om, l1.n());
  double off_energy = 0.0, tail = 0.0;
  for (Index i : off) {
    off_energy += cs[i] * cs[i];
    tail += std::abs(ch[i]);
  }
  if (std::sqrt(off_energy) > 1e-10 * std::max(1.0, h_star.norm())) {
    throw Error("norm bound: h_star is not contained in H_omega");
  }
  NormBoundReport rep;
  rep.lhs = (h - h_star).norm();
  const double data_term = inj.a_omega_inv_norm * (a->apply(h) - a->apply(h_star)).norm();
  const double factor = 1.0 + inj.a_omega_inv_norm * inj.a_norm;
  rep.rhs_l1 = data_term + factor * tail;
  rep.l1_pass = slack.holds(rep.lhs, rep.rhs_l1);
  if (eta != nullptr) {
    if (eta->omega != om) throw Error("norm bound: omega must equal Omega[eta]");
    rep.has_bregman = true;
    const double tail_term =
        std::isinf(eta->margin) ? 0.0 : factor / eta->margin * bregman_l1(l1, *eta, h, h_star);
    rep.rhs_bregman = data_term + tail_term;
    rep.bregman_pass = slack.holds(rep.lhs, rep.rhs_bregman);
  }
  return rep;
}

}  // namespace coreg
