#include "coreg/experiments.hpp"

#include "coreg/error.hpp"
#include "coreg/rng.hpp"
#include "coreg/text.hpp"
#include "coreg/version.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace coreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kPhantomStream = 0x7068616eULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f6973ULL;

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

Vector invert_w(const LinearMap& w, const Vector& h) {
  if (const auto* integ = dynamic_cast<const IntegrationOp*>(&w)) return integ->apply_inverse(h);
  if (dynamic_cast<const IdentityMap*>(&w) != nullptr) return h;
  throw Error("phantom: W must be an integration operator or the identity, got " +
              w.descriptor());
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ';';
    out += text::format_double(v[i]);
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

// ------------------------------------------------------------------ phantom and noise

Phantom make_phantom(Index n, Index sparsity, std::uint64_t seed, const WaveletBasis& basis,
                     const LinearMap& w) {
  if (!is_power_of_two(n)) throw Error("phantom: n must be a power of two");
  if (basis.n() != n) throw DimensionError("phantom: basis size", n, basis.n());
  check_length("phantom: W codomain", n, w.codomain_dim());
  if (sparsity < 0 || sparsity > n / 8) {
    throw Error("phantom: sparsity must lie in [0, n/8], got " + std::to_string(sparsity));
  }
  Phantom ph;
  ph.sparsity = sparsity;
  ph.seed = seed;

  const CounterRng rng(seed, kPhantomStream);
  const Index pool = std::max<Index>(1, n / 4);
  std::vector<Index> idx(static_cast<std::size_t>(pool));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::uint64_t ctr = 0;
  for (Index k = 0; k < sparsity; ++k) {
    const auto span = static_cast<std::uint64_t>(pool - k);
    const Index j = k + static_cast<Index>(rng.bits(ctr++) % span);
    std::swap(idx[k], idx[j]);
  }
  ph.support.assign(idx.begin(), idx.begin() + sparsity);
  std::sort(ph.support.begin(), ph.support.end());

  CoefficientVector c{Vector::Zero(n)};
  for (Index lambda : ph.support) {
    const double mag = 0.5 + rng.uniform(ctr++);
    const bool neg = (rng.bits(ctr++) >> 63) != 0;
    c.values[lambda] = neg ? -mag : mag;
  }
  ph.h_star = basis.synthesize(c);
  ph.x_star = invert_w(w, ph.h_star);
  return ph;
}

Vector add_noise(const Vector& y_star, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw Error("noise level must be nonnegative");
  if (delta == 0.0 || y_star.size() == 0) return y_star;
  const CounterRng rng(seed, kNoiseStream);
  Vector g(y_star.size());
  for (Index i = 0; i < g.size(); ++i) g[i] = rng.normal(static_cast<std::uint64_t>(i));
  return y_star + (delta / g.norm()) * g;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw Error("log_grid: need 0 < lo <= hi, count >= 1");
  std::vector<double> out;
  if (count == 1) return {hi};
  const double a = std::log10(hi), b = std::log10(lo);
  for (int k = 0; k < count; ++k) out.push_back(std::pow(10.0, a + (b - a) * k / (count - 1)));
  out.front() = hi;
  out.back() = lo;
  return out;
}

std::vector<double> default_deltas() { return log_grid(1e-5, 1e-2, 7); }

// ------------------------------------------------------------------ instances

RelaxedProblem Instance::relaxed(const Vector& y_delta, double alpha) const {
  return RelaxedProblem{CoRegData{w, a, y_delta, alpha, l1, {}}};
}

StrictProblem Instance::strict(const Vector& y_delta, double alpha) const {
  return StrictProblem{CoRegData{w, a, y_delta, alpha, l1, {}}};
}

Instance make_instance(MapPtr w, MapPtr a, std::shared_ptr<const WaveletBasis> basis,
                       Index sparsity, std::uint64_t seed) {
  Instance inst{InstanceSpec{}, w, a, basis, WeightedL1(basis), Phantom{}, Vector{}};
  inst.spec.n = w->domain_dim();
  inst.spec.m = a->codomain_dim();
  inst.spec.sparsity = sparsity;
  inst.spec.seed = seed;
  if (const auto* integ = dynamic_cast<const IntegrationOp*>(w.get())) inst.spec.w_scale = integ->scale();
  check_length("instance: A domain vs W codomain", w->codomain_dim(), a->domain_dim());
  inst.phantom = make_phantom(basis->n(), sparsity, seed, *basis, *w);
  inst.y_star = a->apply(inst.phantom.h_star);
  return inst;
}

Instance make_instance(const InstanceSpec& spec) {
  auto w = std::make_shared<IntegrationOp>(spec.n, spec.w_scale);
  auto a = std::make_shared<BernoulliSensing>(spec.m, spec.n, spec.seed);
  auto basis = std::make_shared<WaveletBasis>(spec.n);
  Instance inst = make_instance(w, a, basis, spec.sparsity, spec.seed);
  inst.spec = spec;
  return inst;
}

// ------------------------------------------------------------------ sweep

void SweepConfig::validate() const {
  if (deltas.empty()) throw Error("sweep: no noise levels");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || !std::isfinite(deltas[i])) throw Error("sweep: noise levels must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw Error("sweep: noise levels must be sorted descending");
  }
  if (!(big_c > 0.0) || !std::isfinite(big_c)) throw Error("sweep: C must be positive");
  if (trials < 1) throw Error("sweep: trials must be >= 1");
  if (jobs < 1) throw Error("sweep: jobs must be >= 1");
  solver.validate();
}

std::uint64_t trial_seed(std::uint64_t noise_seed, int trial) {
  return CounterRng::mix(noise_seed ^ CounterRng::mix(static_cast<std::uint64_t>(trial) + 1));
}

bool same_fields(const SweepRecord& a, const SweepRecord& b) {
  return same_double(a.delta, b.delta) && same_double(a.alpha, b.alpha) &&
         same_double(a.bregman_x, b.bregman_x) && same_double(a.err_h, b.err_h) &&
         same_double(a.residual, b.residual) && a.iterations == b.iterations &&
         same_double(a.bound_c_rhs, b.bound_c_rhs) && same_double(a.bound_d_rhs, b.bound_d_rhs) &&
         a.pass_c == b.pass_c && a.pass_d == b.pass_d;
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("fit_rate: y", static_cast<Index>(x.size()), static_cast<Index>(y.size()));
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > 1e-14 && x[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  RateFit fit;
  fit.points_used = static_cast<int>(lx.size());
  if (lx.size() < 2) {
    fit.slope = fit.intercept = fit.r_squared = kNaN;
    return fit;
  }
  const double k = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error("fit_rate: all x values coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

RateFit fit_records(const std::vector<SweepRecord>& records) {
  std::vector<double> deltas, errs;
  std::size_t i = 0;
  while (i < records.size()) {
    std::vector<double> group;
    const double d = records[i].delta;
    while (i < records.size() && records[i].delta == d) group.push_back(records[i++].err_h);
    deltas.push_back(d);
    errs.push_back(median(std::move(group)));
  }
  return fit_rate(deltas, errs);
}

bool SweepResult::all_converged() const {
  return std::all_of(records.begin(), records.end(), [](const SweepRecord& r) { return r.converged; });
}

namespace {

SweepRecord solve_record(const SweepConfig& cfg, const Instance& inst, const SweepBounds* bounds,
                         double delta, int trial) {
  SweepRecord rec;
  rec.delta = delta;
  rec.alpha = cfg.big_c * delta;
  rec.trial = trial;
  const Vector y = add_noise(inst.y_star, delta, trial_seed(cfg.noise_seed, trial));
  SolverConfig sc = cfg.solver;
  sc.trace = nullptr;

  SolveResult res;
  if (cfg.model == Model::relaxed) {
    const RelaxedProblem p = inst.relaxed(y, rec.alpha);
    res = solve_relaxed(p, sc);
    rec.err_h = (res.h - inst.phantom.h_star).norm();
    const double defect = (res.wx - res.h).squaredNorm();
    rec.residual = std::sqrt(defect + (inst.a->apply(res.h) - y).squaredNorm());
  } else {
    const StrictProblem p = inst.strict(y, rec.alpha);
    res = solve_strict(p, sc);
    rec.err_h = (res.wx - inst.phantom.h_star).norm();
    rec.residual = (inst.a->apply(res.wx) - y).norm();
  }
  rec.bregman_x = bregman_quadratic(res.x, inst.phantom.x_star);
  rec.iterations = res.iterations;
  rec.converged = res.converged;
  rec.wall_time = res.wall_time;
  if (bounds != nullptr) {
    const BoundSlack slack;
    rec.bound_c_rhs = bounds->constants.c * delta;
    rec.bound_d_rhs = bounds->constants.d * delta;
    rec.pass_c = slack.holds(rec.bregman_x, rec.bound_c_rhs) ? 1 : 0;
    rec.pass_d = slack.holds(rec.err_h, rec.bound_d_rhs) ? 1 : 0;
  } else {
    rec.bound_c_rhs = rec.bound_d_rhs = kNaN;
  }
  return rec;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg, const Instance& inst, const SweepBounds* bounds) {
  cfg.validate();
  const std::size_t total = cfg.deltas.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<SweepRecord> records(total);
  std::vector<std::string> failures(total);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < total; k = next++) {
      const double delta = cfg.deltas[k / cfg.trials];
      const int trial = static_cast<int>(k % cfg.trials);
      try {
        records[k] = solve_record(cfg, inst, bounds, delta, trial);
      } catch (const std::exception& e) {
        failures[k] = "sweep record delta=" + text::format_double(delta) +
                      " trial=" + std::to_string(trial) + ": " + e.what();
      }
    }
  };
  const int jobs = std::min<int>(cfg.jobs, static_cast<int>(total));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw SolverError(f);
  }

  SweepResult out;
  out.records = std::move(records);
  out.fit = fit_records(out.records);

  KeyValues& md = out.metadata;
  md.emplace_back("library", std::string("coreg ") + version());
  md.emplace_back("model", to_string(cfg.model));
  md.emplace_back("W", inst.w->descriptor());
  md.emplace_back("A", inst.a->descriptor());
  md.emplace_back("basis", inst.basis->descriptor());
  md.emplace_back("n", std::to_string(inst.spec.n));
  md.emplace_back("m", std::to_string(inst.spec.m));
  md.emplace_back("sparsity", std::to_string(inst.phantom.sparsity));
  md.emplace_back("phantom_seed", std::to_string(inst.phantom.seed));
  md.emplace_back("phantom_support_pool", "coarsest_quarter");
  md.emplace_back("noise_seed", std::to_string(cfg.noise_seed));
  md.emplace_back("C", text::format_double(cfg.big_c));
  md.emplace_back("trials", std::to_string(cfg.trials));
  md.emplace_back("deltas", join_doubles(cfg.deltas));
  md.emplace_back("solver", cfg.solver.describe());
  if (bounds != nullptr) {
    for (const auto& [k, v] : bounds->constants.to_key_values()) md.emplace_back("bound." + k, v);
    for (const auto& [k, v] : bounds->summary) md.emplace_back("cert." + k, v);
  } else {
    md.emplace_back("certificate", "none");
  }
  const auto unconverged = std::count_if(out.records.begin(), out.records.end(),
                                         [](const SweepRecord& r) { return !r.converged; });
  md.emplace_back("unconverged", std::to_string(unconverged));
  md.emplace_back("fit.slope", text::format_double(out.fit.slope));
  md.emplace_back("fit.intercept", text::format_double(out.fit.intercept));
  md.emplace_back("fit.r_squared", text::format_double(out.fit.r_squared));
  md.emplace_back("fit.points_used", std::to_string(out.fit.points_used));
  return out;
}

// ------------------------------------------------------------------ CSV

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {"delta",    "alpha",       "bregman_x",   "err_h",
                                                "residual", "iterations",  "bound_c_rhs", "bound_d_rhs",
                                                "pass_c",   "pass_d"};
  return cols;
}

void emit_csv(const SweepResult& result, std::ostream& os) {
  if (result.records.empty()) throw Error("emit_csv: no records");
  for (const auto& [k, v] : result.metadata) os << "# " << k << '=' << v << '\n';
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : result.records) {
    os << text::format_double(r.delta) << ',' << text::format_double(r.alpha) << ','
       << text::format_double(r.bregman_x) << ',' << text::format_double(r.err_h) << ','
       << text::format_double(r.residual) << ',' << r.iterations << ','
       << text::format_double(r.bound_c_rhs) << ',' << text::format_double(r.bound_d_rhs) << ','
       << r.pass_c << ',' << r.pass_d << '\n';
  }
}

std::string csv_text(const SweepResult& result) {
  std::ostringstream os;
  emit_csv(result, os);
  return os.str();
}

void write_csv(const SweepResult& result, const std::string& path) {
  const std::string body = csv_text(result);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open for writing: " + path);
  f << body;
  if (!f) throw Error("write failed: " + path);
}

SweepResult parse_csv(const std::string& text_in) {
  SweepResult out;
  std::istringstream is(text_in);
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body(text::trim(std::string_view(line).substr(1)));
      const auto eq = body.find('=');
      if (eq != std::string::npos) out.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    const auto cells = text::split(line, ',');
    if (static_cast<int>(cells.size()) != kCsvColumns) {
      throw Error("csv line " + std::to_string(line_no) + ": expected " +
                  std::to_string(kCsvColumns) + " columns, got " + std::to_string(cells.size()));
    }
    if (!header_seen) {
      if (cells != csv_columns()) throw Error("csv: unexpected column header");
      header_seen = true;
      continue;
    }
    SweepRecord r;
    r.delta = text::parse_double(cells[0]);
    r.alpha = text::parse_double(cells[1]);
    r.bregman_x = text::parse_double(cells[2]);
    r.err_h = text::parse_double(cells[3]);
    r.residual = text::parse_double(cells[4]);
    r.iterations = static_cast<int>(text::parse_int(cells[5]));
    r.bound_c_rhs = text::parse_double(cells[6]);
    r.bound_d_rhs = text::parse_double(cells[7]);
    r.pass_c = static_cast<int>(text::parse_int(cells[8]));
    r.pass_d = static_cast<int>(text::parse_int(cells[9]));
    out.records.push_back(r);
  }
  if (!header_seen) throw Error("csv: missing column header");
  // Trial indices follow from the row order.
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    out.records[i].trial = (i > 0 && out.records[i].delta == out.records[i - 1].delta)
                               ? out.records[i - 1].trial + 1
                               : 0;
  }
  if (!out.records.empty()) out.fit = fit_records(out.records);
  return out;
}

std::string determinism_hash(const std::string& csv) { return text::hex64(text::fnv1a(csv)); }

// ------------------------------------------------------------------ SVG

void emit_svg(const SweepResult& result, std::ostream& os) {
  if (result.records.empty()) throw Error("emit_svg: no records");
  constexpr double kW = 640, kH = 480, kPad = 60;
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : result.records) {
    if (r.delta > 0.0 && r.err_h > 1e-14) pts.emplace_back(std::log10(r.delta), std::log10(r.err_h));
  }
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x); x1 = std::max(x1, x);
      y0 = std::min(y0, y); y1 = std::max(y1, y);
    }
  }
  x0 = std::floor(x0); x1 = std::ceil(x1);
  y0 = std::floor(y0); y1 = std::ceil(y1);
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto sx = [&](double x) { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); };
  auto sy = [&](double y) { return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad); };

  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<g stroke=\"#ddd\">\n";
  for (double x = x0; x <= x1; x += 1) {
    os << "<line x1=\"" << sx(x) << "\" y1=\"" << sy(y0) << "\" x2=\"" << sx(x) << "\" y2=\"" << sy(y1) << "\"/>\n";
  }
  for (double y = y0; y <= y1; y += 1) {
    os << "<line x1=\"" << sx(x0) << "\" y1=\"" << sy(y) << "\" x2=\"" << sx(x1) << "\" y2=\"" << sy(y) << "\"/>\n";
  }
  os << "</g>\n";
  for (double x = x0; x <= x1; x += 1) {
    os << "<text x=\"" << sx(x) << "\" y=\"" << kH - kPad + 18 << "\" text-anchor=\"middle\">1e" << x << "</text>\n";
  }
  for (double y = y0; y <= y1; y += 1) {
    os << "<text x=\"" << kPad - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">1e" << y << "</text>\n";
  }
  os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\">noise level</text>\n";
  os << "<text x=\"15\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 15 " << kH / 2
     << ")\" text-anchor=\"middle\">error</text>\n";
  for (const auto& [x, y] : pts) {
    os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  }
  const RateFit& f = result.fit;
  if (std::isfinite(f.slope)) {
    // fit is in natural logs
    auto fy = [&](double lx10) { return (f.intercept + f.slope * lx10 * std::log(10.0)) / std::log(10.0); };
    os << "<line x1=\"" << sx(x0) << "\" y1=\"" << sy(fy(x0)) << "\" x2=\"" << sx(x1) << "\" y2=\""
       << sy(fy(x1)) << "\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << kPad + 8 << "\" y=\"" << kPad - 10 << "\">slope "
       << text::format_double(f.slope) << ", r2 " << text::format_double(f.r_squared) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_svg(const SweepResult& result, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open for writing: " + path);
  emit_svg(result, f);
  if (!f) throw Error("write failed: " + path);
}

}  // namespace coreg
