#include "run_config.hpp"

#include "coreg/text.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coreg::cli {

namespace {

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ';';
    out += text::format_double(v[i]);
  }
  return out;
}

}  // namespace

std::string RunConfig::canonical() const {
  std::ostringstream os;
  auto kv = [&os](const char* k, const std::string& v) { os << k << '=' << v << '\n'; };
  auto d = [](double x) { return text::format_double(x); };
  kv("command", command);
  kv("model", model);
  kv("instance", instance);
  kv("n", std::to_string(n));
  kv("m", std::to_string(m));
  kv("sparsity", std::to_string(sparsity));
  kv("seed", std::to_string(seed));
  kv("noise_seed", std::to_string(resolved_noise_seed()));
  kv("delta", d(delta));
  kv("C", d(big_c));
  kv("alpha", alpha ? d(*alpha) : "");
  kv("alpha_floor", d(alpha_floor));
  kv("w_scale", d(w_scale));
  kv("deltas", join(deltas));
  kv("trials", std::to_string(trials));
  kv("jobs", std::to_string(jobs));
  kv("max_iters", std::to_string(max_iters));
  kv("tol", d(tol));
  kv("rho", d(rho));
  kv("gamma", d(gamma));
  kv("polish", polish ? "1" : "0");
  kv("reference", reference ? "1" : "0");
  kv("bounds", bounds ? "1" : "0");
  kv("out_prefix", out_prefix);
  kv("csv", csv);
  kv("svg", svg);
  kv("report", report);
  return os.str();
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const std::string& v = value;
  auto i64 = [&] { return text::parse_int(v); };
  auto u64 = [&] {
    const long long x = text::parse_int(v);
    if (x < 0) throw std::invalid_argument("expected a nonnegative integer, got '" + v + "'");
    return static_cast<std::uint64_t>(x);
  };
  auto dbl = [&] { return text::parse_double(v); };
  try {
    if (key == "command") cfg.command = v;
    else if (key == "model") cfg.model = v;
    else if (key == "instance") cfg.instance = v;
    else if (key == "n") cfg.n = i64();
    else if (key == "m") cfg.m = i64();
    else if (key == "sparsity") cfg.sparsity = i64();
    else if (key == "seed") cfg.seed = u64();
    else if (key == "noise_seed") cfg.noise_seed = u64();
    else if (key == "delta") cfg.delta = dbl();
    else if (key == "C") cfg.big_c = dbl();
    else if (key == "alpha") {
      if (v.empty()) cfg.alpha.reset();
      else cfg.alpha = dbl();
    } else if (key == "alpha_floor") cfg.alpha_floor = dbl();
    else if (key == "w_scale") cfg.w_scale = dbl();
    else if (key == "deltas") {
      cfg.deltas.clear();
      for (const auto& part : text::split(v, ';')) {
        if (!text::trim(part).empty()) cfg.deltas.push_back(text::parse_double(part));
      }
    } else if (key == "trials") cfg.trials = static_cast<int>(i64());
    else if (key == "jobs") cfg.jobs = static_cast<int>(i64());
    else if (key == "max_iters") cfg.max_iters = static_cast<int>(i64());
    else if (key == "tol") cfg.tol = dbl();
    else if (key == "rho") cfg.rho = dbl();
    else if (key == "gamma") cfg.gamma = dbl();
    else if (key == "polish") cfg.polish = parse_bool(v);
    else if (key == "reference") cfg.reference = parse_bool(v);
    else if (key == "bounds") cfg.bounds = parse_bool(v);
    else if (key == "out_prefix") cfg.out_prefix = v;
    else if (key == "csv") cfg.csv = v;
    else if (key == "svg") cfg.svg = v;
    else if (key == "report") cfg.report = v;
    else throw std::invalid_argument("unknown key");
  } catch (const std::exception& e) {
    throw std::invalid_argument("config key '" + key + "': " + e.what());
  }
}

void apply_text(RunConfig& cfg, const std::string& body) {
  std::istringstream is(body);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t(text::trim(line));
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(cfg, std::string(text::trim(t.substr(0, eq))),
                  std::string(text::trim(t.substr(eq + 1))));
  }
}

RunConfig parse_run_config(const std::string& body) {
  RunConfig cfg;
  apply_text(cfg, body);
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace coreg::cli
