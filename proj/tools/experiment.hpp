#pragma once

// Config-driven experiment runner behind the gcsim command-line tool.
//
// Config files are line oriented: `key = value`, one value per line, `#`
// starts a comment, and repeating a list key appends to the list. Every
// diagnostic carries the line it refers to (0 when the problem is a missing
// key).

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gcsim/gcsim.hpp"

namespace gcsim::cli {

inline constexpr std::string_view kCsvHeader = "experiment,d,k,sigma,n,method,r,m,crn,beta,value,stderr";

enum class ExperimentKind { gibbs_marginals, ic_vs_beta, gc_vs_sigma, gc_vs_d, cost_comparison, correlated_elogz };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::gibbs_marginals: return "gibbs_marginals";
    case ExperimentKind::ic_vs_beta: return "ic_vs_beta";
    case ExperimentKind::gc_vs_sigma: return "gc_vs_sigma";
    case ExperimentKind::gc_vs_d: return "gc_vs_d";
    case ExperimentKind::cost_comparison: return "cost_comparison";
    case ExperimentKind::correlated_elogz: return "correlated_elogz";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::gibbs_marginals, ExperimentKind::ic_vs_beta, ExperimentKind::gc_vs_sigma,
                 ExperimentKind::gc_vs_d, ExperimentKind::cost_comparison, ExperimentKind::correlated_elogz})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct Diagnostic {
  int line = 0;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, std::vector<Diagnostic> diags)
      : std::runtime_error("invalid config"), path_(std::move(path)), diags_(std::move(diags)) {}
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::vector<Diagnostic> diags_;
};

inline std::string format_diagnostic(const std::string& path, const Diagnostic& d) {
  return path + ":" + std::to_string(d.line) + ": " + d.message;
}

// ---------------------------------------------------------------------------
// Raw key/value layer

struct ConfigEntry {
  std::string value;  // empty for `key =` with nothing after it
  int line = 0;
};

struct RawConfig {
  std::map<std::string, std::vector<ConfigEntry>> entries;
  std::vector<std::string> lines;  // verbatim text, for the manifest echo
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline RawConfig parse_raw_config(std::string_view text, std::vector<Diagnostic>& diags) {
  RawConfig raw;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    raw.lines.push_back(line);
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      diags.push_back({number, "expected 'key = value'"});
      continue;
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) {
      diags.push_back({number, "missing key before '='"});
      continue;
    }
    raw.entries[key].push_back({trim(std::string_view(body).substr(eq + 1)), number});
  }
  return raw;
}

// ---------------------------------------------------------------------------
// Typed config

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::gc_vs_sigma;
  std::vector<std::size_t> d;
  std::vector<std::size_t> k;  // empty: unconstrained space
  std::vector<double> sigma;
  int n = 100;
  std::optional<std::string> mu0;  // bit string; default leading k ones (sparse) or 1010... (unconstrained)
  std::vector<double> betas;       // explicit grid, or generated from the fields below
  double beta_min = 0.0, beta_max = 0.0;
  std::size_t beta_count = 0;
  bool beta_log_spaced = true;
  std::vector<Method> methods{Method::exhaustive};
  std::vector<CostKind> costs{CostKind::squared_l2};
  std::vector<CrnScheme> crn{CrnScheme::crn3};
  std::size_t r = 100;
  std::size_t m = 100;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string output;
  std::string covariance = "identity";
  double rho = 0.0;
  std::size_t p = 50;
  std::string yh = "exact";
  std::string inner = "sample";
  bool oracle = false;
  std::vector<std::string> echo;  // config text

  BetaGrid beta_grid() const {
    if (!betas.empty()) return BetaGrid(betas);
    return beta_log_spaced ? BetaGrid::log_spaced(beta_min, beta_max, beta_count)
                           : BetaGrid::linear(beta_min, beta_max, beta_count);
  }
};

namespace detail {

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

class Reader {
 public:
  Reader(const RawConfig& raw, std::vector<Diagnostic>& diags) : raw_(raw), diags_(diags) {}

  const std::vector<ConfigEntry>* all(const std::string& key) {
    seen_.push_back(key);
    auto it = raw_.entries.find(key);
    return it == raw_.entries.end() ? nullptr : &it->second;
  }

  // Single-valued key: the last of several occurrences is flagged.
  const ConfigEntry* one(const std::string& key) {
    const auto* v = all(key);
    if (!v) return nullptr;
    if (v->size() > 1) diags_.push_back({(*v)[1].line, "key '" + key + "' given more than once"});
    if (v->front().value.empty()) {
      diags_.push_back({v->front().line, "key '" + key + "' has no value"});
      return nullptr;
    }
    return &v->front();
  }

  template <typename T>
  std::optional<T> number(const std::string& key) {
    const auto* e = one(key);
    if (!e) return std::nullopt;
    T v{};
    if (!parse_number(e->value, v)) {
      diags_.push_back({e->line, "key '" + key + "': cannot parse '" + e->value + "' as a number"});
      return std::nullopt;
    }
    return v;
  }

  // List key: blank values declare the key without adding to the list.
  template <typename T>
  std::optional<std::vector<T>> numbers(const std::string& key, int& first_line) {
    const auto* v = all(key);
    if (!v) return std::nullopt;
    first_line = v->front().line;
    std::vector<T> out;
    for (const auto& e : *v) {
      if (e.value.empty()) continue;
      T x{};
      if (!parse_number(e.value, x)) {
        diags_.push_back({e.line, "key '" + key + "': cannot parse '" + e.value + "' as a number"});
        continue;
      }
      out.push_back(x);
    }
    return out;
  }

  int line_of(const std::string& key) const {
    auto it = raw_.entries.find(key);
    return it == raw_.entries.end() ? 0 : it->second.front().line;
  }

  void report_unknown() {
    for (const auto& [key, entries] : raw_.entries)
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
        diags_.push_back({entries.front().line, "unknown key '" + key + "'"});
  }

 private:
  const RawConfig& raw_;
  std::vector<Diagnostic>& diags_;
  std::vector<std::string> seen_;
};

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

template <typename Enum, typename Parse>
std::vector<Enum> enum_list(Reader& r, const std::string& key, Parse parse, std::vector<Enum> fallback,
                            std::vector<Diagnostic>& diags) {
  const auto* v = r.all(key);
  if (!v) return fallback;
  std::vector<Enum> out;
  for (const auto& e : *v) {
    if (e.value.empty()) continue;
    try {
      out.push_back(parse(e.value));
    } catch (const std::invalid_argument& ex) {
      diags.push_back({e.line, ex.what()});
    }
  }
  if (out.empty()) diags.push_back({v->front().line, "list '" + key + "' is empty"});
  return out;
}

}  // namespace detail

// Builds a typed config and collects every problem found. The config is
// runnable exactly when the diagnostic list is empty.
inline ExperimentConfig interpret_config(const RawConfig& raw, std::vector<Diagnostic>& diags) {
  ExperimentConfig c;
  c.echo = raw.lines;
  detail::Reader r(raw, diags);

  if (const auto* e = r.one("experiment")) {
    if (auto k = parse_experiment_kind(e->value)) c.kind = *k;
    else diags.push_back({e->line, "unknown experiment '" + e->value + "'"});
  } else if (!r.all("experiment")) {
    diags.push_back({0, "missing required key 'experiment'"});
  }

  if (auto s = r.number<std::uint64_t>("seed")) c.seed = *s;
  else if (!r.all("seed")) diags.push_back({0, "missing required key 'seed' (runs are never seeded from the clock)"});

  // d: list and/or `d_range = start stop step`
  int d_line = 0;
  if (auto v = r.numbers<std::size_t>("d", d_line)) c.d = *v;
  if (const auto* e = r.one("d_range")) {
    const auto parts = detail::split_ws(e->value);
    std::size_t a = 0, b = 0, step = 0;
    if (parts.size() != 3 || !detail::parse_number(parts[0], a) || !detail::parse_number(parts[1], b) ||
        !detail::parse_number(parts[2], step) || step == 0 || b < a) {
      diags.push_back({e->line, "d_range expects 'start stop step' with start <= stop and step > 0"});
    } else {
      for (std::size_t x = a; x <= b; x += step) c.d.push_back(x);
    }
    d_line = d_line ? d_line : e->line;
  }
  if (c.d.empty()) diags.push_back({d_line, "dimension list 'd' is empty"});
  for (auto d : c.d)
    if (d == 0) diags.push_back({d_line, "dimension d must be positive"});

  int k_line = 0;
  if (auto v = r.numbers<std::size_t>("k", k_line)) {
    c.k = *v;
    if (c.k.empty()) diags.push_back({k_line, "sparsity list 'k' is empty"});
  }
  for (auto k : c.k)
    for (auto d : c.d)
      if (k > d) diags.push_back({k_line, "k=" + std::to_string(k) + " exceeds d=" + std::to_string(d)});

  int s_line = 0;
  if (auto v = r.numbers<double>("sigma", s_line)) c.sigma = *v;
  if (const auto* e = r.one("sigma_range")) {
    const auto parts = detail::split_ws(e->value);
    double a = 0, b = 0;
    std::size_t count = 0;
    if (parts.size() != 3 || !detail::parse_number(parts[0], a) || !detail::parse_number(parts[1], b) ||
        !detail::parse_number(parts[2], count) || count == 0 || b < a) {
      diags.push_back({e->line, "sigma_range expects 'lo hi count' with lo <= hi and count > 0"});
    } else {
      for (std::size_t i = 0; i < count; ++i)
        c.sigma.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    s_line = s_line ? s_line : e->line;
  }
  if (c.sigma.empty()) diags.push_back({s_line, "noise list 'sigma' is empty"});
  for (double s : c.sigma)
    if (!(s > 0.0) || !std::isfinite(s)) diags.push_back({s_line, "sigma values must be positive"});

  if (auto n = r.number<int>("n")) {
    if (*n < 1) diags.push_back({r.line_of("n"), "n must be >= 1"});
    c.n = *n;
  }

  if (const auto* e = r.one("mu0")) {
    c.mu0 = e->value;
    if (e->value.find_first_not_of("01") != std::string::npos) {
      diags.push_back({e->line, "mu0 must be a string of 0/1 characters"});
    } else {
      for (auto d : c.d)
        if (d != e->value.size())
          diags.push_back({e->line, "mu0 has length " + std::to_string(e->value.size()) + " but d=" + std::to_string(d)});
      const auto ones = static_cast<std::size_t>(std::count(e->value.begin(), e->value.end(), '1'));
      for (auto k : c.k)
        if (k != ones)
          diags.push_back({e->line, "mu0 has " + std::to_string(ones) + " ones but k=" + std::to_string(k)});
    }
  }

  // beta grid
  int b_line = 0;
  if (auto v = r.numbers<double>("beta", b_line)) {
    c.betas = *v;
    if (c.betas.empty()) diags.push_back({b_line, "beta list is empty"});
  }
  const bool large_grid = c.kind == ExperimentKind::cost_comparison || c.kind == ExperimentKind::gc_vs_d;
  c.beta_min = 0.01;
  c.beta_max = large_grid ? 30.0 : (c.k.empty() ? 20.0 : 10.0);
  c.beta_count = large_grid ? 100 : (c.k.empty() ? 100 : 20);
  if (auto v = r.number<double>("beta_min")) c.beta_min = *v;
  if (auto v = r.number<double>("beta_max")) c.beta_max = *v;
  if (auto v = r.number<std::size_t>("beta_count")) c.beta_count = *v;
  if (const auto* e = r.one("beta_spacing")) {
    if (e->value == "log") c.beta_log_spaced = true;
    else if (e->value == "linear") c.beta_log_spaced = false;
    else diags.push_back({e->line, "beta_spacing must be 'log' or 'linear'"});
  }
  try {
    (void)c.beta_grid();
  } catch (const std::exception& ex) {
    const int line = b_line ? b_line : std::max({r.line_of("beta_min"), r.line_of("beta_max"), r.line_of("beta_count")});
    if (!(c.betas.empty() && b_line)) diags.push_back({line, std::string("invalid beta grid: ") + ex.what()});
  }

  c.methods = detail::enum_list<Method>(r, "method", parse_method, c.methods, diags);
  c.costs = detail::enum_list<CostKind>(r, "cost", parse_cost_kind, c.costs, diags);
  c.crn = detail::enum_list<CrnScheme>(r, "crn", parse_crn_scheme, c.crn, diags);
  if (c.kind == ExperimentKind::cost_comparison && !r.all("cost"))
    c.costs = {CostKind::squared_l2, CostKind::l1_squared};

  if (auto v = r.number<std::size_t>("r")) {
    if (*v < 1) diags.push_back({r.line_of("r"), "r must be >= 1"});
    c.r = *v;
  }
  if (auto v = r.number<std::size_t>("m")) {
    if (*v < 2) diags.push_back({r.line_of("m"), "m must be >= 2"});
    c.m = *v;
  }
  if (auto v = r.number<unsigned>("workers")) c.workers = std::max(1u, *v);
  if (const auto* e = r.one("output")) c.output = e->value;
  else c.output = std::string(to_string(c.kind));

  if (const auto* e = r.one("covariance")) {
    c.covariance = e->value;
    if (c.covariance != "identity" && c.covariance != "equicorrelated" && c.covariance != "ar1")
      diags.push_back({e->line, "covariance must be identity, equicorrelated or ar1"});
  }
  if (auto v = r.number<double>("rho")) c.rho = *v;
  if (c.covariance != "identity") {
    for (auto d : c.d) {
      try {
        (void)(c.covariance == "ar1" ? Covariance::ar1(d, c.rho) : Covariance::equicorrelated(d, c.rho));
      } catch (const std::domain_error& ex) {
        diags.push_back({r.line_of("rho") ? r.line_of("rho") : r.line_of("covariance"),
                         "d=" + std::to_string(d) + ": " + ex.what()});
      }
    }
  }
  if (auto v = r.number<std::size_t>("p")) {
    if (*v < 1) diags.push_back({r.line_of("p"), "p must be >= 1"});
    c.p = *v;
  }
  if (const auto* e = r.one("yh")) {
    c.yh = e->value;
    if (c.yh != "exact" && c.yh != "eta_h") diags.push_back({e->line, "yh must be 'exact' or 'eta_h'"});
  }
  if (const auto* e = r.one("inner")) {
    c.inner = e->value;
    if (c.inner != "sample" && c.inner != "enumerate") diags.push_back({e->line, "inner must be 'sample' or 'enumerate'"});
  }
  if (const auto* e = r.one("oracle")) {
    if (e->value == "true") c.oracle = true;
    else if (e->value != "false") diags.push_back({e->line, "oracle must be 'true' or 'false'"});
  }
  r.report_unknown();

  // cross-field checks
  const int exp_line = r.line_of("experiment");
  if (c.k.empty()) {
    for (auto m : c.methods)
      if (m == Method::importance) diags.push_back({r.line_of("method"), "importance sampling needs a sparse space (set k)"});
    for (auto cost : c.costs)
      if (cost == CostKind::hits) diags.push_back({r.line_of("cost"), "the hits cost needs a sparse space (set k)"});
    if (c.kind == ExperimentKind::correlated_elogz) diags.push_back({exp_line, "correlated_elogz needs a sparse space (set k)"});
  }
  for (auto crn : c.crn)
    if (crn != CrnScheme::crn3)
      for (auto cost : c.costs)
        if (!is_linear_family(cost))
          diags.push_back({r.line_of("crn"), std::string(to_string(crn)) + " cannot be combined with cost '" +
                                                 std::string(to_string(cost)) + "'"});

  // exhaustive paths need enumerable spaces
  const bool needs_enumeration =
      c.kind == ExperimentKind::gibbs_marginals ||
      std::find(c.methods.begin(), c.methods.end(), Method::exhaustive) != c.methods.end() ||
      (c.kind == ExperimentKind::correlated_elogz && (c.oracle || c.yh == "exact"));
  if (needs_enumeration && c.kind != ExperimentKind::correlated_elogz) {
    for (auto d : c.d) {
      if (c.k.empty()) {
        if (d >= 64 || (std::uint64_t{1} << d) > kEnumerationGuard)
          diags.push_back({d_line, "(d=" + std::to_string(d) + ") is too large to enumerate; use a sampling method"});
      } else {
        for (auto k : c.k) {
          if (k > d) continue;
          const auto size = try_binomial(d, k);
          if (!size || *size > kEnumerationGuard)
            diags.push_back({d_line, "(d=" + std::to_string(d) + ", k=" + std::to_string(k) +
                                         ") is too large to enumerate; use a sampling method"});
        }
      }
    }
  }
  if (c.kind == ExperimentKind::correlated_elogz && needs_enumeration) {
    for (auto d : c.d)
      for (auto k : c.k) {
        if (k > d) continue;
        const bool too_big = c.oracle ? (!try_binomial(d, k) || *try_binomial(d, k) > kEnumerationGuard)
                                      : [&] {
                                          for (std::size_t h = (2 * k > d ? 2 * k - d : 0); h <= k; ++h)
                                            if (log_stratum_size(d, k, h) > std::log(double(kEnumerationGuard))) return true;
                                          return false;
                                        }();
        if (too_big)
          diags.push_back({d_line, "(d=" + std::to_string(d) + ", k=" + std::to_string(k) +
                                       ") is too large to enumerate for the exact stratum sums or the oracle"});
      }
  }
  return c;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// All violations in the config at `path`; empty means runnable.
inline std::vector<Diagnostic> validate_config(const std::string& path) {
  std::vector<Diagnostic> diags;
  const auto raw = parse_raw_config(read_file(path), diags);
  (void)interpret_config(raw, diags);
  std::stable_sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
  return diags;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::vector<Diagnostic> diags;
  const auto raw = parse_raw_config(read_file(path), diags);
  auto c = interpret_config(raw, diags);
  if (!diags.empty()) {
    std::stable_sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
    throw ConfigError(path, std::move(diags));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Running

struct CsvRow {
  std::string experiment;
  std::size_t d = 0;
  std::optional<std::size_t> k;
  double sigma = 0.0;
  int n = 100;
  std::string method;
  std::optional<std::size_t> r;
  std::size_t m = 0;
  std::string crn;
  std::optional<double> beta;
  double value = 0.0;
  std::optional<double> stderr_;
};

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const CsvRow& row) {
  std::string s = row.experiment + "," + std::to_string(row.d) + ",";
  if (row.k) s += std::to_string(*row.k);
  s += "," + format_double(row.sigma) + "," + std::to_string(row.n) + "," + row.method + ",";
  if (row.r) s += std::to_string(*row.r);
  s += "," + std::to_string(row.m) + "," + row.crn + ",";
  if (row.beta) s += format_double(*row.beta);
  s += "," + format_double(row.value) + ",";
  if (row.stderr_) s += format_double(*row.stderr_);
  return s;
}

// One (d, k, sigma) point of the sweep. Every method, cost and CRN scheme run
// at a point uses the point's seed, so they see the same noise draws.
struct SweepPoint {
  std::size_t index = 0;
  std::size_t d = 0;
  std::optional<std::size_t> k;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
  std::vector<SweepPoint> out;
  const std::vector<std::optional<std::size_t>> ks =
      c.k.empty() ? std::vector<std::optional<std::size_t>>{std::nullopt}
                  : std::vector<std::optional<std::size_t>>(c.k.begin(), c.k.end());
  for (auto d : c.d)
    for (const auto& k : ks)
      for (double s : c.sigma) {
        const std::size_t i = out.size();
        out.push_back({i, d, k, s, substream_seed(c.seed, StreamTag::sweep_point, i)});
      }
  return out;
}

inline ModelParams make_params(const ExperimentConfig& c, const SweepPoint& pt) {
  Hypothesis mu0;
  if (c.mu0) {
    mu0 = Hypothesis::from_string(*c.mu0);
  } else if (pt.k) {
    mu0 = Hypothesis::leading(pt.d, *pt.k);
  } else {
    std::vector<Index> s;
    for (std::size_t j = 0; j < pt.d; j += 2) s.push_back(static_cast<Index>(j));
    mu0 = Hypothesis(pt.d, std::move(s));
  }
  auto p = pt.k ? ModelParams::sparse(mu0, pt.sigma, c.n) : ModelParams::unconstrained(mu0, pt.sigma, c.n);
  if (c.covariance == "equicorrelated") p = p.with_covariance(Covariance::equicorrelated(pt.d, c.rho));
  if (c.covariance == "ar1") p = p.with_covariance(Covariance::ar1(pt.d, c.rho));
  return p;
}

namespace detail {

inline std::string experiment_label(const ExperimentConfig& c, CostKind cost) {
  std::string s(to_string(c.kind));
  if (c.kind == ExperimentKind::cost_comparison || c.costs.size() > 1) s += "/" + std::string(to_string(cost));
  return s;
}

inline std::vector<CsvRow> run_point(const ExperimentConfig& c, const SweepPoint& pt) {
  std::vector<CsvRow> rows;
  const auto params = make_params(c, pt);
  const auto grid = c.beta_grid();
  const double sqrt_m = std::sqrt(static_cast<double>(c.m));

  auto base = [&](const std::string& label) {
    CsvRow row;
    row.experiment = label;
    row.d = pt.d;
    row.k = pt.k;
    row.sigma = pt.sigma;
    row.n = c.n;
    row.m = c.m;
    return row;
  };

  if (c.kind == ExperimentKind::correlated_elogz) {
    const auto approx = c.yh == "exact" ? YhApproximator::exact() : YhApproximator::eta_h();
    const auto mode = c.inner == "enumerate" ? InnerMode::enumerate : InnerMode::sample;
    for (double beta : grid.values()) {
      const auto est = estimate_elogz_correlated(params, beta, c.m, c.p, approx, pt.seed, mode);
      auto row = base(std::string(to_string(c.kind)));
      row.method = c.yh;
      row.r = c.p;
      row.beta = beta;
      row.value = est.value;
      row.stderr_ = est.standard_error;
      rows.push_back(row);
      if (c.oracle) {
        const auto ex = exhaustive_log_z_draws(params, beta, c.m, pt.seed);
        double mean = 0.0, ss = 0.0;
        for (double v : ex) mean += v / static_cast<double>(ex.size());
        for (double v : ex) ss += (v - mean) * (v - mean);
        auto o = base(std::string(to_string(c.kind)) + "/oracle");
        o.method = "exhaustive";
        o.beta = beta;
        o.value = mean;
        o.stderr_ = std::sqrt(ss / static_cast<double>(ex.size() - 1)) / sqrt_m;
        rows.push_back(o);
      }
    }
    return rows;
  }

  for (Method method : c.methods)
    for (CostKind cost : c.costs)
      for (CrnScheme crn : c.crn) {
        EstimatorSpec spec;
        spec.method = method;
        spec.r = c.r;
        spec.m = c.m;
        spec.crn = crn;
        spec.master_seed = pt.seed;
        GcOptions opts;
        opts.cost = cost;
        const auto res = estimate_gc(params, grid, spec, opts);
        const std::string label = experiment_label(c, cost);
        auto fill = [&](CsvRow row) {
          row.method = std::string(to_string(method));
          if (method != Method::exhaustive) row.r = c.r;
          row.crn = std::string(to_string(crn));
          return row;
        };
        switch (c.kind) {
          case ExperimentKind::ic_vs_beta:
            for (std::size_t b = 0; b < grid.size(); ++b) {
              auto row = fill(base(label));
              row.beta = grid[b];
              row.value = res.per_beta_mean[b];
              row.stderr_ = std::sqrt(res.per_beta_variance[b] / static_cast<double>(res.repetitions));
              rows.push_back(row);
            }
            break;
          case ExperimentKind::gibbs_marginals: {
            // mean component-wise marginal at beta* over m fresh draws
            std::vector<double> sum(pt.d, 0.0), sumsq(pt.d, 0.0);
            for (std::size_t t = 0; t < c.m; ++t) {
              Rng rng = make_substream(pt.seed, StreamTag::inner, t);
              const auto xi = draw_noise(params, rng);
              const auto mg = pt.k ? componentwise_gibbs(res.beta_star, xi, params.sparse_space(), cost, params)
                                   : componentwise_gibbs(res.beta_star, xi, params.full_space(), cost, params);
              for (std::size_t j = 0; j < pt.d; ++j) {
                sum[j] += mg[j];
                sumsq[j] += mg[j] * mg[j];
              }
            }
            const double mm = static_cast<double>(c.m);
            for (std::size_t j = 0; j < pt.d; ++j) {
              auto row = fill(base(label + "/j" + std::to_string(j)));
              row.beta = res.beta_star;
              row.value = sum[j] / mm;
              const double var = std::max(0.0, (sumsq[j] - mm * row.value * row.value) / (mm - 1));
              row.stderr_ = std::sqrt(var / mm);
              rows.push_back(row);
            }
            break;
          }
          default: {
            auto row = fill(base(label));
            row.beta = res.beta_star;
            row.value = res.gc_estimate;
            row.stderr_ = res.standard_error();
            rows.push_back(row);
          }
        }
      }
  return rows;
}

}  // namespace detail

struct RunResult {
  std::filesystem::path csv_path;
  std::filesystem::path manifest_path;
  std::size_t rows = 0;
};

// Rows are produced per sweep point on `workers` threads and written in
// config order.
inline std::vector<CsvRow> run_rows(const ExperimentConfig& c, unsigned workers) {
  const auto points = sweep_points(c);
  std::vector<std::vector<CsvRow>> per_point(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) { per_point[i] = detail::run_point(c, points[i]); });
  std::vector<CsvRow> rows;
  for (auto& v : per_point) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

inline RunResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                const std::string& command_line = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto rows = run_rows(c, c.workers);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::filesystem::create_directories(out_dir);
  RunResult res;
  res.csv_path = out_dir / (c.output + ".csv");
  res.manifest_path = out_dir / (c.output + ".manifest.txt");
  res.rows = rows.size();

  std::ofstream csv(res.csv_path);
  if (!csv) throw std::system_error(errno, std::generic_category(), "cannot write '" + res.csv_path.string() + "'");
  csv << kCsvHeader << '\n';
  for (const auto& row : rows) csv << to_csv(row) << '\n';

  std::ofstream man(res.manifest_path);
  if (!man) throw std::system_error(errno, std::generic_category(), "cannot write '" + res.manifest_path.string() + "'");
  man << "gcsim " << GCSIM_VERSION << '\n';
  if (!command_line.empty()) man << "command: " << command_line << '\n';
  man << "experiment: " << to_string(c.kind) << '\n';
  man << "master_seed: " << c.seed << '\n';
  man << "workers: " << c.workers << '\n';
  man << "rows: " << rows.size() << '\n';
  man << "wall_time_seconds: " << format_double(wall) << '\n';
  man << "csv: " << res.csv_path.filename().string() << '\n';
  man << "sweep_points:\n";
  for (const auto& pt : sweep_points(c)) {
    man << "  " << pt.index << " d=" << pt.d << " k=" << (pt.k ? std::to_string(*pt.k) : std::string("-"))
        << " sigma=" << format_double(pt.sigma) << " seed=" << pt.seed << '\n';
  }
  man << "config:\n";
  for (const auto& line : c.echo) man << "  " << line << '\n';
  return res;
}

}  // namespace gcsim::cli
