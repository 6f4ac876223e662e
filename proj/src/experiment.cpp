#include "sharpdecay/experiment.hpp"

#include <openssl/sha.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <variant>

#include "sharpdecay/billiards.hpp"
#include "sharpdecay/correlator.hpp"
#include "sharpdecay/dynmaps.hpp"
#include "sharpdecay/fitkit.hpp"
#include "sharpdecay/inducing.hpp"
#include "sharpdecay/renewal.hpp"
#include "sharpdecay/seqkit.hpp"

namespace sharpdecay::experiment {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Validated access to a JSON object, tracking the dotted path for errors.

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void allow(const std::set<std::string>& keys) const {
    for (const auto& [k, _] : j_.items())
      if (!keys.count(k)) throw ConfigError(field(k), "unknown key");
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  Reader object(const std::string& k) const {
    if (!has(k)) throw ConfigError(field(k), "missing required object");
    return Reader(j_.at(k), field(k));
  }

  double number(const std::string& k, std::optional<double> def = std::nullopt, double lo = -INFINITY, double hi = INFINITY) const {
    if (!has(k)) {
      if (!def) throw ConfigError(field(k), "missing required number");
      return *def;
    }
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(field(k), "expected a number");
    const double x = v.get<double>();
    if (!(x >= lo && x <= hi)) throw ConfigError(field(k), "value " + v.dump() + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
    return x;
  }

  std::int64_t integer(const std::string& k, std::optional<std::int64_t> def = std::nullopt, std::int64_t lo = INT64_MIN,
                       std::int64_t hi = INT64_MAX) const {
    if (!has(k)) {
      if (!def) throw ConfigError(field(k), "missing required integer");
      return *def;
    }
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(field(k), "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi) throw ConfigError(field(k), "value " + v.dump() + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }

  std::string string(const std::string& k, std::optional<std::string> def = std::nullopt,
                     const std::set<std::string>& choices = {}) const {
    if (!has(k)) {
      if (!def) throw ConfigError(field(k), "missing required string");
      return *def;
    }
    const auto& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(field(k), "expected a string");
    auto s = v.get<std::string>();
    if (!choices.empty() && !choices.count(s)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      throw ConfigError(field(k), "'" + s + "' is not one of: " + list);
    }
    return s;
  }

  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    if (!j_.at(k).is_boolean()) throw ConfigError(field(k), "expected true or false");
    return j_.at(k).get<bool>();
  }

  std::vector<double> numbers(const std::string& k, std::size_t count) const {
    if (!has(k)) throw ConfigError(field(k), "missing required array");
    const auto& v = j_.at(k);
    if (!v.is_array() || v.size() != count) throw ConfigError(field(k), "expected an array of " + std::to_string(count) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i) {
      if (!v[i].is_number()) throw ConfigError(field(k) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  const Json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  static std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }

 private:
  const Json& j_;
  std::string path_;
};

const Json& empty_object() {
  static const Json empty = Json::object();
  return empty;
}

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

// ---------------------------------------------------------------------------
// Systems and observables.

struct SystemCfg {
  std::string kind;  // lsv | doubling | radial_hv | stadium | semidispersing
  double gamma = 0.5;
  double x_threshold = 0.5;
  double ell = 2.0, radius = 1.0;
  double width = 1.0, height = 1.0;
  std::vector<billiards::Scatterer> scatterers;

  bool is_table() const { return kind == "stadium" || kind == "semidispersing"; }
  std::string describe() const {
    if (kind == "lsv") return "lsv gamma=" + num(gamma);
    if (kind == "doubling") return "doubling";
    if (kind == "radial_hv") return "radial_hv gamma=" + num(gamma);
    if (kind == "stadium") return "stadium ell=" + num(ell) + " radius=" + num(radius);
    return "semidispersing rect=" + num(width) + "x" + num(height) + " scatterers=" + std::to_string(scatterers.size());
  }
};

SystemCfg parse_system(const Reader& root) {
  SystemCfg s;
  if (root.has("map") == root.has("table")) throw ConfigError("map", "exactly one of 'map' or 'table' is required");
  if (root.has("map")) {
    const Reader m = root.object("map");
    m.allow({"kind", "gamma", "x_threshold"});
    s.kind = m.string("kind", std::nullopt, {"lsv", "doubling", "radial_hv"});
    if (s.kind == "lsv") s.gamma = m.number("gamma", std::nullopt, 1e-6, 1.0 - 1e-6);
    if (s.kind == "radial_hv") s.gamma = m.number("gamma", std::nullopt, 1e-6, 2.0 - 1e-6);
    if (s.kind == "doubling" && m.has("gamma")) throw ConfigError(m.field("gamma"), "the doubling map has no gamma");
    if (s.kind == "radial_hv" && m.has("x_threshold")) throw ConfigError(m.field("x_threshold"), "X is the outer annulus for radial_hv");
    if (m.has("x_threshold")) s.x_threshold = m.number("x_threshold", 0.5, 1e-9, 1.0 - 1e-9);
    return s;
  }
  const Reader t = root.object("table");
  t.allow({"kind", "ell", "radius", "rect", "scatterers"});
  s.kind = t.string("kind", std::nullopt, {"stadium", "semidispersing"});
  if (s.kind == "stadium") {
    if (t.has("rect") || t.has("scatterers")) throw ConfigError(t.field("rect"), "stadium tables take only ell and radius");
    s.ell = t.number("ell", 2.0, 0.0);
    s.radius = t.number("radius", 1.0, 1e-12);
  } else {
    if (t.has("ell") || t.has("radius")) throw ConfigError(t.field("ell"), "semidispersing tables take rect and scatterers");
    const auto rect = t.numbers("rect", 2);
    s.width = rect[0];
    s.height = rect[1];
    if (!(s.width > 0 && s.height > 0)) throw ConfigError(t.field("rect"), "width and height must be positive");
    if (!t.has("scatterers") || !t.raw().at("scatterers").is_array()) throw ConfigError(t.field("scatterers"), "expected an array");
    const auto& arr = t.raw().at("scatterers");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Reader sc(arr[i], t.field("scatterers") + "[" + std::to_string(i) + "]");
      sc.allow({"center", "radius"});
      const auto c = sc.numbers("center", 2);
      s.scatterers.push_back({{c[0], c[1]}, sc.number("radius", std::nullopt, 1e-12)});
    }
  }
  return s;
}

using AnySystem = std::variant<maps::LsvSystem, maps::DoublingSystem, maps::RadialHvSystem, billiards::BilliardSystem>;

AnySystem build_system(const SystemCfg& s) {
  if (s.kind == "lsv") {
    maps::LsvSystem sys{maps::LsvSpec(s.gamma)};
    sys.x_threshold = s.x_threshold;
    return sys;
  }
  if (s.kind == "doubling") {
    maps::DoublingSystem sys;
    sys.x_threshold = s.x_threshold;
    return sys;
  }
  if (s.kind == "radial_hv") return maps::RadialHvSystem{maps::RadialHvSpec(s.gamma)};
  if (s.kind == "stadium") return billiards::BilliardSystem(billiards::build_stadium(s.ell, s.radius), billiards::ReturnSet::FirstArcCollisions);
  try {
    return billiards::BilliardSystem(billiards::build_semidispersing(s.width, s.height, s.scatterers), billiards::ReturnSet::ScattererCollisions);
  } catch (const InvalidArgument& e) {
    throw ConfigError("table.scatterers", e.what());
  }
}

/// 1/mu(X) where it is known in closed form.
std::optional<double> kac_reference(const AnySystem& sys) {
  if (const auto* d = std::get_if<maps::DoublingSystem>(&sys)) return 1.0 / (1.0 - d->x_threshold);
  if (const auto* b = std::get_if<billiards::BilliardSystem>(&sys))
    if (b->table.kind == "stadium") return 1.0 / b->analytic_measure_X();
  return std::nullopt;
}

struct ObsCfg {
  std::string kind = "indicator_X_mollified";
  double width = 0.05;
  double value = 1.0;
  bool center = false;
};

ObsCfg parse_observable(const Reader& r) {
  r.allow({"kind", "width", "value", "center"});
  ObsCfg o;
  o.kind = r.string("kind", "indicator_X_mollified", {"indicator_X_mollified", "indicator_X", "coord", "cos_coord", "const"});
  o.width = r.number("width", 0.05, 0.0);
  if (r.has("width") && o.kind != "indicator_X_mollified") throw ConfigError(r.field("width"), "width applies to indicator_X_mollified only");
  if (r.has("value") && o.kind != "const") throw ConfigError(r.field("value"), "value applies to const only");
  o.value = r.number("value", 1.0);
  o.center = r.boolean("center", false);
  return o;
}

template <class System>
maps::Observable<typename System::State> make_observable(const System& sys, const ObsCfg& o) {
  if (o.kind == "indicator_X_mollified") return correlator::indicator_X_mollified(sys, o.width);
  if (o.kind == "indicator_X") return correlator::indicator_X_mollified(sys, 0.0);
  if (o.kind == "coord") return correlator::coord_observable(sys);
  if (o.kind == "cos_coord") return correlator::cos_coord_observable(sys);
  return maps::constant_observable<typename System::State>(o.value);
}

// ---------------------------------------------------------------------------
// Common run settings.

struct Common {
  std::string name;
  std::uint64_t seed = 1;
  int workers = 0;
};

Common parse_common(const Reader& root, const Overrides& ov, const std::string& subcommand) {
  Common c;
  c.name = root.string("name", subcommand);
  if (c.name.empty() || c.name.find('/') != std::string::npos) throw ConfigError("name", "must be a nonempty name without '/'");
  if (root.has("seed")) {
    const auto& v = root.raw().at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) throw ConfigError("seed", "expected a nonnegative 64-bit integer");
    c.seed = v.get<std::uint64_t>();
  }
  c.workers = static_cast<int>(root.integer("workers", 0, 0, 4096));
  if (root.has("out") && !root.raw().at("out").is_string()) throw ConfigError("out", "expected a path string");
  if (ov.seed) c.seed = *ov.seed;
  if (ov.workers) c.workers = *ov.workers;
  return c;
}

std::string header(const std::string& generator, const SystemCfg* sys, const Common& c, const std::string& extra = "") {
  std::string h = "# generator=" + generator + " experiment=" + c.name;
  if (sys) h += " system=" + sys->describe();
  h += " seed=" + std::to_string(c.seed);
  if (!extra.empty()) h += " " + extra;
  return h + "\n";
}

// ---------------------------------------------------------------------------
// Subcommands.

RunOutput run_tails(const Reader& root, const Common& c) {
  root.allow({"name", "description", "map", "table", "params", "seed", "workers", "out"});
  const SystemCfg scfg = parse_system(root);
  const Reader p = root.has("params") ? root.object("params") : Reader(empty_object(), "params");
  p.allow({"n_max", "samples", "cap", "burn_in"});
  inducing::TailOptions opt;
  opt.n_max = p.integer("n_max", 1000, 1, 100'000'000);
  opt.n_samples = p.integer("samples", 100'000, 1);
  opt.burn_in = p.integer("burn_in", 10'000, 0);
  opt.workers = c.workers;
  const std::int64_t cap = p.integer("cap", scfg.is_table() ? 1'000'000 : 10'000'000, 1);
  if (cap <= opt.n_max) throw ConfigError("params.cap", "cap must exceed n_max");

  const AnySystem sys = build_system(scfg);
  RunOutput out;
  const auto est = std::visit([&](const auto& s) { return inducing::return_tail(inducing::InducedSystem(s, cap), opt, c.seed); }, sys);
  std::ostringstream csv;
  csv << header("tails", &scfg, c, "samples=" + std::to_string(opt.n_samples) + " cap=" + std::to_string(cap));
  csv << "n,survival,ci_halfwidth,count\n";
  for (seq::Index n = 0; n <= opt.n_max; ++n)
    csv << n << "," << num(est.survival(n)) << "," << num(est.halfwidth(n)) << "," << est.counts[static_cast<std::size_t>(n)] << "\n";
  out.files.push_back({"tails.csv", csv.str()});
  out.summary = {{"n_samples", est.n_samples},      {"censored", est.censored},
                 {"censored_fraction", est.censored_fraction}, {"resampled", est.resampled},
                 {"mean_h", est.mean_h},            {"sampling", est.orbit_thinning ? "orbit_thinning" : "exact"}};
  if (auto k = kac_reference(sys)) out.summary["kac_reference"] = *k;
  return out;
}

RunOutput run_correlate(const Reader& root, const Common& c) {
  root.allow({"name", "description", "map", "table", "observables", "params", "seed", "workers", "out"});
  const SystemCfg scfg = parse_system(root);
  ObsCfg vcfg, wcfg;
  if (root.has("observables")) {
    const Reader o = root.object("observables");
    o.allow({"v", "w"});
    if (o.has("v")) vcfg = parse_observable(o.object("v"));
    wcfg = o.has("w") ? parse_observable(o.object("w")) : vcfg;
  }
  const Reader p = root.has("params") ? root.object("params") : Reader(empty_object(), "params");
  p.allow({"n_max", "samples", "scheme", "burn_in", "streams"});
  correlator::CorrelationOptions opt;
  opt.n_max = p.integer("n_max", 100, 0, 1'000'000);
  opt.n_samples = p.integer("samples", 1'000'000, 2);
  opt.scheme = correlator::parse_scheme(p.string("scheme", scfg.is_table() ? "ensemble" : "long_orbit", {"long_orbit", "ensemble"}));
  opt.burn_in = p.integer("burn_in", 10'000, 0);
  opt.n_streams = p.integer("streams", 64, 2, 1'000'000);
  opt.workers = c.workers;
  if (opt.n_samples < opt.n_streams) throw ConfigError("params.samples", "must be at least the number of streams");

  const AnySystem sys = build_system(scfg);
  RunOutput out;
  Json centering = Json::object();
  const auto est = std::visit(
      [&](const auto& s) {
        auto v = make_observable(s, vcfg);
        auto w = make_observable(s, wcfg);
        if (vcfg.center) {
          v = correlator::center(v, s, opt.n_samples, c.seed, opt.burn_in, c.workers);
          centering["v"] = {{"subtracted_mean", *v.subtracted_mean}, {"stderr", *v.mean_stderr}};
        }
        if (wcfg.center) {
          w = correlator::center(w, s, opt.n_samples, c.seed, opt.burn_in, c.workers);
          centering["w"] = {{"subtracted_mean", *w.subtracted_mean}, {"stderr", *w.mean_stderr}};
        }
        return correlator::estimate_rho(s, v, w, opt, c.seed);
      },
      sys);
  std::ostringstream csv;
  csv << header("correlate", &scfg, c,
                "v=" + vcfg.kind + " w=" + wcfg.kind + " scheme=" + correlator::scheme_name(opt.scheme) + " samples=" + std::to_string(opt.n_samples));
  csv << "n,rho,stderr\n";
  for (seq::Index n = 0; n <= opt.n_max; ++n) csv << n << "," << num(est.rho(n)) << "," << num(est.std_error(n)) << "\n";
  out.files.push_back({"correlation.csv", csv.str()});
  out.summary = {{"scheme", correlator::scheme_name(est.scheme)}, {"sample_count", est.sample_count}, {"streams", est.n_streams},
                 {"mean_v", est.mean_v}, {"mean_w", est.mean_w}, {"restarts", est.restarts}, {"v", vcfg.kind}, {"w", wcfg.kind}};
  if (!centering.empty()) out.summary["centering"] = centering;
  if (scfg.kind == "stadium" && scfg.radius == 1.0 && scfg.ell > 0.0) {
    out.summary["stadium_constant"] = billiards::stadium_constant(scfg.ell);
    out.summary["predicted_plateau"] = billiards::stadium_constant(scfg.ell) * est.mean_v * est.mean_w;
  }
  return out;
}

RunOutput run_birkhoff(const Reader& root, const Common& c) {
  root.allow({"name", "description", "map", "table", "params", "seed", "workers", "out"});
  const SystemCfg scfg = parse_system(root);
  const Reader p = root.has("params") ? root.object("params") : Reader(empty_object(), "params");
  p.allow({"n", "samples", "scaling", "beta", "cap", "burn_in"});
  inducing::BirkhoffOptions opt;
  opt.n = p.integer("n", 10'000, 2);
  opt.n_samples = p.integer("samples", 10'000, 4);
  opt.scaling = inducing::parse_scaling(p.string("scaling", "sqrt_n", {"sqrt_n", "n_logn_sqrt", "n_pow_1_over_beta"}));
  opt.beta = p.number("beta", 2.0, 1.0 + 1e-9);
  opt.burn_in = p.integer("burn_in", 10'000, 0);
  opt.workers = c.workers;
  const std::int64_t cap = p.integer("cap", scfg.is_table() ? 1'000'000 : 10'000'000, 1);

  const AnySystem sys = build_system(scfg);
  const auto res = std::visit([&](const auto& s) { return inducing::normalized_birkhoff(inducing::InducedSystem(s, cap), opt, c.seed); }, sys);
  RunOutput out;
  std::ostringstream csv;
  csv << header("birkhoff", &scfg, c, "n=" + std::to_string(opt.n) + " scaling=" + p.string("scaling", "sqrt_n"));
  csv << "index,value\n";
  for (std::size_t i = 0; i < res.values.size(); ++i) csv << i << "," << num(res.values[i]) << "\n";
  out.files.push_back({"birkhoff.csv", csv.str()});
  out.summary = {{"count", res.moments.count},        {"mean", res.moments.mean},         {"variance", res.moments.variance},
                 {"skewness", res.moments.skewness}, {"excess_kurtosis", res.moments.excess_kurtosis},
                 {"h_bar", res.h_bar},               {"dropped", res.dropped},           {"resampled", res.resampled}};
  if (auto k = kac_reference(sys)) out.summary["kac_reference"] = *k;
  return out;
}

RunOutput run_renewal(const Reader& root, const Common& c) {
  root.allow({"name", "description", "map", "params", "seed", "workers", "out"});
  const SystemCfg scfg = parse_system(root);
  if (scfg.kind != "lsv") throw ConfigError("map.kind", "renewal is implemented for the lsv map");
  if (scfg.x_threshold != 0.5) throw ConfigError("map.x_threshold", "renewal uses Y = [1/2, 1]");
  const Reader p = root.has("params") ? root.object("params") : Reader(empty_object(), "params");
  p.allow({"m", "N", "n_T", "n_corr", "observable"});
  const auto m = p.integer("m", 512, 64, 1 << 14);
  if (m % 2 != 0) throw ConfigError("params.m", "must be even");
  const auto N = p.integer("N", 512, 2, 1 << 16);
  const auto n_T = p.integer("n_T", std::min<std::int64_t>(N, 256), 0, N);
  const auto n_corr = p.integer("n_corr", std::min<std::int64_t>(n_T, N - 1), 0, N - 1);
  const auto obs = p.string("observable", "indicator_Y", {"indicator_Y", "centered_indicator_Y"});

  const auto model = renewal::ulam_R(renewal::branch_intervals(scfg.gamma, N), m);
  const auto T = renewal::renewal_T(model, std::max(n_T, n_corr > 0 ? n_corr - 1 : 0));
  const auto v = obs == "indicator_Y" ? renewal::indicator_Y(model) : renewal::centered_indicator_Y(model);
  const auto pair = renewal::tower_correlation_pair(model, v, v, n_corr, &T);
  const double mean_v = renewal::tower_mean(model, v);
  const auto rows = std::max(n_T, n_corr);
  const seq::RealSeq b = model.b(rows);

  RunOutput out;
  const std::string extra = "m=" + std::to_string(m) + " N=" + std::to_string(N) + " v=w=" + obs;
  std::ostringstream csv;
  csv << header("renewal", &scfg, c, extra);
  csv << "n,b,residual,rho_direct,rho_renewal\n";
  for (seq::Index n = 0; n <= rows; ++n) {
    csv << n << "," << num(b(n)) << ",";
    if (n <= n_T) csv << num(T.residual(n));
    csv << ",";
    if (n <= n_corr) csv << num(pair.rho_direct(n)) << "," << num(pair.rho_renewal(n));
    else csv << ",";
    csv << "\n";
  }
  out.files.push_back({"renewal.csv", csv.str()});

  // Covariance on M and the leading term (b(n) - 1) (int v)(int w).
  std::ostringstream cov;
  cov << header("renewal", &scfg, c, extra);
  cov << "n,rho,leading_term\n";
  for (seq::Index n = 0; n <= n_corr; ++n)
    cov << n << "," << num(pair.rho_direct(n) - mean_v * mean_v) << "," << num((b(n) - 1.0) * mean_v * mean_v) << "\n";
  out.files.push_back({"covariance.csv", cov.str()});

  out.summary = {{"mean_phi", model.mean_phi}, {"mu_Y", 1.0 / model.mean_phi}, {"gcd", model.gcd},
                 {"m", m},                     {"N", N},                       {"beta", 1.0 / scfg.gamma},
                 {"observable", obs},          {"mean_v", mean_v},             {"power_iterations", model.power_iterations},
                 {"tower_deficit", pair.deficit}};
  if (!pair.warning.empty()) out.summary["warning"] = pair.warning;
  return out;
}

// Reads a CSV with a header row (after optional '#' comments) into columns.
std::map<std::string, std::vector<double>> read_columns(const fs::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open '" + path.string() + "'");
  std::string line;
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> cols;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (names.empty()) {
      names = cells;
      continue;
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      const std::string& s = i < cells.size() ? cells[i] : std::string();
      cols[names[i]].push_back(s.empty() ? std::nan("") : std::stod(s));
    }
  }
  if (names.empty()) throw ConfigError(field, "'" + path.string() + "' has no header row");
  return cols;
}

seq::RealSeq column_seq(const std::map<std::string, std::vector<double>>& cols, const std::string& name, const std::string& field) {
  const auto it = cols.find(name);
  if (it == cols.end()) throw ConfigError(field, "column '" + name + "' not found");
  const auto idx = cols.find("n");
  if (idx != cols.end())
    for (std::size_t i = 0; i < idx->second.size(); ++i)
      if (idx->second[i] != static_cast<double>(i)) throw ConfigError(field, "column n must run 0,1,2,...");
  return Eigen::Map<const seq::RealSeq>(it->second.data(), static_cast<seq::Index>(it->second.size()));
}

struct FitSpec {
  std::string experiment;
  fs::path input;
  std::string column, stderr_column;
  seq::Index lo = 2, hi = 2;
  int log_power = 0;
  bool negate = false;
  std::optional<std::pair<double, int>> plateau;
};

FitSpec parse_fit(const Reader& f) {
  f.allow({"experiment", "input", "column", "stderr_column", "window", "model", "log_power", "negate", "plateau"});
  FitSpec s;
  s.experiment = f.string("experiment", "fit");
  s.input = f.string("input");
  s.column = f.string("column", "rho");
  s.stderr_column = f.string("stderr_column", "");
  const auto w = f.numbers("window", 2);
  if (!(w[0] >= 2 && w[1] >= w[0] + 7 && w[0] == std::floor(w[0]) && w[1] == std::floor(w[1])))
    throw ConfigError(f.field("window"), "expected integers [lo, hi] with lo >= 2 and at least 8 points");
  s.lo = static_cast<seq::Index>(w[0]);
  s.hi = static_cast<seq::Index>(w[1]);
  const auto model = f.string("model", "pure_power", {"pure_power", "power_times_log"});
  s.log_power = model == "pure_power" ? 0 : static_cast<int>(f.integer("log_power", 1, 1, 8));
  if (model == "pure_power" && f.has("log_power")) throw ConfigError(f.field("log_power"), "pure_power takes no log power");
  s.negate = f.boolean("negate", false);
  if (f.has("plateau")) {
    const Reader pl = f.object("plateau");
    pl.allow({"p", "log_power"});
    s.plateau = std::pair<double, int>{pl.number("p"), static_cast<int>(pl.integer("log_power", 0, 0, 8))};
  }
  return s;
}

Json do_fit(const FitSpec& s, fit::DecayFit* out_fit = nullptr, std::optional<fit::Plateau>* out_plateau = nullptr) {
  const auto cols = read_columns(s.input, "input");
  seq::RealSeq y = column_seq(cols, s.column, "column");
  if (s.negate) y = -y;
  if (s.hi >= y.size()) throw ConfigError("window", "window extends beyond the sequence length " + std::to_string(y.size()));
  std::optional<seq::RealSeq> se;
  if (!s.stderr_column.empty()) se = column_seq(cols, s.stderr_column, "stderr_column");
  const auto f = fit::loglog_fit(y, s.lo, s.hi, s.log_power, se);
  std::optional<fit::Plateau> pl;
  if (s.plateau) pl = fit::plateau_constant(y, s.plateau->first, s.plateau->second, s.lo, s.hi);
  if (out_fit) *out_fit = f;
  if (out_plateau) *out_plateau = pl;
  Json j = Json::parse(fit::fit_record_json(s.experiment, f, pl ? std::optional<double>(pl->variation) : std::nullopt));
  if (pl) j["plateau_c"] = pl->c;
  return j;
}

RunOutput run_fit(const Reader& root, const Common&) {
  root.allow({"name", "description", "fits", "seed", "workers", "out"});
  if (!root.has("fits") || !root.raw().at("fits").is_array() || root.raw().at("fits").empty())
    throw ConfigError("fits", "expected a nonempty array of fit specifications");
  std::vector<FitSpec> specs;
  const auto& arr = root.raw().at("fits");
  for (std::size_t i = 0; i < arr.size(); ++i) specs.push_back(parse_fit(Reader(arr[i], "fits[" + std::to_string(i) + "]")));
  RunOutput out;
  std::string lines;
  Json all = Json::array();
  for (const auto& s : specs) {
    const Json j = do_fit(s);
    lines += j.dump() + "\n";
    all.push_back(j);
  }
  out.files.push_back({"fits.jsonl", lines});
  out.summary = {{"fits", all}};
  return out;
}

Json read_json_file(const fs::path& p, const std::string& field) {
  std::ifstream in(p);
  if (!in) throw ConfigError(field, "cannot open '" + p.string() + "'");
  try {
    return Json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(field, "'" + p.string() + "' is not valid JSON");
  }
}

RunOutput run_report(const Reader& root, const Common&) {
  root.allow({"name", "description", "items", "seed", "workers", "out"});
  if (!root.has("items") || !root.raw().at("items").is_array() || root.raw().at("items").empty())
    throw ConfigError("items", "expected a nonempty array of report items");
  RunOutput out;
  std::ostringstream csv;
  csv << "# generator=report\n";
  csv << "item,quantity,measured,expected,tolerance,pass\n";
  Json rows = Json::array();
  bool all = true;
  const auto& arr = root.raw().at("items");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const Reader it(arr[i], "items[" + std::to_string(i) + "]");
    it.allow({"name", "fit", "expected_p", "tol_p", "expected_c", "factor_c", "run_dir"});
    const std::string name = it.string("name");
    FitSpec spec = parse_fit(it.object("fit"));
    fit::DecayFit f;
    std::optional<fit::Plateau> pl;
    do_fit(spec, &f, &pl);
    auto row = [&](const std::string& q, double measured, double expected, const std::string& tol, bool pass) {
      csv << name << "," << q << "," << num(measured) << "," << num(expected) << "," << tol << "," << (pass ? "PASS" : "FAIL") << "\n";
      rows.push_back({{"item", name}, {"quantity", q}, {"measured", measured}, {"expected", expected}, {"tolerance", tol}, {"pass", pass}});
      all = all && pass;
    };
    if (it.has("expected_p")) {
      const double e = it.number("expected_p"), tol = it.number("tol_p", 0.3, 0.0);
      row("p", f.p, e, "+-" + num(tol), std::abs(f.p - e) <= tol);
    }
    if (it.has("expected_c")) {
      if (!pl) throw ConfigError(it.field("fit.plateau"), "a constant comparison needs a plateau specification");
      double expected = 0.0;
      const auto& ec = it.raw().at("expected_c");
      if (ec.is_number()) {
        expected = ec.get<double>();
      } else if (ec.is_string() && ec.get<std::string>() == "stadium_constant") {
        const fs::path dir = it.string("run_dir");
        const Json summary = read_json_file(dir / "summary.json", it.field("run_dir"));
        if (!summary.contains("predicted_plateau")) throw ConfigError(it.field("run_dir"), "run summary has no stadium prediction");
        expected = summary.at("predicted_plateau").get<double>();
      } else {
        throw ConfigError(it.field("expected_c"), "expected a number or \"stadium_constant\"");
      }
      const double factor = it.number("factor_c", 3.0, 1.0);
      const bool pass = pl->c > 0.0 && expected > 0.0 && pl->c <= factor * expected && pl->c >= expected / factor;
      row("c", pl->c, expected, "x" + num(factor), pass);
    }
  }
  out.files.push_back({"report.csv", csv.str()});
  out.summary = {{"rows", rows}, {"all_passed", all}};
  out.passed = all;
  return out;
}

std::string hex(const unsigned char* d, std::size_t n) {
  std::ostringstream os;
  for (std::size_t i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(d[i]);
  return os.str();
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"tails", "correlate", "renewal", "birkhoff", "fit", "report", "selftest"};
  return names;
}

RunOutput run(const std::string& subcommand, const Json& config, const Overrides& overrides) {
  const Reader root(config, "");
  const Common c = parse_common(root, overrides, subcommand);
  RunOutput out;
  if (subcommand == "tails") out = run_tails(root, c);
  else if (subcommand == "correlate") out = run_correlate(root, c);
  else if (subcommand == "birkhoff") out = run_birkhoff(root, c);
  else if (subcommand == "renewal") out = run_renewal(root, c);
  else if (subcommand == "fit") out = run_fit(root, c);
  else if (subcommand == "report") out = run_report(root, c);
  else throw ConfigError("<subcommand>", "unknown subcommand '" + subcommand + "'");
  out.experiment = c.name;
  out.subcommand = subcommand;
  out.config = config;
  out.config["seed"] = c.seed;
  out.config["workers"] = c.workers;
  out.files.push_back({"summary.json", out.summary.dump(2) + "\n"});
  return out;
}

fs::path output_dir(const RunOutput& run, const Overrides& overrides) {
  if (overrides.out) return *overrides.out;
  if (run.config.contains("out")) return run.config.at("out").get<std::string>();
  return fs::path("runs") / run.experiment;
}

std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  return hex(digest, SHA_DIGEST_LENGTH);
}

void write_outputs(const RunOutput& run, const fs::path& dir, double wall_seconds) {
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    Json old;
    try {
      std::ifstream in(manifest_path);
      old = Json::parse(in);
    } catch (const std::exception&) {
      throw ConfigError("out", "'" + dir.string() + "' holds an unreadable manifest");
    }
    if (old.value("experiment", std::string()) != run.experiment)
      throw ConfigError("out", "'" + dir.string() + "' belongs to experiment '" + old.value("experiment", std::string()) + "'");
  }
  fs::create_directories(dir);
  Json files = Json::object();
  std::string all;
  for (const auto& f : run.files) {
    std::ofstream os(dir / f.name, std::ios::binary);
    os << f.content;
    if (!os) throw std::runtime_error("cannot write " + (dir / f.name).string());
    files[f.name] = git_blob_sha1(f.content);
    all += f.name + " " + files[f.name].get<std::string>() + "\n";
  }
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream stamp;
  stamp << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  Json manifest = {{"experiment", run.experiment}, {"subcommand", run.subcommand}, {"config", run.config},
                   {"files", files},               {"content_hash", git_blob_sha1(all)}, {"wall_time_s", wall_seconds},
                   {"created_utc", stamp.str()}};
  std::ofstream os(manifest_path);
  os << manifest.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

int selftest(std::ostream& os) {
  int failures = 0;
  auto check = [&](const std::string& name, const std::function<bool()>& fn) {
    bool ok = false;
    std::string note;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      note = std::string(" (") + e.what() + ")";
    }
    os << (ok ? "PASS " : "FAIL ") << name << note << "\n";
    if (!ok) ++failures;
  };
  auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };
  constexpr double pi = std::numbers::pi;

  check("convolve identity", [] {
    seq::RealSeq e = seq::RealSeq::Zero(5), a(5);
    e(0) = 1;
    a << 0.3, 1.5, -2, 4, 7;
    return (seq::convolve(e, a) - a).cwiseAbs().maxCoeff() == 0.0;
  });
  check("convolve (1,1,1)*(1,1,1)", [] {
    const seq::RealSeq r = seq::convolve(seq::RealSeq::Ones(3), seq::RealSeq::Ones(3));
    return r(0) == 1 && r(1) == 2 && r(2) == 3;
  });
  check("zeta_seq three cases", [&] {
    return near(seq::zeta_seq(3.0, 10)(10), 1e-3, 1e-15) && near(seq::zeta_seq(2.0, 10)(10), std::log(10.0) / 100.0, 1e-15) &&
           near(seq::zeta_seq(1.5, 4)(4), 0.25, 1e-15);
  });
  check("rate_seq values", [&] { return near(seq::rate_seq(2.0, 0, 4)(4), 0.0625, 1e-15) && seq::rate_seq(1.0, 1, 2)(1) == 0.0; });
  check("tail_sum_seq small", [] {
    seq::RealSeq a = seq::RealSeq::Zero(4);
    a(1) = a(2) = 1;
    const auto t = seq::tail_sum_seq(a).values;
    return t(0) == 2 && t(1) == 1 && t(2) == 0;
  });
  check("b_seq uniform on {1,2}", [&] {
    seq::RealSeq tail(3);
    tail << 1, 0.5, 0;
    const auto b = seq::b_seq(tail, 1.5);
    return near(b(0), 4.0 / 3.0, 1e-15) && near(b(1), 1.0, 1e-15);
  });
  check("lsv_step values", [&] {
    const maps::LsvSpec s(0.5);
    return maps::lsv_step(s, 0.5) == 0.0 && maps::lsv_step(s, 0.0) == 0.0 && near(maps::lsv_left(1.0, 0.25), 0.375, 1e-15);
  });
  check("radial_hv inner branch", [&] {
    const maps::RadialHvSpec s(1.0);
    const auto q = maps::radial_hv_step(s, {0.1, 0.0});
    return near(q.x(), 0.11, 1e-15) && q.y() == 0.0 && maps::radial_hv_step(s, {0, 0}).norm() == 0.0;
  });
  check("doubling_step values", [&] {
    return near(maps::doubling_step(0.3), 0.6, 1e-15) && near(maps::doubling_step(0.6), 0.2, 1e-15) && maps::doubling_step(0.0) == 0.0;
  });
  check("stadium mensuration", [&] {
    const auto t = billiards::build_stadium(2, 1);
    return t.pieces.size() == 4 && near(t.total_perimeter, 4 + 2 * pi, 1e-12) && near(t.area, 4 + pi, 1e-12);
  });
  check("stadium vertical shot", [&] {
    const auto t = billiards::build_stadium(2, 1);
    const auto c = billiards::next_collision(t, {0, 1.0, 0.0});
    return c.point.piece_id == 2 && near(c.point.s, 1.0, 1e-12) && near(c.tau, 2.0, 1e-12);
  });
  check("circle chord", [&] {
    const auto t = billiards::build_stadium(0, 1);
    const auto c = billiards::next_collision(t, {0, 0.7, 0.4});
    return near(c.point.phi, 0.4, 1e-12) && near(c.tau, 2 * std::cos(0.4), 1e-12);
  });
  check("head-on scatterer reflection", [&] {
    const auto t = billiards::build_semidispersing(1, 1, {{{0.5, 0.5}, 0.2}});
    const auto c = billiards::next_collision(t, {0, 0.5, 0.0});
    return c.point.piece_id == 4 && near(c.tau, 0.3, 1e-12) && near(c.point.phi, 0.0, 1e-12);
  });
  check("semidispersing area", [&] {
    return near(billiards::build_semidispersing(1, 1, {{{0.5, 0.5}, 0.2}}).area, 1 - 0.04 * pi, 1e-12);
  });
  check("touching scatterers rejected", [] {
    try {
      billiards::build_semidispersing(2, 1, {{{0.5, 0.5}, 0.25}, {{1.0, 0.5}, 0.25}});
    } catch (const InvalidArgument&) {
      return true;
    }
    return false;
  });
  check("first returns", [] {
    const inducing::InducedSystem<maps::DoublingSystem> d(maps::DoublingSystem{}, 100);
    const auto r1 = inducing::first_return(d, maps::dyadic_from_value(0.75, 1, 1));
    const inducing::InducedSystem<maps::LsvSystem> l(maps::LsvSystem{maps::LsvSpec(0.5)}, 100);
    const auto r2 = inducing::first_return(l, 0.875);
    return r1.h == 1 && r2.h == 1 && r2.x == 0.75;
  });
  check("induced_phi", [] { return inducing::induced_phi({5}, 1) == 5 && inducing::induced_phi({3, 4}, 2) == 7; });
  check("branch 1 is [3/4, 1)", [] {
    const auto dec = renewal::branch_intervals(0.5, 4);
    const auto iv = dec.interval(1);
    return iv.first == 0.75 && iv.second == 1.0;
  });
  check("scalar renewal toy", [&] {
    seq::RealSeq r = seq::RealSeq::Zero(4);
    r(1) = r(2) = 0.5;
    const auto t = renewal::renewal_scalar(r, 3);
    return t(0) == 1 && t(1) == 0.5 && t(2) == 0.75 && t(3) == 0.625;
  });
  check("exact power-law fit", [&] {
    seq::RealSeq y(64);
    for (int n = 0; n < 64; ++n) y(n) = 3.0 * std::pow(std::max(n, 1), -1.7);
    const auto f = fit::loglog_fit(y, 2, 63);
    return near(f.p, 1.7, 1e-10) && near(f.c, 3.0, 1e-10);
  });
  check("exact plateau", [&] {
    seq::RealSeq y(64);
    for (int n = 0; n < 64; ++n) y(n) = 3.0 / std::max(n, 1);
    const auto p = fit::plateau_constant(y, 1.0, 0, 2, 63);
    return near(p.c, 3.0, 1e-12) && p.variation < 1e-12;
  });
  check("constant observables have zero correlation", [] {
    const maps::DoublingSystem d;
    correlator::CorrelationOptions o;
    o.n_max = 3;
    o.n_samples = 256;
    o.n_streams = 4;
    const auto one = maps::constant_observable<maps::DyadicState>(1.0);
    const auto e = correlator::estimate_rho(d, one, one, o, 1);
    return e.rho.cwiseAbs().maxCoeff() == 0.0;
  });
  return failures;
}

}  // namespace sharpdecay::experiment
