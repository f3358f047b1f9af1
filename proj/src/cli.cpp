#include "kernelcurves/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kernelcurves/io.hpp"
#include "kernelcurves/kernels.hpp"
#include "kernelcurves/kpca.hpp"
#include "kernelcurves/regression.hpp"
#include "kernelcurves/theory.hpp"

namespace kernelcurves {

namespace {

using nlohmann::json;

double to_real(const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + text + "' is not a number");
  }
  if (pos != text.size()) throw std::invalid_argument("'" + text + "' is not a number");
  return v;
}

long long to_integer(const std::string& text) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + text + "' is not an integer");
  }
  if (pos != text.size()) throw std::invalid_argument("'" + text + "' is not an integer");
  return v;
}

std::uint64_t to_seed(const std::string& text) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("'" + text + "' is not a seed");
  }
  if (pos != text.size() || text.find('-') != std::string::npos)
    throw std::invalid_argument("'" + text + "' is not a seed");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(sep, start);
    parts.push_back(text.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return parts;
}

// Parameter schema per subcommand. type: s = string, d = real, i = integer,
// u = seed, f = flag. preset = default in text form (nullptr: optional or
// required). Config-file keys use the same names as the flags.
struct FieldDef {
  const char* name;
  char type;
  bool required;
  const char* preset;
  const char* help;
};

const std::vector<FieldDef>& fields_for(const std::string& command) {
  static const std::map<std::string, std::vector<FieldDef>> table = {
      {"spectrum",
       {{"kernel", 's', true, nullptr, "ntk | rbf (sphere quadrature) | gaussian (closed form)"},
        {"depth", 'i', false, "3", "network depth for the ntk kernel"},
        {"lengthscale", 'd', false, "1", "lengthscale for the rbf/gaussian kernels"},
        {"input-scale", 'd', false, "1", "input scale of the gaussian measure"},
        {"dim", 'i', true, nullptr, "input dimension d"},
        {"kmax", 'i', false, "60", "highest degree level"},
        {"order", 'i', false, "0", "quadrature order (0 picks the default)"},
        {"out", 's', true, nullptr, "output CSV path"}}},
      {"theory",
       {{"spectrum", 's', true, nullptr, "spectrum CSV written by the spectrum command"},
        {"target", 's', true, nullptr, "kernel:pprime=T or pure:k=K,pprime=T"},
        {"lambda", 'd', false, "0", "ridge"},
        {"p", 's', true, nullptr, "sample-size grid: a:b:logN, a:b:linN, or a comma list"},
        {"out", 's', true, nullptr, "output CSV path"}}},
      {"experiment",
       {{"kernel", 's', false, "ntk", "ntk | rbf"},
        {"depth", 'i', false, "3", "network depth for the ntk kernel"},
        {"lengthscale", 'd', false, "1", "lengthscale for the rbf kernel"},
        {"dim", 'i', true, nullptr, "input dimension d"},
        {"lambda", 'd', false, "0", "ridge"},
        {"teacher", 's', false, "kernel", "teacher kind: kernel | pure"},
        {"pprime", 'd', false, "300", "number of teacher centers"},
        {"degree", 'i', false, "0", "degree of the pure-mode teacher"},
        {"fixed-teacher", 'f', false, nullptr, "one teacher shared by all trials"},
        {"p", 's', true, nullptr, "sample-size grid (rounded to integers)"},
        {"trials", 'i', false, "1", "independent trials"},
        {"spectrum-kmax", 'i', false, "60", "degree resolution of the reference spectrum"},
        {"kmax", 'i', false, "-1", "report cut (-1: the spectrum's own)"},
        {"seed", 'u', false, "0", "master seed"},
        {"out", 's', true, nullptr, "output CSV path"},
        {"normalized-out", 's', false, nullptr, "optional companion CSV normalized at min p"}}},
      {"kpca",
       {{"data", 's', false, nullptr, "dataset CSV with columns x0..x{d-1},y0..y{C-1}"},
        {"images", 's', false, nullptr, "IDX image file (with --labels)"},
        {"labels", 's', false, nullptr, "IDX label file (with --images)"},
        {"normalize", 'f', false, nullptr, "rescale rows to the unit sphere"},
        {"subset", 'i', false, "-1", "keep this many rows (seeded shuffle; -1: all)"},
        {"seed", 'u', false, "0", "subset shuffle seed"},
        {"allow-duplicates", 'f', false, nullptr, "keep exact duplicate rows"},
        {"kernel", 's', false, "ntk", "ntk | rbf"},
        {"depth", 'i', false, "3", "network depth for the ntk kernel"},
        {"lengthscale", 'd', false, "1", "lengthscale for the rbf kernel"},
        {"lambda", 'd', false, "0", "ridge"},
        {"p", 's', true, nullptr, "sample-size grid"},
        {"max-points", 'i', false, "20000", "dense eigendecomposition guard"},
        {"out", 's', true, nullptr, "output CSV path"}}},
      {"powerlaw",
       {{"a", 'd', true, nullptr, "target decay: lambda_rho <w^2>_rho = rho^-a"},
        {"b", 'd', true, nullptr, "spectrum decay: lambda_rho = rho^-b"},
        {"modes", 'i', false, "10000", "spectrum truncation"},
        {"lambda", 'd', false, "0", "ridge"},
        {"p", 's', true, nullptr, "sample-size grid (also the slope-fit window)"},
        {"out", 's', true, nullptr, "output CSV path"}}},
      {"stages",
       {{"lambda-bar", 's', false, nullptr, "comma list of rescaled level eigenvalues"},
        {"spectrum", 's', false, nullptr, "spectrum CSV to rescale as lambda_k d^k"},
        {"level", 'i', true, nullptr, "level being learned (p = alpha d^level)"},
        {"alpha", 'd', true, nullptr, "samples per d^level"},
        {"lambda", 'd', false, "0", "ridge"},
        {"asymptote", 'f', false, nullptr, "large-alpha limits instead of the fixed point"},
        {"out", 's', true, nullptr, "output CSV path"}}},
  };
  return table.at(command);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"spectrum", "theory",   "experiment",
                                                 "kpca",     "powerlaw", "stages"};
  return names;
}

json value_from_text(const FieldDef& f, const std::string& text) {
  switch (f.type) {
    case 'd': return to_real(text);
    case 'i': return to_integer(text);
    case 'u': return to_seed(text);
    case 'f': return text == "true";
    default: return text;
  }
}

json value_from_config(const FieldDef& f, const json& v) {
  auto bad = [&](const char* want) {
    return std::invalid_argument("config key '" + std::string(f.name) + "' must be " + want);
  };
  switch (f.type) {
    case 'd':
      if (!v.is_number()) throw bad("a number");
      return v.get<double>();
    case 'i':
      if (!v.is_number_integer()) throw bad("an integer");
      return v.get<long long>();
    case 'u':
      if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)))
        throw bad("a nonnegative integer");
      return v.get<std::uint64_t>();
    case 'f':
      if (!v.is_boolean()) throw bad("a boolean");
      return v.get<bool>();
    default:
      if (!v.is_string()) throw bad("a string");
      return v.get<std::string>();
  }
}

// Accept the experiment module's own (nested) config schema alongside the
// flat flag names, so a result sidecar can be replayed directly.
json flatten_experiment_config(const json& cfg) {
  json flat = json::object();
  for (const auto& [key, v] : cfg.items()) {
    if (key == "kernel" && v.is_object()) {
      flat["kernel"] = v.value("type", "ntk");
      if (v.contains("depth")) flat["depth"] = v.at("depth");
      if (v.contains("lengthscale")) flat["lengthscale"] = v.at("lengthscale");
    } else if (key == "teacher" && v.is_object()) {
      flat["teacher"] = v.value("kind", "kernel");
      if (v.contains("p_prime")) flat["pprime"] = v.at("p_prime");
      if (v.contains("degree")) flat["degree"] = v.at("degree");
    } else if (key == "p_list" && v.is_array()) {
      std::string list;
      for (const auto& e : v) {
        if (!list.empty()) list += ',';
        list += std::to_string(e.get<long long>());
      }
      flat["p"] = list;
    } else if (key == "d") {
      flat["dim"] = v;
    } else if (key == "spectrum_kmax") {
      flat["spectrum-kmax"] = v;
    } else if (key == "fixed_teacher") {
      flat["fixed-teacher"] = v;
    } else {
      flat[key] = v;
    }
  }
  return flat;
}

json echo_of(const RunConfig& config) {
  json echo = config.params;
  echo["command"] = config.command;
  return echo;
}

// Merge the resolved CLI config into a sidecar a module already wrote (or
// create the sidecar when the writer left none).
void attach_cli_config(const std::string& csv_path, const json& echo) {
  const std::string sp = sidecar_path(csv_path);
  json j = json::object();
  try {
    j = json::parse(read_text_file(sp));
  } catch (const std::exception&) {
  }
  j["cli_config"] = echo;
  write_text_file(sp, j.dump(2) + "\n");
}

int env_threads() {
  const char* v = std::getenv("KERNELCURVES_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  long long t = 0;
  try {
    t = to_integer(v);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("KERNELCURVES_THREADS must be a positive integer");
  }
  if (t < 1) throw std::invalid_argument("KERNELCURVES_THREADS must be a positive integer");
  return static_cast<int>(std::min<long long>(t, 256));
}

void summarize(const char* fmt, ...) {
  char line[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(line, sizeof line, fmt, ap);
  va_end(ap);
  std::cout << line << '\n';
}

DotKernel dot_kernel_from(const json& q) {
  const std::string kind = q.at("kernel");
  if (kind == "ntk") return ntk_kernel(q.at("depth").get<int>());
  if (kind == "rbf") return gaussian_sphere_kernel(q.at("lengthscale").get<double>());
  throw std::invalid_argument("unknown kernel '" + kind + "' (expected ntk or rbf)");
}

int cmd_spectrum(const RunConfig& config) {
  const json& q = config.params;
  const std::string kind = q.at("kernel");
  const int dim = q.at("dim").get<int>();
  const int kmax = q.at("kmax").get<int>();
  const int order = q.at("order").get<int>();
  Spectrum s;
  if (kind == "ntk") {
    s = ntk_spectrum(q.at("depth").get<int>(), SphereDim{dim}, kmax, order);
  } else if (kind == "rbf") {
    const auto rule = gauss_gegenbauer(SphereDim{dim}, order > 0 ? order : std::max(1000, 4 * kmax));
    s = spectrum_from_kernel(gaussian_sphere_kernel(q.at("lengthscale").get<double>()),
                             SphereDim{dim}, kmax, rule);
  } else if (kind == "gaussian") {
    s = gaussian_spectrum(dim, q.at("lengthscale").get<double>(),
                          q.at("input-scale").get<double>(), kmax);
  } else {
    throw std::invalid_argument("unknown kernel '" + kind + "' (expected ntk, rbf, or gaussian)");
  }
  const std::string out = q.at("out");
  save_spectrum(s, out);
  attach_cli_config(out, echo_of(config));
  summarize("spectrum %s: %zu levels, trace %.6g, tail mass %.3g -> %s", s.label.c_str(),
            s.levels.size(), s.trace(), s.tail_mass, out.c_str());
  return 0;
}

int cmd_theory(const RunConfig& config) {
  const json& q = config.params;
  const Spectrum s = load_spectrum(q.at("spectrum"));
  const TargetSpec target = parse_target(q.at("target"));
  const TargetPowers powers = target.kind == "kernel"
                                  ? kernel_teacher_powers(s, target.p_prime)
                                  : pure_mode_powers(s, target.degree, target.p_prime);
  const std::vector<double> ps = parse_grid(q.at("p"));
  const TheoryCurve curve = learning_curve(s, powers, ps, q.at("lambda").get<double>());
  const std::string out = q.at("out");
  save_curve(curve, out, echo_of(config).dump(2));
  const long flagged = std::count(curve.flag.begin(), curve.flag.end(), std::uint8_t{1});
  summarize("theory: E_g(p=%g) = %.6g, %ld flagged row(s) -> %s", ps.back(),
            curve.total[curve.total.size() - 1], flagged, out.c_str());
  return 0;
}

int cmd_experiment(const RunConfig& config) {
  const json& q = config.params;
  const std::string kind = q.at("kernel");
  json nested;
  if (kind == "ntk")
    nested["kernel"]["type"] = "ntk";
  else if (kind == "rbf" || kind == "gaussian")
    nested["kernel"]["type"] = "gaussian";
  else
    throw std::invalid_argument("unknown kernel '" + kind + "' (expected ntk or rbf)");
  nested["kernel"]["depth"] = q.at("depth").get<int>();
  nested["kernel"]["lengthscale"] = q.at("lengthscale").get<double>();
  nested["d"] = q.at("dim").get<int>();
  nested["lambda"] = q.at("lambda").get<double>();
  nested["teacher"]["kind"] = q.at("teacher").get<std::string>();
  nested["teacher"]["p_prime"] = q.at("pprime").get<double>();
  nested["teacher"]["degree"] = q.at("degree").get<int>();
  nested["fixed_teacher"] = q.at("fixed-teacher").get<bool>();

  std::vector<long long> p_list;
  for (double v : parse_grid(q.at("p"))) {
    const long long p = std::llround(v);
    if (p < 1) throw std::invalid_argument("experiment: sample sizes must round to >= 1");
    if (p_list.empty() || p > p_list.back())
      p_list.push_back(p);
    else if (p < p_list.back())
      throw std::invalid_argument("experiment: sample sizes must be ascending");
  }
  nested["p_list"] = p_list;
  nested["trials"] = q.at("trials").get<int>();
  nested["spectrum_kmax"] = q.at("spectrum-kmax").get<int>();
  nested["kmax"] = q.at("kmax").get<int>();
  nested["seed"] = q.at("seed").get<std::uint64_t>();

  const ExperimentConfig cfg = experiment_config_from_json(nested.dump());
  const ExperimentResult result = run_experiment(cfg, env_threads());
  const std::string out = q.at("out");
  save_experiment(result, out);
  attach_cli_config(out, echo_of(config));
  if (q.contains("normalized-out")) {
    save_experiment_normalized(result, q.at("normalized-out"));
    attach_cli_config(q.at("normalized-out"), echo_of(config));
  }
  summarize("experiment: %d trial(s) x %zu p-point(s), mean E_g(p=%lld) = %.6g, %d failed "
            "fit(s) -> %s",
            cfg.trials, cfg.p_list.size(), static_cast<long long>(cfg.p_list.back()),
            result.mean_total[result.mean_total.size() - 1], result.failed.sum(), out.c_str());
  return 0;
}

int cmd_kpca(const RunConfig& config) {
  const json& q = config.params;
  const std::string data_path = q.value("data", "");
  const std::string images = q.value("images", "");
  const std::string labels = q.value("labels", "");
  if (data_path.empty() && (images.empty() || labels.empty()))
    throw std::invalid_argument("kpca: provide --data, or --images together with --labels");
  if (!data_path.empty() && (!images.empty() || !labels.empty()))
    throw std::invalid_argument("kpca: --data excludes --images/--labels");

  const bool normalize = q.at("normalize").get<bool>();
  const Index subset = q.at("subset").get<long long>();
  const std::uint64_t seed = q.at("seed").get<std::uint64_t>();
  const bool allow_dups = q.at("allow-duplicates").get<bool>();
  const DiscreteDataset data =
      data_path.empty() ? load_dataset_idx(images, labels, normalize, subset, seed, allow_dups)
                        : load_dataset_csv(data_path, normalize, subset, seed, allow_dups);

  const DiscreteEigensystem eig =
      discrete_spectrum(dot_kernel_from(q), data, q.at("max-points").get<long long>());
  const std::vector<double> ps = parse_grid(q.at("p"));
  const DatasetCurve dc = dataset_learning_curve(eig, ps, q.at("lambda").get<double>());
  const std::string out = q.at("out");
  save_dataset_curve(dc, out, data.source);
  attach_cli_config(out, echo_of(config));
  summarize("kpca: %lld points, %lld modes (%lld zero), floor %.3g, E_g(p=%g) = %.6g -> %s",
            static_cast<long long>(eig.size()),
            static_cast<long long>(eig.size() - eig.zero_modes),
            static_cast<long long>(eig.zero_modes), dc.floor(), ps.back(),
            dc.curve.total[dc.curve.total.size() - 1], out.c_str());
  return 0;
}

int cmd_powerlaw(const RunConfig& config) {
  const json& q = config.params;
  const double a = q.at("a").get<double>();
  const double b = q.at("b").get<double>();
  const long long modes = q.at("modes").get<long long>();
  const double ridge = q.at("lambda").get<double>();
  if (modes < 1 || modes > 5000000)
    throw std::invalid_argument("powerlaw: modes must be in [1, 5e6]");

  Spectrum s;
  s.measure = Measure::Discrete;
  s.label = "powerlaw";
  s.levels.reserve(static_cast<std::size_t>(modes));
  TargetPowers powers;
  powers.power.reserve(static_cast<std::size_t>(modes));
  for (long long rho = 1; rho <= modes; ++rho) {
    s.levels.push_back({static_cast<int>(rho), std::pow(double(rho), -b), 1.0});
    powers.power.push_back(std::pow(double(rho), b - a));
  }

  const std::vector<double> ps = parse_grid(q.at("p"));
  TheoryCurve curve = learning_curve(s, powers, ps, ridge);

  double slope = std::numeric_limits<double>::quiet_NaN();
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (Index i = 0; i < curve.total.size(); ++i) {
      if (curve.flag[static_cast<std::size_t>(i)]) continue;
      const double x = std::log(ps[static_cast<std::size_t>(i)]);
      const double y = std::log(curve.total[i]);
      sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
    }
    if (n >= 2) slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  const PowerLawPrediction small = powerlaw_exponent({a, b, ridge}, PRegime::SmallP);
  const PowerLawPrediction large = powerlaw_exponent({a, b, ridge}, PRegime::LargeP);

  // One column per mode would be as wide as the spectrum; keep the totals.
  curve.level_k.clear();
  curve.level_errors.resize(curve.total.size(), 0);
  json meta = echo_of(config);
  meta["fitted_slope"] = slope;
  meta["beta_small_p"] = small.beta;
  meta["beta_large_p"] = large.beta;
  if (std::isfinite(small.crossover)) meta["crossover"] = small.crossover;
  const std::string out = q.at("out");
  save_curve(curve, out, meta.dump(2));
  summarize("powerlaw a=%g b=%g lambda=%g: fitted slope %.4f (small-p -%.4f, large-p -%.4f) "
            "-> %s",
            a, b, ridge, slope, small.beta, large.beta, out.c_str());
  return 0;
}

int cmd_stages(const RunConfig& config) {
  const json& q = config.params;
  const std::string list = q.value("lambda-bar", "");
  const std::string spath = q.value("spectrum", "");
  if (list.empty() == spath.empty())
    throw std::invalid_argument("stages: provide exactly one of --lambda-bar or --spectrum");

  std::vector<double> lambda_bar;
  if (!list.empty()) {
    for (const std::string& part : split(list, ',')) lambda_bar.push_back(to_real(part));
  } else {
    const Spectrum s = load_spectrum(spath);
    for (std::size_t i = 0; i < s.levels.size(); ++i) {
      if (s.levels[i].k != static_cast<int>(i))
        throw std::invalid_argument("stages: spectrum levels must cover degrees 0..K");
      lambda_bar.push_back(s.levels[i].lambda * std::pow(double(s.d), double(i)));
    }
  }

  StageSpec spec{lambda_bar, q.at("level").get<int>(), q.at("alpha").get<double>(),
                 q.at("lambda").get<double>()};
  const StageRatios r = stage_ratios(spec, q.at("asymptote").get<bool>());

  Matrix table(static_cast<Index>(lambda_bar.size()), 3);
  for (Index k = 0; k < table.rows(); ++k) {
    table(k, 0) = static_cast<double>(k);
    table(k, 1) = lambda_bar[static_cast<std::size_t>(k)];
    table(k, 2) = r.ratio[static_cast<std::size_t>(k)];
  }
  const std::string out = q.at("out");
  write_csv(out, {"k", "lambda_bar", "ratio"}, table);
  json meta = echo_of(config);
  meta["t"] = r.t;
  meta["gamma_tilde"] = r.gamma_tilde;
  write_text_file(sidecar_path(out), meta.dump(2) + "\n");
  summarize("stages level=%d alpha=%g: ratio(level) = %.6g, gamma_tilde = %.6g -> %s",
            spec.level, spec.alpha, r.ratio[static_cast<std::size_t>(spec.level)], r.gamma_tilde,
            out.c_str());
  return 0;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  auto bad = [&](const std::string& why) {
    return std::invalid_argument("grid '" + text + "': " + why);
  };
  if (text.empty()) throw bad("empty");
  const std::vector<std::string> parts = split(text, ':');
  if (parts.size() == 1) {
    std::vector<double> out;
    for (const std::string& part : split(text, ',')) out.push_back(to_real(part));
    return out;
  }
  if (parts.size() != 3) throw bad("expected a:b:logN or a:b:linN");
  const double a = to_real(parts[0]);
  const double b = to_real(parts[1]);
  const std::string& kind = parts[2];
  if (kind.size() < 4 || (kind.substr(0, 3) != "log" && kind.substr(0, 3) != "lin"))
    throw bad("expected a:b:logN or a:b:linN");
  const long long n = to_integer(kind.substr(3));
  if (n < 2) throw bad("need at least 2 points");
  if (!(b > a)) throw bad("endpoints must be ascending");
  const bool geometric = kind[2] == 'g';
  if (geometric && !(a > 0.0)) throw bad("log grids need a positive start");

  std::vector<double> out(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    out[static_cast<std::size_t>(i)] = geometric ? a * std::pow(b / a, f) : a + (b - a) * f;
  }
  out.front() = a;
  out.back() = b;
  return out;
}

TargetSpec parse_target(const std::string& text) {
  auto bad = [&](const std::string& why) {
    return std::invalid_argument("target '" + text + "': " + why);
  };
  const std::size_t colon = text.find(':');
  TargetSpec spec;
  spec.kind = text.substr(0, colon);
  if (spec.kind != "kernel" && spec.kind != "pure")
    throw bad("kind must be 'kernel' or 'pure'");
  bool have_pprime = false, have_k = false;
  if (colon != std::string::npos) {
    for (const std::string& part : split(text.substr(colon + 1), ',')) {
      const std::size_t eq = part.find('=');
      if (eq == std::string::npos) throw bad("expected key=value, got '" + part + "'");
      const std::string key = part.substr(0, eq);
      const std::string value = part.substr(eq + 1);
      if (key == "pprime") {
        spec.p_prime = to_real(value);
        have_pprime = true;
      } else if (key == "k") {
        spec.degree = static_cast<int>(to_integer(value));
        have_k = true;
      } else {
        throw bad("unknown key '" + key + "'");
      }
    }
  }
  if (!have_pprime) throw bad("missing pprime");
  if (spec.kind == "pure" && !have_k) throw bad("pure targets need k");
  if (spec.kind == "kernel" && have_k) throw bad("kernel targets take no k");
  return spec;
}

RunConfig parse_args(const std::vector<std::string>& args) {
  CLI::App app{"spectra, learning-curve theory, and kernel regression experiments"};
  app.require_subcommand(1);

  struct Bound {
    const FieldDef* def = nullptr;
    std::string text;
    bool flag = false;
    CLI::Option* opt = nullptr;
  };
  std::map<std::string, std::vector<Bound>> bound;
  std::map<std::string, std::string> config_paths;
  std::map<std::string, CLI::App*> subs;

  for (const std::string& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, "");
    const auto& fields = fields_for(name);
    auto& vec = bound[name];
    vec.resize(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      vec[i].def = &fields[i];
      const std::string flag = "--" + std::string(fields[i].name);
      vec[i].opt = fields[i].type == 'f' ? sub->add_flag(flag, vec[i].flag, fields[i].help)
                                         : sub->add_option(flag, vec[i].text, fields[i].help);
    }
    sub->add_option("--config", config_paths[name], "JSON file with defaults for these flags");
    subs[name] = sub;
  }

  std::vector<std::string> full = {"kernelcurves"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return {"help", json::object()};
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return {"help", json::object()};
  } catch (const CLI::ParseError& e) {
    throw std::invalid_argument(e.what());
  }

  std::string command;
  for (const std::string& name : command_names())
    if (subs[name]->parsed()) command = name;

  json cfg = json::object();
  if (!config_paths[command].empty()) {
    try {
      cfg = json::parse(read_text_file(config_paths[command]));
    } catch (const std::exception& e) {
      throw std::invalid_argument("config file '" + config_paths[command] + "': " + e.what());
    }
    if (!cfg.is_object())
      throw std::invalid_argument("config file '" + config_paths[command] + "': not an object");
    if (command == "experiment") cfg = flatten_experiment_config(cfg);
    for (const auto& [key, v] : cfg.items()) {
      const auto& fields = fields_for(command);
      const bool known = std::any_of(fields.begin(), fields.end(),
                                     [&](const FieldDef& f) { return key == f.name; });
      if (!known) throw std::invalid_argument(command + ": unknown config key '" + key + "'");
    }
  }

  RunConfig run;
  run.command = command;
  for (const Bound& b : bound[command]) {
    const FieldDef& f = *b.def;
    if (b.opt->count() > 0)
      run.params[f.name] = f.type == 'f' ? json(true) : value_from_text(f, b.text);
    else if (cfg.contains(f.name))
      run.params[f.name] = value_from_config(f, cfg.at(f.name));
    else if (f.type == 'f')
      run.params[f.name] = false;
    else if (f.preset != nullptr)
      run.params[f.name] = value_from_text(f, f.preset);
    else if (f.required)
      throw std::invalid_argument(command + ": missing --" + f.name);
  }
  return run;
}

int execute(const RunConfig& config) {
  if (config.command == "help") return 0;
  if (config.command == "spectrum") return cmd_spectrum(config);
  if (config.command == "theory") return cmd_theory(config);
  if (config.command == "experiment") return cmd_experiment(config);
  if (config.command == "kpca") return cmd_kpca(config);
  if (config.command == "powerlaw") return cmd_powerlaw(config);
  if (config.command == "stages") return cmd_stages(config);
  throw std::invalid_argument("unknown command '" + config.command + "'");
}

int run_cli(const std::vector<std::string>& args) {
  try {
    return execute(parse_args(args));
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace kernelcurves
