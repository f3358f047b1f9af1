#include "kernelcurves/kernels.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "json.hpp"

#include "kernelcurves/io.hpp"

namespace kernelcurves {

namespace {

constexpr double kPi = std::numbers::pi;

double clamp_cosine(double z, const char* who) {
  if (z > 1.0) {
    if (z > 1.0 + 1e-12) throw std::domain_error(std::string(who) + ": |z| > 1");
    return 1.0;
  }
  if (z < -1.0) {
    if (z < -1.0 - 1e-12) throw std::domain_error(std::string(who) + ": |z| > 1");
    return -1.0;
  }
  return z;
}

}  // namespace

double relu_covariance_step(double z) {
  z = clamp_cosine(z, "relu_covariance_step");
  return std::sqrt(1.0 - z * z) / kPi + z * (1.0 - std::acos(z) / kPi);
}

double relu_derivative_factor(double z) {
  z = clamp_cosine(z, "relu_derivative_factor");
  return 1.0 - std::acos(z) / kPi;
}

double ntk_kappa(int depth, double z) {
  if (depth < 1) throw std::invalid_argument("ntk_kappa: depth must be >= 1");
  z = clamp_cosine(z, "ntk_kappa");
  double nngp = z;  // layer-1 covariance
  double ntk = z;
  for (int layer = 2; layer <= depth; ++layer) {
    const double deriv = relu_derivative_factor(nngp);
    nngp = relu_covariance_step(nngp);
    ntk = nngp + ntk * deriv;
  }
  return ntk;
}

DotKernel ntk_kernel(int depth) {
  if (depth < 1) throw std::invalid_argument("ntk_kernel: depth must be >= 1");
  DotKernel k;
  k.label = "ntk-depth-" + std::to_string(depth);
  k.kappa = [depth](double z) { return ntk_kappa(depth, z); };
  return k;
}

DotKernel gaussian_sphere_kernel(double lengthscale) {
  if (!(lengthscale > 0.0))
    throw std::invalid_argument("gaussian_sphere_kernel: lengthscale must be > 0");
  DotKernel k;
  k.label = "rbf-sphere-l-" + format_real(lengthscale);
  const double inv_l2 = 1.0 / (lengthscale * lengthscale);
  k.kappa = [inv_l2](double z) {
    z = clamp_cosine(z, "gaussian_sphere_kernel");
    return std::exp((z - 1.0) * inv_l2);
  };
  return k;
}

double Spectrum::trace() const {
  double s = 0.0;
  for (const auto& lv : levels) s += lv.lambda * lv.count;
  return s;
}

double Spectrum::max_lambda() const {
  double m = 0.0;
  for (const auto& lv : levels) m = std::max(m, lv.lambda);
  return m;
}

namespace {

// Shared quadrature projection; returns raw coefficients
// ratio * sum_i w_i f(z_i) Q_k(z_i) for k = 0..kmax at extended precision.
std::vector<double> project_levels(const std::function<double(double)>& f, SphereDim dim,
                                   int kmax, const QuadratureRule& rule) {
  if (kmax < 0) throw std::invalid_argument("spectrum projection: kmax must be >= 0");
  if (rule.d != dim.d)
    throw std::invalid_argument("spectrum projection: rule dimension mismatch");
  const int required = std::max(1000, 4 * kmax);
  if (rule.order < required)
    throw std::invalid_argument("spectrum projection: rule order " + std::to_string(rule.order) +
                                " below required " + std::to_string(required));

  const int r = rule.order;
  ArrayX<Quad> fw(r);
  for (int i = 0; i < r; ++i)
    fw[i] = static_cast<Quad>(f(static_cast<double>(rule.nodes[i]))) * rule.weights[i];

  const Quad ratio = 1.0L / static_cast<Quad>(weight_mass(dim));
  std::vector<double> coeff(static_cast<std::size_t>(kmax) + 1);
  GegenbauerRecurrence<ArrayX<Quad>> rec(dim, rule.nodes.array());
  for (int k = 0; k <= kmax; ++k) {
    coeff[static_cast<std::size_t>(k)] = static_cast<double>(ratio * (fw * rec.value()).sum());
    rec.advance();
  }
  return coeff;
}

}  // namespace

Spectrum spectrum_from_kernel(const DotKernel& kernel, SphereDim dim, int kmax,
                              const QuadratureRule& rule) {
  auto coeff = project_levels(kernel.kappa, dim, kmax, rule);

  double lam_max = 0.0;
  for (double c : coeff) lam_max = std::max(lam_max, c);
  const double tol = 1e-10 * lam_max;

  Spectrum s;
  s.d = dim.d;
  s.measure = Measure::Sphere;
  s.label = kernel.label;
  s.quad_order = rule.order;
  s.levels.resize(static_cast<std::size_t>(kmax) + 1);
  for (int k = 0; k <= kmax; ++k) {
    double lam = coeff[static_cast<std::size_t>(k)];
    if (lam < 0.0) {
      if (lam < -tol)
        throw std::runtime_error("spectrum_from_kernel: negative eigenvalue at k=" +
                                 std::to_string(k) + " (" + format_real(lam) +
                                 "); kernel not PSD or rule order too low");
      std::cerr << "warning: spectrum_from_kernel: clamping slightly negative eigenvalue at k="
                << k << " (" << format_real(lam) << ")\n";
      lam = 0.0;
    }
    s.levels[static_cast<std::size_t>(k)] = {k, lam, degeneracy_real(dim, k)};
  }
  s.tail_mass = kernel(1.0) - s.trace();
  return s;
}

Spectrum ntk_spectrum(int depth, SphereDim dim, int kmax, int order) {
  if (order == 0) order = std::max(1000, 4 * kmax);
  const auto rule = gauss_gegenbauer(dim, order);
  return spectrum_from_kernel(ntk_kernel(depth), dim, kmax, rule);
}

Spectrum gaussian_spectrum(int d, double lengthscale, double input_scale, int kmax) {
  if (d < 1) throw std::invalid_argument("gaussian_spectrum: d must be >= 1");
  if (!(lengthscale > 0.0) || !(input_scale > 0.0))
    throw std::invalid_argument("gaussian_spectrum: scales must be > 0");
  if (kmax < 0) throw std::invalid_argument("gaussian_spectrum: kmax must be >= 0");

  const double a = 1.0 / (4.0 * input_scale * input_scale);
  const double b = 1.0 / (2.0 * lengthscale * lengthscale);
  const double c = std::sqrt(a * a + 2.0 * a * b);
  const double A = a + b + c;
  const double B = b / A;

  Spectrum s;
  s.d = d;
  s.measure = Measure::Gaussian;
  s.label = "gaussian-l-" + format_real(lengthscale) + "-sx-" + format_real(input_scale);
  s.quad_order = 0;
  s.levels.resize(static_cast<std::size_t>(kmax) + 1);
  const double base = std::pow(2.0 * a / A, 0.5 * d);
  double bk = 1.0;
  for (int k = 0; k <= kmax; ++k) {
    s.levels[static_cast<std::size_t>(k)] = {k, base * bk, binomial_real(d + k - 1, k)};
    bk *= B;
  }
  s.tail_mass = 1.0 - s.trace();
  return s;
}

Vector expand_scalar_function(const std::function<double(double)>& f, SphereDim dim,
                              int kmax, const QuadratureRule& rule) {
  auto coeff = project_levels(f, dim, kmax, rule);
  Vector a(kmax + 1);
  for (int k = 0; k <= kmax; ++k) a[k] = coeff[static_cast<std::size_t>(k)];
  return a;
}

namespace {
const char* measure_name(Measure m) {
  switch (m) {
    case Measure::Sphere: return "sphere";
    case Measure::Gaussian: return "gaussian";
    case Measure::Discrete: return "discrete";
  }
  return "sphere";
}

Measure measure_from_name(const std::string& name) {
  if (name == "sphere") return Measure::Sphere;
  if (name == "gaussian") return Measure::Gaussian;
  if (name == "discrete") return Measure::Discrete;
  throw std::invalid_argument("unknown measure: " + name);
}
}  // namespace

void save_spectrum(const Spectrum& s, const std::string& path) {
  Matrix rows(static_cast<Index>(s.levels.size()), 3);
  for (Index i = 0; i < rows.rows(); ++i) {
    const auto& lv = s.levels[static_cast<std::size_t>(i)];
    rows(i, 0) = lv.k;
    rows(i, 1) = lv.lambda;
    rows(i, 2) = lv.count;
  }
  write_csv(path, {"k", "lambda", "degeneracy"}, rows);

  nlohmann::json meta;
  meta["d"] = s.d;
  meta["kmax"] = s.kmax();
  meta["label"] = s.label;
  meta["tail_mass_estimate"] = s.tail_mass;
  meta["quad_order"] = s.quad_order;
  meta["measure"] = measure_name(s.measure);
  write_text_file(sidecar_path(path), meta.dump(2) + "\n");
}

Spectrum load_spectrum(const std::string& path) {
  CsvFile csv = read_csv(path);
  if (csv.header != std::vector<std::string>{"k", "lambda", "degeneracy"})
    throw std::runtime_error("load_spectrum: unexpected csv header in " + path);

  Spectrum s;
  s.levels.resize(static_cast<std::size_t>(csv.rows.rows()));
  for (Index i = 0; i < csv.rows.rows(); ++i) {
    auto& lv = s.levels[static_cast<std::size_t>(i)];
    lv.k = static_cast<int>(csv.rows(i, 0));
    lv.lambda = csv.rows(i, 1);
    lv.count = csv.rows(i, 2);
  }

  const auto meta = nlohmann::json::parse(read_text_file(sidecar_path(path)));
  s.d = meta.at("d").get<int>();
  s.label = meta.at("label").get<std::string>();
  s.tail_mass = meta.at("tail_mass_estimate").get<double>();
  s.quad_order = meta.at("quad_order").get<int>();
  if (meta.contains("measure")) s.measure = measure_from_name(meta.at("measure").get<std::string>());
  return s;
}

}  // namespace kernelcurves
