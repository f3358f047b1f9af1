#include "kernelcurves/theory.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "kernelcurves/io.hpp"

namespace kernelcurves {

namespace {

constexpr double kTMin = 1e-300;

// sum_k N_k (1/lambda_k + p/(ridge+t))^{-power}, power in {1,2}. Levels with
// lambda <= 0 drop out (their terms vanish).
double level_sum(const Spectrum& s, double p, double ridge, double t, int power) {
  const double q = p / (ridge + t);
  double acc = 0.0;
  for (const auto& lv : s.levels) {
    if (lv.lambda <= 0.0) continue;
    const double g = 1.0 / (1.0 / lv.lambda + q);
    acc += lv.count * (power == 1 ? g : g * g);
  }
  return acc;
}

double positive_trace(const Spectrum& s) {
  double tr = 0.0;
  for (const auto& lv : s.levels)
    if (lv.lambda > 0.0) tr += lv.count * lv.lambda;
  return tr;
}

double positive_mode_count(const Spectrum& s) {
  double m = 0.0;
  for (const auto& lv : s.levels)
    if (lv.lambda > 0.0) m += lv.count;
  return m;
}

struct FixedPoint {
  double t = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double prefactor = std::numeric_limits<double>::infinity();
  bool flagged = true;
};

// Shared by mode_errors and multi_output_curve so single- and multi-class
// paths produce bit-identical diagnostics.
FixedPoint solve_core(const Spectrum& s, double p, double ridge) {
  FixedPoint fp;
  try {
    fp.t = solve_t(s, p, ridge);
  } catch (const std::runtime_error&) {
    return fp;  // interpolation threshold: flagged row
  }
  fp.gamma = gamma_of(s, p, ridge, fp.t);
  const double scale = ridge + fp.t;
  const double denom = 1.0 - p * fp.gamma / (scale * scale);
  if (denom <= 1e-12) return fp;
  fp.prefactor = 1.0 / denom;
  fp.flagged = false;
  return fp;
}

double fill_level_errors(const Spectrum& s, const TargetPowers& powers, double p,
                         double ridge, const FixedPoint& fp, Vector& out) {
  const double scale = ridge + fp.t;
  double total = 0.0;
  for (Index i = 0; i < out.size(); ++i) {
    const auto& lv = s.levels[static_cast<std::size_t>(i)];
    if (lv.lambda <= 0.0) {
      out[i] = 0.0;
      continue;
    }
    const double r = scale / (scale + p * lv.lambda);
    out[i] = powers.power[static_cast<std::size_t>(i)] * lv.lambda * r * r * fp.prefactor;
    total += out[i];
  }
  return total;
}

void check_alignment(const Spectrum& s, const TargetPowers& powers) {
  if (powers.power.size() != s.levels.size())
    throw std::invalid_argument("target powers do not align with the spectrum's levels");
  for (double w : powers.power)
    if (!(w >= 0.0)) throw std::invalid_argument("target powers must be nonnegative");
}

}  // namespace

TargetPowers kernel_teacher_powers(const Spectrum& s, double p_prime) {
  if (!(p_prime > 0.0)) throw std::invalid_argument("p_prime must be positive");
  TargetPowers tp;
  tp.power.reserve(s.levels.size());
  for (const auto& lv : s.levels) tp.power.push_back(p_prime * lv.lambda * lv.count);
  return tp;
}

TargetPowers pure_mode_powers(const Spectrum& s, int degree, double p_prime) {
  if (!(p_prime > 0.0)) throw std::invalid_argument("p_prime must be positive");
  TargetPowers tp;
  tp.power.assign(s.levels.size(), 0.0);
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    if (s.levels[i].k != degree) continue;
    if (!(s.levels[i].lambda > 0.0))
      throw std::invalid_argument("pure-mode target on a level with zero eigenvalue");
    tp.power[i] = p_prime / (s.levels[i].count * s.levels[i].lambda);
    return tp;
  }
  throw std::invalid_argument("pure-mode degree not present in the spectrum");
}

double solve_t(const Spectrum& s, double p, double ridge) {
  if (!(p >= 0.0)) throw std::invalid_argument("p must be nonnegative");
  if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be nonnegative");
  const double trace = positive_trace(s);
  if (!(trace > 0.0))
    throw std::invalid_argument("spectrum has no strictly positive eigenvalue");
  if (p == 0.0) return trace;

  // h(t) = t - S(t) with S the level-weighted sum; S is increasing in t and
  // S(trace) <= trace, so [t_min, trace] brackets the unique root except past
  // the ridgeless interpolation threshold, where h > 0 already at t_min.
  double lo = kTMin;
  double hi = trace;
  const auto h = [&](double t) { return t - level_sum(s, p, ridge, t, 1); };
  if (h(lo) >= 0.0) {
    std::ostringstream msg;
    msg << "interpolation threshold: no t > " << kTMin << " solves the fixed point at p=" << p
        << ", ridge=" << ridge << " (spectrum has " << positive_mode_count(s)
        << " modes; ridgeless error diverges for p near that count)";
    throw std::runtime_error(msg.str());
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = std::exp(0.5 * (std::log(lo) + std::log(hi)));
    (h(mid) < 0.0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  if (!(std::abs(h(t)) <= 1e-10 * t))
    throw std::runtime_error("fixed-point residual exceeds 1e-10 relative");
  return t;
}

double gamma_of(const Spectrum& s, double p, double ridge, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  return level_sum(s, p, ridge, t, 2);
}

ModeErrorRow mode_errors(const Spectrum& s, const TargetPowers& powers, double p, double ridge) {
  check_alignment(s, powers);
  ModeErrorRow row;
  row.p = p;
  row.level_errors = Vector::Constant(static_cast<Index>(s.levels.size()),
                                      std::numeric_limits<double>::quiet_NaN());
  const FixedPoint fp = solve_core(s, p, ridge);
  row.t = fp.t;
  row.gamma = fp.gamma;
  row.prefactor = fp.prefactor;
  row.flagged = fp.flagged;
  if (fp.flagged) {
    row.total = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  row.total = fill_level_errors(s, powers, p, ridge, fp, row.level_errors);
  return row;
}

TheoryCurve learning_curve(const Spectrum& s, const TargetPowers& powers,
                           const std::vector<double>& p_list, double ridge) {
  return multi_output_curve(s, {powers}, p_list, ridge, nullptr);
}

TheoryCurve multi_output_curve(const Spectrum& s, const std::vector<TargetPowers>& classes,
                               const std::vector<double>& p_list, double ridge,
                               std::vector<TheoryCurve>* per_class) {
  if (classes.empty()) throw std::invalid_argument("at least one target class required");
  for (const auto& c : classes) check_alignment(s, c);
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    if (!(p_list[i] >= 0.0)) throw std::invalid_argument("p_list entries must be nonnegative");
    if (i > 0 && p_list[i] < p_list[i - 1])
      throw std::invalid_argument("p_list must be sorted ascending");
  }

  const Index np = static_cast<Index>(p_list.size());
  const Index nl = static_cast<Index>(s.levels.size());
  const std::size_t nc = classes.size();

  TheoryCurve base;
  base.ridge = ridge;
  base.p = p_list;
  base.level_k.reserve(static_cast<std::size_t>(nl));
  for (const auto& lv : s.levels) base.level_k.push_back(lv.k);
  base.level_errors = Matrix::Zero(np, nl);
  base.total = Vector::Zero(np);
  base.t = Vector::Zero(np);
  base.gamma = Vector::Zero(np);
  base.prefactor = Vector::Zero(np);
  base.flag.assign(static_cast<std::size_t>(np), 0);

  TheoryCurve sum = base;
  if (per_class) per_class->assign(nc, base);

  Vector buf(nl);
  for (Index i = 0; i < np; ++i) {
    const double p = p_list[i];
    const FixedPoint fp = solve_core(s, p, ridge);
    sum.t[i] = fp.t;
    sum.gamma[i] = fp.gamma;
    sum.prefactor[i] = fp.prefactor;
    if (per_class)
      for (auto& pc : *per_class) {
        pc.t[i] = fp.t;
        pc.gamma[i] = fp.gamma;
        pc.prefactor[i] = fp.prefactor;
      }
    if (fp.flagged) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      sum.flag[static_cast<std::size_t>(i)] = 1;
      sum.level_errors.row(i).setConstant(nan);
      sum.total[i] = nan;
      if (per_class)
        for (auto& pc : *per_class) {
          pc.flag[static_cast<std::size_t>(i)] = 1;
          pc.level_errors.row(i).setConstant(nan);
          pc.total[i] = nan;
        }
      continue;
    }
    for (std::size_t c = 0; c < nc; ++c) {
      const double total_c = fill_level_errors(s, classes[c], p, ridge, fp, buf);
      sum.level_errors.row(i) += buf.transpose();
      sum.total[i] += total_c;
      if (per_class) {
        (*per_class)[c].level_errors.row(i) = buf.transpose();
        (*per_class)[c].total[i] = total_c;
      }
    }
  }
  return sum;
}

PowerLawPrediction powerlaw_exponent(const PowerLawSpec& spec, PRegime regime) {
  if (!(spec.a > 1.0)) throw std::invalid_argument("power-law target exponent a must exceed 1");
  if (!(spec.b > 1.0)) throw std::invalid_argument("power-law spectrum exponent b must exceed 1");
  if (!(spec.ridge >= 0.0)) throw std::invalid_argument("ridge must be nonnegative");
  PowerLawPrediction out;
  const double base = std::min(spec.a - 1.0, 2.0 * spec.b);
  out.beta = (regime == PRegime::SmallP) ? base : base / spec.b;
  out.crossover = spec.ridge > 0.0 ? std::pow(spec.ridge, -1.0 / (spec.b - 1.0))
                                   : std::numeric_limits<double>::infinity();
  return out;
}

StageRatios stage_ratios(const StageSpec& spec, bool asymptote) {
  const std::size_t n = spec.lambda_bar.size();
  if (n == 0) throw std::invalid_argument("lambda_bar is empty");
  for (double lb : spec.lambda_bar)
    if (!(lb > 0.0)) throw std::invalid_argument("lambda_bar entries must be positive");
  if (spec.level < 0 || static_cast<std::size_t>(spec.level) >= n)
    throw std::invalid_argument("level outside lambda_bar range");
  if (!(spec.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(spec.ridge >= 0.0)) throw std::invalid_argument("ridge must be nonnegative");

  const std::size_t ell = static_cast<std::size_t>(spec.level);
  const double lb_ell = spec.lambda_bar[ell];
  double above = 0.0;  // levels k > ell are untouched at this sample scale
  for (std::size_t k = ell + 1; k < n; ++k) above += spec.lambda_bar[k];

  StageRatios out;
  out.ratio.assign(n, 0.0);

  if (asymptote) {
    out.t = above;
    out.gamma_tilde = 0.0;
    const double s = spec.ridge + above;
    out.ratio[ell] = (s * s) / (lb_ell * lb_ell * spec.alpha * spec.alpha);
    for (std::size_t k = ell + 1; k < n; ++k) out.ratio[k] = 1.0;
    return out;
  }

  // t = above + (t+ridge) lb_ell / (t+ridge+alpha lb_ell); the right side is
  // increasing in t and bounded by above + lb_ell, so plain bisection — but
  // on the correction u = t - above in [0, lb_ell], not on t itself: rescaled
  // spectra routinely have mass above the level so large that lb_ell sits
  // below one ulp of t and a bracket in t collapses. With nothing above the
  // level and no ridge the equation factors: t = 0 meets t = lb_ell (1-alpha)
  // at alpha = 1 (a double root the bracket cannot separate), and the
  // physical branch — continuous in alpha from t(0) = lb_ell — is the larger
  // root.
  if (above == 0.0 && spec.ridge == 0.0) {
    out.t = lb_ell * std::max(0.0, 1.0 - spec.alpha);
  } else {
    const double c = above + spec.ridge;
    const auto h = [&](double u) {
      const double s = u + c;
      return u - s * lb_ell / (s + spec.alpha * lb_ell);
    };
    double lo = 0.0, hi = lb_ell;  // h(0) <= 0 and h(lb_ell) >= 0 always
    for (int it = 0; it < 200 && hi - lo > 1e-16 * lb_ell; ++it) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) < 0.0 ? lo : hi) = mid;
    }
    out.t = above + 0.5 * (lo + hi);
  }

  const double s = out.t + spec.ridge;
  const double reach = s + spec.alpha * lb_ell;
  out.gamma_tilde = spec.alpha * lb_ell * lb_ell / (reach * reach);
  if (out.gamma_tilde >= 1.0 - 1e-12)
    throw std::runtime_error("stage prefactor diverges (alpha at or below the learning threshold)");
  const double pref = 1.0 / (1.0 - out.gamma_tilde);
  const double u = s / reach;  // = (1 + alpha lb_ell/(t+ridge))^{-1}, stable at s = 0
  out.ratio[ell] = pref * u * u;
  for (std::size_t k = ell + 1; k < n; ++k) out.ratio[k] = pref;
  return out;
}

void save_curve(const TheoryCurve& curve, const std::string& path,
                const std::string& metadata_json) {
  const Index np = static_cast<Index>(curve.p.size());
  const Index nl = static_cast<Index>(curve.level_k.size());
  std::vector<std::string> header = {"p", "E_total"};
  for (int k : curve.level_k) header.push_back("E_k" + std::to_string(k));
  header.insert(header.end(), {"t", "gamma", "prefactor", "flag"});

  Matrix m(np, nl + 6);
  for (Index i = 0; i < np; ++i) {
    m(i, 0) = curve.p[static_cast<std::size_t>(i)];
    m(i, 1) = curve.total[i];
    m.block(i, 2, 1, nl) = curve.level_errors.row(i);
    m(i, nl + 2) = curve.t[i];
    m(i, nl + 3) = curve.gamma[i];
    m(i, nl + 4) = curve.prefactor[i];
    m(i, nl + 5) = curve.flag[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  write_csv(path, header, m);
  write_text_file(sidecar_path(path), metadata_json.empty() ? "{}\n" : metadata_json + "\n");
}

}  // namespace kernelcurves
