#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kernelcurves/kernels.hpp"
#include "kernelcurves/types.hpp"

namespace kernelcurves {

// Second moments <w^2> of the target coefficients, aggregated per spectrum
// level (index-aligned with Spectrum::levels). power[k] is the total over the
// level's modes.
struct TargetPowers {
  std::vector<double> power;
};

// Target drawn from the kernel's own prior with p_prime centers:
// power_k = p_prime * lambda_k * count_k.
TargetPowers kernel_teacher_powers(const Spectrum& s, double p_prime);

// Target concentrated on a single degree: power_degree = p_prime /
// (count_degree * lambda_degree), zero elsewhere.
TargetPowers pure_mode_powers(const Spectrum& s, int degree, double p_prime);

// Self-consistent scale t(p): t = sum_k count_k (1/lambda_k + p/(ridge+t))^{-1}.
// Bracketed bisection (geometric midpoints) on [1e-300, trace]; p = 0 returns
// the trace. Throws at the ridgeless interpolation threshold, where the
// bracket collapses.
double solve_t(const Spectrum& s, double p, double ridge);

// gamma(p) = sum_k count_k (1/lambda_k + p/(ridge+t))^{-2}.
double gamma_of(const Spectrum& s, double p, double ridge, double t);

struct ModeErrorRow {
  double p = 0.0;
  double t = 0.0;
  double gamma = 0.0;
  double prefactor = 1.0;
  Vector level_errors;  // per spectrum level
  double total = 0.0;
  bool flagged = false;  // prefactor divergence or solver failure at this p
};

// Per-level generalization errors at sample size p:
// E_k = power_k * lambda_k (ridge+t)^2 / ((ridge+t) + p lambda_k)^2 * prefactor,
// prefactor = (1 - p gamma / (ridge+t)^2)^{-1}.
// A divergent prefactor or an interpolation-threshold failure of solve_t
// flags the row (NaN errors) instead of throwing. Zero-eigenvalue levels
// contribute nothing; unlearnable power in them is the caller's concern.
ModeErrorRow mode_errors(const Spectrum& s, const TargetPowers& powers, double p, double ridge);

struct TheoryCurve {
  double ridge = 0.0;
  std::vector<int> level_k;        // degree labels for the error columns
  std::vector<double> p;
  Matrix level_errors;             // rows: p, cols: levels
  Vector total, t, gamma, prefactor;
  std::vector<std::uint8_t> flag;  // 1 = flagged row (errors are NaN)
};

TheoryCurve learning_curve(const Spectrum& s, const TargetPowers& powers,
                           const std::vector<double>& p_list, double ridge);

// Independent output channels share t and gamma; errors add. Per-class curves
// are written to *per_class when given.
TheoryCurve multi_output_curve(const Spectrum& s, const std::vector<TargetPowers>& classes,
                               const std::vector<double>& p_list, double ridge,
                               std::vector<TheoryCurve>* per_class = nullptr);

// Pure power law lambda_rho = rho^{-b}, lambda_rho <w^2> = rho^{-a}.
struct PowerLawSpec {
  double a = 0.0;
  double b = 0.0;
  double ridge = 0.0;
};

enum class PRegime { SmallP, LargeP };

struct PowerLawPrediction {
  double beta = 0.0;       // decay rate: E_g ~ p^{-beta}
  double crossover = 0.0;  // ridge^{-1/(b-1)}; +inf when ridgeless
};

// SmallP (p below the crossover): beta = min(a-1, 2b). LargeP: beta / b.
PowerLawPrediction powerlaw_exponent(const PowerLawSpec& spec, PRegime regime);

// Learning stages in the d -> infinity picture: rescaled level eigenvalues
// lambda_bar[k] ~ d^k lambda_k held O(1), sample size p = alpha d^level.
struct StageSpec {
  std::vector<double> lambda_bar;  // index = degree, 0..K
  int level = 0;                   // the level currently being learned
  double alpha = 1.0;
  double ridge = 0.0;
};

struct StageRatios {
  std::vector<double> ratio;  // E_k(alpha d^level) / E_k(0) per degree
  double t = 0.0;
  double gamma_tilde = 0.0;
};

// asymptote = false: exact O(1) fixed-point solution at finite alpha.
// asymptote = true: the large-alpha limits {0, (ridge+sum_{m>level})^2 /
// (alpha^2 lambda_bar_level^2), 1}.
StageRatios stage_ratios(const StageSpec& spec, bool asymptote = false);

// CSV: p,E_total,E_k...,t,gamma,prefactor,flag (+ JSON sidecar `metadata`).
void save_curve(const TheoryCurve& curve, const std::string& path,
                const std::string& metadata_json);

}  // namespace kernelcurves
