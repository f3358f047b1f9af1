#include "kernelcurves/regression.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "kernelcurves/io.hpp"

namespace kernelcurves {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_unit_signs(const Vector& signs, const char* who) {
  for (Index i = 0; i < signs.size(); ++i)
    if (signs[i] != 1.0 && signs[i] != -1.0)
      throw std::invalid_argument(std::string(who) + ": teacher signs must be exactly +-1");
}

// Entrywise Q_k of a clamped cosine matrix, walked once up to `upto`; calls
// back with (k, Q_k) for every degree so consumers pick the levels they need.
template <class F>
void walk_gegenbauer(SphereDim dim, const Matrix& cosines, int upto, F&& visit) {
  GegenbauerRecurrence<ArrayXX<double>> rec(dim, cosines.array());
  visit(0, rec.value());
  for (int k = 1; k <= upto; ++k) {
    rec.advance();
    visit(k, rec.value());
  }
}

}  // namespace

Matrix sample_sphere(SphereDim dim, Index n, std::mt19937_64& engine) {
  if (n < 1) throw std::invalid_argument("sample_sphere: n must be >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(n, dim.d);
  for (Index i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      for (Index j = 0; j < dim.d; ++j) x(i, j) = gauss(engine);
      norm = x.row(i).norm();
    } while (norm < 1e-300);
    x.row(i) /= norm;
  }
  return x;
}

Matrix sample_sphere(SphereDim dim, Index n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  return sample_sphere(dim, n, engine);
}

Matrix cosine_matrix(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols())
    throw std::invalid_argument("cosine_matrix: dimension mismatch between point sets");
  Matrix g = A * B.transpose();
  const double excess = g.size() == 0 ? 0.0 : g.array().abs().maxCoeff() - 1.0;
  if (excess > 1e-12)
    throw std::runtime_error("cosine_matrix: dot product outside [-1, 1] by " +
                             format_real(excess) + "; points must be unit-norm");
  g = g.array().min(1.0).max(-1.0);
  if (&A == &B) {  // exact symmetry, and unit self-cosines by definition
    g.diagonal().setOnes();
    g.triangularView<Eigen::StrictlyLower>() = g.transpose();
  }
  return g;
}

Matrix gram(const DotKernel& kernel, const Matrix& A, const Matrix& B) {
  Matrix g = cosine_matrix(A, B);
  return g.unaryExpr([&kernel](double z) { return kernel(z); });
}

Vector krr_fit(const Matrix& K, const Vector& y, double ridge) {
  if (K.rows() != K.cols()) throw std::invalid_argument("krr_fit: gram matrix must be square");
  if (K.rows() != y.size())
    throw std::invalid_argument("krr_fit: gram size and target length disagree");
  if (!(ridge >= 0.0)) throw std::invalid_argument("krr_fit: ridge must be >= 0");

  Matrix a_mat = K;
  a_mat.diagonal().array() += ridge;

  auto give_up = [&](const char* what) {
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Matrix>(K, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    const double jitter = std::max(2.0 * std::abs(min_eig), 1e-12 * K.trace());
    throw std::runtime_error(std::string("krr_fit: ") + what + " (smallest gram eigenvalue " +
                             format_real(min_eig) + "); add a diagonal jitter of about " +
                             format_real(jitter) + " or use a small ridge");
  };

  Eigen::LLT<Matrix> llt(a_mat);
  if (llt.info() != Eigen::Success) give_up("system is not positive definite");

  Vector alpha = llt.solve(y);
  const double target = 1e-8 * y.norm();
  for (int pass = 0; pass < 3; ++pass) {
    Vector r = y - a_mat.selfadjointView<Eigen::Upper>() * alpha;
    if (r.norm() <= target) return alpha;
    alpha += llt.solve(r);
  }
  if ((y - a_mat.selfadjointView<Eigen::Upper>() * alpha).norm() <= target) return alpha;
  give_up("refinement stalled above the residual target");
  return alpha;  // unreachable
}

Vector predict(const DotKernel& kernel, const Vector& alpha, const Matrix& x_train,
               const Matrix& x_test) {
  if (alpha.size() != x_train.rows())
    throw std::invalid_argument("predict: one coefficient per training point required");
  if (alpha.size() == 0) return Vector::Zero(x_test.rows());
  return gram(kernel, x_test, x_train) * alpha;
}

Teacher random_teacher(TeacherKind kind, SphereDim dim, Index p_prime, std::mt19937_64& engine,
                       int degree) {
  if (p_prime < 1) throw std::invalid_argument("random_teacher: p_prime must be >= 1");
  if (kind == TeacherKind::PureMode && degree < 0)
    throw std::invalid_argument("random_teacher: pure-mode degree must be >= 0");
  Teacher t;
  t.kind = kind;
  t.degree = kind == TeacherKind::PureMode ? degree : 0;
  t.centers = sample_sphere(dim, p_prime, engine);
  t.signs.resize(p_prime);
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < p_prime; ++i) t.signs[i] = coin(engine) ? 1.0 : -1.0;
  return t;
}

Teacher random_teacher(TeacherKind kind, SphereDim dim, Index p_prime, std::uint64_t seed,
                       int degree) {
  std::mt19937_64 engine(seed);
  return random_teacher(kind, dim, p_prime, engine, degree);
}

Vector teacher_eval(const Teacher& teacher, const DotKernel& kernel, const Matrix& x) {
  if (x.cols() != teacher.centers.cols())
    throw std::invalid_argument("teacher_eval: point dimension does not match the centers");
  check_unit_signs(teacher.signs, "teacher_eval");
  if (teacher.kind == TeacherKind::KernelCombination)
    return gram(kernel, x, teacher.centers) * teacher.signs;
  const Matrix g = cosine_matrix(x, teacher.centers);
  Vector y;
  walk_gegenbauer(SphereDim{static_cast<int>(x.cols())}, g, teacher.degree,
                  [&](int k, const ArrayXX<double>& q) {
                    if (k == teacher.degree) y = q.matrix() * teacher.signs;
                  });
  return y;
}

namespace {

// Shared core: per-level quadratic forms of the student (a) and teacher (b)
// coefficient vectors against entrywise Q_k of the joint cosine matrix.
// pure_degree < 0 means the teacher is a kernel combination.
ModeDecomposition decompose(const Spectrum& spectrum, const Matrix& X, const Vector& alpha,
                            const Matrix& Xbar, const Vector& alpha_bar, int kmax,
                            int pure_degree) {
  if (spectrum.levels.empty())
    throw std::invalid_argument("empirical_mode_errors: empty spectrum");
  const Index p = X.rows(), q = Xbar.rows();
  if (alpha.size() != p)
    throw std::invalid_argument("empirical_mode_errors: one coefficient per student point");
  if (alpha_bar.size() != q || q < 1)
    throw std::invalid_argument("empirical_mode_errors: teacher must have at least one center");
  if ((p > 0 && X.cols() != spectrum.d) || Xbar.cols() != spectrum.d)
    throw std::invalid_argument("empirical_mode_errors: data dimension does not match spectrum");
  if (kmax < 0) kmax = spectrum.kmax();
  if (pure_degree > spectrum.kmax())
    throw std::invalid_argument("empirical_mode_errors: teacher degree outside the spectrum");

  Matrix z(p + q, spectrum.d);
  if (p > 0) z.topRows(p) = X;
  z.bottomRows(q) = Xbar;
  const Matrix g = cosine_matrix(z, z);

  Vector a = Vector::Zero(p + q), b = Vector::Zero(p + q);
  a.head(p) = alpha;
  b.tail(q) = alpha_bar;

  const SphereDim dim{spectrum.d};
  ModeDecomposition out;
  out.level_errors = Vector::Zero(static_cast<Index>(spectrum.levels.size()));
  Index stored = 0;
  std::size_t next = 0;
  walk_gegenbauer(dim, g, spectrum.kmax(), [&](int k, const ArrayXX<double>& qk) {
    if (next >= spectrum.levels.size() || spectrum.levels[next].k != k) return;
    const SpectrumLevel& level = spectrum.levels[next++];
    const Vector qa = qk.matrix().selfadjointView<Eigen::Upper>() * a;
    const double s_aa = a.dot(qa);
    const double s_ab = b.dot(qa);
    const double s_bb = b.dot(qk.matrix().selfadjointView<Eigen::Upper>() * b);
    const double lam = level.lambda, count = level.count;
    double e;
    if (pure_degree >= 0 && k == pure_degree)  // teacher lives at this degree bare
      e = lam * lam * count * s_aa - 2.0 * lam * s_ab + s_bb / count;
    else if (pure_degree >= 0)
      e = lam * lam * count * s_aa;
    else
      e = lam * lam * count * (s_aa - 2.0 * s_ab + s_bb);
    if (e < 0.0) {
      if (e < -1e-10)
        std::cerr << "warning: empirical_mode_errors: clamping negative level error " +
                         format_real(e) + " at k=" + std::to_string(k) + "\n";
      e = 0.0;
    }
    if (k <= kmax) {
      out.degrees.push_back(k);
      out.level_errors[stored++] = e;
    } else {
      out.tail += e;
    }
  });
  out.level_errors.conservativeResize(stored);
  return out;
}

}  // namespace

ModeDecomposition empirical_mode_errors(const Spectrum& spectrum, const Matrix& X,
                                        const Vector& alpha, const Matrix& Xbar,
                                        const Vector& alpha_bar, int kmax) {
  return decompose(spectrum, X, alpha, Xbar, alpha_bar, kmax, -1);
}

ModeDecomposition empirical_mode_errors(const Spectrum& spectrum, const Matrix& X,
                                        const Vector& alpha, const Teacher& teacher, int kmax) {
  check_unit_signs(teacher.signs, "empirical_mode_errors");
  const int pure = teacher.kind == TeacherKind::PureMode ? teacher.degree : -1;
  return decompose(spectrum, X, alpha, teacher.centers, teacher.signs, kmax, pure);
}

DotKernel ExperimentConfig::make_kernel() const {
  if (kernel == ExperimentKernel::Ntk) return ntk_kernel(depth);
  return gaussian_sphere_kernel(lengthscale);
}

Spectrum ExperimentConfig::make_spectrum() const {
  const SphereDim dim{d};
  if (kernel == ExperimentKernel::Ntk) return ntk_spectrum(depth, dim, spectrum_kmax);
  const auto rule = gauss_gegenbauer(dim, std::max(1000, 4 * spectrum_kmax));
  return spectrum_from_kernel(make_kernel(), dim, spectrum_kmax, rule);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ExperimentConfig c;
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    const std::string type = k.value("type", "ntk");
    if (type == "ntk")
      c.kernel = ExperimentKernel::Ntk;
    else if (type == "gaussian")
      c.kernel = ExperimentKernel::GaussianSphere;
    else
      throw std::invalid_argument("experiment config: unknown kernel type '" + type + "'");
    c.depth = k.value("depth", c.depth);
    c.lengthscale = k.value("lengthscale", c.lengthscale);
  }
  c.d = j.value("d", c.d);
  c.ridge = j.value("lambda", c.ridge);
  if (j.contains("teacher")) {
    const auto& t = j.at("teacher");
    const std::string kind = t.value("kind", "kernel");
    if (kind == "kernel")
      c.teacher = TeacherKind::KernelCombination;
    else if (kind == "pure")
      c.teacher = TeacherKind::PureMode;
    else
      throw std::invalid_argument("experiment config: unknown teacher kind '" + kind + "'");
    c.p_prime = t.value("p_prime", c.p_prime);
    c.teacher_degree = t.value("degree", c.teacher_degree);
  }
  c.fixed_teacher = j.value("fixed_teacher", c.fixed_teacher);
  if (j.contains("p_list"))
    for (const auto& v : j.at("p_list")) c.p_list.push_back(v.get<Index>());
  c.trials = j.value("trials", c.trials);
  c.spectrum_kmax = j.value("spectrum_kmax", c.spectrum_kmax);
  c.kmax = j.value("kmax", c.kmax);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["kernel"]["type"] = c.kernel == ExperimentKernel::Ntk ? "ntk" : "gaussian";
  if (c.kernel == ExperimentKernel::Ntk)
    j["kernel"]["depth"] = c.depth;
  else
    j["kernel"]["lengthscale"] = c.lengthscale;
  j["d"] = c.d;
  j["lambda"] = c.ridge;
  j["teacher"]["kind"] = c.teacher == TeacherKind::KernelCombination ? "kernel" : "pure";
  j["teacher"]["p_prime"] = c.p_prime;
  if (c.teacher == TeacherKind::PureMode) j["teacher"]["degree"] = c.teacher_degree;
  j["fixed_teacher"] = c.fixed_teacher;
  j["p_list"] = c.p_list;
  j["trials"] = c.trials;
  j["spectrum_kmax"] = c.spectrum_kmax;
  j["kmax"] = c.kmax;
  j["seed"] = c.seed;
  return j.dump(2);
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  if (config.trials < 1) throw std::invalid_argument("run_experiment: trials must be >= 1");
  if (threads < 1) throw std::invalid_argument("run_experiment: threads must be >= 1");
  if (config.p_list.empty()) throw std::invalid_argument("run_experiment: p_list is empty");
  for (std::size_t i = 0; i < config.p_list.size(); ++i) {
    if (config.p_list[i] < 1)
      throw std::invalid_argument("run_experiment: sample sizes must be >= 1");
    if (i > 0 && config.p_list[i] <= config.p_list[i - 1])
      throw std::invalid_argument("run_experiment: p_list must be strictly increasing");
  }

  const SphereDim dim{config.d};
  const DotKernel kernel = config.make_kernel();
  const Spectrum spectrum = config.make_spectrum();
  const int kcut = config.kmax < 0 ? spectrum.kmax() : config.kmax;

  ExperimentResult r;
  r.p_list = config.p_list;
  r.trials = config.trials;
  r.seed = config.seed;
  r.config_json = experiment_config_to_json(config);
  for (const auto& level : spectrum.levels)
    if (level.k <= kcut) r.degrees.push_back(level.k);

  const Index np = static_cast<Index>(config.p_list.size());
  const Index nl = static_cast<Index>(r.degrees.size());

  Teacher fixed;
  if (config.fixed_teacher)
    fixed = random_teacher(config.teacher, dim, config.p_prime, config.seed,
                           config.teacher_degree);

  r.failed = Eigen::VectorXi::Zero(np);
  r.per_trial.assign(static_cast<std::size_t>(config.trials), Matrix());
  auto run_trial = [&](int trial, Eigen::VectorXi& failed) {
    std::mt19937_64 engine(config.seed + static_cast<std::uint64_t>(trial));
    Teacher teacher =
        random_teacher(config.teacher, dim, config.p_prime, engine, config.teacher_degree);
    if (config.fixed_teacher) teacher = fixed;

    Matrix rows = Matrix::Constant(np, nl + 2, kNaN);
    for (Index j = 0; j < np; ++j) {
      const Matrix x = sample_sphere(dim, config.p_list[static_cast<std::size_t>(j)], engine);
      const Vector y = teacher_eval(teacher, kernel, x);
      Vector alpha;
      try {
        alpha = krr_fit(gram(kernel, x, x), y, config.ridge);
      } catch (const std::runtime_error&) {
        failed[j] += 1;
        continue;
      }
      const ModeDecomposition dec = empirical_mode_errors(spectrum, x, alpha, teacher, kcut);
      rows.row(j).head(nl) = dec.level_errors.transpose();
      rows(j, nl) = dec.tail;
      rows(j, nl + 1) = dec.total();
    }
    r.per_trial[static_cast<std::size_t>(trial)] = std::move(rows);
  };

  const int workers = std::min(threads, config.trials);
  if (workers == 1) {
    for (int trial = 0; trial < config.trials; ++trial) run_trial(trial, r.failed);
  } else {
    std::vector<Eigen::VectorXi> failed(static_cast<std::size_t>(workers),
                                        Eigen::VectorXi::Zero(np));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (int trial = w; trial < config.trials; trial += workers)
            run_trial(trial, failed[static_cast<std::size_t>(w)]);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    for (auto& worker : pool) worker.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (const auto& f : failed) r.failed += f;
  }

  // Trial-major reduction over the survivors of each p.
  r.mean_levels = Matrix::Constant(np, nl, kNaN);
  r.std_levels = Matrix::Constant(np, nl, kNaN);
  r.mean_tail = Vector::Constant(np, kNaN);
  r.std_tail = Vector::Constant(np, kNaN);
  r.mean_total = Vector::Constant(np, kNaN);
  r.std_total = Vector::Constant(np, kNaN);
  for (Index j = 0; j < np; ++j) {
    const int n = config.trials - r.failed[j];
    if (n < 1) continue;
    Vector mean = Vector::Zero(nl + 2);
    for (const Matrix& rows : r.per_trial)
      if (!std::isnan(rows(j, nl + 1))) mean += rows.row(j).transpose();
    mean /= n;
    r.mean_levels.row(j) = mean.head(nl).transpose();
    r.mean_tail[j] = mean[nl];
    r.mean_total[j] = mean[nl + 1];
    if (n < 2) continue;
    Vector ss = Vector::Zero(nl + 2);
    for (const Matrix& rows : r.per_trial)
      if (!std::isnan(rows(j, nl + 1)))
        ss += (rows.row(j).transpose() - mean).array().square().matrix();
    const Vector sd = (ss / (n - 1)).array().sqrt();
    r.std_levels.row(j) = sd.head(nl).transpose();
    r.std_tail[j] = sd[nl];
    r.std_total[j] = sd[nl + 1];
  }
  return r;
}

void save_experiment(const ExperimentResult& result, const std::string& path) {
  const Index np = static_cast<Index>(result.p_list.size());
  const Index nl = static_cast<Index>(result.degrees.size());
  std::vector<std::string> header = {"p", "mean_total", "std_total"};
  for (int k : result.degrees) {
    header.push_back("mean_k" + std::to_string(k));
    header.push_back("std_k" + std::to_string(k));
  }
  header.insert(header.end(), {"mean_tail", "std_tail", "failed_trials"});

  Matrix table(np, 2 * nl + 6);
  for (Index j = 0; j < np; ++j) {
    table(j, 0) = static_cast<double>(result.p_list[static_cast<std::size_t>(j)]);
    table(j, 1) = result.mean_total[j];
    table(j, 2) = result.std_total[j];
    for (Index c = 0; c < nl; ++c) {
      table(j, 3 + 2 * c) = result.mean_levels(j, c);
      table(j, 4 + 2 * c) = result.std_levels(j, c);
    }
    table(j, 3 + 2 * nl) = result.mean_tail[j];
    table(j, 4 + 2 * nl) = result.std_tail[j];
    table(j, 5 + 2 * nl) = result.failed[j];
  }
  write_csv(path, header, table);
  write_text_file(sidecar_path(path),
                  result.config_json.empty() ? "{}\n" : result.config_json + "\n");
}

void save_experiment_normalized(const ExperimentResult& result, const std::string& path) {
  const Index np = static_cast<Index>(result.p_list.size());
  const Index nl = static_cast<Index>(result.degrees.size());
  std::vector<std::string> header = {"p", "total", "std_total"};
  for (int k : result.degrees) {
    header.push_back("k" + std::to_string(k));
    header.push_back("std_k" + std::to_string(k));
  }
  Matrix table(np, 2 * nl + 3);
  for (Index j = 0; j < np; ++j) {
    table(j, 0) = static_cast<double>(result.p_list[static_cast<std::size_t>(j)]);
    table(j, 1) = result.mean_total[j] / result.mean_total[0];
    table(j, 2) = result.std_total[j] / result.mean_total[0];
    for (Index c = 0; c < nl; ++c) {
      table(j, 3 + 2 * c) = result.mean_levels(j, c) / result.mean_levels(0, c);
      table(j, 4 + 2 * c) = result.std_levels(j, c) / result.mean_levels(0, c);
    }
  }
  write_csv(path, header, table);
}

}  // namespace kernelcurves
