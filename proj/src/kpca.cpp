#include "kernelcurves/kpca.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

#include "kernelcurves/io.hpp"
#include "kernelcurves/regression.hpp"

namespace kernelcurves {

namespace {

void apply_subset_and_normalize(DiscreteDataset& data, bool normalize, Index subset,
                                std::uint64_t seed, bool allow_duplicates) {
  const Index n = data.points.rows();
  if (subset >= 0) {
    if (subset < 1 || subset > n)
      throw std::invalid_argument("load_dataset: subset must be in [1, rows]");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 engine(seed);
    std::shuffle(order.begin(), order.end(), engine);
    Matrix pts(subset, data.points.cols()), tgt(subset, data.targets.cols());
    for (Index i = 0; i < subset; ++i) {
      pts.row(i) = data.points.row(order[static_cast<std::size_t>(i)]);
      tgt.row(i) = data.targets.row(order[static_cast<std::size_t>(i)]);
    }
    data.points = std::move(pts);
    data.targets = std::move(tgt);
  }
  if (normalize) {
    for (Index i = 0; i < data.points.rows(); ++i) {
      const double norm = data.points.row(i).norm();
      if (norm < 1e-300)
        throw std::runtime_error("load_dataset: row " + std::to_string(i) +
                                 " has zero norm and cannot be normalized");
      data.points.row(i) /= norm;
    }
    data.normalized = true;
  }
  if (!allow_duplicates) {
    std::vector<Index> order(static_cast<std::size_t>(data.points.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    auto row_less = [&](Index a, Index b) {
      for (Index j = 0; j < data.points.cols(); ++j) {
        if (data.points(a, j) < data.points(b, j)) return true;
        if (data.points(a, j) > data.points(b, j)) return false;
      }
      return false;
    };
    std::sort(order.begin(), order.end(), row_less);
    for (std::size_t i = 1; i < order.size(); ++i)
      if ((data.points.row(order[i]).array() == data.points.row(order[i - 1]).array()).all())
        throw std::invalid_argument(
            "load_dataset: rows " + std::to_string(order[i - 1]) + " and " +
            std::to_string(order[i]) +
            " are identical; duplicates make the ridgeless gram singular "
            "(pass allow_duplicates to keep them)");
  }
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error("load_dataset: " + path + " is truncated");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

}  // namespace

DiscreteDataset load_dataset_csv(const std::string& path, bool normalize, Index subset,
                                 std::uint64_t seed, bool allow_duplicates) {
  const CsvFile file = read_csv(path);
  Index d = 0, c = 0;
  for (std::size_t i = 0; i < file.header.size(); ++i) {
    const std::string want_x = "x" + std::to_string(i);
    const std::string want_y = "y" + std::to_string(i - static_cast<std::size_t>(d));
    if (c == 0 && file.header[i] == want_x)
      ++d;
    else if (file.header[i] == want_y)
      ++c;
    else
      throw std::runtime_error("load_dataset: " + path + ": expected columns x0..x{d-1},y0..y{C-1}, got '" +
                               file.header[i] + "' at position " + std::to_string(i));
  }
  if (d < 1 || c < 1)
    throw std::runtime_error("load_dataset: " + path + ": need at least one x and one y column");

  DiscreteDataset data;
  data.source = path;
  data.points = file.rows.leftCols(d);
  data.targets = file.rows.rightCols(c);
  apply_subset_and_normalize(data, normalize, subset, seed, allow_duplicates);
  return data;
}

DiscreteDataset load_dataset_idx(const std::string& images_path, const std::string& labels_path,
                                 bool normalize, Index subset, std::uint64_t seed,
                                 bool allow_duplicates) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_dataset: cannot open " + images_path);
  if (read_be32(img, images_path) != 0x00000803u)
    throw std::runtime_error("load_dataset: " + images_path +
                             " does not start with the IDX image magic 0x00000803");
  const auto n = static_cast<Index>(read_be32(img, images_path));
  const auto rows = static_cast<Index>(read_be32(img, images_path));
  const auto cols = static_cast<Index>(read_be32(img, images_path));
  const Index d = rows * cols;
  if (n < 1 || d < 1) throw std::runtime_error("load_dataset: " + images_path + ": empty payload");

  std::vector<unsigned char> pixels(static_cast<std::size_t>(n * d));
  if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
    throw std::runtime_error("load_dataset: " + images_path + " is truncated");

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_dataset: cannot open " + labels_path);
  if (read_be32(lab, labels_path) != 0x00000801u)
    throw std::runtime_error("load_dataset: " + labels_path +
                             " does not start with the IDX label magic 0x00000801");
  if (static_cast<Index>(read_be32(lab, labels_path)) != n)
    throw std::runtime_error("load_dataset: image and label counts disagree");
  std::vector<unsigned char> labels(static_cast<std::size_t>(n));
  if (!lab.read(reinterpret_cast<char*>(labels.data()), n))
    throw std::runtime_error("load_dataset: " + labels_path + " is truncated");

  DiscreteDataset data;
  data.source = images_path;
  data.points.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j)
      data.points(i, j) = pixels[static_cast<std::size_t>(i * d + j)] / 255.0;
  data.targets = Matrix::Zero(n, 10);
  for (Index i = 0; i < n; ++i) {
    const unsigned char y = labels[static_cast<std::size_t>(i)];
    if (y > 9)
      throw std::runtime_error("load_dataset: " + labels_path + ": label value " +
                               std::to_string(int{y}) + " out of range");
    data.targets(i, y) = 1.0;
  }
  apply_subset_and_normalize(data, normalize, subset, seed, allow_duplicates);
  return data;
}

DiscreteEigensystem discrete_spectrum(const DotKernel& kernel, const DiscreteDataset& data,
                                      Index max_points) {
  const Index n = data.points.rows();
  if (n < 1) throw std::invalid_argument("discrete_spectrum: empty dataset");
  if (n > max_points)
    throw std::invalid_argument("discrete_spectrum: " + std::to_string(n) +
                                " points exceed the dense-eigensolve guard of " +
                                std::to_string(max_points));
  if (data.targets.rows() != n)
    throw std::invalid_argument("discrete_spectrum: targets and points disagree on rows");

  const Matrix k = gram(kernel, data.points, data.points);
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("discrete_spectrum: eigensolver failed to converge");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return es.eigenvalues()[a] > es.eigenvalues()[b];
  });

  DiscreteEigensystem eig;
  eig.lambda.resize(n);
  eig.phi.resize(n, n);
  const double scale = std::sqrt(static_cast<double>(n));
  double clamped = 0.0;
  for (Index r = 0; r < n; ++r) {
    double lam = es.eigenvalues()[order[static_cast<std::size_t>(r)]] / static_cast<double>(n);
    if (lam < 0.0) {
      clamped -= lam;
      lam = 0.0;
    }
    eig.lambda[r] = lam;
    eig.phi.row(r) = scale * es.eigenvectors().col(order[static_cast<std::size_t>(r)]).transpose();
  }
  const double mean_trace = k.trace() / static_cast<double>(n);
  if (clamped > 1e-8 * mean_trace)
    throw std::runtime_error("discrete_spectrum: negative eigenvalue mass " +
                             format_real(clamped) + " exceeds 1e-8 of the mean trace " +
                             format_real(mean_trace));
  for (Index r = 0; r < n; ++r)
    if (eig.lambda[r] == 0.0) ++eig.zero_modes;

  eig.wbar = project_targets(eig, data.targets);
  const Index c = data.targets.cols();
  eig.residual.resize(c);
  for (Index j = 0; j < c; ++j) {
    const double norm2 = data.targets.col(j).squaredNorm() / static_cast<double>(n);
    const double captured = (eig.lambda.array() * eig.wbar.col(j).array().square()).sum();
    eig.residual[j] = std::max(0.0, norm2 - captured);
  }
  return eig;
}

Matrix project_targets(const DiscreteEigensystem& eig, const Matrix& y) {
  const Index n = eig.size();
  if (y.rows() != n)
    throw std::invalid_argument("project_targets: targets must have one row per point");
  Matrix w = eig.phi * y / static_cast<double>(n);
  for (Index r = 0; r < n; ++r) {
    if (eig.lambda[r] > 0.0)
      w.row(r) /= std::sqrt(eig.lambda[r]);
    else
      w.row(r).setZero();
  }
  return w;
}

DatasetCurve dataset_learning_curve(const DiscreteEigensystem& eig,
                                    const std::vector<double>& p_list, double ridge) {
  const Index n = eig.size();
  for (double p : p_list)
    if (p > static_cast<double>(n))
      throw std::invalid_argument("dataset_learning_curve: p exceeds the dataset size");

  Spectrum s;
  s.d = 0;
  s.measure = Measure::Discrete;
  s.label = "dataset";
  const Index modes = n - eig.zero_modes;
  s.levels.reserve(static_cast<std::size_t>(modes));
  std::vector<TargetPowers> classes(static_cast<std::size_t>(eig.classes()));
  for (Index r = 0; r < n; ++r) {
    if (eig.lambda[r] <= 0.0) continue;
    s.levels.push_back({static_cast<int>(s.levels.size()), eig.lambda[r], 1.0});
    for (Index c = 0; c < eig.classes(); ++c)
      classes[static_cast<std::size_t>(c)].power.push_back(eig.wbar(r, c) * eig.wbar(r, c));
  }

  DatasetCurve dc;
  dc.class_floor = eig.residual;
  dc.zero_modes = eig.zero_modes;
  dc.curve = multi_output_curve(s, classes, p_list, ridge, &dc.per_class);
  dc.curve.total.array() += dc.floor();
  for (Index c = 0; c < eig.classes(); ++c)
    dc.per_class[static_cast<std::size_t>(c)].total.array() += eig.residual[c];
  return dc;
}

Matrix bin_mode_errors(const TheoryCurve& curve) {
  const Index modes = curve.level_errors.cols();
  Index nbins = 0;
  while ((Index{1} << nbins) - 1 < modes) ++nbins;
  Matrix bins = Matrix::Zero(curve.level_errors.rows(), nbins);
  for (Index b = 0; b < nbins; ++b) {
    const Index lo = (Index{1} << b) - 1;
    const Index hi = std::min(modes, (Index{1} << (b + 1)) - 1);
    bins.col(b) = curve.level_errors.middleCols(lo, hi - lo).rowwise().sum();
  }
  return bins;
}

void save_dataset_curve(const DatasetCurve& dc, const std::string& path,
                        const std::string& source) {
  nlohmann::json meta;
  meta["source"] = source;
  meta["modes"] = dc.curve.level_errors.cols();
  meta["classes"] = dc.per_class.size();
  meta["ridge"] = dc.curve.ridge;
  meta["zero_modes"] = dc.zero_modes;
  meta["floor"] = dc.floor();
  meta["class_floor"] = std::vector<double>(dc.class_floor.data(),
                                            dc.class_floor.data() + dc.class_floor.size());
  save_curve(dc.curve, path, meta.dump(2));

  std::string stem = path;
  if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv") stem.resize(stem.size() - 4);
  for (std::size_t c = 0; c < dc.per_class.size(); ++c) {
    nlohmann::json cmeta;
    cmeta["source"] = source;
    cmeta["class"] = c;
    cmeta["floor"] = dc.class_floor[static_cast<Index>(c)];
    save_curve(dc.per_class[c], stem + "_class" + std::to_string(c) + ".csv", cmeta.dump(2));
  }
}

}  // namespace kernelcurves
