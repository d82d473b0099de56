#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoscope/correlate.hpp"
#include "chronoscope/dataset.hpp"
#include "chronoscope/embedding.hpp"
#include "chronoscope/error.hpp"
#include "chronoscope/hash.hpp"
#include "chronoscope/linalg.hpp"

namespace chronoscope {

/// Principal modes of variation of an activation set.
struct PcaModel {
  std::vector<double> mean;
  Matrix components;  ///< k×d, orthonormal rows, descending variance
  std::vector<double> eigenvalues;
  double total_variance = 0.0;
  std::size_t n_samples = 0;
  std::string route;                 ///< "covariance" or "gram"
  std::vector<std::size_t> flipped;  ///< components negated to correlate positively with year

  std::size_t d() const noexcept { return components.cols(); }
  std::size_t k() const noexcept { return components.rows(); }
};

struct PcaOptions {
  /// Components with eigenvalue below cutoff * lambda_max are dropped.
  double cutoff = 1e-12;
  EigMethod method = EigMethod::automatic;
};

namespace detail {

inline void fix_sign(std::span<double> v) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  if (v[arg] < 0.0)
    for (double& x : v) x = -x;
}

}  // namespace detail

inline PcaModel fit_pca(const Matrix& x, const PcaOptions& opts = {}) {
  if (x.rows() < 2) throw Error(Errc::DegenerateData, "PCA needs at least two rows");
  auto [xc, mean] = center(x);
  const std::size_t n = x.rows(), d = x.cols();

  PcaModel model;
  model.mean = std::move(mean);
  model.n_samples = n;
  double total = 0.0;
  for (double v : xc.data()) total += v * v;
  model.total_variance = total / static_cast<double>(n - 1);
  if (!(model.total_variance > 0.0)) throw Error(Errc::DegenerateData, "zero total variance");

  EigOptions eopts;
  eopts.psd = true;
  eopts.method = opts.method;
  if (n >= d) {
    model.route = "covariance";
    const auto eig = eig_sym(covariance(xc), eopts);
    const double cut = opts.cutoff * eig.eigenvalues[0];
    std::size_t k = 0;
    while (k < d && eig.eigenvalues[k] > 0.0 && eig.eigenvalues[k] >= cut) ++k;
    model.components = Matrix(k, d);
    for (std::size_t j = 0; j < k; ++j) {
      model.eigenvalues.push_back(eig.eigenvalues[j]);
      for (std::size_t i = 0; i < d; ++i) model.components(j, i) = eig.eigenvectors(i, j);
    }
  } else {
    model.route = "gram";
    const auto eig = eig_sym(gram(xc), eopts);
    const double cut = opts.cutoff * eig.eigenvalues[0];
    std::size_t k = 0;
    while (k < n && eig.eigenvalues[k] > 0.0 && eig.eigenvalues[k] >= cut) ++k;
    model.components = Matrix(k, d);
    for (std::size_t j = 0; j < k; ++j) {
      model.eigenvalues.push_back(eig.eigenvalues[j]);
      auto comp = model.components.row(j);
      for (std::size_t r = 0; r < n; ++r) {
        const double u = eig.eigenvectors(r, j);
        auto xr = xc.row(r);
        for (std::size_t i = 0; i < d; ++i) comp[i] += u * xr[i];
      }
      const double nrm = norm2(comp);
      for (double& c : comp) c /= nrm;
      detail::fix_sign(comp);
    }
  }
  return model;
}

inline PcaModel fit_pca(const ActivationSet& a, const PcaOptions& opts = {}) {
  return fit_pca(a.values, opts);
}

/// Projection of rows of `x` onto the first k components.
inline Matrix project_rows(const PcaModel& model, const Matrix& x, std::size_t k) {
  if (x.cols() != model.d())
    throw Error(Errc::DimensionMismatch, "data has " + std::to_string(x.cols()) +
                                             " columns, model expects " + std::to_string(model.d()));
  if (k == 0 || k > model.k())
    throw Error(Errc::InvalidArgument, "k must lie in [1, " + std::to_string(model.k()) + "]");
  Matrix y(x.rows(), k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xr = x.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      auto c = model.components.row(j);
      double s = 0.0;
      for (std::size_t p = 0; p < xr.size(); ++p) s += (xr[p] - model.mean[p]) * c[p];
      y(i, j) = s;
    }
  }
  return y;
}

/// Y back through the first Y.cols() components plus the mean.
inline Matrix reconstruct(const PcaModel& model, const Matrix& y) {
  if (y.cols() > model.k()) throw Error(Errc::DimensionMismatch, "too many coordinates for model");
  Matrix x(y.rows(), model.d());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto xr = x.row(i);
    for (std::size_t p = 0; p < model.d(); ++p) xr[p] = model.mean[p];
    for (std::size_t j = 0; j < y.cols(); ++j) {
      auto c = model.components.row(j);
      for (std::size_t p = 0; p < model.d(); ++p) xr[p] += y(i, j) * c[p];
    }
  }
  return x;
}

/// Negates each component whose scores correlate negatively with year.
inline PcaModel orient_to_years(PcaModel model, const Matrix& x, std::span<const double> years) {
  const Matrix y = project_rows(model, x, model.k());
  model.flipped.clear();
  for (std::size_t j = 0; j < model.k(); ++j) {
    const auto r = try_pearson(y.col(j), years);
    if (r && *r < 0.0) {
      for (double& c : model.components.row(j)) c = -c;
      model.flipped.push_back(j);
    }
  }
  return model;
}

/// Smallest k whose leading eigenvalues hold at least `threshold` of the
/// spectrum. A cumulative fraction equal to the threshold (to 1e-12)
/// resolves to the smaller k.
inline std::size_t subspace_dim(std::span<const double> eigenvalues, double threshold = 0.95) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(Errc::InvalidArgument, "threshold must lie in (0, 1]");
  const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  if (!(total > 0.0)) throw Error(Errc::DegenerateData, "spectrum sums to zero");
  double cum = 0.0;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    cum += eigenvalues[k];
    if (cum >= threshold * total - 1e-12 * total) return k + 1;
  }
  return eigenvalues.size();
}

inline std::size_t subspace_dim(const PcaModel& model, double threshold = 0.95) {
  return subspace_dim(model.eigenvalues, threshold);
}

/// Fraction of the spectrum held by the first k eigenvalues.
inline double retained_variance(std::span<const double> eigenvalues, std::size_t k = 2) {
  if (k < 1 || k > eigenvalues.size())
    throw Error(Errc::InvalidArgument, "k must lie in [1, " + std::to_string(eigenvalues.size()) + "]");
  const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  if (!(total > 0.0)) throw Error(Errc::DegenerateData, "spectrum sums to zero");
  return std::accumulate(eigenvalues.begin(), eigenvalues.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / total;
}

inline double retained_variance(const PcaModel& model, std::size_t k = 2) {
  return retained_variance(model.eigenvalues, k);
}

inline nlohmann::ordered_json to_json(const PcaModel& m) {
  nlohmann::ordered_json j;
  j["n_samples"] = m.n_samples;
  j["d"] = m.d();
  j["k"] = m.k();
  j["route"] = m.route;
  j["total_variance"] = m.total_variance;
  j["eigenvalues"] = m.eigenvalues;
  j["mean"] = m.mean;
  nlohmann::ordered_json comps = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < m.k(); ++r) {
    auto row = m.components.row(r);
    comps.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["components"] = std::move(comps);
  j["sign_flips"] = m.flipped;
  return j;
}

inline PcaModel pca_model_from_json(const nlohmann::json& j) {
  PcaModel m;
  try {
    m.n_samples = j.at("n_samples").get<std::size_t>();
    m.route = j.at("route").get<std::string>();
    m.total_variance = j.at("total_variance").get<double>();
    m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    m.mean = j.at("mean").get<std::vector<double>>();
    const auto comps = j.at("components").get<std::vector<std::vector<double>>>();
    m.components = Matrix(comps.size(), m.mean.size());
    for (std::size_t r = 0; r < comps.size(); ++r) {
      if (comps[r].size() != m.mean.size())
        throw Error(Errc::DimensionMismatch, "component length does not match mean");
      std::copy(comps[r].begin(), comps[r].end(), m.components.row(r).begin());
    }
    m.flipped = j.value("sign_flips", std::vector<std::size_t>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("PCA model: ") + e.what());
  }
  return m;
}

inline std::string model_hash(const PcaModel& m) { return sha256_hex(to_json(m).dump()); }

/// Scores on the first k modes, with provenance.
inline Embedding project(const PcaModel& model, const ActivationSet& x, std::size_t k) {
  Embedding e;
  e.ids = x.ids;
  e.coords = project_rows(model, x.values, k);
  e.provenance["method"] = "pca";
  e.provenance["k"] = k;
  e.provenance["model_sha256"] = model_hash(model);
  e.provenance["sign_flips"] = model.flipped;
  e.provenance["route"] = model.route;
  return e;
}

}  // namespace chronoscope
