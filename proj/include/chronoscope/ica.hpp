#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoscope/dataset.hpp"
#include "chronoscope/embedding.hpp"
#include "chronoscope/error.hpp"
#include "chronoscope/io.hpp"
#include "chronoscope/linalg.hpp"
#include "chronoscope/pca.hpp"
#include "chronoscope/rng.hpp"

namespace chronoscope {

/// E[log cosh(v)] for v ~ N(0, 1).
inline constexpr double kGaussianLogCosh = 0.374567207491438;

/// PCA whitening: z = transform · (x - mean), with identity sample covariance.
struct Whitening {
  std::vector<double> mean;
  Matrix transform;    ///< k×d
  Matrix dewhitening;  ///< d×k, x - mean = dewhitening · z on the retained subspace
};

struct WhitenResult {
  Matrix z;
  Whitening whitening;
};

inline WhitenResult whiten(const Matrix& x, std::size_t k) {
  const PcaModel pca = fit_pca(x);
  if (k == 0) throw Error(Errc::InvalidArgument, "whiten: k must be positive");
  if (k > pca.k())
    throw Error(Errc::RankDeficient, "requested " + std::to_string(k) + " components, numerical rank is " +
                                         std::to_string(pca.k()));
  WhitenResult out;
  out.whitening.mean = pca.mean;
  out.whitening.transform = Matrix(k, x.cols());
  out.whitening.dewhitening = Matrix(x.cols(), k);
  for (std::size_t j = 0; j < k; ++j) {
    const double s = std::sqrt(pca.eigenvalues[j]);
    for (std::size_t p = 0; p < x.cols(); ++p) {
      out.whitening.transform(j, p) = pca.components(j, p) / s;
      out.whitening.dewhitening(p, j) = pca.components(j, p) * s;
    }
  }
  out.z = project_rows(pca, x, k);
  for (std::size_t i = 0; i < out.z.rows(); ++i)
    for (std::size_t j = 0; j < k; ++j) out.z(i, j) /= std::sqrt(pca.eigenvalues[j]);
  return out;
}

struct IcaOptions {
  double tol = 1e-6;
  int max_iter = 500;
};

/// Result of the fixed-point iteration on whitened data.
struct IcaResult {
  Matrix unmixing;  ///< k×k, orthonormal rows, descending non-Gaussianity
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
  double final_change = 0.0;
};

namespace detail {

inline double log_cosh(double u) {
  const double a = std::abs(u);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

/// W <- (W Wᵀ)^(-1/2) W
inline Matrix symmetric_decorrelation(const Matrix& w) {
  return multiply(inverse_sqrt_spd(multiply_transposed(w, w)), w);
}

}  // namespace detail

/// Symmetric FastICA with the log-cosh contrast (g = tanh). Convergence is
/// max_i (1 - |<w_i_new, w_i_old>|) < tol. When the cap is reached the
/// iterate with the smallest change is returned with converged = false.
inline IcaResult fast_ica(const Matrix& z, std::uint64_t seed, const IcaOptions& opts = {}) {
  const std::size_t n = z.rows(), k = z.cols();
  if (n < 2 || k == 0) throw Error(Errc::InvalidArgument, "fast_ica needs whitened data");
  Rng rng = Rng::stream(seed, 11);
  Matrix w(k, k);
  for (double& v : w.data()) v = rng.normal();
  w = detail::symmetric_decorrelation(w);

  IcaResult out;
  Matrix best = w;
  double best_change = std::numeric_limits<double>::infinity();
  Matrix next(k, k);
  std::vector<double> gprime_mean(k);
  for (int it = 1; it <= opts.max_iter; ++it) {
    next = Matrix(k, k);
    std::fill(gprime_mean.begin(), gprime_mean.end(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      auto zt = z.row(t);
      for (std::size_t i = 0; i < k; ++i) {
        const double y = dot(w.row(i), zt);
        const double g = std::tanh(y);
        gprime_mean[i] += 1.0 - g * g;
        auto ni = next.row(i);
        for (std::size_t p = 0; p < k; ++p) ni[p] += g * zt[p];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < k; ++i) {
      auto ni = next.row(i);
      auto wi = w.row(i);
      for (std::size_t p = 0; p < k; ++p) ni[p] = ni[p] * inv_n - gprime_mean[i] * inv_n * wi[p];
    }
    next = detail::symmetric_decorrelation(next);
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) change = std::max(change, 1.0 - std::abs(dot(next.row(i), w.row(i))));
    w = next;
    out.iterations = it;
    if (change < best_change) {
      best_change = change;
      best = w;
    }
    if (change < opts.tol) {
      out.converged = true;
      break;
    }
  }
  out.final_change = best_change;
  if (!out.converged) w = best;

  // Order by the log-cosh non-Gaussianity of each recovered source.
  std::vector<double> obj(k, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < k; ++i) obj[i] += detail::log_cosh(dot(w.row(i), z.row(t)));
  for (double& o : obj) {
    const double diff = o / static_cast<double>(n) - kGaussianLogCosh;
    o = diff * diff;
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return obj[a] > obj[b]; });
  out.unmixing = Matrix(k, k);
  for (std::size_t r = 0; r < k; ++r) {
    auto src = w.row(order[r]);
    std::copy(src.begin(), src.end(), out.unmixing.row(r).begin());
    detail::fix_sign(out.unmixing.row(r));
    out.objective.push_back(obj[order[r]]);
  }
  return out;
}

struct IcaModel {
  Whitening whitening;
  Matrix unmixing;    ///< k×k
  Matrix filters;     ///< k×d, sources = (x - mean) · filtersᵀ
  Matrix components;  ///< k×d source directions (mixing columns) in ambient space
  std::vector<double> objective;
  std::uint64_t seed = 0;
  int iterations_used = 0;
  bool converged = false;

  std::size_t k() const noexcept { return unmixing.rows(); }
};

/// Whitens onto the leading k principal directions and runs FastICA there.
/// Each source is signed so its ambient direction has a positive
/// largest-magnitude loading.
inline IcaModel fit_ica(const Matrix& x, std::size_t k, std::uint64_t seed, const IcaOptions& opts = {}) {
  auto [z, wh] = whiten(x, k);
  IcaResult res = fast_ica(z, seed, opts);
  IcaModel m;
  m.whitening = std::move(wh);
  m.unmixing = std::move(res.unmixing);
  m.objective = std::move(res.objective);
  m.seed = seed;
  m.iterations_used = res.iterations;
  m.converged = res.converged;
  m.filters = multiply(m.unmixing, m.whitening.transform);
  m.components = transpose(multiply_transposed(m.whitening.dewhitening, m.unmixing));
  for (std::size_t i = 0; i < k; ++i) {
    auto comp = m.components.row(i);
    std::size_t arg = 0;
    for (std::size_t p = 1; p < comp.size(); ++p)
      if (std::abs(comp[p]) > std::abs(comp[arg])) arg = p;
    if (comp[arg] < 0.0) {
      for (double& v : comp) v = -v;
      for (double& v : m.filters.row(i)) v = -v;
      for (double& v : m.unmixing.row(i)) v = -v;
    }
  }
  return m;
}

inline Matrix ica_sources(const IcaModel& m, const Matrix& x) {
  if (x.cols() != m.filters.cols()) throw Error(Errc::DimensionMismatch, "data width does not match ICA model");
  Matrix s(x.rows(), m.k());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xr = x.row(i);
    for (std::size_t j = 0; j < m.k(); ++j) {
      auto f = m.filters.row(j);
      double acc = 0.0;
      for (std::size_t p = 0; p < xr.size(); ++p) acc += (xr[p] - m.whitening.mean[p]) * f[p];
      s(i, j) = acc;
    }
  }
  return s;
}

inline Embedding ica_embedding(const IcaModel& m, const ActivationSet& x) {
  Embedding e;
  e.ids = x.ids;
  e.coords = ica_sources(m, x.values);
  e.provenance["method"] = "fastica";
  e.provenance["k"] = m.k();
  e.provenance["seed"] = m.seed;
  e.provenance["converged"] = m.converged;
  return e;
}

struct StyleMean {
  std::string style;
  std::size_t count = 0;
  double mean = 0.0;
};

struct SourceValue {
  std::string id;
  std::string artist;
  std::string style;
  std::optional<int> year;
  double value = 0.0;
};

struct ComponentProfile {
  std::size_t component = 0;
  bool degenerate = false;
  std::vector<StyleMean> style_means;  ///< sorted by style label
  std::string top_style;               ///< style with the largest |mean|; empty when degenerate
  std::vector<SourceValue> top;        ///< top-q paintings by |value|
  std::vector<SourceValue> year_series;
};

/// Per-component style summary: mean source value per style, the q most
/// extreme paintings and the source-vs-year series.
inline std::vector<ComponentProfile> component_style_profile(const IcaModel& m, const Dataset& ds,
                                                             std::size_t q = 10) {
  const Matrix s = ica_sources(m, ds.activations().values);
  const auto& meta = ds.meta();
  std::vector<ComponentProfile> out;
  for (std::size_t j = 0; j < m.k(); ++j) {
    ComponentProfile prof;
    prof.component = j;
    const auto col = s.col(j);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(col.size()));
    prof.degenerate = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));

    std::map<std::string, std::pair<std::size_t, double>> by_style;
    for (std::size_t i = 0; i < col.size(); ++i) {
      auto& acc = by_style[meta[i].style];
      ++acc.first;
      acc.second += col[i];
    }
    for (const auto& [style, acc] : by_style)
      prof.style_means.push_back({style, acc.first, acc.second / static_cast<double>(acc.first)});

    for (std::size_t i = 0; i < col.size(); ++i)
      if (meta[i].year) prof.year_series.push_back({meta[i].id, meta[i].artist, meta[i].style, meta[i].year, col[i]});
    std::stable_sort(prof.year_series.begin(), prof.year_series.end(), [](const auto& a, const auto& b) {
      return *a.year != *b.year ? *a.year < *b.year : a.id < b.id;
    });

    if (!prof.degenerate) {
      const auto top_style = std::max_element(prof.style_means.begin(), prof.style_means.end(),
                                              [](const auto& a, const auto& b) { return std::abs(a.mean) < std::abs(b.mean); });
      prof.top_style = top_style->style;
      std::vector<std::size_t> idx(col.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      const std::size_t take = std::min(q, idx.size());
      std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                        [&](std::size_t a, std::size_t b) {
                          const double fa = std::abs(col[a]), fb = std::abs(col[b]);
                          return fa != fb ? fa > fb : meta[a].id < meta[b].id;
                        });
      for (std::size_t r = 0; r < take; ++r) {
        const auto i = idx[r];
        prof.top.push_back({meta[i].id, meta[i].artist, meta[i].style, meta[i].year, col[i]});
      }
    }
    out.push_back(std::move(prof));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const IcaModel& m) {
  auto rows = [](const Matrix& a) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < a.rows(); ++r) {
      auto row = a.row(r);
      j.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return j;
  };
  nlohmann::ordered_json j;
  j["k"] = m.k();
  j["seed"] = m.seed;
  j["converged"] = m.converged;
  j["iterations_used"] = m.iterations_used;
  j["objective"] = m.objective;
  j["mean"] = m.whitening.mean;
  j["whitening"] = rows(m.whitening.transform);
  j["unmixing"] = rows(m.unmixing);
  j["filters"] = rows(m.filters);
  j["components"] = rows(m.components);
  return j;
}

inline std::string profile_csv(const std::vector<ComponentProfile>& profiles) {
  std::string out = "component,style,count,mean_source,degenerate,top_style\n";
  for (const auto& p : profiles)
    for (const auto& sm : p.style_means)
      io::append_csv_row(out, {std::to_string(p.component + 1), sm.style, std::to_string(sm.count),
                               io::format_double(sm.mean), p.degenerate ? "1" : "0",
                               sm.style == p.top_style ? "1" : "0"});
  return out;
}

inline std::string top_paintings_csv(const std::vector<ComponentProfile>& profiles) {
  std::string out = "component,rank,id,artist,style,year,source\n";
  for (const auto& p : profiles)
    for (std::size_t r = 0; r < p.top.size(); ++r) {
      const auto& t = p.top[r];
      io::append_csv_row(out, {std::to_string(p.component + 1), std::to_string(r + 1), t.id, t.artist, t.style,
                               t.year ? std::to_string(*t.year) : "", io::format_double(t.value)});
    }
  return out;
}

inline std::string year_series_csv(const std::vector<ComponentProfile>& profiles) {
  std::string out = "component,id,year,source\n";
  for (const auto& p : profiles)
    for (const auto& t : p.year_series)
      io::append_csv_row(out, {std::to_string(p.component + 1), t.id, std::to_string(*t.year),
                               io::format_double(t.value)});
  return out;
}

}  // namespace chronoscope
