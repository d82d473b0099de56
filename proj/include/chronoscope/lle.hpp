#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoscope/correlate.hpp"
#include "chronoscope/dataset.hpp"
#include "chronoscope/embedding.hpp"
#include "chronoscope/error.hpp"
#include "chronoscope/io.hpp"
#include "chronoscope/knn.hpp"
#include "chronoscope/linalg.hpp"
#include "chronoscope/parallel.hpp"
#include "chronoscope/rng.hpp"

namespace chronoscope {

inline constexpr std::size_t kTrendNeighbors = 100;
inline constexpr std::size_t kAccentNeighbors = 25;
inline constexpr std::size_t kDenseLimit = 4000;

/// "trend" or "accent" to a neighbourhood size.
inline std::size_t regime_neighbors(std::string_view regime) {
  if (regime == "trend") return kTrendNeighbors;
  if (regime == "accent") return kAccentNeighbors;
  throw Error(Errc::InvalidArgument, "unknown regime '" + std::string(regime) + "' (expected trend|accent)");
}

/// Compressed sparse rows.
struct SparseRows {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;

  std::size_t rows() const noexcept { return offsets.size() - 1; }
  std::size_t nnz() const noexcept { return vals.size(); }

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < rows(); ++i) {
      double s = 0.0;
      for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) s += vals[p] * x[cols[p]];
      y[i] = s;
    }
  }
  /// y = Aᵀ x
  void apply_transposed(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) y[cols[p]] += vals[p] * x[i];
  }
};

enum class ManifoldMethod { lle, laplacian };
enum class BottomSolver { automatic, dense, iterative };

struct LleOptions {
  std::size_t k = kTrendNeighbors;
  std::size_t m = 2;
  double reg = 1e-3;
  ManifoldMethod method = ManifoldMethod::lle;
  BottomSolver solver = BottomSolver::automatic;
  unsigned threads = 1;
  std::uint64_t seed = 42;  ///< start block of the iterative solver
  double tolerance = 1e-8;  ///< iterative residual bound
  int max_iter = 500;
};

struct LleResult {
  KnnGraph graph;
  SparseRows weights;  ///< row-stochastic
  Matrix embedding;    ///< n×m, columns centred with unit sample variance
  std::vector<double> bottom_eigenvalues;  ///< m+1, ascending, the first is the constant mode
  std::string solver;
  int iterations = 0;
  std::vector<std::size_t> flipped;
  nlohmann::ordered_json params;
};

namespace detail {

/// Constrained least-squares weights reconstructing each row from its
/// neighbours, with Tikhonov term reg * trace(G) / k.
inline SparseRows reconstruction_weights(const Matrix& x, const KnnGraph& g, double reg, unsigned threads) {
  const std::size_t n = x.rows(), k = g.k, d = x.cols();
  std::vector<std::vector<double>> w(n);
  std::vector<char> failed(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    Matrix diff(k, d);
    auto xi = x.row(i);
    for (std::size_t a = 0; a < k; ++a) {
      auto xa = x.row(g.neighbors[i][a]);
      for (std::size_t p = 0; p < d; ++p) diff(a, p) = xa[p] - xi[p];
    }
    Matrix gm = multiply_transposed(diff, diff);
    double trace = 0.0;
    for (std::size_t a = 0; a < k; ++a) trace += gm(a, a);
    const double eps = trace > 0.0 ? reg * trace / static_cast<double>(k) : reg;
    for (std::size_t a = 0; a < k; ++a) gm(a, a) += eps;
    try {
      auto sol = cholesky_solve(std::move(gm), std::vector<double>(k, 1.0));
      double s = 0.0;
      for (double v : sol) s += v;
      for (double& v : sol) v /= s;
      w[i] = std::move(sol);
    } catch (const Error&) {
      failed[i] = 1;
    }
  });
  SparseRows out;
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) throw Error(Errc::SolverFailure, "local Gram system singular at row " + std::to_string(i));
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t a = 0; a < k; ++a) row.emplace_back(g.neighbors[i][a], w[i][a]);
    std::sort(row.begin(), row.end());
    for (const auto& [j, v] : row) {
      out.cols.push_back(j);
      out.vals.push_back(v);
    }
    out.offsets.push_back(out.cols.size());
  }
  return out;
}

/// (I - W)ᵀ(I - W) as a dense matrix.
inline Matrix lle_operator_dense(const SparseRows& w) {
  const std::size_t n = w.rows();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) += 1.0;
    for (std::size_t p = w.offsets[i]; p < w.offsets[i + 1]; ++p) {
      const std::size_t j = w.cols[p];
      m(i, j) -= w.vals[p];
      m(j, i) -= w.vals[p];
      for (std::size_t q = w.offsets[i]; q < w.offsets[i + 1]; ++q) m(j, w.cols[q]) += w.vals[p] * w.vals[q];
    }
  }
  return m;
}

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

inline void project_out(std::span<double> v, std::span<const double> unit) {
  const double s = dot(unit, v);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= s * unit[i];
}

struct BottomPairs {
  std::vector<double> eigenvalues;  ///< null mode first, then m ascending
  Matrix vectors;                   ///< n×m, orthonormal, orthogonal to the null vector
  int iterations = 0;
};

/// Rayleigh-Ritz on span(V) with the null vector removed; keeps m directions.
inline BottomPairs ritz_complement(Matrix v, std::span<const double> null_vec, std::size_t m,
                                   const LinearOperator& op) {
  const std::size_t n = v.rows(), b = v.cols();
  for (std::size_t j = 0; j < b; ++j) {
    auto col = v.col(j);
    project_out(col, null_vec);
    project_out(col, null_vec);
    v.set_col(j, col);
  }
  Matrix c(b, b);
  for (std::size_t a = 0; a < b; ++a)
    for (std::size_t e = a; e < b; ++e) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += v(i, a) * v(i, e);
      c(a, e) = c(e, a) = s;
    }
  const auto ce = eig_sym(c);
  if (!(ce.eigenvalues[m - 1] > 1e-8 * std::max(1.0, ce.eigenvalues[0])))
    throw Error(Errc::SolverFailure, "bottom eigenspace collapsed onto the constant mode");
  Matrix q(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    const double s = 1.0 / std::sqrt(ce.eigenvalues[j]);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t a = 0; a < b; ++a) acc += v(i, a) * ce.eigenvectors(a, j);
      q(i, j) = acc * s;
    }
  }
  orthonormalize_columns(q);
  Matrix aq(n, m);
  std::vector<double> tmp(n);
  for (std::size_t j = 0; j < m; ++j) {
    const auto col = q.col(j);
    op(col, tmp);
    aq.set_col(j, tmp);
  }
  Matrix h(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t e = a; e < m; ++e) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += q(i, a) * aq(i, e);
      h(a, e) = s;
    }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t e = 0; e < a; ++e) h(a, e) = h(e, a);
  const auto he = eig_sym(h);
  BottomPairs out;
  out.vectors = Matrix(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t src = m - 1 - j;  // ascending
    out.eigenvalues.push_back(he.eigenvalues[src]);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t a = 0; a < m; ++a) acc += q(i, a) * he.eigenvectors(a, src);
      out.vectors(i, j) = acc;
    }
  }
  return out;
}

inline BottomPairs bottom_pairs_dense(const Matrix& op_matrix, std::span<const double> null_vec, std::size_t m) {
  const auto pe = eig_sym_lowest(op_matrix, m + 1);
  const LinearOperator op = [&](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < op_matrix.rows(); ++i) y[i] = dot(op_matrix.row(i), x);
  };
  BottomPairs out = ritz_complement(pe.eigenvectors, null_vec, m, op);
  out.eigenvalues.insert(out.eigenvalues.begin(), pe.eigenvalues[0]);
  return out;
}

/// Conjugate gradients for A x = b restricted to the complement of the null vector.
inline void cg_complement(const LinearOperator& op, std::span<const double> null_vec, std::span<const double> rhs,
                          std::span<double> x) {
  const std::size_t n = rhs.size();
  std::vector<double> r(rhs.begin(), rhs.end()), p, ap(n);
  project_out(r, null_vec);
  std::fill(x.begin(), x.end(), 0.0);
  p = r;
  double rr = dot(r, r);
  const double stop = rr * 1e-26;
  for (std::size_t it = 0; it < 5 * n + 50 && rr > stop; ++it) {
    op(p, ap);
    project_out(ap, null_vec);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  project_out(x, null_vec);
}

/// Block inverse iteration with Rayleigh-Ritz, inner solves by CG.
inline BottomPairs bottom_pairs_iterative(const LinearOperator& op, std::span<const double> null_vec, std::size_t m,
                                          std::uint64_t seed, double tol, int max_iter) {
  const std::size_t n = null_vec.size();
  const std::size_t b = std::min(m + 3, n - 1);
  Rng rng = Rng::stream(seed, 31);
  Matrix x(n, b);
  for (double& v : x.data()) v = rng.normal();
  std::vector<double> col(n), sol(n), tmp(n);
  for (int it = 1; it <= max_iter; ++it) {
    for (std::size_t j = 0; j < b; ++j) {
      col = x.col(j);
      cg_complement(op, null_vec, col, sol);
      x.set_col(j, sol);
    }
    for (std::size_t j = 0; j < b; ++j) {
      col = x.col(j);
      project_out(col, null_vec);
      x.set_col(j, col);
    }
    if (!orthonormalize_columns(x)) throw Error(Errc::SolverFailure, "iterate block lost rank");
    BottomPairs rr = ritz_complement(x, null_vec, b, op);
    double worst = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      col = rr.vectors.col(j);
      op(col, tmp);
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) res += (tmp[i] - rr.eigenvalues[j] * col[i]) * (tmp[i] - rr.eigenvalues[j] * col[i]);
      worst = std::max(worst, std::sqrt(res));
    }
    x = rr.vectors;
    if (worst <= tol) {
      BottomPairs out;
      out.iterations = it;
      out.vectors = Matrix(n, m);
      for (std::size_t j = 0; j < m; ++j) out.vectors.set_col(j, rr.vectors.col(j));
      op(null_vec, tmp);
      out.eigenvalues.push_back(dot(null_vec, tmp));
      out.eigenvalues.insert(out.eigenvalues.end(), rr.eigenvalues.begin(),
                             rr.eigenvalues.begin() + static_cast<std::ptrdiff_t>(m));
      return out;
    }
  }
  throw Error(Errc::SolverFailure, "iterative eigensolver did not reach residual " + io::format_double(tol));
}

}  // namespace detail

/// Nonlinear embedding from the bottom of (I - W)ᵀ(I - W), or of the
/// normalized graph Laplacian when method == laplacian. `years` (NaN for
/// missing) orients each column to correlate non-negatively with time.
inline LleResult lle_embed(const Matrix& x, const LleOptions& opts, std::span<const double> years = {}) {
  const std::size_t n = x.rows();
  if (opts.m < 1) throw Error(Errc::InvalidArgument, "m must be positive");
  if (opts.k < opts.m + 1)
    throw Error(Errc::InvalidArgument, "k=" + std::to_string(opts.k) + " must be at least m+1=" + std::to_string(opts.m + 1));
  if (opts.k >= n) throw Error(Errc::KTooLarge, "k=" + std::to_string(opts.k) + " must be below n=" + std::to_string(n));
  if (!(opts.reg > 0.0)) throw Error(Errc::InvalidArgument, "regularization must be positive");
  if (!years.empty() && years.size() != n) throw Error(Errc::DimensionMismatch, "years length differs from row count");

  LleResult out;
  out.graph = knn_graph(x, opts.k, opts.threads);
  if (const auto c = component_count(out.graph); c > 1)
    throw Error(Errc::DisconnectedGraph, "neighbour graph has " + std::to_string(c) +
                                             " connected components; increase k");

  const bool dense = opts.solver == BottomSolver::dense ||
                     (opts.solver == BottomSolver::automatic && n <= kDenseLimit);
  out.solver = dense ? "dense" : "iterative";
  std::vector<double> null_vec(n);
  std::vector<double> inv_sqrt_degree;
  detail::LinearOperator op;
  Matrix dense_op;

  if (opts.method == ManifoldMethod::lle) {
    out.weights = detail::reconstruction_weights(x, out.graph, opts.reg, opts.threads);
    std::fill(null_vec.begin(), null_vec.end(), 1.0 / std::sqrt(static_cast<double>(n)));
    op = [&w = out.weights, n](std::span<const double> v, std::span<double> y) {
      std::vector<double> t(n);
      w.apply(v, t);
      for (std::size_t i = 0; i < n; ++i) t[i] = v[i] - t[i];
      w.apply_transposed(t, y);
      for (std::size_t i = 0; i < n; ++i) y[i] = t[i] - y[i];
    };
    if (dense) dense_op = detail::lle_operator_dense(out.weights);
  } else {
    // Heat-kernel affinities on the symmetrized graph, bandwidth = mean squared kNN distance.
    const auto adj = undirected_adjacency(out.graph);
    double t = 0.0;
    std::size_t cnt = 0;
    for (const auto& row : out.graph.distances)
      for (double dist : row) {
        t += dist * dist;
        ++cnt;
      }
    t /= static_cast<double>(cnt);
    if (!(t > 0.0)) t = 1.0;
    SparseRows affinity;
    std::vector<double> degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& [j, dist] : adj[i]) {
        const double a = std::exp(-dist * dist / t);
        affinity.cols.push_back(j);
        affinity.vals.push_back(a);
        degree[i] += a;
      }
      affinity.offsets.push_back(affinity.cols.size());
    }
    inv_sqrt_degree.resize(n);
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inv_sqrt_degree[i] = 1.0 / std::sqrt(degree[i]);
      null_vec[i] = std::sqrt(degree[i]);
      nrm += degree[i];
    }
    for (double& v : null_vec) v /= std::sqrt(nrm);
    SparseRows normalized = affinity;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = affinity.offsets[i]; p < affinity.offsets[i + 1]; ++p) {
        normalized.vals[p] *= inv_sqrt_degree[i] * inv_sqrt_degree[affinity.cols[p]];
        affinity.vals[p] /= degree[i];
      }
    out.weights = std::move(affinity);
    op = [normalized = std::move(normalized), n](std::span<const double> v, std::span<double> y) {
      normalized.apply(v, y);
      for (std::size_t i = 0; i < n; ++i) y[i] = v[i] - y[i];
    };
    if (dense) {
      dense_op = Matrix(n, n);
      std::vector<double> e(n, 0.0), col(n);
      for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        op(e, col);
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) dense_op(i, j) = col[i];
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) dense_op(i, j) = dense_op(j, i) = 0.5 * (dense_op(i, j) + dense_op(j, i));
    }
  }

  detail::BottomPairs pairs = dense ? detail::bottom_pairs_dense(dense_op, null_vec, opts.m)
                                    : detail::bottom_pairs_iterative(op, null_vec, opts.m, opts.seed,
                                                                     opts.tolerance, opts.max_iter);
  out.iterations = pairs.iterations;
  out.bottom_eigenvalues = pairs.eigenvalues;
  out.embedding = std::move(pairs.vectors);
  const bool dated = !years.empty();
  for (std::size_t j = 0; j < opts.m; ++j) {
    auto col = out.embedding.col(j);
    if (!inv_sqrt_degree.empty())
      for (std::size_t i = 0; i < n; ++i) col[i] *= inv_sqrt_degree[i];
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double& v : col) {
      v -= mean;
      var += v * v;
    }
    const double scale = 1.0 / std::sqrt(var / static_cast<double>(n - 1));
    for (double& v : col) v *= scale;
    bool flip = false;
    std::optional<double> r;
    if (dated) r = try_pearson(col, years);
    if (r) {
      flip = *r < 0.0;
    } else {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (std::abs(col[i]) > std::abs(col[arg])) arg = i;
      flip = col[arg] < 0.0;
    }
    if (flip) {
      for (double& v : col) v = -v;
      out.flipped.push_back(j);
    }
    out.embedding.set_col(j, col);
  }

  auto& p = out.params;
  p["method"] = opts.method == ManifoldMethod::lle ? "lle" : "laplacian_eigenmaps";
  p["k"] = opts.k;
  p["m"] = opts.m;
  p["regularization"] = opts.reg;
  p["regularization_form"] = "reg * trace(G) / k";
  p["neighbor_graph"] = "directed";
  p["solver"] = out.solver;
  p["solver_tolerance"] = opts.tolerance;
  p["solver_max_iter"] = opts.max_iter;
  p["solver_iterations"] = out.iterations;
  p["bottom_eigenvalues"] = out.bottom_eigenvalues;
  p["column_scaling"] = "unit sample variance";
  p["sign_flips"] = out.flipped;
  p["sign_rule"] = dated ? "non-negative correlation with year" : "largest-magnitude entry positive";
  return out;
}

inline Embedding lle_embedding(const LleResult& r, const std::vector<std::string>& ids) {
  Embedding e;
  e.ids = ids;
  e.coords = r.embedding;
  e.provenance = r.params;
  return e;
}

/// "n n nnz" header, then one "i j w" line per stored entry (0-based).
inline std::string weights_coo(const SparseRows& w) {
  std::string out = std::to_string(w.rows()) + " " + std::to_string(w.rows()) + " " + std::to_string(w.nnz()) + "\n";
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t p = w.offsets[i]; p < w.offsets[i + 1]; ++p)
      out += std::to_string(i) + " " + std::to_string(w.cols[p]) + " " + io::format_double(w.vals[p]) + "\n";
  return out;
}

}  // namespace chronoscope
