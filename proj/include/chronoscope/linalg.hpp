#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "chronoscope/error.hpp"
#include "chronoscope/matrix.hpp"

namespace chronoscope {

/// Eigenpairs of a symmetric matrix, eigenvalues descending. Column j of
/// `eigenvectors` is the unit vector for `eigenvalues[j]`.
struct SymEigResult {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
  int sweeps = 0;

  std::vector<double> vector(std::size_t j) const { return eigenvectors.col(j); }
};

enum class EigMethod {
  automatic,    ///< Jacobi up to kJacobiLimit, tridiagonal above
  jacobi,       ///< cyclic Jacobi rotations
  tridiagonal,  ///< Householder reduction followed by implicit QL
};

inline constexpr std::size_t kJacobiLimit = 64;

struct EigOptions {
  EigMethod method = EigMethod::automatic;
  /// Treat the input as a covariance-like PSD matrix: eigenvalues below
  /// -1e-10 * max(1, lambda_max) are rejected, the rest of the negative
  /// range is clamped to 0.
  bool psd = false;
  int max_sweeps = 100;
};

namespace detail {

inline void check_symmetric(const Matrix& s) {
  if (s.rows() != s.cols()) throw Error(Errc::NotSymmetric, "matrix is not square");
  if (s.rows() == 0) throw Error(Errc::InvalidArgument, "empty matrix");
  if (!all_finite(s)) throw Error(Errc::NonFiniteValue, "non-finite entry in symmetric input");
  const double scale = std::max(max_abs(s), std::numeric_limits<double>::min());
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j) {
      const double a = s(i, j), b = s(j, i);
      if (std::abs(a - b) > 1e-9 * scale)
        throw Error(Errc::NotSymmetric, "entry (" + std::to_string(i) + "," + std::to_string(j) +
                                            ") differs from its transpose");
    }
}

/// Rows of `vt` are eigenvectors; sorts descending, fixes signs and packs columns.
inline SymEigResult finish_eig(std::vector<double> values, const Matrix& vt, int sweeps,
                               const EigOptions& opts) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  SymEigResult out;
  out.sweeps = sweeps;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  const double top = n ? std::abs(values[order[0]]) : 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double lambda = values[order[j]];
    if (opts.psd && lambda < 0.0) {
      if (lambda < -1e-10 * std::max(1.0, top))
        throw Error(Errc::NotPositiveSemidefinite,
                    "eigenvalue " + std::to_string(lambda) + " of a covariance input");
      lambda = 0.0;
    }
    out.eigenvalues[j] = lambda;
    auto v = vt.row(order[j]);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    const double sign = v[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = sign * v[i];
  }
  return out;
}

inline SymEigResult eig_jacobi(const Matrix& s, const EigOptions& opts) {
  const std::size_t n = s.rows();
  Matrix a = s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));
  Matrix vt = Matrix::identity(n);  // rows accumulate the rotations

  double frob = 0.0;
  for (double v : a.data()) frob += v * v;
  frob = std::sqrt(frob);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off == 0.0 || std::sqrt(off) <= 1e-15 * frob) {
      std::vector<double> d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
      return finish_eig(std::move(d), vt, sweep - 1, opts);
    }
    // Early sweeps skip small pivots to favour the large ones.
    const double threshold = sweep < 4 ? 0.2 * std::sqrt(off) / static_cast<double>(n * n) : 0.0;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double g = 100.0 * std::abs(apq);
        const double app = a(p, p), aqq = a(q, q);
        if (sweep > 4 && g <= eps * std::abs(app) && g <= eps * std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        if (std::abs(apq) <= threshold || apq == 0.0) continue;

        const double h = aqq - app;
        double t;
        if (g <= eps * std::abs(h)) {
          t = apq / h;
        } else {
          const double theta = 0.5 * h / apq;
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;

        auto rp = a.row(p);
        auto rq = a.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = rp[k], akq = rq[k];
          const double np = c * akp - sn * akq;
          const double nq = sn * akp + c * akq;
          rp[k] = np;
          rq[k] = nq;
          a(k, p) = np;
          a(k, q) = nq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;

        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k], y = vq[k];
          vp[k] = c * x - sn * y;
          vq[k] = sn * x + c * y;
        }
      }
    }
  }
  throw Error(Errc::DidNotConverge,
              "Jacobi eigensolver exceeded " + std::to_string(opts.max_sweeps) + " sweeps");
}

/// Householder reduction A = Q T Qᵀ. Reflector k is stored in row k of
/// `reflectors` (entries k+1..n-1) with scale `beta[k]`.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> sub;  // sub[i] couples i and i+1
  Matrix reflectors;
  std::vector<double> beta;

  /// y <- Q y, mapping a vector in the tridiagonal basis back to the original one.
  void apply_q(std::span<double> y) const {
    const std::size_t n = diag.size();
    for (std::size_t k = n >= 2 ? n - 2 : 0; k-- > 0;) {
      if (beta[k] == 0.0) continue;
      auto v = reflectors.row(k);
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * y[i];
      s *= beta[k];
      for (std::size_t i = k + 1; i < n; ++i) y[i] -= s * v[i];
    }
  }
};

inline Tridiagonal tridiagonalize(const Matrix& s) {
  const std::size_t n = s.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));
  Tridiagonal t;
  t.diag.assign(n, 0.0);
  t.sub.assign(n > 0 ? n - 1 : 0, 0.0);
  t.reflectors = Matrix(n, n);
  t.beta.assign(n, 0.0);
  std::vector<double> v(n), p(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    auto rk = a.row(k);
    t.diag[k] = rk[k];
    double norm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) norm += rk[i] * rk[i];
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      t.sub[k] = 0.0;
      continue;
    }
    const double alpha = rk[k + 1] > 0.0 ? -norm : norm;
    for (std::size_t i = k + 1; i < n; ++i) v[i] = rk[i];
    v[k + 1] -= alpha;
    double vv = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vv += v[i] * v[i];
    t.sub[k] = alpha;
    if (vv == 0.0) continue;
    const double beta = 2.0 / vv;
    t.beta[k] = beta;
    auto store = t.reflectors.row(k);
    for (std::size_t i = k + 1; i < n; ++i) store[i] = v[i];

    double pv = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) {
      auto ri = a.row(i);
      double acc = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) acc += ri[j] * v[j];
      p[i] = beta * acc;
      pv += p[i] * v[i];
    }
    const double kk = 0.5 * beta * pv;
    for (std::size_t i = k + 1; i < n; ++i) p[i] -= kk * v[i];  // p is now w
    for (std::size_t i = k + 1; i < n; ++i) {
      auto ri = a.row(i);
      const double vi = v[i], wi = p[i];
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= vi * p[j] + wi * v[j];
    }
  }
  if (n >= 2) {
    t.diag[n - 2] = a(n - 2, n - 2);
    t.diag[n - 1] = a(n - 1, n - 1);
    t.sub[n - 2] = a(n - 1, n - 2);
  } else if (n == 1) {
    t.diag[0] = a(0, 0);
  }
  return t;
}

/// Implicit QL on a tridiagonal matrix. When `z` is non-null its rows are
/// rotated along, so starting from the identity they end as eigenvectors.
inline int tridiagonal_ql(std::vector<double>& d, std::vector<double> sub, Matrix* z) {
  const std::size_t n = d.size();
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = sub[i];
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double f = 0.0, tst1 = 0.0;
  int total_iter = 0;
  const int max_iter = 60 * static_cast<int>(n) + 60;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m + 1 < n && std::abs(e[m]) > eps * tst1) ++m;
    if (m > l) {
      do {
        if (++total_iter > max_iter)
          throw Error(Errc::DidNotConverge, "tridiagonal QL iteration cap reached");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;
        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double sn = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = sn;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = sn * r;
          sn = e[ii] / r;
          c = p / r;
          p = c * d[ii] - sn * g;
          d[ii + 1] = h + sn * (c * g + sn * d[ii]);
          if (z) {
            auto vi = z->row(ii);
            auto vi1 = z->row(ii + 1);
            for (std::size_t k = 0; k < vi.size(); ++k) {
              const double hk = vi1[k];
              vi1[k] = sn * vi[k] + c * hk;
              vi[k] = c * vi[k] - sn * hk;
            }
          }
        }
        p = -sn * s2 * c3 * el1 * e[l] / dl1;
        e[l] = sn * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
  return total_iter;
}

inline SymEigResult eig_tridiagonal(const Matrix& s, const EigOptions& opts) {
  const std::size_t n = s.rows();
  const Tridiagonal t = tridiagonalize(s);
  std::vector<double> d = t.diag;
  // Row i of z ends as the eigenvector of T for d[i].
  Matrix z = Matrix::identity(n);
  const int iters = tridiagonal_ql(d, t.sub, &z);
  for (std::size_t j = 0; j < n; ++j) t.apply_q(z.row(j));
  return finish_eig(std::move(d), z, iters, opts);
}

/// Number of eigenvalues of the tridiagonal matrix strictly below x.
inline std::size_t sturm_count(const std::vector<double>& d, const std::vector<double>& sub,
                               double x, double pivmin) {
  std::size_t count = 0;
  double q = d[0] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < d.size(); ++i) {
    q = d[i] - x - sub[i - 1] * sub[i - 1] / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
  }
  return count;
}

/// Solves (T - shift I) x = b in place with partial pivoting.
inline void tridiagonal_shifted_solve(const std::vector<double>& d, const std::vector<double>& sub,
                                      double shift, double tiny, std::vector<double>& b) {
  const std::size_t n = d.size();
  // Rows of U carry up to two superdiagonals after pivoting.
  std::vector<double> u0(n), u1(n, 0.0), u2(n, 0.0);
  std::vector<double> mult(n, 0.0);
  std::vector<char> swapped(n, 0);
  double a = d[0] - shift;
  double c = n > 1 ? sub[0] : 0.0;
  double extra = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double below = sub[i];
    const double next_diag = d[i + 1] - shift;
    const double next_super = i + 2 < n ? sub[i + 1] : 0.0;
    if (std::abs(a) >= std::abs(below)) {
      if (a == 0.0) a = tiny;
      const double m = below / a;
      mult[i] = m;
      u0[i] = a;
      u1[i] = c;
      u2[i] = extra;
      a = next_diag - m * c;
      c = next_super;
      extra = 0.0;
    } else {
      swapped[i] = 1;
      const double m = a / below;
      mult[i] = m;
      u0[i] = below;
      u1[i] = next_diag;
      u2[i] = next_super;
      const double na = c - m * next_diag;
      const double nc = -m * next_super;
      a = na;
      c = nc;
      extra = 0.0;
    }
  }
  u0[n - 1] = a == 0.0 ? tiny : a;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (swapped[i]) std::swap(b[i], b[i + 1]);
    b[i + 1] -= mult[i] * b[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    if (i + 1 < n) s -= u1[i] * b[i + 1];
    if (i + 2 < n) s -= u2[i] * b[i + 2];
    b[i] = s / u0[i];
  }
}

}  // namespace detail

/// Full eigendecomposition of a symmetric matrix. Output is deterministic for
/// identical input: eigenvalues descending, each eigenvector signed so that
/// its largest-magnitude entry (lowest index on ties) is positive.
inline SymEigResult eig_sym(const Matrix& s, const EigOptions& opts = {}) {
  detail::check_symmetric(s);
  if (s.rows() == 1) {
    Matrix v(1, 1, 1.0);
    return detail::finish_eig({s(0, 0)}, v, 0, opts);
  }
  const bool jacobi = opts.method == EigMethod::jacobi ||
                      (opts.method == EigMethod::automatic && s.rows() <= kJacobiLimit);
  return jacobi ? detail::eig_jacobi(s, opts) : detail::eig_tridiagonal(s, opts);
}

/// The `count` smallest eigenpairs, eigenvalues ascending. Column j of
/// `eigenvectors` belongs to `eigenvalues[j]`.
struct PartialEig {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
};

/// Bottom of the spectrum via Householder reduction, Sturm bisection and
/// inverse iteration. O(n^3) for the reduction, O(n^2) per requested pair.
inline PartialEig eig_sym_lowest(const Matrix& s, std::size_t count) {
  detail::check_symmetric(s);
  const std::size_t n = s.rows();
  if (count == 0 || count > n) throw Error(Errc::InvalidArgument, "eig_sym_lowest: bad count");
  const detail::Tridiagonal t = detail::tridiagonalize(s);
  const auto& d = t.diag;
  const auto& e = t.sub;

  double lo_bound = d[0], hi_bound = d[0], scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(e[i]) : 0.0);
    lo_bound = std::min(lo_bound, d[i] - r);
    hi_bound = std::max(hi_bound, d[i] + r);
    scale = std::max(scale, std::abs(d[i]) + r);
  }
  scale = std::max(scale, std::numeric_limits<double>::min());
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, scale * scale);

  PartialEig out;
  out.eigenvalues.resize(count);
  out.eigenvectors = Matrix(n, count);
  std::vector<std::vector<double>> found;
  for (std::size_t j = 0; j < count; ++j) {
    double lo = lo_bound - eps * scale, hi = hi_bound + eps * scale;
    for (int it = 0; it < 200 && hi - lo > 2.0 * eps * std::max(std::abs(lo), std::abs(hi)) + pivmin;
         ++it) {
      const double mid = 0.5 * (lo + hi);
      if (detail::sturm_count(d, e, mid, pivmin) > j)
        hi = mid;
      else
        lo = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    out.eigenvalues[j] = lambda;

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i * (j + 3)));
    const double tiny = eps * scale;
    for (int it = 0; it < 6; ++it) {
      detail::tridiagonal_shifted_solve(d, e, lambda, tiny, x);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& prev : found) {
          const double proj = dot(prev, x);
          for (std::size_t i = 0; i < n; ++i) x[i] -= proj * prev[i];
        }
      const double nrm = norm2(x);
      if (!(nrm > 0.0) || !std::isfinite(nrm))
        throw Error(Errc::SolverFailure, "inverse iteration collapsed");
      for (double& v : x) v /= nrm;
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double tx = d[i] * x[i];
        if (i > 0) tx += e[i - 1] * x[i - 1];
        if (i + 1 < n) tx += e[i] * x[i + 1];
        res = std::max(res, std::abs(tx - lambda * x[i]));
      }
      if (it >= 1 && res <= 1e3 * eps * scale) break;
    }
    found.push_back(x);
    t.apply_q(x);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(x[i]) > std::abs(x[arg])) arg = i;
    const double sign = x[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = sign * x[i];
  }
  return out;
}

struct Centered {
  Matrix values;
  std::vector<double> mean;
};

inline std::vector<double> column_means(const Matrix& x) {
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(x.rows());
  return mean;
}

/// Subtracts column means. X == Xc + 1·meanᵀ up to rounding.
inline Centered center(const Matrix& x) {
  if (x.rows() == 0) throw Error(Errc::InvalidArgument, "center: no rows");
  Centered out{x, column_means(x)};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = out.values.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) r[j] -= out.mean[j];
  }
  return out;
}

/// XcᵀXc / (n-1) for already centred rows.
inline Matrix covariance(const Matrix& xc) {
  const std::size_t n = xc.rows(), d = xc.cols();
  if (n < 2) throw Error(Errc::DegenerateData, "covariance needs at least two rows");
  Matrix c(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = xc.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      const double ra = r[a];
      if (ra == 0.0) continue;
      auto crow = c.row(a);
      for (std::size_t b = a; b < d; ++b) crow[b] += ra * r[b];
    }
  }
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      c(a, b) *= inv;
      c(b, a) = c(a, b);
    }
  return c;
}

/// Xc Xcᵀ / (n-1), the n×n counterpart of `covariance`.
inline Matrix gram(const Matrix& xc) {
  const std::size_t n = xc.rows();
  if (n < 2) throw Error(Errc::DegenerateData, "gram needs at least two rows");
  Matrix g(n, n);
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) g(i, j) = g(j, i) = dot(xc.row(i), xc.row(j)) * inv;
  return g;
}

/// Solves A x = b for symmetric positive definite A.
inline std::vector<double> cholesky_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
    if (!(diag > 0.0)) throw Error(Errc::SolverFailure, "matrix is not positive definite");
    const double ljj = std::sqrt(diag);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
    b[i] = s / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a(k, i) * b[k];
    b[i] = s / a(i, i);
  }
  return b;
}

/// (A)^(-1/2) for symmetric positive definite A.
inline Matrix inverse_sqrt_spd(const Matrix& a) {
  const auto eig = eig_sym(a);
  const std::size_t n = a.rows();
  Matrix out(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!(eig.eigenvalues[j] > 0.0))
      throw Error(Errc::SolverFailure, "inverse square root of a singular matrix");
    const double w = 1.0 / std::sqrt(eig.eigenvalues[j]);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        out(r, c) += w * eig.eigenvectors(r, j) * eig.eigenvectors(c, j);
  }
  return out;
}

/// Modified Gram-Schmidt on the columns of `q`, applied twice. Returns false
/// when a column collapses.
inline bool orthonormalize_columns(Matrix& q) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < q.cols(); ++j) {
      for (std::size_t p = 0; p < j; ++p) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.rows(); ++i) s += q(i, p) * q(i, j);
        for (std::size_t i = 0; i < q.rows(); ++i) q(i, j) -= s * q(i, p);
      }
      double nrm = 0.0;
      for (std::size_t i = 0; i < q.rows(); ++i) nrm += q(i, j) * q(i, j);
      nrm = std::sqrt(nrm);
      if (!(nrm > 1e-300)) return false;
      for (std::size_t i = 0; i < q.rows(); ++i) q(i, j) /= nrm;
    }
  }
  return true;
}

}  // namespace chronoscope
