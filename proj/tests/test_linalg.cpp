#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"

using namespace chronoscope;
using testsupport::random_symmetric;

namespace {

double residual(const Matrix& s, const SymEigResult& e) {
  double worst = 0.0;
  for (std::size_t j = 0; j < s.rows(); ++j) {
    const auto v = e.vector(j);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      double sv = 0.0;
      for (std::size_t p = 0; p < s.rows(); ++p) sv += s(i, p) * v[p];
      worst = std::max(worst, std::abs(sv - e.eigenvalues[j] * v[i]));
    }
  }
  return worst;
}

double orthogonality(const Matrix& v) {
  double worst = 0.0;
  for (std::size_t a = 0; a < v.cols(); ++a)
    for (std::size_t b = 0; b < v.cols(); ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < v.rows(); ++i) s += v(i, a) * v(i, b);
      worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

class EigMethods : public ::testing::TestWithParam<EigMethod> {};

}  // namespace

TEST(Eig, TwoByTwoKnownSpectrum) {
  Matrix s(2, 2, std::vector<double>{2, 1, 1, 2});
  const auto e = eig_sym(s);
  EXPECT_NEAR(e.eigenvalues[0], 3.0, 1e-14);
  EXPECT_NEAR(e.eigenvalues[1], 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.eigenvectors(0, 0)), std::sqrt(0.5), 1e-14);
}

TEST_P(EigMethods, MatchesCharacteristicPolynomialBisection) {
  EigOptions opts;
  opts.method = GetParam();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 2 + seed % 7;
    const Matrix s = random_symmetric(n, 1000 + seed);
    const auto e = eig_sym(s, opts);
    const auto ref = oracle::eigenvalues(testsupport::to_dense(s));
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(e.eigenvalues[j], ref[j], 1e-8) << "seed " << seed;
    EXPECT_LE(residual(s, e), 1e-10) << "seed " << seed;
    EXPECT_LE(orthogonality(e.eigenvectors), 1e-12) << "seed " << seed;
  }
}

TEST_P(EigMethods, LargerMatrixInvariants) {
  EigOptions opts;
  opts.method = GetParam();
  const Matrix s = random_symmetric(90, 7);
  const auto e = eig_sym(s, opts);
  EXPECT_LE(residual(s, e), 1e-10);
  EXPECT_LE(orthogonality(e.eigenvectors), 1e-12);
  double trace = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < 90; ++i) trace += s(i, i);
  for (double v : e.eigenvalues) sum += v;
  EXPECT_NEAR(trace, sum, 1e-10);
  EXPECT_TRUE(std::is_sorted(e.eigenvalues.rbegin(), e.eigenvalues.rend()));
}

INSTANTIATE_TEST_SUITE_P(Methods, EigMethods,
                         ::testing::Values(EigMethod::jacobi, EigMethod::tridiagonal, EigMethod::automatic));

TEST(Eig, MethodsAgree) {
  const Matrix s = random_symmetric(40, 11);
  const auto a = eig_sym(s, {EigMethod::jacobi});
  const auto b = eig_sym(s, {EigMethod::tridiagonal});
  for (std::size_t j = 0; j < 40; ++j) EXPECT_NEAR(a.eigenvalues[j], b.eigenvalues[j], 1e-11);
}

TEST(Eig, RepeatedEigenvaluesStayOrthonormal) {
  // Q diag(3, 3, 3, 1, 1, 0) Qᵀ
  const std::size_t n = 6;
  const Matrix q = testsupport::random_orthogonal(n, 5);
  const double lam[] = {3, 3, 3, 1, 1, 0};
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) s(i, j) += q(i, k) * lam[k] * q(j, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) s(i, j) = s(j, i);
  for (auto method : {EigMethod::jacobi, EigMethod::tridiagonal}) {
    const auto e = eig_sym(s, {method});
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(e.eigenvalues[j], lam[j], 1e-12);
    EXPECT_LE(orthogonality(e.eigenvectors), 1e-12);
    EXPECT_LE(residual(s, e), 1e-12);
  }
}

TEST(Eig, SignConventionLargestEntryPositive) {
  const Matrix s = random_symmetric(12, 3);
  const auto e = eig_sym(s);
  for (std::size_t j = 0; j < 12; ++j) {
    const auto v = e.vector(j);
    const auto it = std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    EXPECT_GT(*it, 0.0);
  }
}

TEST(Eig, Errors) {
  Matrix s(2, 2, std::vector<double>{1, 2, 3, 1});
  try {
    eig_sym(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotSymmetric);
    EXPECT_TRUE(e.numerical());
  }
  Matrix nan(2, 2, std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 0, 0, 1});
  EXPECT_THROW(eig_sym(nan), Error);
  Matrix indefinite(2, 2, std::vector<double>{1, 0, 0, -1});
  EigOptions psd;
  psd.psd = true;
  try {
    eig_sym(indefinite, psd);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotPositiveSemidefinite);
  }
  Matrix tiny(2, 2, std::vector<double>{1, 0, 0, -1e-14});
  const auto e = eig_sym(tiny, psd);
  EXPECT_EQ(e.eigenvalues[1], 0.0);
}

TEST(EigLowest, MatchesFullDecomposition) {
  const Matrix s = random_symmetric(120, 21);
  const auto full = eig_sym(s);
  const auto low = eig_sym_lowest(s, 6);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_NEAR(low.eigenvalues[j], full.eigenvalues[119 - j], 1e-10);
    double sv_res = 0.0;
    for (std::size_t i = 0; i < 120; ++i) {
      double acc = 0.0;
      for (std::size_t p = 0; p < 120; ++p) acc += s(i, p) * low.eigenvectors(p, j);
      sv_res = std::max(sv_res, std::abs(acc - low.eigenvalues[j] * low.eigenvectors(i, j)));
    }
    EXPECT_LE(sv_res, 1e-10);
  }
  EXPECT_LE(orthogonality(low.eigenvectors), 1e-10);
}

TEST(EigLowest, DegenerateBottom) {
  // Laplacian of two disjoint paths: eigenvalue 0 twice.
  const std::size_t n = 10;
  Matrix l(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (i == 4) continue;
    l(i, i) += 1;
    l(i + 1, i + 1) += 1;
    l(i, i + 1) = l(i + 1, i) = -1;
  }
  const auto low = eig_sym_lowest(l, 3);
  EXPECT_NEAR(low.eigenvalues[0], 0.0, 1e-12);
  EXPECT_NEAR(low.eigenvalues[1], 0.0, 1e-12);
  EXPECT_GT(low.eigenvalues[2], 1e-3);
  EXPECT_LE(orthogonality(low.eigenvectors), 1e-10);
}

TEST(Linalg, CovarianceAndGram) {
  const Matrix x = testsupport::random_matrix(30, 4, 2);
  const auto c = center(x);
  const Matrix cov = covariance(c.values);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      long double s = 0;
      for (std::size_t i = 0; i < 30; ++i) s += (long double)c.values(i, a) * c.values(i, b);
      EXPECT_NEAR(cov(a, b), static_cast<double>(s / 29), 1e-13);
    }
  for (std::size_t j = 0; j < 4; ++j) {
    double m = 0;
    for (std::size_t i = 0; i < 30; ++i) m += c.values(i, j);
    EXPECT_NEAR(m, 0.0, 1e-13);
  }
  const Matrix g = gram(c.values);
  // Nonzero spectra of XᵀX and XXᵀ coincide.
  const auto ec = eig_sym(cov);
  const auto eg = eig_sym(g);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(ec.eigenvalues[j], eg.eigenvalues[j], 1e-12);
}

TEST(Linalg, CholeskySolveAndInverseSqrt) {
  const Matrix a0 = testsupport::random_matrix(8, 5, 9);
  Matrix a = multiply(transpose(a0), a0);
  for (std::size_t i = 0; i < 5; ++i) a(i, i) += 0.5;
  const std::vector<double> b{1, -2, 3, 0.5, 4};
  const auto x = cholesky_solve(a, b);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(dot(a.row(i), x), b[i], 1e-12);
  const Matrix r = inverse_sqrt_spd(a);
  const Matrix id = multiply(multiply(r, a), r);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(id(i, j), i == j ? 1.0 : 0.0, 1e-12);
  Matrix singular(2, 2, std::vector<double>{1, 1, 1, 1});
  try {
    cholesky_solve(singular, {1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SolverFailure);
  }
}

TEST(Linalg, Orthonormalize) {
  Matrix q = testsupport::random_matrix(20, 4, 4);
  ASSERT_TRUE(orthonormalize_columns(q));
  EXPECT_LE(orthogonality(q), 1e-14);
  Matrix dup(3, 2, std::vector<double>{1, 1, 2, 2, 3, 3});
  EXPECT_FALSE(orthonormalize_columns(dup));
}

TEST(Eig, IdentityAndDiagonal) {
  const auto id = eig_sym(Matrix::identity(4));
  for (double v : id.eigenvalues) EXPECT_DOUBLE_EQ(v, 1.0);
  EXPECT_LE(orthogonality(id.eigenvectors), 1e-15);
  const auto d = eig_sym(Matrix(2, 2, std::vector<double>{1, 0, 0, 3}));
  EXPECT_DOUBLE_EQ(d.eigenvalues[0], 3.0);
  EXPECT_DOUBLE_EQ(d.eigenvalues[1], 1.0);
  EXPECT_DOUBLE_EQ(d.eigenvectors(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(d.eigenvectors(0, 1), 1.0);
}

TEST(Eig, TracePreservedAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 3 + seed * 9;
    const Matrix s = random_symmetric(n, 100 + seed);
    const auto a = eig_sym(s), b = eig_sym(s);
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
    EXPECT_EQ(a.eigenvectors, b.eigenvectors);
    double trace = 0, sum = 0;
    for (std::size_t i = 0; i < n; ++i) trace += s(i, i);
    for (double v : a.eigenvalues) sum += v;
    EXPECT_NEAR(sum, trace, 1e-8 * norm_inf(s) * static_cast<double>(n));
    EXPECT_TRUE(std::is_sorted(a.eigenvalues.rbegin(), a.eigenvalues.rend()));
  }
}

TEST(Eig, PsdSpectrumIsNonNegative) {
  const Matrix x = testsupport::random_matrix(5, 12, 4);  // rank 4 covariance
  EigOptions psd;
  psd.psd = true;
  const auto e = eig_sym(covariance(center(x).values), psd);
  for (double v : e.eigenvalues) EXPECT_GE(v, 0.0);
}

TEST(Center, Examples) {
  const auto c = center(Matrix(2, 1, std::vector<double>{1, 3}));
  EXPECT_EQ(c.mean, std::vector<double>{2});
  EXPECT_EQ(c.values(0, 0), -1.0);
  EXPECT_EQ(c.values(1, 0), 1.0);
  const auto again = center(c.values);
  EXPECT_NEAR(again.mean[0], 0.0, 1e-15);
  EXPECT_EQ(again.values, c.values);
  const Matrix x = testsupport::random_matrix(40, 7, 9, 10.0);
  const auto r = center(x);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(r.values(i, j) + r.mean[j], x(i, j), 1e-12);
}
