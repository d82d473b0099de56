#pragma once
// Small builders shared by the test suites.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chronoscope/chronoscope.hpp"
#include "oracles.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using chronoscope::Matrix;

inline Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(n, d);
  for (double& v : m.data()) v = dist(gen);
  return m;
}

inline Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
  Matrix a = random_matrix(n, n, seed);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

/// Random orthogonal matrix from Gram-Schmidt on Gaussian columns.
inline Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  Matrix q = random_matrix(n, n, seed);
  chronoscope::orthonormalize_columns(q);
  return q;
}

inline oracle::Dense to_dense(const Matrix& m) {
  oracle::Dense d(m.rows(), std::vector<long double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d[i][j] = m(i, j);
  return d;
}

inline std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> r(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) r[i].assign(m.row(i).begin(), m.row(i).end());
  return r;
}

/// Metadata row with only the fields a test cares about.
inline chronoscope::PaintingMeta painting(std::string id, std::string artist, std::string style,
                                          std::optional<int> year) {
  chronoscope::PaintingMeta m;
  m.id = std::move(id);
  m.artist = std::move(artist);
  m.style = std::move(style);
  m.year = year;
  return m;
}

/// Dataset whose activations are `x` and whose ids are p0, p1, ...
inline chronoscope::Dataset make_dataset(const Matrix& x, std::vector<chronoscope::PaintingMeta> meta) {
  chronoscope::ActivationSet a;
  a.values = x;
  for (std::size_t i = 0; i < x.rows(); ++i) a.ids.push_back(meta[i].id);
  a.layer_tag = "test";
  a.model_tag = "test";
  return chronoscope::Dataset(std::move(meta), std::move(a));
}

inline chronoscope::Embedding make_embedding(const Matrix& coords, const chronoscope::Dataset& ds) {
  chronoscope::Embedding e;
  e.ids = ds.activations().ids;
  e.coords = coords;
  return e;
}

/// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chronoscope_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// |PCC| between each column of `a` and the best-matching column of `b`.
inline double column_match(const Matrix& a, std::size_t ja, const Matrix& b, std::size_t jb) {
  return std::fabs(static_cast<double>(oracle::pearson(a.col(ja), b.col(jb))));
}

}  // namespace testsupport
