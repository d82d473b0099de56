#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chronoscope/dataset.hpp"
#include "chronoscope/embedding.hpp"
#include "chronoscope/error.hpp"
#include "chronoscope/io.hpp"

namespace chronoscope {

/// Product-moment correlation over the rows where both values are finite
/// (NaN marks a missing value).
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::DimensionMismatch, "pearson: series lengths differ");
  std::size_t n = 0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    ++n;
    mx += x[i];
    my += y[i];
  }
  if (n < 3) throw Error(Errc::TooFewSamples, "pearson needs at least 3 paired samples");
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::ConstantSeries, "pearson: constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline std::size_t paired_count(std::span<const double> x, std::span<const double> y) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) n += std::isfinite(x[i]) && std::isfinite(y[i]);
  return n;
}

/// Undefined cells (constant series, too few samples) are empty.
inline std::optional<double> try_pearson(std::span<const double> x, std::span<const double> y) {
  try {
    return pearson(x, y);
  } catch (const Error& e) {
    if (e.code() == Errc::ConstantSeries || e.code() == Errc::TooFewSamples) return std::nullopt;
    throw;
  }
}

/// Attribute order of every correlation table: year, then the five concepts.
inline std::vector<std::string> correlation_attributes() {
  std::vector<std::string> out{"year"};
  for (auto c : kConceptColumns) out.emplace_back(c);
  return out;
}

/// Per-attribute series for the embedding's rows, NaN where missing.
inline std::vector<std::vector<double>> attribute_series(const Embedding& emb, const Dataset& ds) {
  std::vector<std::vector<double>> out(1 + kConceptCount, std::vector<double>(emb.n()));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < emb.n(); ++i) {
    const auto idx = ds.index_of(emb.ids[i]);
    if (!idx) throw Error(Errc::IdMismatch, "embedding id not in dataset: " + emb.ids[i]);
    const auto& m = ds.meta()[*idx];
    out[0][i] = m.year ? *m.year : nan;
    for (std::size_t c = 0; c < kConceptCount; ++c) out[1 + c][i] = m.wolfflin[c] ? *m.wolfflin[c] : nan;
  }
  return out;
}

inline std::vector<double> embedding_years(const Embedding& emb, const Dataset& ds) {
  return attribute_series(emb, ds)[0];
}

struct CorrelationReport {
  std::vector<std::string> dimensions;
  std::vector<std::string> attributes;
  std::vector<std::optional<double>> pcc;  ///< dimensions × attributes, row-major
  std::vector<std::size_t> counts;
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

  std::optional<double> at(std::size_t dim, std::size_t attr) const {
    return pcc[dim * attributes.size() + attr];
  }
  std::size_t count(std::size_t dim, std::size_t attr) const {
    return counts[dim * attributes.size() + attr];
  }
};

/// Correlates every embedding dimension with year and each concept, using
/// pairwise deletion per cell.
inline CorrelationReport correlation_report(const Embedding& emb, const Dataset& ds) {
  CorrelationReport rep;
  rep.attributes = correlation_attributes();
  const auto series = attribute_series(emb, ds);
  for (std::size_t j = 0; j < emb.m(); ++j) {
    rep.dimensions.push_back("coord_" + std::to_string(j + 1));
    const auto coord = emb.coords.col(j);
    for (const auto& attr : series) {
      rep.pcc.push_back(try_pearson(coord, attr));
      rep.counts.push_back(paired_count(coord, attr));
    }
  }
  rep.provenance["embedding_sha256"] = embedding_hash(emb);
  rep.provenance["embedding"] = emb.provenance;
  rep.provenance["missing_values"] = "pairwise deletion per cell";
  return rep;
}

inline std::string correlation_csv(const CorrelationReport& rep, bool absolute = false) {
  std::string out = "dimension";
  for (const auto& a : rep.attributes) out += "," + a;
  out += '\n';
  for (std::size_t d = 0; d < rep.dimensions.size(); ++d) {
    out += rep.dimensions[d];
    for (std::size_t a = 0; a < rep.attributes.size(); ++a) {
      out += ',';
      if (const auto v = rep.at(d, a)) out += io::format_double(absolute ? std::abs(*v) : *v);
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json to_json(const CorrelationReport& rep) {
  nlohmann::ordered_json j;
  j["attributes"] = rep.attributes;
  j["dimensions"] = rep.dimensions;
  nlohmann::ordered_json signed_rows = nlohmann::ordered_json::array();
  nlohmann::ordered_json abs_rows = nlohmann::ordered_json::array();
  nlohmann::ordered_json count_rows = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d < rep.dimensions.size(); ++d) {
    nlohmann::ordered_json s = nlohmann::ordered_json::array(), a = s, c = s;
    for (std::size_t k = 0; k < rep.attributes.size(); ++k) {
      const auto v = rep.at(d, k);
      s.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json());
      a.push_back(v ? nlohmann::ordered_json(std::abs(*v)) : nlohmann::ordered_json());
      c.push_back(rep.count(d, k));
    }
    signed_rows.push_back(std::move(s));
    abs_rows.push_back(std::move(a));
    count_rows.push_back(std::move(c));
  }
  j["pcc"] = std::move(signed_rows);
  j["abs_pcc"] = std::move(abs_rows);
  j["counts"] = std::move(count_rows);
  j["provenance"] = rep.provenance;
  return j;
}

struct PolarCoords {
  std::vector<double> r;
  std::vector<double> theta;  ///< [0, 2π), counter-clockwise from the first axis
  std::array<double, 2> center{};
};

/// Polar coordinates about the centroid of a 2-D embedding.
inline PolarCoords polar(const Embedding& emb) {
  if (emb.m() != 2) throw Error(Errc::DimensionMismatch, "polar needs a 2-D embedding");
  if (emb.n() == 0) throw Error(Errc::DegenerateEmbedding, "empty embedding");
  PolarCoords p;
  for (std::size_t i = 0; i < emb.n(); ++i) {
    p.center[0] += emb.coords(i, 0);
    p.center[1] += emb.coords(i, 1);
  }
  p.center[0] /= static_cast<double>(emb.n());
  p.center[1] /= static_cast<double>(emb.n());
  p.r.resize(emb.n());
  p.theta.resize(emb.n());
  double rmax = 0.0;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < emb.n(); ++i) {
    const double dx = emb.coords(i, 0) - p.center[0];
    const double dy = emb.coords(i, 1) - p.center[1];
    p.r[i] = std::hypot(dx, dy);
    double t = std::atan2(dy, dx);
    if (t < 0.0) t += two_pi;
    if (t >= two_pi) t = 0.0;
    p.theta[i] = t;
    rmax = std::max(rmax, p.r[i]);
  }
  const double scale = std::max({1.0, std::abs(p.center[0]), std::abs(p.center[1])});
  if (rmax <= 1e-14 * scale) throw Error(Errc::DegenerateEmbedding, "all points coincide with the centre");
  return p;
}

struct AngularCorrelation {
  double pcc = 0.0;         ///< signed PCC at the best cut
  double branch_cut = 0.0;  ///< radians
  std::size_t count = 0;
};

inline constexpr int kBranchCutSteps = 360;

/// Scans branch cuts in 1° steps; angles are unwrapped into [cut, cut + 2π)
/// and correlated with year. Returns the cut with the largest |PCC|
/// (lowest cut on ties).
inline AngularCorrelation angular_time_correlation(const PolarCoords& p, std::span<const double> years) {
  if (years.size() != p.theta.size())
    throw Error(Errc::DimensionMismatch, "angular correlation: years do not match rows");
  const std::size_t count = paired_count(p.theta, years);
  if (count < 3) throw Error(Errc::TooFewSamples, "angular correlation needs at least 3 dated rows");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  AngularCorrelation best;
  best.count = count;
  bool have = false;
  std::vector<double> unwrapped(p.theta.size());
  for (int step = 0; step < kBranchCutSteps; ++step) {
    const double cut = step * std::numbers::pi / 180.0;
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
      double t = p.theta[i] - cut;
      if (t < 0.0) t += two_pi;
      unwrapped[i] = t;
    }
    const auto r = try_pearson(unwrapped, years);
    if (!r) continue;
    if (!have || std::abs(*r) > std::abs(best.pcc)) {
      best.pcc = *r;
      best.branch_cut = cut;
      have = true;
    }
  }
  if (!have) throw Error(Errc::ConstantSeries, "angle or year is constant at every branch cut");
  return best;
}

/// Weights |pcc_i| / Σ|pcc|.
inline std::array<double, 2> convex_weights(double pcc1, double pcc2) {
  const double total = std::abs(pcc1) + std::abs(pcc2);
  if (!(total > 0.0)) throw Error(Errc::ConstantSeries, "both dimensions are uncorrelated with year");
  return {std::abs(pcc1) / total, std::abs(pcc2) / total};
}

struct ConvexCombination {
  std::vector<double> axis;
  std::array<double, 2> weights{};
  std::array<double, 2> dim_pcc{};
  double pcc = 0.0;
};

/// Single axis Σ w_i sign(pcc_i) dim_i from two embedding dimensions, with
/// weights proportional to each dimension's |PCC| with year.
inline ConvexCombination convex_combination(const Embedding& emb, std::array<std::size_t, 2> dims,
                                            std::span<const double> years) {
  for (auto d : dims)
    if (d >= emb.m()) throw Error(Errc::DimensionMismatch, "embedding has no dimension " + std::to_string(d + 1));
  ConvexCombination out;
  const auto a = emb.coords.col(dims[0]);
  const auto b = emb.coords.col(dims[1]);
  out.dim_pcc = {pearson(a, years), pearson(b, years)};
  out.weights = convex_weights(out.dim_pcc[0], out.dim_pcc[1]);
  const double sa = out.dim_pcc[0] < 0 ? -1.0 : 1.0;
  const double sb = out.dim_pcc[1] < 0 ? -1.0 : 1.0;
  out.axis.resize(emb.n());
  for (std::size_t i = 0; i < emb.n(); ++i)
    out.axis[i] = out.weights[0] * sa * a[i] + out.weights[1] * sb * b[i];
  out.pcc = pearson(out.axis, years);
  return out;
}

}  // namespace chronoscope
