#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoscope/dataset.hpp"
#include "chronoscope/embedding.hpp"
#include "chronoscope/error.hpp"
#include "chronoscope/linalg.hpp"
#include "chronoscope/rng.hpp"

namespace chronoscope {

/// Parameters of a planted "clock" dataset: paintings sit on a circle in a
/// random 2-plane of R^d, at an angle proportional to their year.
struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t d = 64;
  std::size_t planted_rank = 2;
  double angular_rate = 0.95 * 2.0 * std::numbers::pi / 600.0;  ///< radians per year
  int year_min = 1400;
  int year_max = 2000;
  /// RMS norm of the isotropic noise vector; each coordinate gets noise_sigma / sqrt(d).
  double noise_sigma = 0.0;
  std::size_t style_buckets = 8;
  std::uint64_t seed = 42;
  /// Standard deviation of additive rating noise on the 1..5 scale.
  double rating_noise = 0.0;
  /// Fraction of paintings that receive ratings.
  double rated_fraction = 1.0;
  std::size_t artists_per_style = 4;
};

inline void validate(const SyntheticSpec& s) {
  auto fail = [](const std::string& what) { throw Error(Errc::InvalidSpec, what); };
  if (s.n < 3) fail("n must be at least 3");
  if (s.d < 2) fail("d must be at least 2");
  if (s.planted_rank < 2 || s.planted_rank > s.d) fail("planted_rank must lie in [2, d]");
  if (!std::isfinite(s.angular_rate) || s.angular_rate <= 0.0) fail("angular_rate must be positive");
  if (s.year_min >= s.year_max) fail("year_range must be nondegenerate");
  if (s.year_min < kMinYear || s.year_max > kMaxYear) fail("year_range outside [1000, 2100]");
  if (!(s.noise_sigma >= 0.0) || !std::isfinite(s.noise_sigma)) fail("noise_sigma must be >= 0");
  if (s.style_buckets < 1) fail("style_buckets must be >= 1");
  if (!(s.rating_noise >= 0.0)) fail("rating_noise must be >= 0");
  if (!(s.rated_fraction >= 0.0 && s.rated_fraction <= 1.0)) fail("rated_fraction must be in [0,1]");
  if (s.artists_per_style < 1) fail("artists_per_style must be >= 1");
}

/// rating = offset + coef[0]*c1 + coef[1]*c2 (then noise, then clamp to [1,5]).
struct AffineRating {
  double offset;
  std::array<double, 2> coef;
};

/// Rating maps for the five concepts. The first planted coordinate drives
/// planar/recession and closed/open, the second drives the rest.
inline constexpr std::array<AffineRating, kConceptCount> kPlantedRatings = {{
    {3.0, {0.3, 1.6}},   // linear / painterly
    {3.0, {-1.6, 0.3}},  // planar / recession
    {3.0, {1.2, -0.2}},  // closed / open
    {3.0, {0.2, 1.2}},   // multiplicity / unity
    {3.0, {-0.2, 1.0}},  // absolute / relative clarity
}};

struct GroundTruth {
  Matrix basis;                 ///< planted_rank × d orthonormal rows; rows 0,1 span the clock plane
  std::vector<double> mean;     ///< offset added to every row
  std::vector<double> angle;    ///< angular_rate * (year - year_min)
  double phase = 0.0;           ///< plane angle of year_min
  Matrix plane_coords;          ///< n×2 noiseless coordinates in the clock plane
  Matrix extra_coords;          ///< n×(planted_rank-2) style offsets along the remaining basis rows
  std::array<AffineRating, kConceptCount> ratings = kPlantedRatings;
};

struct SyntheticData {
  Dataset dataset;
  GroundTruth truth;
};

inline std::string synthetic_style_name(std::size_t bucket) {
  if (bucket < kCanonicalStyles.size()) return std::string(kCanonicalStyles[bucket]);
  return "Style " + std::to_string(bucket + 1);
}

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n, d = spec.d, r = spec.planted_rank;

  Rng basis_rng = Rng::stream(spec.seed, 1);
  Matrix cols(d, r);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < r; ++j) cols(i, j) = basis_rng.normal();
  if (!orthonormalize_columns(cols)) throw Error(Errc::InvalidSpec, "could not draw a planted basis");

  GroundTruth gt;
  gt.basis = transpose(cols);
  Rng mean_rng = Rng::stream(spec.seed, 2);
  gt.mean.resize(d);
  for (double& m : gt.mean) m = 2.0 * mean_rng.normal() / std::sqrt(static_cast<double>(d));

  const double span = spec.angular_rate * (spec.year_max - spec.year_min);
  gt.phase = -0.5 * span;  // centres the arc on the first plane axis
  gt.angle.resize(n);
  gt.plane_coords = Matrix(n, 2);
  gt.extra_coords = Matrix(n, r - 2);

  Rng bucket_rng = Rng::stream(spec.seed, 7);
  Matrix bucket_offsets(spec.style_buckets, r - 2);
  for (double& v : bucket_offsets.data()) v = bucket_rng.uniform(-0.5, 0.5);

  Rng year_rng = Rng::stream(spec.seed, 3);
  Rng noise_rng = Rng::stream(spec.seed, 4);
  Rng rating_rng = Rng::stream(spec.seed, 5);
  Rng artist_rng = Rng::stream(spec.seed, 6);
  const double noise_scale = spec.noise_sigma / std::sqrt(static_cast<double>(d));
  const int year_count = spec.year_max - spec.year_min + 1;

  std::vector<PaintingMeta> meta(n);
  ActivationSet acts;
  acts.values = Matrix(n, d);
  acts.ids.resize(n);
  acts.layer_tag = "synthetic";
  acts.model_tag = "planted-clock";

  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "p%06zu", i);
    const int year = spec.year_min + static_cast<int>(year_rng.below(static_cast<std::uint64_t>(year_count)));
    const double theta = spec.angular_rate * (year - spec.year_min);
    const double phi = theta + gt.phase;
    const double c1 = std::cos(phi), c2 = std::sin(phi);
    gt.angle[i] = theta;
    gt.plane_coords(i, 0) = c1;
    gt.plane_coords(i, 1) = c2;

    const std::size_t bucket = std::min<std::size_t>(
        spec.style_buckets - 1,
        static_cast<std::size_t>(year - spec.year_min) * spec.style_buckets / static_cast<std::size_t>(year_count));
    for (std::size_t j = 0; j + 2 < r; ++j) gt.extra_coords(i, j) = bucket_offsets(bucket, j);

    auto row = acts.values.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      double v = gt.mean[k] + c1 * gt.basis(0, k) + c2 * gt.basis(1, k);
      for (std::size_t j = 0; j + 2 < r; ++j) v += gt.extra_coords(i, j) * gt.basis(j + 2, k);
      row[k] = v;
    }
    if (noise_scale > 0.0)
      for (std::size_t k = 0; k < d; ++k) row[k] += noise_scale * noise_rng.normal();

    PaintingMeta& m = meta[i];
    m.id = id;
    m.style = synthetic_style_name(bucket);
    const auto a = artist_rng.below(spec.artists_per_style);
    m.artist = m.style + " Master " + std::to_string(a + 1);
    m.year = year;
    const bool rated = rating_rng.uniform() < spec.rated_fraction;
    for (std::size_t c = 0; c < kConceptCount; ++c) {
      const auto& map = gt.ratings[c];
      double w = map.offset + map.coef[0] * c1 + map.coef[1] * c2;
      if (spec.rating_noise > 0.0) w += spec.rating_noise * rating_rng.normal();
      if (rated) m.wolfflin[c] = std::clamp(w, 1.0, 5.0);
    }
    acts.ids[i] = id;
  }
  round_to_f32(acts.values);
  return {Dataset(std::move(meta), std::move(acts)), std::move(gt)};
}

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  try {
    s.n = j.at("n").get<std::size_t>();
    s.d = j.at("d").get<std::size_t>();
    s.planted_rank = j.value("planted_rank", s.planted_rank);
    s.angular_rate = j.value("angular_rate", s.angular_rate);
    if (j.contains("year_range")) {
      const auto& yr = j.at("year_range");
      if (!yr.is_array() || yr.size() != 2) throw Error(Errc::InvalidSpec, "year_range must be [min, max]");
      s.year_min = yr[0].get<int>();
      s.year_max = yr[1].get<int>();
    }
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.style_buckets = j.value("style_buckets", s.style_buckets);
    s.seed = j.value("seed", s.seed);
    s.rating_noise = j.value("rating_noise", s.rating_noise);
    s.rated_fraction = j.value("rated_fraction", s.rated_fraction);
    s.artists_per_style = j.value("artists_per_style", s.artists_per_style);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidSpec, std::string("synthetic spec: ") + e.what());
  }
  validate(s);
  return s;
}

inline nlohmann::ordered_json to_json(const SyntheticSpec& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["d"] = s.d;
  j["planted_rank"] = s.planted_rank;
  j["angular_rate"] = s.angular_rate;
  j["year_range"] = {s.year_min, s.year_max};
  j["noise_sigma"] = s.noise_sigma;
  j["style_buckets"] = s.style_buckets;
  j["seed"] = s.seed;
  j["rating_noise"] = s.rating_noise;
  j["rated_fraction"] = s.rated_fraction;
  j["artists_per_style"] = s.artists_per_style;
  return j;
}

inline nlohmann::ordered_json to_json(const GroundTruth& gt) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json basis = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < gt.basis.rows(); ++r) {
    auto row = gt.basis.row(r);
    basis.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["plane_basis"] = std::move(basis);
  j["mean"] = gt.mean;
  j["phase"] = gt.phase;
  j["angle"] = gt.angle;
  nlohmann::ordered_json maps = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < kConceptCount; ++c)
    maps[std::string(kConceptColumns[c])] = {{"offset", gt.ratings[c].offset},
                                             {"coef", {gt.ratings[c].coef[0], gt.ratings[c].coef[1]}}};
  j["rating_maps"] = std::move(maps);
  return j;
}

/// Ground-truth embedding: planted angle, then the two plane coordinates.
inline Embedding ground_truth_embedding(const SyntheticData& data) {
  const auto& gt = data.truth;
  Embedding e;
  e.ids = data.dataset.activations().ids;
  e.coords = Matrix(e.ids.size(), 3);
  for (std::size_t i = 0; i < e.ids.size(); ++i) {
    e.coords(i, 0) = gt.angle[i];
    e.coords(i, 1) = gt.plane_coords(i, 0);
    e.coords(i, 2) = gt.plane_coords(i, 1);
  }
  e.provenance["method"] = "ground-truth";
  e.provenance["columns"] = {"planted_angle", "plane_coord_1", "plane_coord_2"};
  return e;
}

}  // namespace chronoscope
