#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chronoscope/dataset.hpp"
#include "chronoscope/embedding.hpp"
#include "chronoscope/error.hpp"
#include "chronoscope/io.hpp"
#include "chronoscope/knn.hpp"
#include "chronoscope/pca.hpp"
#include "chronoscope/rng.hpp"

namespace chronoscope {

/// Unit direction from the global centroid toward a style centroid.
struct StyleAxis {
  std::string style;
  std::vector<double> direction;
  std::size_t support = 0;
};

namespace detail {

/// Dataset row for every embedding row.
inline std::vector<std::size_t> join_rows(const Embedding& emb, const Dataset& ds) {
  std::vector<std::size_t> rows(emb.n());
  for (std::size_t i = 0; i < emb.n(); ++i) {
    const auto r = ds.index_of(emb.ids[i]);
    if (!r) throw Error(Errc::IdMismatch, "embedding id '" + emb.ids[i] + "' not in metadata");
    rows[i] = *r;
  }
  return rows;
}

inline std::vector<double> centroid(const Matrix& x) { return column_means(x); }

}  // namespace detail

inline StyleAxis style_axis(const Embedding& emb, const Dataset& ds, const std::string& style) {
  const auto rows = detail::join_rows(emb, ds);
  const std::size_t m = emb.m();
  const auto global = detail::centroid(emb.coords);
  StyleAxis axis;
  axis.style = style;
  axis.direction.assign(m, 0.0);
  for (std::size_t i = 0; i < emb.n(); ++i) {
    if (ds.meta()[rows[i]].style != style) continue;
    ++axis.support;
    for (std::size_t j = 0; j < m; ++j) axis.direction[j] += emb.coords(i, j);
  }
  if (axis.support == 0) throw Error(Errc::UnknownStyle, "style '" + style + "' has no paintings");
  for (std::size_t j = 0; j < m; ++j) axis.direction[j] = axis.direction[j] / static_cast<double>(axis.support) - global[j];
  const double nrm = norm2(axis.direction);
  if (!(nrm > 0.0)) throw Error(Errc::DegenerateEmbedding, "style centroid coincides with global centroid");
  for (double& v : axis.direction) v /= nrm;
  return axis;
}

struct Extremity {
  std::string id;
  double value = 0.0;
};

struct RepresentativeArtist {
  std::string artist;
  double score = 0.0;
  std::size_t paintings = 0;
  std::vector<Extremity> extremes;  ///< top-q, descending
};

struct Representatives {
  StyleAxis axis;
  std::size_t q = 5;
  std::vector<RepresentativeArtist> ranking;
};

/// Ranks the artists of `style` by the mean of their q largest projections
/// onto the style axis (centroid-relative).
inline Representatives representatives(const Embedding& emb, const Dataset& ds, const std::string& style,
                                       std::size_t q = 5) {
  if (q == 0) throw Error(Errc::InvalidArgument, "q must be positive");
  Representatives out;
  out.q = q;
  out.axis = style_axis(emb, ds, style);
  if (out.axis.support < q)
    throw Error(Errc::TooFewPaintings, "style '" + style + "' has " + std::to_string(out.axis.support) +
                                           " paintings, q=" + std::to_string(q));
  const auto rows = detail::join_rows(emb, ds);
  const auto global = detail::centroid(emb.coords);
  std::map<std::string, std::vector<Extremity>> by_artist;
  for (std::size_t i = 0; i < emb.n(); ++i) {
    const auto& meta = ds.meta()[rows[i]];
    if (meta.style != style) continue;
    double proj = 0.0;
    for (std::size_t j = 0; j < emb.m(); ++j) proj += (emb.coords(i, j) - global[j]) * out.axis.direction[j];
    by_artist[meta.artist].push_back({meta.id, proj});
  }
  for (auto& [artist, ext] : by_artist) {
    std::sort(ext.begin(), ext.end(),
              [](const auto& a, const auto& b) { return a.value != b.value ? a.value > b.value : a.id < b.id; });
    RepresentativeArtist ra;
    ra.artist = artist;
    ra.paintings = ext.size();
    const std::size_t take = std::min(q, ext.size());
    for (std::size_t r = 0; r < take; ++r) ra.score += ext[r].value;
    ra.score /= static_cast<double>(take);
    ra.extremes.assign(ext.begin(), ext.begin() + static_cast<std::ptrdiff_t>(take));
    out.ranking.push_back(std::move(ra));
  }
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const auto& a, const auto& b) { return a.score != b.score ? a.score > b.score : a.artist < b.artist; });
  return out;
}

struct BridgeScore {
  std::string id;
  std::string style;
  std::optional<int> year;
  double neighbor_style_entropy = 0.0;        ///< nats
  std::optional<double> median_year_gap;      ///< absent without dated neighbours or own year
  double score = 0.0;
  bool missing_year = false;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline std::vector<double> min_max(const std::vector<double>& v, const std::vector<char>& use) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!use[i]) continue;
    if (!any) lo = hi = v[i];
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
    any = true;
  }
  std::vector<double> out(v.size(), 0.0);
  if (!any || !(hi > lo)) return out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (use[i]) out[i] = (v[i] - lo) / (hi - lo);
  return out;
}

}  // namespace detail

/// Style entropy of each painting's neighbours times the median year gap to
/// them, both min-max normalized. Graph rows follow dataset rows. Paintings
/// lacking a year gap score 0 and carry missing_year. Sorted by score
/// descending, id ascending.
inline std::vector<BridgeScore> bridge_scores(const KnnGraph& g, const Dataset& ds) {
  const auto& meta = ds.meta();
  const std::size_t n = meta.size();
  if (g.n() != n) throw Error(Errc::DimensionMismatch, "graph and dataset sizes differ");
  std::vector<double> entropy(n, 0.0), gap(n, 0.0);
  std::vector<char> all(n, 1), has_gap(n, 0);
  std::vector<BridgeScore> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::string_view, std::size_t> counts;
    for (std::size_t j : g.neighbors[i]) ++counts[meta[j].style];
    const double total = static_cast<double>(g.neighbors[i].size());
    double h = 0.0;
    for (const auto& [style, c] : counts) {
      const double p = static_cast<double>(c) / total;
      h -= p * std::log(p);
    }
    entropy[i] = std::max(0.0, h);
    std::vector<double> gaps;
    if (meta[i].year)
      for (std::size_t j : g.neighbors[i])
        if (meta[j].year) gaps.push_back(std::abs(static_cast<double>(*meta[j].year - *meta[i].year)));
    auto& b = out[i];
    b.id = meta[i].id;
    b.style = meta[i].style;
    b.year = meta[i].year;
    b.neighbor_style_entropy = entropy[i];
    if (gaps.empty()) {
      b.missing_year = true;
    } else {
      gap[i] = detail::median(std::move(gaps));
      has_gap[i] = 1;
      b.median_year_gap = gap[i];
    }
  }
  if (std::none_of(has_gap.begin(), has_gap.end(), [](char c) { return c != 0; }))
    throw Error(Errc::MissingYears, "no painting has a dated neighbourhood");
  const auto ne = detail::min_max(entropy, all);
  const auto ng = detail::min_max(gap, has_gap);
  for (std::size_t i = 0; i < n; ++i) out[i].score = has_gap[i] ? ne[i] * ng[i] : 0.0;
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.score != b.score ? a.score > b.score : a.id < b.id; });
  return out;
}

inline constexpr int kRenaissanceCutoffYear = 1700;

/// High-scoring bridges dated before 1700.
inline std::vector<BridgeScore> renaissance_outliers(const std::vector<BridgeScore>& scores) {
  std::vector<BridgeScore> out;
  for (const auto& b : scores)
    if (b.year && *b.year < kRenaissanceCutoffYear) out.push_back(b);
  return out;
}

struct Smoothness {
  double mean_gap = 0.0;
  double baseline_gap = 0.0;
  double ratio = 0.0;
  std::size_t edges = 0;
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
};

/// Mean |Δyear| over graph edges against the same statistic with years
/// shuffled among dated paintings.
inline Smoothness temporal_smoothness(const KnnGraph& g, const Dataset& ds, std::uint64_t seed,
                                      std::size_t permutations = 100) {
  const auto& meta = ds.meta();
  if (g.n() != meta.size()) throw Error(Errc::DimensionMismatch, "graph and dataset sizes differ");
  std::vector<std::size_t> dated;
  std::vector<double> year(meta.size(), 0.0);
  for (std::size_t i = 0; i < meta.size(); ++i)
    if (meta[i].year) {
      dated.push_back(i);
      year[i] = *meta[i].year;
    }
  if (dated.size() < 10)
    throw Error(Errc::MissingYears, "need at least 10 dated paintings, have " + std::to_string(dated.size()));
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < g.n(); ++i)
    if (meta[i].year)
      for (std::size_t j : g.neighbors[i])
        if (meta[j].year) edges.emplace_back(i, j);
  if (edges.empty()) throw Error(Errc::MissingYears, "no edge joins two dated paintings");

  auto mean_gap = [&](const std::vector<double>& y) {
    double s = 0.0;
    for (const auto& [a, b] : edges) s += std::abs(y[a] - y[b]);
    return s / static_cast<double>(edges.size());
  };
  Smoothness out;
  out.edges = edges.size();
  out.permutations = permutations;
  out.seed = seed;
  out.mean_gap = mean_gap(year);
  Rng rng = Rng::stream(seed, 41);
  std::vector<double> pool(dated.size()), shuffled = year;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t t = 0; t < dated.size(); ++t) pool[t] = year[dated[t]];
    rng.shuffle(pool);
    for (std::size_t t = 0; t < dated.size(); ++t) shuffled[dated[t]] = pool[t];
    out.baseline_gap += mean_gap(shuffled);
  }
  if (permutations > 0) out.baseline_gap /= static_cast<double>(permutations);
  out.ratio = out.baseline_gap > 0.0 ? out.mean_gap / out.baseline_gap : 0.0;
  return out;
}

struct SubspaceRow {
  std::string label;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t subspace_dim = 0;
  double retained_variance_2 = 0.0;
};

inline std::vector<SubspaceRow> subspace_report(const std::vector<std::pair<std::string, ActivationSet>>& sets,
                                                double threshold = 0.95) {
  if (sets.empty()) throw Error(Errc::InvalidArgument, "subspace report needs at least one activation set");
  std::vector<SubspaceRow> rows;
  for (const auto& [label, a] : sets) {
    const PcaModel model = fit_pca(a);
    SubspaceRow r;
    r.label = label;
    r.n = a.values.rows();
    r.d = a.values.cols();
    r.subspace_dim = subspace_dim(model, threshold);
    r.retained_variance_2 = retained_variance(model, std::min<std::size_t>(2, model.k()));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string subspace_csv(const std::vector<SubspaceRow>& rows) {
  std::string out = "label,n,d,subspace_dim_95,retained_variance_2\n";
  for (const auto& r : rows)
    io::append_csv_row(out, {r.label, std::to_string(r.n), std::to_string(r.d), std::to_string(r.subspace_dim),
                             io::format_double(r.retained_variance_2)});
  return out;
}

inline std::string representatives_csv(const Representatives& rep) {
  std::string out = "rank,artist,score,paintings,extreme_ids\n";
  for (std::size_t r = 0; r < rep.ranking.size(); ++r) {
    const auto& a = rep.ranking[r];
    std::string ids;
    for (const auto& e : a.extremes) ids += (ids.empty() ? "" : ";") + e.id;
    io::append_csv_row(out, {std::to_string(r + 1), a.artist, io::format_double(a.score),
                             std::to_string(a.paintings), ids});
  }
  return out;
}

inline nlohmann::ordered_json to_json(const Representatives& rep) {
  nlohmann::ordered_json j;
  j["style"] = rep.axis.style;
  j["axis"] = {{"construction", "centroid difference"}, {"direction", rep.axis.direction}, {"support", rep.axis.support}};
  j["q"] = rep.q;
  j["scoring"] = "mean of the artist's top-q projections onto the style axis (one formalization of representativeness)";
  j["ranking"] = nlohmann::ordered_json::array();
  for (const auto& a : rep.ranking) {
    nlohmann::ordered_json e;
    e["artist"] = a.artist;
    e["score"] = a.score;
    e["paintings"] = a.paintings;
    e["extremes"] = nlohmann::ordered_json::array();
    for (const auto& x : a.extremes) e["extremes"].push_back({{"id", x.id}, {"extremity", x.value}});
    j["ranking"].push_back(std::move(e));
  }
  return j;
}

inline std::string bridges_csv(const std::vector<BridgeScore>& scores) {
  std::string out = "rank,id,style,year,neighbor_style_entropy,median_year_gap,score,missing_year\n";
  for (std::size_t r = 0; r < scores.size(); ++r) {
    const auto& b = scores[r];
    io::append_csv_row(out, {std::to_string(r + 1), b.id, b.style, b.year ? std::to_string(*b.year) : "",
                             io::format_double(b.neighbor_style_entropy),
                             b.median_year_gap ? io::format_double(*b.median_year_gap) : "",
                             io::format_double(b.score), b.missing_year ? "1" : "0"});
  }
  return out;
}

inline nlohmann::ordered_json to_json(const Smoothness& s) {
  nlohmann::ordered_json j;
  j["mean_gap"] = s.mean_gap;
  j["baseline_gap"] = s.baseline_gap;
  j["ratio"] = s.ratio;
  j["edges"] = s.edges;
  j["permutations"] = s.permutations;
  j["seed"] = s.seed;
  return j;
}

}  // namespace chronoscope
