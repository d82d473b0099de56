#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chronoscope/error.hpp"
#include "chronoscope/io.hpp"
#include "chronoscope/matrix.hpp"

namespace chronoscope {

namespace fs = std::filesystem;

/// The five concept pairs, in rating-column order.
enum class Concept : std::size_t {
  linear_painterly = 0,
  planar_recession,
  closed_open,
  multiplicity_unity,
  absolute_relative,
};

inline constexpr std::size_t kConceptCount = 5;

inline constexpr std::array<std::string_view, kConceptCount> kConceptColumns = {
    "w_linear_painterly", "w_planar_recession", "w_closed_open", "w_multiplicity_unity",
    "w_absolute_relative"};

inline constexpr std::array<std::string_view, 9> kMetaColumns = {
    "id",
    "artist",
    "style",
    "year",
    "w_linear_painterly",
    "w_planar_recession",
    "w_closed_open",
    "w_multiplicity_unity",
    "w_absolute_relative"};

inline constexpr int kMinYear = 1000;
inline constexpr int kMaxYear = 2100;

/// The twenty canonical style classes, in their reference order. Plot
/// palettes and synthetic style buckets follow this order.
inline constexpr std::array<std::string_view, 20> kCanonicalStyles = {
    "Early Renaissance",
    "High Renaissance",
    "Mannerism and Late Renaissance",
    "Northern Renaissance",
    "Baroque",
    "Rococo",
    "Romanticism",
    "Impressionism",
    "Post-Impressionism",
    "Realism",
    "Art Nouveau",
    "Cubism",
    "Expressionism",
    "Fauvism",
    "Abstract-Expressionism",
    "Color field painting",
    "Minimalism",
    "Naïve art-Primitivism",
    "Ukiyo-e",
    "Pop-art"};

struct PaintingMeta {
  std::string id;
  std::string artist;
  std::string style;
  std::optional<int> year;
  std::array<std::optional<double>, kConceptCount> wolfflin{};

  bool has_year() const noexcept { return year.has_value(); }
  bool has_all_ratings() const noexcept {
    for (const auto& w : wolfflin)
      if (!w) return false;
    return true;
  }
  bool operator==(const PaintingMeta&) const = default;
};

inline void validate(const PaintingMeta& m) {
  if (m.id.empty()) throw Error(Errc::InvalidValue, "painting id is empty");
  if (m.id.find_first_of("\r\n") != std::string::npos)
    throw Error(Errc::InvalidValue, "painting id contains a line break: " + m.id);
  if (m.year && (*m.year < kMinYear || *m.year > kMaxYear))
    throw Error(Errc::InvalidValue,
                "year " + std::to_string(*m.year) + " out of range for painting " + m.id);
  for (std::size_t c = 0; c < kConceptCount; ++c) {
    const auto& w = m.wolfflin[c];
    if (w && !(*w >= 1.0 && *w <= 5.0))
      throw Error(Errc::InvalidValue, std::string(kConceptColumns[c]) + " rating outside [1,5] for " + m.id);
  }
}

/// n×d activations, rows aligned with `ids`.
struct ActivationSet {
  Matrix values;
  std::vector<std::string> ids;
  std::string layer_tag;
  std::string model_tag;

  std::size_t n() const noexcept { return values.rows(); }
  std::size_t d() const noexcept { return values.cols(); }
  bool operator==(const ActivationSet& o) const {
    return ids == o.ids && layer_tag == o.layer_tag && model_tag == o.model_tag &&
           values.rows() == o.values.rows() && values.cols() == o.values.cols() &&
           std::memcmp(values.data().data(), o.values.data().data(),
                       values.data().size() * sizeof(double)) == 0;
  }
};

inline void validate(const ActivationSet& a) {
  if (a.n() < 2 || a.d() < 2)
    throw Error(Errc::DimensionMismatch, "activation set needs n >= 2 and d >= 2");
  if (a.ids.size() != a.n())
    throw Error(Errc::DimensionMismatch, "activation ids do not match row count");
  if (!all_finite(a.values)) throw Error(Errc::NonFiniteValue, "activation values must be finite");
  std::unordered_set<std::string_view> seen;
  for (const auto& id : a.ids)
    if (!seen.insert(id).second) throw Error(Errc::DuplicateId, "duplicate activation id " + id);
}

/// Metadata joined to activations; meta[i] describes activation row i.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<PaintingMeta> meta, ActivationSet activations) {
    validate(activations);
    if (meta.size() != activations.n())
      throw Error(Errc::DimensionMismatch, "metadata has " + std::to_string(meta.size()) +
                                               " rows, activations have " +
                                               std::to_string(activations.n()));
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < meta.size(); ++i) {
      validate(meta[i]);
      if (!by_id.emplace(meta[i].id, i).second)
        throw Error(Errc::DuplicateId, "duplicate painting id " + meta[i].id);
    }
    meta_.resize(meta.size());
    for (std::size_t r = 0; r < activations.n(); ++r) {
      auto it = by_id.find(activations.ids[r]);
      if (it == by_id.end())
        throw Error(Errc::IdMismatch, "activation id without metadata: " + activations.ids[r]);
      meta_[r] = std::move(meta[it->second]);
      index_.emplace(activations.ids[r], r);
    }
    activations_ = std::move(activations);
  }

  std::size_t n() const noexcept { return meta_.size(); }
  const std::vector<PaintingMeta>& meta() const noexcept { return meta_; }
  const ActivationSet& activations() const noexcept { return activations_; }

  std::optional<std::size_t> index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Years as doubles, NaN where missing.
  std::vector<double> years() const {
    std::vector<double> out(n());
    for (std::size_t i = 0; i < n(); ++i)
      out[i] = meta_[i].year ? *meta_[i].year : std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  std::vector<double> ratings(Concept c) const {
    std::vector<double> out(n());
    for (std::size_t i = 0; i < n(); ++i) {
      const auto& w = meta_[i].wolfflin[static_cast<std::size_t>(c)];
      out[i] = w ? *w : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
  }

  bool operator==(const Dataset& o) const {
    return meta_ == o.meta_ && activations_ == o.activations_;
  }

 private:
  std::vector<PaintingMeta> meta_;
  ActivationSet activations_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Raw style label -> canonical class.
class StyleMergeMap {
 public:
  StyleMergeMap() = default;
  explicit StyleMergeMap(std::map<std::string, std::string> mapping, bool strict = false)
      : mapping_(std::move(mapping)), strict_(strict) {
    for (const auto& [raw, canonical] : mapping_)
      if (canonical.empty()) throw Error(Errc::InvalidValue, "empty canonical label for " + raw);
    // Canonical labels always map to themselves.
    std::vector<std::string> targets;
    for (const auto& [raw, canonical] : mapping_) targets.push_back(canonical);
    for (const auto& t : targets) mapping_.emplace(t, t);
  }

  /// The twenty-class table used to train the reference models.
  static StyleMergeMap reference() {
    std::map<std::string, std::string> m;
    for (auto s : kCanonicalStyles) m.emplace(s, s);
    m["Post Impressionism"] = "Post-Impressionism";
    m["Pointillism"] = "Post-Impressionism";
    m["Contemporary Realism"] = "Realism";
    m["New Realism"] = "Realism";
    m["Analytical Cubism"] = "Cubism";
    m["Synthetic Cubism"] = "Cubism";
    m["Abstract Expressionism"] = "Abstract-Expressionism";
    m["Action Painting"] = "Abstract-Expressionism";
    m["Naive art-Primitivism"] = "Naïve art-Primitivism";
    return StyleMergeMap(std::move(m));
  }

  static StyleMergeMap from_json(std::string_view text, bool strict = false) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, std::string("merge map: ") + e.what());
    }
    if (!j.is_object()) throw Error(Errc::ParseError, "merge map must be a JSON object");
    std::map<std::string, std::string> m;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.value().is_string())
        throw Error(Errc::ParseError, "merge map value for '" + it.key() + "' is not a string");
      m[it.key()] = it.value().get<std::string>();
    }
    return StyleMergeMap(std::move(m), strict);
  }

  std::string to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [raw, canonical] : mapping_) j[raw] = canonical;
    return j.dump(2) + "\n";
  }

  std::string canonicalize(const std::string& label) const {
    auto it = mapping_.find(label);
    if (it != mapping_.end()) return it->second;
    if (strict_) throw Error(Errc::UnknownStyleLabel, "style label not in merge map: " + label);
    return label;
  }

  bool strict() const noexcept { return strict_; }
  void set_strict(bool strict) noexcept { strict_ = strict; }
  const std::map<std::string, std::string>& mapping() const noexcept { return mapping_; }

 private:
  std::map<std::string, std::string> mapping_;
  bool strict_ = false;
};

namespace detail {

inline PaintingMeta parse_meta_row(const io::CsvRow& row, std::size_t line) {
  const std::string where = " (metadata line " + std::to_string(line) + ")";
  if (row.size() != kMetaColumns.size())
    throw Error(Errc::ParseError, "expected " + std::to_string(kMetaColumns.size()) +
                                      " fields, found " + std::to_string(row.size()) + where);
  PaintingMeta m;
  m.id = row[0];
  m.artist = row[1];
  m.style = row[2];
  const auto year_text = io::trim(row[3]);
  if (!year_text.empty()) {
    const auto y = io::parse_int(year_text);
    if (!y) throw Error(Errc::ParseError, "year must be an integer, got '" + row[3] + "'" + where);
    if (*y < kMinYear || *y > kMaxYear)
      throw Error(Errc::InvalidValue, "year " + row[3] + " out of range" + where);
    m.year = static_cast<int>(*y);
  }
  for (std::size_t c = 0; c < kConceptCount; ++c) {
    const auto text = io::trim(row[4 + c]);
    if (text.empty()) continue;
    const auto v = io::parse_double(text);
    if (!v) throw Error(Errc::ParseError, "rating is not a number: '" + row[4 + c] + "'" + where);
    if (!std::isfinite(*v)) throw Error(Errc::NonFiniteValue, "non-finite rating" + where);
    m.wolfflin[c] = *v;
  }
  return m;
}

inline std::uint32_t load_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void store_le32(std::string& out, std::uint32_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>((v >> 8) & 0xFF);
  out += static_cast<char>((v >> 16) & 0xFF);
  out += static_cast<char>((v >> 24) & 0xFF);
}

}  // namespace detail

inline std::vector<PaintingMeta> parse_meta_csv(std::string_view text) {
  const auto rows = io::parse_csv(text);
  if (rows.empty()) throw Error(Errc::ParseError, "metadata CSV is empty");
  const auto& header = rows.front();
  bool header_ok = header.size() == kMetaColumns.size();
  for (std::size_t i = 0; header_ok && i < header.size(); ++i)
    header_ok = io::trim(header[i]) == kMetaColumns[i];
  if (!header_ok) throw Error(Errc::ParseError, "metadata CSV header does not match the expected columns");
  std::vector<PaintingMeta> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() == 1 && rows[r][0].empty()) continue;  // blank line
    out.push_back(detail::parse_meta_row(rows[r], r + 1));
  }
  return out;
}

inline std::string meta_csv(const std::vector<PaintingMeta>& meta) {
  std::string out;
  io::append_csv_row(out, {kMetaColumns.begin(), kMetaColumns.end()});
  for (const auto& m : meta) {
    std::vector<std::string> f{m.id, m.artist, m.style, m.year ? std::to_string(*m.year) : ""};
    for (const auto& w : m.wolfflin) f.push_back(w ? io::format_double(*w) : "");
    io::append_csv_row(out, f);
  }
  return out;
}

/// Sidecar `<stem>.json` sits next to the payload `<stem>.bin`; either path
/// may be given.
struct ActivationPaths {
  fs::path sidecar;
  fs::path payload;
};

inline ActivationPaths activation_paths(const fs::path& given) {
  ActivationPaths p;
  if (given.extension() == ".json") {
    p.sidecar = given;
    p.payload = fs::path(given).replace_extension(".bin");
  } else {
    p.payload = given;
    p.sidecar = fs::path(given).replace_extension(".json");
  }
  return p;
}

inline ActivationSet read_activations(const fs::path& path) {
  const auto paths = activation_paths(path);
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(io::read_file(paths.sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, "sidecar " + paths.sidecar.string() + ": " + e.what());
  }
  for (const char* key : {"n", "d", "dtype", "order", "ids_file", "layer_tag", "model_tag"})
    if (!side.contains(key)) throw Error(Errc::ParseError, std::string("sidecar missing field ") + key);
  if (side["dtype"] != "f32le") throw Error(Errc::ParseError, "sidecar dtype must be f32le");
  if (side["order"] != "row-major") throw Error(Errc::ParseError, "sidecar order must be row-major");
  if (!side["n"].is_number_unsigned() || !side["d"].is_number_unsigned())
    throw Error(Errc::ParseError, "sidecar n and d must be non-negative integers");
  const std::size_t n = side["n"].get<std::size_t>();
  const std::size_t d = side["d"].get<std::size_t>();

  const std::string payload = io::read_file(paths.payload);
  if (payload.size() != n * d * 4)
    throw Error(Errc::DimensionMismatch, "payload holds " + std::to_string(payload.size()) +
                                             " bytes, sidecar declares " + std::to_string(n) +
                                             "x" + std::to_string(d) + " f32 values");
  ActivationSet a;
  a.layer_tag = side["layer_tag"].get<std::string>();
  a.model_tag = side["model_tag"].get<std::string>();
  a.values = Matrix(n, d);
  auto dst = a.values.data();
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < n * d; ++i) {
    const float f = std::bit_cast<float>(detail::load_le32(bytes + 4 * i));
    if (!std::isfinite(f))
      throw Error(Errc::NonFiniteValue, "non-finite activation at row " + std::to_string(i / d));
    dst[i] = f;
  }

  const fs::path ids_path = paths.sidecar.parent_path() / side["ids_file"].get<std::string>();
  const std::string ids_text = io::read_file(ids_path);
  std::size_t start = 0;
  while (start < ids_text.size()) {
    std::size_t end = ids_text.find('\n', start);
    if (end == std::string::npos) end = ids_text.size();
    std::string id = ids_text.substr(start, end - start);
    if (!id.empty() && id.back() == '\r') id.pop_back();
    if (!id.empty()) a.ids.push_back(std::move(id));
    start = end + 1;
  }
  if (a.ids.size() != n)
    throw Error(Errc::DimensionMismatch, "ids file lists " + std::to_string(a.ids.size()) +
                                             " ids, sidecar declares n=" + std::to_string(n));
  validate(a);
  return a;
}

/// Converts to the on-disk f32 precision, so in-memory and file-backed runs agree.
inline void round_to_f32(Matrix& m) {
  for (double& v : m.data()) v = static_cast<float>(v);
}

/// File name -> contents for a dataset written under `stem`.
inline std::vector<std::pair<std::string, std::string>> serialize_dataset(const Dataset& ds,
                                                                          const std::string& stem) {
  const auto& a = ds.activations();
  std::string payload;
  payload.reserve(a.n() * a.d() * 4);
  for (double v : a.values.data()) detail::store_le32(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));

  std::string ids;
  for (const auto& id : a.ids) ids += id + "\n";

  nlohmann::ordered_json side;
  side["n"] = a.n();
  side["d"] = a.d();
  side["dtype"] = "f32le";
  side["order"] = "row-major";
  side["ids_file"] = stem + ".ids.txt";
  side["layer_tag"] = a.layer_tag;
  side["model_tag"] = a.model_tag;

  return {{stem + ".meta.csv", meta_csv(ds.meta())},
          {stem + ".json", side.dump(2) + "\n"},
          {stem + ".bin", std::move(payload)},
          {stem + ".ids.txt", std::move(ids)}};
}

inline void write_dataset(const Dataset& ds, const fs::path& dir, const std::string& stem = "ds") {
  for (const auto& [name, contents] : serialize_dataset(ds, stem))
    io::write_file_atomic(dir / name, contents);
}

/// Conventional metadata path for a dataset payload: `<stem>.meta.csv`.
inline fs::path default_meta_path(const fs::path& activation_path) {
  const auto paths = activation_paths(activation_path);
  return fs::path(paths.payload).replace_extension(".meta.csv");
}

/// Reads, validates and joins a metadata CSV with an activation file. Styles
/// go through `merge_map` when one is given.
inline Dataset load_dataset(const fs::path& meta_file, const fs::path& activation_file,
                            const StyleMergeMap* merge_map = nullptr) {
  auto meta = parse_meta_csv(io::read_file(meta_file));
  auto acts = read_activations(activation_file);
  if (merge_map)
    for (auto& m : meta) m.style = merge_map->canonicalize(m.style);
  return Dataset(std::move(meta), std::move(acts));
}

}  // namespace chronoscope
