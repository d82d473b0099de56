#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chronoscope/error.hpp"
#include "chronoscope/hash.hpp"
#include "chronoscope/io.hpp"
#include "chronoscope/matrix.hpp"

namespace chronoscope {

/// n×m coordinates for a set of paintings plus how they were produced.
struct Embedding {
  std::vector<std::string> ids;
  Matrix coords;
  /// method, parameters, seed, sign flips, upstream hashes.
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

  std::size_t n() const noexcept { return coords.rows(); }
  std::size_t m() const noexcept { return coords.cols(); }
};

/// `id,coord_1,...,coord_m` with 17 significant digits.
inline std::string embedding_csv(const Embedding& e) {
  std::string out = "id";
  for (std::size_t j = 0; j < e.m(); ++j) out += ",coord_" + std::to_string(j + 1);
  out += '\n';
  for (std::size_t i = 0; i < e.n(); ++i) {
    out += io::csv_escape(e.ids[i]);
    for (std::size_t j = 0; j < e.m(); ++j) out += "," + io::format_double(e.coords(i, j));
    out += '\n';
  }
  return out;
}

inline Embedding parse_embedding_csv(std::string_view text) {
  const auto rows = io::parse_csv(text);
  if (rows.empty() || rows.front().empty() || rows.front()[0] != "id")
    throw Error(Errc::ParseError, "embedding CSV must start with an id column");
  const std::size_t m = rows.front().size() - 1;
  if (m == 0) throw Error(Errc::ParseError, "embedding CSV has no coordinate columns");
  Embedding e;
  std::vector<double> data;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != m + 1)
      throw Error(Errc::ParseError, "embedding CSV line " + std::to_string(r + 1) + " has " +
                                        std::to_string(row.size()) + " fields");
    e.ids.push_back(row[0]);
    for (std::size_t j = 1; j <= m; ++j) {
      const auto v = io::parse_double(io::trim(row[j]));
      if (!v || !std::isfinite(*v))
        throw Error(Errc::ParseError, "bad coordinate on embedding CSV line " + std::to_string(r + 1));
      data.push_back(*v);
    }
  }
  e.coords = Matrix(e.ids.size(), m, std::move(data));
  return e;
}

/// Provenance sidecar path for an embedding CSV: `x.csv` -> `x.provenance.json`.
inline std::filesystem::path provenance_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv).replace_extension(".provenance.json");
}

inline Embedding read_embedding(const std::filesystem::path& csv) {
  const std::string text = io::read_file(csv);
  Embedding e = parse_embedding_csv(text);
  const auto prov = provenance_path(csv);
  if (std::filesystem::exists(prov)) {
    try {
      e.provenance = nlohmann::ordered_json::parse(io::read_file(prov));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(Errc::ParseError, "embedding provenance: " + std::string(ex.what()));
    }
  }
  e.provenance["csv_sha256"] = sha256_hex(text);
  return e;
}

/// Hash identifying an embedding's coordinates and ids.
inline std::string embedding_hash(const Embedding& e) { return sha256_hex(embedding_csv(e)); }

/// Keeps columns `dims` (0-based) in the given order.
inline Embedding select_dims(const Embedding& e, const std::vector<std::size_t>& dims) {
  Embedding out;
  out.ids = e.ids;
  out.coords = Matrix(e.n(), dims.size());
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (dims[j] >= e.m())
      throw Error(Errc::DimensionMismatch, "embedding has no dimension " + std::to_string(dims[j] + 1));
    for (std::size_t i = 0; i < e.n(); ++i) out.coords(i, j) = e.coords(i, dims[j]);
  }
  out.provenance = e.provenance;
  out.provenance["selected_dims"] = dims;
  return out;
}

}  // namespace chronoscope
