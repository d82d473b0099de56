#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <fstream>

#include "support.hpp"

using namespace chronoscope;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CHRONOSCOPE_FIXTURES;
const fs::path kConfig = CHRONOSCOPE_CONFIG;

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::InvalidArgument;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

const std::string kHeader =
    "id,artist,style,year,w_linear_painterly,w_planar_recession,w_closed_open,w_multiplicity_unity,w_absolute_relative\n";

/// A copy of the 3-row fixture with the metadata replaced.
fs::path fixture_with_meta(const std::string& name, const std::string& meta) {
  const fs::path dir = testsupport::scratch_dir(name);
  for (const char* f : {"three.bin", "three.json", "three.ids.txt"}) fs::copy_file(kFixtures / f, dir / f);
  write_text(dir / "three.meta.csv", meta);
  return dir;
}

}  // namespace

TEST(Fixture, ThreeRowsFourColumns) {
  const Dataset ds = load_dataset(kFixtures / "three.meta.csv", kFixtures / "three.bin");
  EXPECT_EQ(ds.activations().n(), 3u);
  EXPECT_EQ(ds.activations().d(), 4u);
  EXPECT_EQ(ds.activations().values(0, 1), -1.25);
  EXPECT_EQ(ds.activations().values(2, 2), 0.125);
  EXPECT_EQ(ds.activations().layer_tag, "fc_512");
  EXPECT_EQ(ds.meta()[2].artist, "Rembrandt, van Rijn");
  EXPECT_FALSE(ds.meta()[2].year.has_value());
  EXPECT_FALSE(ds.meta()[1].wolfflin[0].has_value());
  EXPECT_EQ(*ds.meta()[0].wolfflin[3], 4.5);
  // Rows with missing values are kept.
  EXPECT_TRUE(std::isnan(ds.years()[2]));
  // The sidecar path works as well as the payload path.
  const Dataset via_json = load_dataset(kFixtures / "three.meta.csv", kFixtures / "three.json");
  EXPECT_EQ(via_json.activations(), ds.activations());
}

TEST(MergeMap, ReferenceMapsCubismVariants) {
  const auto map = StyleMergeMap::reference();
  EXPECT_EQ(map.canonicalize("Analytical Cubism"), "Cubism");
  EXPECT_EQ(map.canonicalize("Synthetic Cubism"), "Cubism");
  EXPECT_EQ(map.canonicalize("Pointillism"), "Post-Impressionism");
  EXPECT_EQ(map.canonicalize("Some Unlisted Style"), "Some Unlisted Style");
  const Dataset ds = load_dataset(kFixtures / "three.meta.csv", kFixtures / "three.bin", &map);
  EXPECT_EQ(ds.meta()[0].style, "Cubism");
}

TEST(MergeMap, ShippedConfigMatchesReference) {
  const auto shipped = StyleMergeMap::from_json(io::read_file(kConfig / "style_merge_map.json"));
  EXPECT_EQ(shipped.mapping(), StyleMergeMap::reference().mapping());
  std::set<std::string> targets;
  for (const auto& [raw, canonical] : shipped.mapping()) targets.insert(canonical);
  EXPECT_EQ(targets.size(), 20u);
}

TEST(MergeMap, Idempotent) {
  const auto map = StyleMergeMap::reference();
  for (const auto& [raw, canonical] : map.mapping()) {
    EXPECT_EQ(map.canonicalize(canonical), canonical);
    EXPECT_EQ(map.canonicalize(map.canonicalize(raw)), map.canonicalize(raw));
  }
}

TEST(MergeMap, StrictRejectsUnknown) {
  auto map = StyleMergeMap::reference();
  map.set_strict(true);
  EXPECT_EQ(code_of([&] { map.canonicalize("Vaporwave"); }), Errc::UnknownStyleLabel);
  EXPECT_EQ(map.canonicalize("Analytical Cubism"), "Cubism");
  EXPECT_EQ(code_of([] { StyleMergeMap::from_json("[1,2]"); }), Errc::ParseError);
}

TEST(Load, RowCountMismatch) {
  // Payload of 5 rows against 4 metadata rows.
  const fs::path dir = testsupport::scratch_dir("mismatch");
  SyntheticSpec spec;
  spec.n = 5;
  spec.d = 3;
  const auto data = generate_synthetic(spec);
  write_dataset(data.dataset, dir, "ds");
  auto meta = data.dataset.meta();
  meta.pop_back();
  write_text(dir / "ds.meta.csv", meta_csv(meta));
  EXPECT_EQ(code_of([&] { load_dataset(dir / "ds.meta.csv", dir / "ds.bin"); }), Errc::DimensionMismatch);
}

TEST(Load, PayloadSizeDisagreesWithSidecar) {
  const fs::path dir = fixture_with_meta("short_payload", io::read_file(kFixtures / "three.meta.csv"));
  auto bytes = io::read_file(dir / "three.bin");
  bytes.resize(bytes.size() - 4);
  write_text(dir / "three.bin", bytes);
  EXPECT_EQ(code_of([&] { load_dataset(dir / "three.meta.csv", dir / "three.bin"); }), Errc::DimensionMismatch);
}

TEST(Load, NonFinitePayload) {
  const fs::path dir = fixture_with_meta("nan_payload", io::read_file(kFixtures / "three.meta.csv"));
  auto bytes = io::read_file(dir / "three.bin");
  const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int b = 0; b < 4; ++b) bytes[8 + b] = static_cast<char>((nan_bits >> (8 * b)) & 0xff);
  write_text(dir / "three.bin", bytes);
  EXPECT_EQ(code_of([&] { load_dataset(dir / "three.meta.csv", dir / "three.bin"); }), Errc::NonFiniteValue);
}

TEST(Load, MetadataValidation) {
  const std::string good_rows = "wa-0002,B,Baroque,1650,,,,,\nwa-0003,C,Baroque,1651,,,,,\n";
  auto expect = [&](const std::string& name, const std::string& first_row, Errc code) {
    const fs::path dir = fixture_with_meta(name, kHeader + first_row + good_rows);
    EXPECT_EQ(code_of([&] { load_dataset(dir / "three.meta.csv", dir / "three.bin"); }), code) << name;
  };
  expect("circa_year", "wa-0001,A,Baroque,c. 1650,,,,,\n", Errc::ParseError);
  expect("range_year", "wa-0001,A,Baroque,1650-1660,,,,,\n", Errc::ParseError);
  expect("early_year", "wa-0001,A,Baroque,999,,,,,\n", Errc::InvalidValue);
  expect("late_year", "wa-0001,A,Baroque,2101,,,,,\n", Errc::InvalidValue);
  expect("high_rating", "wa-0001,A,Baroque,1650,5.5,,,,\n", Errc::InvalidValue);
  expect("low_rating", "wa-0001,A,Baroque,1650,,0.5,,,\n", Errc::InvalidValue);
  expect("empty_id", ",A,Baroque,1650,,,,,\n", Errc::InvalidValue);
  expect("dup_id", "wa-0002,A,Baroque,1650,,,,,\n", Errc::DuplicateId);
  expect("unknown_id", "wa-9999,A,Baroque,1650,,,,,\n", Errc::IdMismatch);

  const fs::path bad_header = fixture_with_meta("bad_header", "id,artist,style,year\nwa-0001,A,B,1650\n");
  EXPECT_EQ(code_of([&] { load_dataset(bad_header / "three.meta.csv", bad_header / "three.bin"); }),
            Errc::ParseError);
}

TEST(Load, RowsFollowActivationOrder) {
  // Metadata in a different order than the ids file.
  const std::string text = io::read_file(kFixtures / "three.meta.csv");
  const auto rows = io::parse_csv(text);
  std::string shuffled = kHeader;
  for (int r : {3, 1, 2}) io::append_csv_row(shuffled, rows[static_cast<std::size_t>(r)]);
  const fs::path dir = fixture_with_meta("reordered", shuffled);
  const Dataset ds = load_dataset(dir / "three.meta.csv", dir / "three.bin");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(ds.meta()[i].id, ds.activations().ids[i]);
}

TEST(RoundTrip, WriteThenLoadIsBitExact) {
  SyntheticSpec spec;
  spec.n = 200;
  spec.d = 17;
  spec.noise_sigma = 0.3;
  spec.rating_noise = 0.4;
  spec.rated_fraction = 0.5;
  spec.seed = 99;
  const auto data = generate_synthetic(spec);
  const fs::path dir = testsupport::scratch_dir("roundtrip");
  write_dataset(data.dataset, dir, "rt");
  const Dataset back = load_dataset(dir / "rt.meta.csv", dir / "rt.bin");
  EXPECT_EQ(back.activations(), data.dataset.activations());
  ASSERT_EQ(back.meta().size(), data.dataset.meta().size());
  for (std::size_t i = 0; i < back.meta().size(); ++i) {
    const auto &a = back.meta()[i], &b = data.dataset.meta()[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.artist, b.artist);
    EXPECT_EQ(a.style, b.style);
    EXPECT_EQ(a.year, b.year);
    for (std::size_t c = 0; c < kConceptCount; ++c) EXPECT_EQ(a.wolfflin[c], b.wolfflin[c]);
  }
  // And a second write produces the same bytes.
  const auto first = serialize_dataset(data.dataset, "rt");
  const auto second = serialize_dataset(back, "rt");
  EXPECT_EQ(first, second);
}

TEST(RoundTrip, TrickyCsvFields) {
  std::vector<PaintingMeta> meta{testsupport::painting("a,1", "O'Neil \"Jr\"", "Naïve art-Primitivism", 1900),
                                 testsupport::painting("b;2", "Line\nBreak", "Pop-art", std::nullopt)};
  meta[0].wolfflin[4] = 1.0000000000000002;
  const Matrix x(2, 2, std::vector<double>{1, 2, 3, 4});
  const Dataset ds = testsupport::make_dataset(x, meta);
  const auto parsed = parse_meta_csv(meta_csv(ds.meta()));
  EXPECT_EQ(parsed[0].id, "a,1");
  EXPECT_EQ(parsed[0].artist, "O'Neil \"Jr\"");
  EXPECT_EQ(parsed[0].wolfflin[4], 1.0000000000000002);
  EXPECT_EQ(parsed[1].id, "b;2");
  EXPECT_EQ(parsed[1].artist, "Line\nBreak");
  EXPECT_EQ(parsed[1].style, "Pop-art");
}

TEST(Synthetic, NoiselessHasExactlyTwoNonzeroEigenvalues) {
  SyntheticSpec spec;
  spec.n = 400;
  spec.d = 30;
  const auto data = generate_synthetic(spec);
  const auto c = center(data.dataset.activations().values);
  const auto e = eig_sym(covariance(c.values));
  EXPECT_GT(e.eigenvalues[1], 0.1);
  for (std::size_t j = 2; j < e.eigenvalues.size(); ++j) EXPECT_LE(std::abs(e.eigenvalues[j]), 1e-10);
}

TEST(Synthetic, NoiselessRowsLieOnPlantedPlanePlusMean) {
  SyntheticSpec spec;
  spec.n = 100;
  spec.d = 12;
  const auto data = generate_synthetic(spec);
  const auto& gt = data.truth;
  const auto& x = data.dataset.activations().values;
  double worst = 0.0;
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t k = 0; k < spec.d; ++k) {
      const double planted = gt.mean[k] + gt.plane_coords(i, 0) * gt.basis(0, k) + gt.plane_coords(i, 1) * gt.basis(1, k);
      worst = std::max(worst, std::abs(x(i, k) - planted));
    }
  // Stored as f32, so "exact" means to single precision.
  EXPECT_LE(worst, 1e-6);
}

TEST(Synthetic, DeterministicForSeed) {
  SyntheticSpec spec;
  spec.n = 300;
  spec.noise_sigma = 0.1;
  spec.rating_noise = 0.3;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  EXPECT_EQ(a.dataset.activations(), b.dataset.activations());
  EXPECT_EQ(serialize_dataset(a.dataset, "x"), serialize_dataset(b.dataset, "x"));
  spec.seed = 43;
  const auto c = generate_synthetic(spec);
  EXPECT_FALSE(c.dataset.activations() == a.dataset.activations());
}

TEST(Synthetic, AngleTracksYear) {
  SyntheticSpec spec;
  spec.n = 2000;
  spec.d = 512;
  spec.noise_sigma = 0.05;
  const auto data = generate_synthetic(spec);
  const auto years = data.dataset.years();
  EXPECT_GE(static_cast<double>(oracle::pearson(data.truth.angle, years)), 0.98);
  for (std::size_t i = 0; i < spec.n; ++i) {
    EXPECT_GE(*data.dataset.meta()[i].year, spec.year_min);
    EXPECT_LE(*data.dataset.meta()[i].year, spec.year_max);
  }
}

TEST(Synthetic, StylesAreContiguousYearBuckets) {
  SyntheticSpec spec;
  spec.n = 500;
  const auto data = generate_synthetic(spec);
  std::map<std::string, std::pair<int, int>> range;
  for (const auto& m : data.dataset.meta()) {
    auto [it, fresh] = range.try_emplace(m.style, *m.year, *m.year);
    it->second.first = std::min(it->second.first, *m.year);
    it->second.second = std::max(it->second.second, *m.year);
  }
  EXPECT_EQ(range.size(), spec.style_buckets);
  std::vector<std::pair<int, int>> spans;
  for (const auto& [s, r] : range) spans.push_back(r);
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) EXPECT_LT(spans[i - 1].second, spans[i].first);
}

TEST(Synthetic, RatingsAreClampedAffineMaps) {
  SyntheticSpec spec;
  spec.n = 300;
  const auto data = generate_synthetic(spec);
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t c = 0; c < kConceptCount; ++c) {
      const auto& map = data.truth.ratings[c];
      const double expect = std::clamp(
          map.offset + map.coef[0] * data.truth.plane_coords(i, 0) + map.coef[1] * data.truth.plane_coords(i, 1), 1.0, 5.0);
      EXPECT_NEAR(*data.dataset.meta()[i].wolfflin[c], expect, 1e-12);
    }
}

TEST(Synthetic, InvalidSpecs) {
  SyntheticSpec s;
  s.planted_rank = 70;
  EXPECT_EQ(code_of([&] { generate_synthetic(s); }), Errc::InvalidSpec);
  s = {};
  s.year_min = s.year_max = 1500;
  EXPECT_EQ(code_of([&] { generate_synthetic(s); }), Errc::InvalidSpec);
  s = {};
  s.noise_sigma = -1;
  EXPECT_EQ(code_of([&] { generate_synthetic(s); }), Errc::InvalidSpec);
  EXPECT_EQ(code_of([] { synthetic_spec_from_json(nlohmann::json::parse(R"({"n": 10})")); }), Errc::InvalidSpec);
  const auto parsed = synthetic_spec_from_json(nlohmann::json::parse(
      R"({"n": 10, "d": 4, "year_range": [1500, 1600], "noise_sigma": 0.5, "seed": 7})"));
  EXPECT_EQ(parsed.year_min, 1500);
  EXPECT_EQ(parsed.seed, 7u);
  EXPECT_EQ(parsed.noise_sigma, 0.5);
}
