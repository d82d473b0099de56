#include <gtest/gtest.h>

#include <numeric>
#include <regex>
#include <set>

#include "support.hpp"

using namespace chronoscope;

namespace {

std::size_t count_of(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (std::size_t p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
  return n;
}

std::vector<std::string> circle_fills(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex re("<circle [^>]*fill=\"(#[0-9a-f]{6})\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1]);
  return out;
}

struct Tiny {
  Dataset ds;
  Embedding emb;
};

Tiny two_points() {
  std::vector<PaintingMeta> meta{testsupport::painting("a", "x", "Baroque", 1600),
                                 testsupport::painting("b", "y", "Cubism", 1910)};
  const Matrix x(2, 2, std::vector<double>{0, 0, 1, 2});
  Tiny t{testsupport::make_dataset(x, meta), {}};
  t.emb = testsupport::make_embedding(x, t.ds);
  return t;
}

}  // namespace

TEST(Plot, TwoPointsTwoCircles) {
  const Tiny t = two_points();
  for (ColorBy c : {ColorBy::year, ColorBy::style}) {
    const std::string svg = plot_scatter(t.emb, t.ds, c);
    EXPECT_EQ(count_of(svg, "<circle"), 2u);
    EXPECT_NE(svg.find("id=\"legend\""), std::string::npos);
    EXPECT_NE(svg.find("width=\"1000\" height=\"1000\""), std::string::npos);
    EXPECT_EQ(count_of(svg, "r=\"3\""), 2u);
    EXPECT_EQ(svg.find('\r'), std::string::npos);
  }
}

TEST(Plot, ByteIdenticalReruns) {
  SyntheticSpec spec;
  spec.n = 300;
  spec.d = 8;
  spec.noise_sigma = 0.1;
  const auto data = generate_synthetic(spec);
  const Embedding e = select_dims(ground_truth_embedding(data), {1, 2});
  EXPECT_EQ(plot_scatter(e, data.dataset, ColorBy::year), plot_scatter(e, data.dataset, ColorBy::year));
  EXPECT_EQ(plot_scatter(e, data.dataset, ColorBy::style), plot_scatter(e, data.dataset, ColorBy::style));
}

TEST(Plot, YearHueFollowsSpiralOrder) {
  SyntheticSpec spec;
  spec.n = 400;
  spec.d = 8;
  const auto data = generate_synthetic(spec);
  const Embedding e = select_dims(ground_truth_embedding(data), {1, 2});
  const auto fills = circle_fills(plot_scatter(e, data.dataset, ColorBy::year));
  ASSERT_EQ(fills.size(), 400u);
  const auto& grad = year_gradient();
  std::vector<std::size_t> stop(400);
  for (std::size_t i = 0; i < 400; ++i) {
    const auto it = std::find(grad.begin(), grad.end(), fills[i]);
    ASSERT_NE(it, grad.end()) << fills[i];
    stop[i] = static_cast<std::size_t>(it - grad.begin());
  }
  std::vector<std::size_t> order(400);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return data.truth.angle[a] < data.truth.angle[b]; });
  for (std::size_t r = 1; r < 400; ++r) EXPECT_LE(stop[order[r - 1]], stop[order[r]]);
  EXPECT_EQ(stop[order.front()], 0u);
  EXPECT_EQ(stop[order.back()], 255u);
}

TEST(Plot, GradientStopsDistinctAndEndpoints) {
  const auto& grad = year_gradient();
  EXPECT_EQ(std::set<std::string>(grad.begin(), grad.end()).size(), 256u);
  EXPECT_EQ(grad.front(), "#0000ff");
  EXPECT_EQ(grad.back(), "#ff0000");
}

TEST(Plot, PaletteFollowsCanonicalStyleOrder) {
  EXPECT_EQ(std::set<std::string>(kStylePalette.begin(), kStylePalette.end()).size(), 20u);
  for (std::size_t i = 0; i < kCanonicalStyles.size(); ++i) EXPECT_EQ(style_color(kCanonicalStyles[i]), kStylePalette[i]);
  EXPECT_EQ(style_color("Not A Style"), kMissingColor);
  for (auto c : kStylePalette) EXPECT_NE(std::string(c), kMissingColor);
}

TEST(Plot, LegendUsesNoCircles) {
  const Tiny t = two_points();
  for (ColorBy c : {ColorBy::year, ColorBy::style}) {
    const std::string svg = plot_scatter(t.emb, t.ds, c);
    const std::string legend = svg.substr(svg.find("id=\"legend\""));
    EXPECT_EQ(count_of(legend, "<circle"), 0u);
    EXPECT_GT(count_of(legend, "<rect"), 0u);
  }
  const std::string by_year = plot_scatter(t.emb, t.ds, ColorBy::year);
  EXPECT_EQ(count_of(by_year, "<rect x=\"780\""), 257u);
  const std::string by_style = plot_scatter(t.emb, t.ds, ColorBy::style);
  EXPECT_NE(by_style.find(">Baroque<"), std::string::npos);
  EXPECT_NE(by_style.find(">Cubism<"), std::string::npos);
}

TEST(Plot, MissingYearIsGrey) {
  std::vector<PaintingMeta> meta{testsupport::painting("a", "x", "Baroque", 1600),
                                 testsupport::painting("b", "y", "Cubism", std::nullopt),
                                 testsupport::painting("c", "y", "Cubism", 1700)};
  const Matrix x(3, 2, std::vector<double>{0, 0, 1, 2, 3, 1});
  const Dataset ds = testsupport::make_dataset(x, meta);
  const auto fills = circle_fills(plot_scatter(testsupport::make_embedding(x, ds), ds, ColorBy::year));
  EXPECT_EQ(fills, (std::vector<std::string>{"#0000ff", kMissingColor, "#ff0000"}));
}

TEST(Plot, PointsStayInsidePlotBox) {
  const Matrix c = testsupport::random_matrix(200, 2, 3, 50.0);
  std::vector<PaintingMeta> meta;
  for (int i = 0; i < 200; ++i) meta.push_back(testsupport::painting("p" + std::to_string(i), "a", "Baroque", 1500 + i));
  const Dataset ds = testsupport::make_dataset(c, meta);
  const std::string svg = plot_scatter(testsupport::make_embedding(c, ds), ds, ColorBy::year);
  const std::regex re("<circle cx=\"([0-9.]+)\" cy=\"([0-9.]+)\"");
  std::size_t n = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it, ++n) {
    const double x = std::stod((*it)[1]), y = std::stod((*it)[2]);
    EXPECT_GE(x, 50.0 - 1e-9);
    EXPECT_LE(x, 750.0 + 1e-9);
    EXPECT_GE(y, 50.0 - 1e-9);
    EXPECT_LE(y, 950.0 + 1e-9);
  }
  EXPECT_EQ(n, 200u);
}

TEST(Plot, Errors) {
  const Tiny t = two_points();
  Embedding same = t.emb;
  same.coords = Matrix(2, 2, std::vector<double>{1, 1, 1, 1});
  try {
    plot_scatter(same, t.ds, ColorBy::year);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateEmbedding);
  }
  Embedding three = t.emb;
  three.coords = Matrix(2, 3);
  try {
    plot_scatter(three, t.ds, ColorBy::year);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}
