#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sys/wait.h>

#include "support.hpp"

using namespace chronoscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string err;
};

/// Runs the CLI with `args`, capturing stderr.
Outcome cli(const std::string& args, const fs::path& scratch) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + CHRONOSCOPE_CLI + "\" " + args + " 2> \"" + err.string() + "\" > /dev/null";
  const int raw = std::system(cmd.c_str());
  Outcome o;
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  o.err = fs::exists(err) ? io::read_file(err) : "";
  return o;
}

std::string shell_sha256(const fs::path& file) {
  const std::string cmd = "sha256sum \"" + file.string() + "\"";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {};
  char buf[256] = {};
  std::string out;
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  pclose(pipe);
  return out.substr(0, out.find(' '));
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(io::read_file(p)); }

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = io::read_file(e.path());
  return out;
}

/// Synthetic bundle written by the CLI itself.
fs::path synth_bundle(const fs::path& scratch, const std::string& spec_json) {
  const fs::path spec = scratch / "spec.json";
  io::write_file_atomic(spec, spec_json);
  const fs::path out = scratch / "synth";
  const Outcome o = cli("synth --spec \"" + spec.string() + "\" --out \"" + out.string() + "\"", scratch);
  EXPECT_EQ(o.status, 0) << o.err;
  return out;
}

const char* kSmallSpec = R"({"n": 300, "d": 24, "noise_sigma": 0.05, "rating_noise": 0.3})";

}  // namespace

TEST(Cli, PcaWritesModelEmbeddingAndManifest) {
  const fs::path s = testsupport::scratch_dir("cli_pca");
  const fs::path data = synth_bundle(s, kSmallSpec) / "ds.bin";
  const fs::path out = s / "pca";
  const Outcome o = cli("pca --data \"" + data.string() + "\" --out \"" + out.string() + "\" --k 2", s);
  ASSERT_EQ(o.status, 0) << o.err;
  for (const char* f : {"pca_model.json", "embedding.csv", "manifest.json"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto m = read_json(out / "manifest.json");
  EXPECT_EQ(m["command"], "pca");
  EXPECT_EQ(m["seed"], 42);
  EXPECT_EQ(m["parameters"]["k"], 2);
  EXPECT_TRUE(m.contains("tool_version"));
  EXPECT_TRUE(m["wall_clock_seconds"].is_number());
  ASSERT_FALSE(m["inputs"].empty());
  for (const auto& [path, hash] : m["inputs"].items()) EXPECT_EQ(hash, shell_sha256(path)) << path;
  std::set<std::string> listed;
  for (const auto& f : m["outputs"]) {
    listed.insert(f["file"].get<std::string>());
    EXPECT_EQ(f["sha256"], shell_sha256(out / f["file"].get<std::string>()));
    EXPECT_EQ(f["bytes"].get<std::uintmax_t>(), fs::file_size(out / f["file"].get<std::string>()));
  }
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.path().filename() == "manifest.json") continue;
    EXPECT_TRUE(listed.count(e.path().filename().string())) << e.path();
  }
  const std::string csv = io::read_file(out / "embedding.csv");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(Cli, SynthManifestHashesVerify) {
  const fs::path s = testsupport::scratch_dir("cli_synth");
  const fs::path out = synth_bundle(s, kSmallSpec);
  const auto m = read_json(out / "manifest.json");
  EXPECT_EQ(m["command"], "synth");
  for (const auto& f : m["outputs"]) EXPECT_EQ(f["sha256"], shell_sha256(out / f["file"].get<std::string>()));
  for (const char* f : {"ds.bin", "ds.json", "ds.ids.txt", "ds.meta.csv", "ground_truth.json", "emb.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
}

TEST(Cli, SynthThenCorrelateRecoversRatings) {
  const fs::path s = testsupport::scratch_dir("cli_corr");
  const fs::path bundle = synth_bundle(s, kSmallSpec);
  const fs::path out = s / "corr";
  const Outcome o = cli("correlate --data \"" + (bundle / "ds.bin").string() + "\" --embedding \"" +
                            (bundle / "emb.csv").string() + "\" --out \"" + out.string() + "\"",
                        s);
  ASSERT_EQ(o.status, 0) << o.err;
  const auto j = read_json(out / "correlation.json");
  // Planted angle against year.
  EXPECT_GE(j["abs_pcc"][0][0].get<double>(), 0.98);
  for (std::size_t c = 0; c < kConceptCount; ++c) {
    double best = 0;
    for (std::size_t d = 1; d < 3; ++d) best = std::max(best, j["abs_pcc"][d][1 + c].get<double>());
    EXPECT_GE(best, 0.8) << c;
  }
}

TEST(Cli, AccentRegimeRecordsK25) {
  const fs::path s = testsupport::scratch_dir("cli_lle");
  const fs::path bundle = synth_bundle(s, kSmallSpec);
  const fs::path out = s / "lle";
  const Outcome o = cli("lle --data \"" + (bundle / "ds.bin").string() + "\" --regime accent --out \"" + out.string() + "\"", s);
  ASSERT_EQ(o.status, 0) << o.err;
  const auto p = read_json(out / "lle_params.json");
  EXPECT_EQ(p["k"], 25);
  EXPECT_EQ(p["regime"], "accent");
  EXPECT_TRUE(fs::exists(out / "lle_embedding.csv"));
  EXPECT_TRUE(fs::exists(out / "lle_weights.coo"));
}

TEST(Cli, UsageErrorNamesFlagAndWritesNothing) {
  const fs::path s = testsupport::scratch_dir("cli_usage");
  const fs::path bundle = synth_bundle(s, kSmallSpec);
  const fs::path out = s / "never";
  Outcome o = cli("pca --data \"" + (bundle / "ds.bin").string() + "\" --k banana --out \"" + out.string() + "\"", s);
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.err.find("--k"), std::string::npos) << o.err;
  EXPECT_FALSE(fs::exists(out));
  o = cli("pca --data \"" + (bundle / "ds.bin").string() + "\" --out \"" + out.string() + "\" --frobnicate", s);
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.err.find("--frobnicate"), std::string::npos) << o.err;
  EXPECT_FALSE(fs::exists(out));
  o = cli("pca --data \"" + (bundle / "ds.bin").string() + "\"", s);
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.err.find("--out"), std::string::npos) << o.err;
  o = cli("representatives --data \"" + (bundle / "ds.bin").string() + "\" --embedding \"" +
              (bundle / "emb.csv").string() + "\" --style \"No Such Style\" --out \"" + out.string() + "\"",
          s);
  EXPECT_EQ(o.status, 1);
  EXPECT_FALSE(fs::exists(out));
  o = cli("ingest --meta /nonexistent.csv --activations /nonexistent.bin --out \"" + out.string() + "\"", s);
  EXPECT_EQ(o.status, 1);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, DisconnectedGraphExitsTwoWithoutOutputs) {
  const fs::path s = testsupport::scratch_dir("cli_disc");
  Matrix x(40, 3);
  std::vector<PaintingMeta> meta;
  const Matrix noise = testsupport::random_matrix(40, 3, 1, 0.1);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = noise(i, j) + (i < 20 ? 0.0 : 500.0);
    meta.push_back(testsupport::painting("d" + std::to_string(i), "a", "Baroque", 1600 + static_cast<int>(i)));
  }
  write_dataset(testsupport::make_dataset(x, meta), s / "two");
  const fs::path out = s / "lle";
  const Outcome o = cli("lle --data \"" + (s / "two" / "ds.bin").string() + "\" --k 5 --out \"" + out.string() + "\"", s);
  EXPECT_EQ(o.status, 2);
  EXPECT_NE(o.err.find("DisconnectedGraph"), std::string::npos) << o.err;
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, IngestFixture) {
  const fs::path s = testsupport::scratch_dir("cli_ingest");
  const fs::path fx = CHRONOSCOPE_FIXTURES;
  const fs::path out = s / "ing";
  const Outcome o = cli("ingest --meta \"" + (fx / "three.meta.csv").string() + "\" --activations \"" +
                            (fx / "three.bin").string() + "\" --out \"" + out.string() + "\"",
                        s);
  ASSERT_EQ(o.status, 0) << o.err;
  const Dataset ds = load_dataset(out / "ds.meta.csv", out / "ds.bin");
  EXPECT_EQ(ds.n(), 3u);
  EXPECT_EQ(ds.meta()[0].style, "Cubism");
  EXPECT_FALSE(ds.meta()[2].year.has_value());
  const auto rep = read_json(out / "ingest_report.json");
  EXPECT_EQ(rep["missing_year"], 1);
}

TEST(Cli, ThreadCountDoesNotChangeOutputs) {
  const fs::path s = testsupport::scratch_dir("cli_threads");
  const fs::path data = synth_bundle(s, kSmallSpec) / "ds.bin";
  const std::vector<std::string> commands = {
      "lle --k 12", "bridges --k 8", "smoothness --k 8", "pca --k 2", "ica --k 2"};
  for (const auto& c : commands) {
    std::map<std::string, std::string> results[2];
    int r = 0;
    for (const char* t : {"1", "4"}) {
      const fs::path out = s / ("t" + std::to_string(r));
      fs::remove_all(out);
      const Outcome o = cli(c + " --data \"" + data.string() + "\" --threads " + t + " --out \"" + out.string() + "\"", s);
      ASSERT_EQ(o.status, 0) << c << o.err;
      results[r] = dir_bytes(out);
      results[r].erase("manifest.json");
      ++r;
    }
    EXPECT_EQ(results[0], results[1]) << c;
  }
}

TEST(Cli, InputsAreNotMutated) {
  const fs::path s = testsupport::scratch_dir("cli_inputs");
  const fs::path bundle = synth_bundle(s, kSmallSpec);
  const auto before = dir_bytes(bundle);
  const std::string data = "--data \"" + (bundle / "ds.bin").string() + "\"";
  const std::string emb = "--embedding \"" + (bundle / "emb.csv").string() + "\"";
  const fs::path out = s / "o";
  for (const std::string& c : {"pca " + data, "correlate " + data + " " + emb, "plot " + data + " --dims 2,3 " + emb,
                               "polar " + data + " --dims 2,3 " + emb, "smoothness " + data}) {
    fs::remove_all(out);
    const Outcome o = cli(c + " --out \"" + out.string() + "\"", s);
    EXPECT_EQ(o.status, 0) << c << o.err;
  }
  EXPECT_EQ(before, dir_bytes(bundle));
}

TEST(Cli, GlobalFlagsMayFollowSubcommand) {
  const fs::path s = testsupport::scratch_dir("cli_flags");
  const fs::path spec = s / "spec.json";
  io::write_file_atomic(spec, kSmallSpec);
  const Outcome a = cli("--seed 7 synth --spec \"" + spec.string() + "\" --out \"" + (s / "a").string() + "\"", s);
  const Outcome b = cli("synth --spec \"" + spec.string() + "\" --out \"" + (s / "b").string() + "\" --seed 7", s);
  ASSERT_EQ(a.status, 0) << a.err;
  ASSERT_EQ(b.status, 0) << b.err;
  EXPECT_EQ(io::read_file(s / "a" / "ds.bin"), io::read_file(s / "b" / "ds.bin"));
  EXPECT_EQ(read_json(s / "a" / "manifest.json")["seed"], 7);
}
