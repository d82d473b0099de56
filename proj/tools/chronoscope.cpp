// chronoscope command-line front end. Every subcommand computes all of its
// outputs in memory first and only then commits them (plus manifest.json) to
// --out, so a failed run leaves nothing behind.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chronoscope/chronoscope.hpp"

namespace {

namespace fs = std::filesystem;
using namespace chronoscope;
using json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "0.1.0";

/// Bad flag value; the message starts with the flag name.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 42;
  std::string out;
  unsigned threads = 0;
};

/// Buffered outputs of one run plus what goes into its manifest.
class Run {
 public:
  Run(std::string command, const Globals& g) : command_(std::move(command)), globals_(g) {}

  json parameters = json::object();

  void input(const fs::path& p) { inputs_[p.lexically_normal().string()] = sha256_file(p); }
  void output(std::string name, std::string bytes) { outputs_.emplace_back(std::move(name), std::move(bytes)); }

  void commit(std::chrono::steady_clock::time_point start) const {
    const fs::path dir(globals_.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create output directory " + dir.string() + ": " + ec.message());
    json files = json::array();
    for (const auto& [name, bytes] : outputs_) {
      io::write_file_atomic(dir / name, bytes);
      files.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }
    json m;
    m["command"] = command_;
    m["parameters"] = parameters;
    m["inputs"] = inputs_;
    m["seed"] = globals_.seed;
    m["threads"] = globals_.threads;
    m["tool_version"] = kToolVersion;
    m["outputs"] = std::move(files);
    m["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    io::write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  Globals globals_;
  json inputs_ = json::object();
  std::vector<std::pair<std::string, std::string>> outputs_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Flags shared by subcommands that read a dataset.
struct DataFlags {
  std::string data;
  std::string meta;
  std::string merge_map;
  bool strict = false;

  void attach(CLI::App* sub, bool merge_flags = false) {
    sub->add_option("--data", data, "activation payload (.bin) or sidecar (.json)")->required();
    sub->add_option("--meta", meta, "metadata CSV (default: <stem>.meta.csv)");
    if (merge_flags) {
      sub->add_option("--merge-map", merge_map, "style merge map JSON");
      sub->add_flag("--strict", strict, "reject style labels missing from the merge map");
    }
  }

  Dataset load(Run& run) const {
    const fs::path meta_path = meta.empty() ? default_meta_path(data) : fs::path(meta);
    const auto paths = activation_paths(data);
    for (const auto& p : {meta_path, paths.sidecar, paths.payload})
      if (!fs::exists(p)) throw Error(Errc::IoError, "no such file: " + p.string());
    run.input(meta_path);
    run.input(paths.sidecar);
    run.input(paths.payload);
    std::optional<StyleMergeMap> map;
    if (!merge_map.empty()) {
      run.input(merge_map);
      map = StyleMergeMap::from_json(io::read_file(merge_map), strict);
    }
    Dataset ds = load_dataset(meta_path, data, map ? &*map : nullptr);
    run.parameters["data"] = data;
    run.parameters["meta"] = meta_path.string();
    return ds;
  }
};

/// Dataset fingerprint: hash of its canonical serialization.
std::string dataset_hash(const Dataset& ds) {
  std::string all;
  for (const auto& [name, bytes] : serialize_dataset(ds, "ds")) all += name + "\n" + bytes;
  return sha256_hex(all);
}

Embedding load_embedding(Run& run, const std::string& path) {
  if (!fs::exists(path)) throw Error(Errc::IoError, "no such file: " + path);
  run.input(path);
  if (fs::exists(provenance_path(path))) run.input(provenance_path(path));
  run.parameters["embedding"] = path;
  return read_embedding(path);
}

/// Parses "1,2" (1-based) into 0-based indices.
std::vector<std::size_t> parse_dims(const std::string& flag, const std::string& text) {
  std::vector<std::size_t> dims;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const auto v = io::parse_int(io::trim(std::string_view(text).substr(start, end - start)));
    if (!v || *v < 1) throw UsageError(flag + ": expected comma-separated positive integers, got '" + text + "'");
    dims.push_back(static_cast<std::size_t>(*v - 1));
    start = end + 1;
  }
  return dims;
}

Embedding pick_dims(const Embedding& e, const std::vector<std::size_t>& dims, const std::string& flag) {
  for (auto d : dims)
    if (d >= e.m())
      throw UsageError(flag + ": embedding has " + std::to_string(e.m()) + " dimensions, asked for " +
                       std::to_string(d + 1));
  return select_dims(e, dims);
}

void add_embedding_output(Run& run, const std::string& stem, const Embedding& e) {
  run.output(stem + ".csv", embedding_csv(e));
  run.output(stem + ".provenance.json", dump(e.provenance));
}

void require_positive(const std::string& flag, double v) {
  if (!(v > 0.0)) throw UsageError(flag + ": must be positive");
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string meta, activations, merge_map, stem = "ds";
  bool strict = false, no_merge = false;
};

void cmd_ingest(Run& run, const IngestArgs& a) {
  if (!a.merge_map.empty() && a.no_merge) throw UsageError("--no-merge: conflicts with --merge-map");
  const auto paths = activation_paths(a.activations);
  for (const auto& p : {fs::path(a.meta), paths.sidecar, paths.payload})
    if (!fs::exists(p)) throw Error(Errc::IoError, "no such file: " + p.string());
  run.input(a.meta);
  run.input(paths.sidecar);
  run.input(paths.payload);
  StyleMergeMap map = StyleMergeMap::reference();
  if (!a.merge_map.empty()) {
    run.input(a.merge_map);
    map = StyleMergeMap::from_json(io::read_file(a.merge_map), a.strict);
  }
  map.set_strict(a.strict);

  auto meta = parse_meta_csv(io::read_file(a.meta));
  std::map<std::string, std::size_t> raw_unknown;
  if (!a.no_merge)
    for (auto& m : meta) {
      if (!map.mapping().count(m.style)) ++raw_unknown[m.style];
      m.style = map.canonicalize(m.style);
    }
  Dataset ds(std::move(meta), read_activations(a.activations));

  json report;
  report["n"] = ds.activations().n();
  report["d"] = ds.activations().d();
  report["layer_tag"] = ds.activations().layer_tag;
  report["model_tag"] = ds.activations().model_tag;
  std::size_t no_year = 0, unrated = 0;
  std::map<std::string, std::size_t> styles;
  for (const auto& m : ds.meta()) {
    if (!m.year) ++no_year;
    if (!m.has_all_ratings()) ++unrated;
    ++styles[m.style];
  }
  report["missing_year"] = no_year;
  report["incomplete_ratings"] = unrated;
  report["styles"] = styles;
  report["unmapped_labels"] = raw_unknown;
  report["merge_map"] = a.no_merge ? "none" : (a.merge_map.empty() ? "reference" : a.merge_map);
  report["dataset_sha256"] = dataset_hash(ds);

  for (auto& [name, bytes] : serialize_dataset(ds, a.stem)) run.output(name, std::move(bytes));
  run.output("ingest_report.json", dump(report));
  run.parameters["meta"] = a.meta;
  run.parameters["activations"] = a.activations;
  run.parameters["merge_map"] = report["merge_map"];
  run.parameters["strict"] = a.strict;
  run.parameters["stem"] = a.stem;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string spec;
};

void cmd_synth(Run& run, const SynthArgs& a, const Globals& g) {
  SyntheticSpec spec;
  spec.seed = g.seed;
  if (!a.spec.empty()) {
    if (!fs::exists(a.spec)) throw Error(Errc::IoError, "no such file: " + a.spec);
    run.input(a.spec);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::read_file(a.spec));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::InvalidSpec, std::string("spec: ") + e.what());
    }
    if (!j.contains("seed")) j["seed"] = g.seed;
    spec = synthetic_spec_from_json(j);
  }
  validate(spec);
  const auto data = generate_synthetic(spec);
  for (auto& [name, bytes] : serialize_dataset(data.dataset, "ds")) run.output(name, std::move(bytes));
  json truth = to_json(data.truth);
  run.output("ground_truth.json", dump(truth));
  add_embedding_output(run, "emb", ground_truth_embedding(data));
  run.parameters["spec"] = to_json(spec);
}

// ---------------------------------------------------------------------------

struct PcaArgs {
  DataFlags data;
  std::size_t k = 2;
  double threshold = 0.95;
  bool no_orient = false;
};

void cmd_pca(Run& run, const PcaArgs& a) {
  if (a.k < 1) throw UsageError("--k: must be at least 1");
  if (!(a.threshold > 0.0 && a.threshold <= 1.0)) throw UsageError("--threshold: must lie in (0, 1]");
  Dataset ds = a.data.load(run);
  PcaModel model = fit_pca(ds.activations());
  if (a.k > model.k())
    throw UsageError("--k: data supports at most " + std::to_string(model.k()) + " components");
  const auto years = ds.years();
  if (!a.no_orient) model = orient_to_years(std::move(model), ds.activations().values, years);

  Embedding emb = project(model, ds.activations(), a.k);
  emb.provenance["dataset_sha256"] = dataset_hash(ds);
  emb.provenance["sign_rule"] = a.no_orient ? "largest-magnitude loading positive"
                                            : "non-negative correlation with year";

  const std::size_t sd = subspace_dim(model, a.threshold);
  std::string spectrum = "component,eigenvalue,fraction,cumulative\n";
  double cum = 0.0, total = 0.0;
  for (double v : model.eigenvalues) total += v;
  for (std::size_t j = 0; j < model.k(); ++j) {
    cum += model.eigenvalues[j];
    io::append_csv_row(spectrum, {std::to_string(j + 1), io::format_double(model.eigenvalues[j]),
                                  io::format_double(model.eigenvalues[j] / total), io::format_double(cum / total)});
  }
  json summary;
  summary["n"] = model.n_samples;
  summary["d"] = model.d();
  summary["rank"] = model.k();
  summary["threshold"] = a.threshold;
  summary["subspace_dim"] = sd;
  summary["retained_variance_2"] = retained_variance(model, std::min<std::size_t>(2, model.k()));
  summary["k"] = a.k;
  summary["dataset_sha256"] = dataset_hash(ds);

  run.output("pca_model.json", dump(to_json(model)));
  add_embedding_output(run, "embedding", emb);
  run.output("pca_spectrum.csv", spectrum);
  run.output("pca_summary.json", dump(summary));
  run.parameters["k"] = a.k;
  run.parameters["threshold"] = a.threshold;
  run.parameters["orient_to_years"] = !a.no_orient;
}

// ---------------------------------------------------------------------------

struct IcaArgs {
  DataFlags data;
  std::size_t k = 0;
  double threshold = 0.95;
  double tol = 1e-6;
  int max_iter = 500;
  std::size_t top = 10;
};

void cmd_ica(Run& run, const IcaArgs& a, const Globals& g) {
  require_positive("--tol", a.tol);
  if (a.max_iter < 1) throw UsageError("--max-iter: must be at least 1");
  if (a.top < 1) throw UsageError("--top: must be at least 1");
  if (!(a.threshold > 0.0 && a.threshold <= 1.0)) throw UsageError("--threshold: must lie in (0, 1]");
  Dataset ds = a.data.load(run);
  std::size_t k = a.k;
  if (k == 0) k = subspace_dim(fit_pca(ds.activations()), a.threshold);
  const IcaModel model = fit_ica(ds.activations().values, k, g.seed, {a.tol, a.max_iter});
  if (!model.converged)
    std::cerr << "chronoscope: warning: FastICA did not converge in " << a.max_iter
              << " iterations; returning the best iterate\n";
  const auto profiles = component_style_profile(model, ds, a.top);

  json mj = to_json(model);
  mj["dataset_sha256"] = dataset_hash(ds);
  mj["top_styles"] = json::array();
  for (const auto& p : profiles)
    mj["top_styles"].push_back({{"component", p.component + 1}, {"top_style", p.top_style}, {"degenerate", p.degenerate}});
  Embedding emb = ica_embedding(model, ds.activations());
  emb.provenance["dataset_sha256"] = dataset_hash(ds);

  run.output("ica_model.json", dump(mj));
  add_embedding_output(run, "ica_sources", emb);
  run.output("style_profile.csv", profile_csv(profiles));
  run.output("top_paintings.csv", top_paintings_csv(profiles));
  run.output("year_series.csv", year_series_csv(profiles));
  run.parameters["k"] = k;
  run.parameters["k_source"] = a.k == 0 ? "subspace_dim" : "flag";
  run.parameters["threshold"] = a.threshold;
  run.parameters["tol"] = a.tol;
  run.parameters["max_iter"] = a.max_iter;
  run.parameters["top"] = a.top;
}

// ---------------------------------------------------------------------------

struct LleArgs {
  DataFlags data;
  std::size_t k = 0;
  std::string regime;
  std::size_t m = 2;
  double reg = 1e-3;
  std::string method = "lle";
  std::string solver = "auto";
};

void cmd_lle(Run& run, const LleArgs& a, const Globals& g) {
  if (a.k != 0 && !a.regime.empty()) throw UsageError("--regime: conflicts with --k");
  LleOptions opts;
  if (!a.regime.empty()) {
    if (a.regime != "trend" && a.regime != "accent")
      throw UsageError("--regime: expected trend or accent, got '" + a.regime + "'");
    opts.k = regime_neighbors(a.regime);
  } else if (a.k != 0) {
    opts.k = a.k;
  }
  if (a.m < 1) throw UsageError("--m: must be at least 1");
  if (opts.k < a.m + 1) throw UsageError("--k: must be at least m+1");
  require_positive("--reg", a.reg);
  if (a.method == "lle")
    opts.method = ManifoldMethod::lle;
  else if (a.method == "laplacian")
    opts.method = ManifoldMethod::laplacian;
  else
    throw UsageError("--method: expected lle or laplacian, got '" + a.method + "'");
  if (a.solver == "auto")
    opts.solver = BottomSolver::automatic;
  else if (a.solver == "dense")
    opts.solver = BottomSolver::dense;
  else if (a.solver == "iterative")
    opts.solver = BottomSolver::iterative;
  else
    throw UsageError("--solver: expected auto, dense or iterative, got '" + a.solver + "'");
  opts.m = a.m;
  opts.reg = a.reg;
  opts.threads = g.threads;
  opts.seed = g.seed;

  Dataset ds = a.data.load(run);
  if (opts.k >= ds.activations().n())
    throw UsageError("--k: must be below the number of paintings (" + std::to_string(ds.activations().n()) + ")");
  const auto years = ds.years();
  const LleResult res = lle_embed(ds.activations().values, opts, years);

  json params = res.params;
  params["regime"] = a.regime.empty() ? "custom" : a.regime;
  params["dataset_sha256"] = dataset_hash(ds);
  Embedding emb = lle_embedding(res, ds.activations().ids);
  emb.provenance = params;
  add_embedding_output(run, "lle_embedding", emb);
  run.output("lle_weights.coo", weights_coo(res.weights));
  run.output("lle_params.json", dump(params));
  run.parameters["k"] = opts.k;
  run.parameters["regime"] = params["regime"];
  run.parameters["m"] = opts.m;
  run.parameters["reg"] = opts.reg;
  run.parameters["method"] = a.method;
  run.parameters["solver"] = a.solver;
}

// ---------------------------------------------------------------------------

struct CorrelateArgs {
  DataFlags data;
  std::string embedding;
};

void cmd_correlate(Run& run, const CorrelateArgs& a) {
  Dataset ds = a.data.load(run);
  const Embedding emb = load_embedding(run, a.embedding);
  CorrelationReport rep = correlation_report(emb, ds);
  rep.provenance["dataset_sha256"] = dataset_hash(ds);
  run.output("correlation.csv", correlation_csv(rep, false));
  run.output("correlation_abs.csv", correlation_csv(rep, true));
  run.output("correlation.json", dump(to_json(rep)));
}

// ---------------------------------------------------------------------------

struct PolarArgs {
  DataFlags data;
  std::string embedding;
  std::string dims = "1,2";
};

void cmd_polar(Run& run, const PolarArgs& a) {
  const auto dims = parse_dims("--dims", a.dims);
  if (dims.size() != 2) throw UsageError("--dims: polar analysis needs exactly two dimensions");
  Dataset ds = a.data.load(run);
  const Embedding full = load_embedding(run, a.embedding);
  const Embedding emb = pick_dims(full, dims, "--dims");
  const auto years = embedding_years(emb, ds);
  const PolarCoords pc = polar(emb);
  const AngularCorrelation ang = angular_time_correlation(pc, years);
  const ConvexCombination cc = convex_combination(emb, {0, 1}, years);

  std::string csv = "id,r,theta,theta_unwrapped,convex_axis\n";
  for (std::size_t i = 0; i < emb.n(); ++i) {
    double t = pc.theta[i] - ang.branch_cut;
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    io::append_csv_row(csv, {emb.ids[i], io::format_double(pc.r[i]), io::format_double(pc.theta[i]),
                             io::format_double(t), io::format_double(cc.axis[i])});
  }
  json j;
  j["dims"] = {dims[0] + 1, dims[1] + 1};
  j["center"] = {pc.center[0], pc.center[1]};
  j["angular"] = {{"pcc", ang.pcc},
                  {"branch_cut_radians", ang.branch_cut},
                  {"branch_cut_degrees", ang.branch_cut * 180.0 / std::numbers::pi},
                  {"count", ang.count},
                  {"scan", "1 degree steps over [0, 360)"}};
  j["convex_combination"] = {{"dim_pcc", {cc.dim_pcc[0], cc.dim_pcc[1]}},
                             {"weights", {cc.weights[0], cc.weights[1]}},
                             {"pcc", cc.pcc}};
  j["radial"] = {{"convex_combination_pcc", cc.pcc}, {"angular_pcc", ang.pcc}};
  j["embedding_provenance"] = emb.provenance;
  j["dataset_sha256"] = dataset_hash(ds);
  run.output("polar.csv", csv);
  run.output("polar.json", dump(j));
  run.parameters["dims"] = a.dims;
}

// ---------------------------------------------------------------------------

struct RepresentativesArgs {
  DataFlags data;
  std::string embedding, style;
  std::size_t q = 5;
};

void cmd_representatives(Run& run, const RepresentativesArgs& a) {
  if (a.q < 1) throw UsageError("--q: must be at least 1");
  Dataset ds = a.data.load(run);
  const Embedding emb = load_embedding(run, a.embedding);
  const Representatives rep = representatives(emb, ds, a.style, a.q);
  json j = to_json(rep);
  j["embedding_provenance"] = emb.provenance;
  j["dataset_sha256"] = dataset_hash(ds);
  run.output("representatives.csv", representatives_csv(rep));
  run.output("representatives.json", dump(j));
  run.parameters["style"] = a.style;
  run.parameters["q"] = a.q;
}

// ---------------------------------------------------------------------------

struct GraphArgs {
  DataFlags data;
  std::string embedding;
  std::size_t k = 10;
};

/// kNN graph over the embedding when given, else over the activations, in dataset row order.
KnnGraph build_graph(Run& run, const GraphArgs& a, const Dataset& ds, unsigned threads, json& source) {
  if (a.k < 1) throw UsageError("--k: must be at least 1");
  if (a.k >= ds.activations().n())
    throw UsageError("--k: must be below the number of paintings (" + std::to_string(ds.activations().n()) + ")");
  if (a.embedding.empty()) {
    source = {{"space", "activations"}};
    return knn_graph(ds.activations(), a.k, threads);
  }
  const Embedding emb = load_embedding(run, a.embedding);
  if (emb.n() != ds.activations().n())
    throw Error(Errc::IdMismatch, "embedding has " + std::to_string(emb.n()) + " rows, dataset " +
                                      std::to_string(ds.activations().n()));
  Matrix coords(emb.n(), emb.m());
  for (std::size_t i = 0; i < emb.n(); ++i) {
    const auto r = ds.index_of(emb.ids[i]);
    if (!r) throw Error(Errc::IdMismatch, "embedding id '" + emb.ids[i] + "' not in metadata");
    for (std::size_t j = 0; j < emb.m(); ++j) coords(*r, j) = emb.coords(i, j);
  }
  source = {{"space", "embedding"}, {"embedding_provenance", emb.provenance}};
  return knn_graph(coords, a.k, threads);
}

struct BridgesArgs {
  GraphArgs graph;
  std::string preset;
};

void cmd_bridges(Run& run, const BridgesArgs& a, const Globals& g) {
  if (!a.preset.empty() && a.preset != "renaissance-outliers")
    throw UsageError("--preset: expected renaissance-outliers, got '" + a.preset + "'");
  Dataset ds = a.graph.data.load(run);
  json source;
  const KnnGraph graph = build_graph(run, a.graph, ds, g.threads, source);
  auto scores = bridge_scores(graph, ds);
  std::size_t missing = 0;
  for (const auto& b : scores) missing += b.missing_year ? 1 : 0;
  if (a.preset == "renaissance-outliers") scores = renaissance_outliers(scores);

  json j;
  j["k"] = a.graph.k;
  j["graph"] = source;
  j["preset"] = a.preset.empty() ? "none" : a.preset;
  j["scoring"] = "min-max normalized neighbour-style entropy (nats) times min-max normalized median |year gap|";
  j["missing_year_count"] = missing;
  j["missing_year_note"] = "paintings without a year, or without dated neighbours, score 0";
  j["dataset_sha256"] = dataset_hash(ds);
  j["count"] = scores.size();
  run.output("bridges.csv", bridges_csv(scores));
  run.output("bridges.json", dump(j));
  run.parameters["k"] = a.graph.k;
  run.parameters["preset"] = j["preset"];
}

struct SmoothnessArgs {
  GraphArgs graph;
  std::size_t permutations = 100;
};

void cmd_smoothness(Run& run, const SmoothnessArgs& a, const Globals& g) {
  if (a.permutations < 1) throw UsageError("--permutations: must be at least 1");
  Dataset ds = a.graph.data.load(run);
  json source;
  const KnnGraph graph = build_graph(run, a.graph, ds, g.threads, source);
  json j = to_json(temporal_smoothness(graph, ds, g.seed, a.permutations));
  j["k"] = a.graph.k;
  j["graph"] = source;
  j["dataset_sha256"] = dataset_hash(ds);
  run.output("smoothness.json", dump(j));
  run.parameters["k"] = a.graph.k;
  run.parameters["permutations"] = a.permutations;
}

// ---------------------------------------------------------------------------

struct SubspaceArgs {
  std::vector<std::string> sets;
  double threshold = 0.95;
};

void cmd_subspace(Run& run, const SubspaceArgs& a) {
  if (a.sets.empty()) throw UsageError("--set: at least one label=path pair is required");
  if (!(a.threshold > 0.0 && a.threshold <= 1.0)) throw UsageError("--threshold: must lie in (0, 1]");
  std::vector<std::pair<std::string, ActivationSet>> sets;
  json listed = json::array();
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
      throw UsageError("--set: expected label=path, got '" + s + "'");
    const std::string label = s.substr(0, eq), path = s.substr(eq + 1);
    const auto paths = activation_paths(path);
    for (const auto& p : {paths.sidecar, paths.payload})
      if (!fs::exists(p)) throw Error(Errc::IoError, "no such file: " + p.string());
    run.input(paths.sidecar);
    run.input(paths.payload);
    sets.emplace_back(label, read_activations(path));
    listed.push_back({{"label", label}, {"path", path}});
  }
  const auto rows = subspace_report(sets, a.threshold);
  json j = json::array();
  for (const auto& r : rows)
    j.push_back({{"label", r.label}, {"n", r.n}, {"d", r.d}, {"subspace_dim", r.subspace_dim},
                 {"retained_variance_2", r.retained_variance_2}});
  run.output("subspace_report.csv", subspace_csv(rows));
  run.output("subspace_report.json", dump({{"threshold", a.threshold}, {"rows", j}}));
  run.parameters["sets"] = listed;
  run.parameters["threshold"] = a.threshold;
}

// ---------------------------------------------------------------------------

struct PlotArgs {
  DataFlags data;
  std::string embedding;
  std::string color_by = "year";
  std::string dims = "1,2";
  std::string name = "plot.svg";
};

void cmd_plot(Run& run, const PlotArgs& a) {
  ColorBy color;
  if (a.color_by == "year")
    color = ColorBy::year;
  else if (a.color_by == "style")
    color = ColorBy::style;
  else
    throw UsageError("--color-by: expected year or style, got '" + a.color_by + "'");
  const auto dims = parse_dims("--dims", a.dims);
  if (dims.size() != 2) throw UsageError("--dims: scatter plots need exactly two dimensions");
  if (a.name.empty() || a.name.find('/') != std::string::npos || a.name == "manifest.json")
    throw UsageError("--name: must be a plain file name");
  Dataset ds = a.data.load(run);
  const Embedding emb = pick_dims(load_embedding(run, a.embedding), dims, "--dims");
  run.output(a.name, plot_scatter(emb, ds, color));
  run.parameters["color_by"] = a.color_by;
  run.parameters["dims"] = a.dims;
  run.parameters["name"] = a.name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chronoscope: activation-space analysis of paintings"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "random seed (default 42)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads, 0 = auto (results do not depend on it)");

  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  IngestArgs ingest;
  auto* s_ingest = sub("ingest", "validate metadata and activations, canonicalize styles, write a dataset bundle");
  s_ingest->add_option("--meta", ingest.meta, "metadata CSV")->required();
  s_ingest->add_option("--activations", ingest.activations, "activation payload or sidecar")->required();
  s_ingest->add_option("--merge-map", ingest.merge_map, "style merge map JSON (default: built-in reference map)");
  s_ingest->add_flag("--no-merge", ingest.no_merge, "keep raw style labels");
  s_ingest->add_flag("--strict", ingest.strict, "reject labels the merge map does not declare");
  s_ingest->add_option("--name", ingest.stem, "output file stem (default ds)");

  SynthArgs synth;
  auto* s_synth = sub("synth", "generate a synthetic dataset with planted structure");
  s_synth->add_option("--spec", synth.spec, "SyntheticSpec JSON (default: built-in spec)");

  PcaArgs pca;
  auto* s_pca = sub("pca", "principal components, spectrum and scores");
  pca.data.attach(s_pca);
  s_pca->add_option("--k", pca.k, "number of score columns (default 2)");
  s_pca->add_option("--threshold", pca.threshold, "variance fraction for subspace_dim (default 0.95)");
  s_pca->add_flag("--no-orient", pca.no_orient, "do not flip components to correlate positively with year");

  IcaArgs ica;
  auto* s_ica = sub("ica", "FastICA on the leading principal subspace");
  ica.data.attach(s_ica);
  s_ica->add_option("--k", ica.k, "components (default: subspace_dim at --threshold)");
  s_ica->add_option("--threshold", ica.threshold, "variance fraction for the default k (default 0.95)");
  s_ica->add_option("--tol", ica.tol, "convergence tolerance (default 1e-6)");
  s_ica->add_option("--max-iter", ica.max_iter, "iteration cap (default 500)");
  s_ica->add_option("--top", ica.top, "top paintings per component (default 10)");

  LleArgs lle;
  auto* s_lle = sub("lle", "locally linear embedding (or Laplacian eigenmaps)");
  lle.data.attach(s_lle);
  s_lle->add_option("--k", lle.k, "neighbours (default 100)");
  s_lle->add_option("--regime", lle.regime, "trend (k=100) or accent (k=25)");
  s_lle->add_option("--m", lle.m, "embedding dimensions (default 2)");
  s_lle->add_option("--reg", lle.reg, "regularization (default 1e-3)");
  s_lle->add_option("--method", lle.method, "lle or laplacian (default lle)");
  s_lle->add_option("--solver", lle.solver, "auto, dense or iterative (default auto)");

  CorrelateArgs corr;
  auto* s_corr = sub("correlate", "PCC of embedding dimensions with year and the five concept ratings");
  corr.data.attach(s_corr);
  s_corr->add_option("--embedding", corr.embedding, "embedding CSV")->required();

  PolarArgs pol;
  auto* s_pol = sub("polar", "polar coordinates, angular and convex-combination time correlation");
  pol.data.attach(s_pol);
  s_pol->add_option("--embedding", pol.embedding, "embedding CSV")->required();
  s_pol->add_option("--dims", pol.dims, "two 1-based dimensions (default 1,2)");

  RepresentativesArgs rep;
  auto* s_rep = sub("representatives", "artists most extreme along a style axis");
  rep.data.attach(s_rep);
  s_rep->add_option("--embedding", rep.embedding, "embedding CSV")->required();
  s_rep->add_option("--style", rep.style, "style label")->required();
  s_rep->add_option("--q", rep.q, "extremities averaged per artist (default 5)");

  BridgesArgs bridges;
  auto* s_bridges = sub("bridges", "cross-style, cross-period bridge scores");
  bridges.graph.data.attach(s_bridges);
  s_bridges->add_option("--embedding", bridges.graph.embedding, "build the graph in this embedding");
  s_bridges->add_option("--k", bridges.graph.k, "neighbours (default 10)");
  s_bridges->add_option("--preset", bridges.preset, "renaissance-outliers");

  SmoothnessArgs smooth;
  auto* s_smooth = sub("smoothness", "neighbour year gaps against a permutation baseline");
  smooth.graph.data.attach(s_smooth);
  s_smooth->add_option("--embedding", smooth.graph.embedding, "build the graph in this embedding");
  s_smooth->add_option("--k", smooth.graph.k, "neighbours (default 10)");
  s_smooth->add_option("--permutations", smooth.permutations, "baseline permutations (default 100)");

  SubspaceArgs subspace;
  auto* s_sub = sub("subspace-report", "node count, 95% subspace dimension and 2-PC variance per activation set");
  s_sub->add_option("--set", subspace.sets, "label=path (repeatable)")->required();
  s_sub->add_option("--threshold", subspace.threshold, "variance fraction (default 0.95)");

  PlotArgs plot;
  auto* s_plot = sub("plot", "deterministic SVG scatter of a 2-D embedding");
  plot.data.attach(s_plot);
  s_plot->add_option("--embedding", plot.embedding, "embedding CSV")->required();
  s_plot->add_option("--color-by", plot.color_by, "year or style (default year)");
  s_plot->add_option("--dims", plot.dims, "two 1-based dimensions (default 1,2)");
  s_plot->add_option("--name", plot.name, "output file name (default plot.svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "chronoscope: usage error: " << e.what() << "\n";
    return 1;
  }

  const auto start = std::chrono::steady_clock::now();
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (g.out.empty()) throw UsageError("--out: an output directory is required");
    Run run(command, g);
    if (command == "ingest") cmd_ingest(run, ingest);
    else if (command == "synth") cmd_synth(run, synth, g);
    else if (command == "pca") cmd_pca(run, pca);
    else if (command == "ica") cmd_ica(run, ica, g);
    else if (command == "lle") cmd_lle(run, lle, g);
    else if (command == "correlate") cmd_correlate(run, corr);
    else if (command == "polar") cmd_polar(run, pol);
    else if (command == "representatives") cmd_representatives(run, rep);
    else if (command == "bridges") cmd_bridges(run, bridges, g);
    else if (command == "smoothness") cmd_smoothness(run, smooth, g);
    else if (command == "subspace-report") cmd_subspace(run, subspace);
    else if (command == "plot") cmd_plot(run, plot);
    run.commit(start);
  } catch (const UsageError& e) {
    std::cerr << "chronoscope " << command << ": usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "chronoscope " << command << ": " << (e.numerical() ? "numerical failure: " : "error: ")
              << e.what() << "\n";
    return e.numerical() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "chronoscope " << command << ": error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
