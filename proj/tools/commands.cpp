#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tvar/analysis.hpp"
#include "tvar/community.hpp"
#include "tvar/error.hpp"
#include "tvar/graph_export.hpp"
#include "tvar/ingest.hpp"
#include "tvar/model.hpp"
#include "tvar/posterior.hpp"
#include "tvar/preprocess.hpp"
#include "tvar/sampler.hpp"

namespace tvar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A failure tagged with the pipeline stage it came from.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what, int code)
      : std::runtime_error(stage + " stage: " + what), exit_code(code) {}
  int exit_code;
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    throw StageError(name, e.what(), kNumerical);
  } catch (const Error& e) {
    throw StageError(name, e.what(), kUsage);
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// config files

void flatten_json(const json& j, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it->is_object()) {
      parents.push_back(it.key());
      flatten_json(*it, parents, out);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = it.key();
    auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (it->is_array()) {
      for (const auto& v : *it) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(*it));
    }
    out.push_back(std::move(item));
  }
}

std::vector<CLI::ConfigItem> read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<CLI::ConfigItem> items;
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw InputError("config " + path + ": " + e.what());
    }
    std::vector<std::string> parents;
    flatten_json(j, parents, items);
  } else {
    std::istringstream s(text);
    items = CLI::ConfigTOML().from_config(s);
  }
  return items;
}

// Values from the file fill every option not given on the command line.
// Keys may be top level or inside a section named after the subcommand.
void apply_config(CLI::App* sub, const std::string& path) {
  for (const auto& item : read_config(path)) {
    if (item.name == "++" || item.name == "--") continue;  // TOML section markers
    if (!item.parents.empty() && item.parents.front() != sub->get_name()) continue;
    if (item.parents.size() > 1) throw InputError("config " + path + ": nested key " + item.fullname());
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (!opt) throw InputError("config " + path + ": unknown key '" + item.name + "' for " + sub->get_name());
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw InputError("config " + path + ": key '" + item.name + "': " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// manifest

class Manifest {
 public:
  explicit Manifest(std::string command) { j_["command"] = std::move(command); }

  void record_options(const CLI::App* sub) {
    json cfg = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      if (opt->get_expected_min() == 0) {
        cfg[name] = opt->count() > 0 && opt->as<bool>();
        continue;
      }
      if (opt->count() > 0) {
        const auto& r = opt->results();
        cfg[name] = r.size() == 1 ? json(r.front()) : json(r);
      } else {
        cfg[name] = opt->get_default_str();
      }
    }
    j_["config"] = std::move(cfg);
  }
  void set(const std::string& key, json value) { j_[key] = std::move(value); }
  void add_input(const std::string& path) {
    j_["inputs"][path] = {{"fnv1a64", file_digest(path)}, {"bytes", fs::file_size(path)}};
  }
  void add_output(const std::string& name) { j_["outputs"].push_back(name); }
  void write(const fs::path& dir) {
    j_["version"] = TVAR_VERSION;
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << j_.dump(2) << '\n';
    if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
  }

 private:
  json j_;
};

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw InputError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw InputError("cannot create output directory " + out);
  return out;
}

std::ofstream open_out(const fs::path& dir, const std::string& name, Manifest& m) {
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw InputError("cannot write " + (dir / name).string());
  m.add_output(name);
  return f;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InputError(std::string(flag) + " is required (flag or config key)");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

int resolve_threads(int threads) {
  return threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------
// shared option groups

struct GibbsOptions {
  GibbsConfig config;
  void add(CLI::App* sub, int draws, int burnin) {
    config.n_draws = draws;
    config.n_burnin = burnin;
    sub->add_option("--draws", config.n_draws, "Retained posterior draws")->capture_default_str();
    sub->add_option("--burnin", config.n_burnin, "Burn-in iterations")->capture_default_str();
    sub->add_option("--thin", config.thin, "Keep every n-th draw")->capture_default_str();
    sub->add_option("--seed", config.seed, "Master random seed")->capture_default_str();
    sub->add_option("--prior-z-variance", config.prior_z_variance, "Prior variance of Z entries")
        ->capture_default_str();
    sub->add_option("--prior-iw-df", config.prior_iw_df, "Inverse-Wishart prior degrees of freedom")
        ->capture_default_str();
    sub->add_option("--prior-iw-scale", config.prior_iw_scale, "Inverse-Wishart prior scale (times I)")
        ->capture_default_str();
  }
};

struct Common {
  std::string config;
  std::string out;
  void add(CLI::App* sub) {
    sub->add_option("--config", config, "JSON or TOML file with option values; flags take precedence");
    sub->add_option("--out", out, "Output directory");
  }
};

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
  Common common;
  std::string input, reclass, start, end, districts, categories;
  ColumnMapping columns;
  bool binary = false;
};

void cmd_ingest(IngestArgs& a, CLI::App* sub) {
  require(a.input, "--input");
  const fs::path out = prepare_out(a.common.out);
  Manifest m("ingest");
  m.record_options(sub);
  m.add_input(a.input);

  const ReclassTable table = a.reclass.empty() ? ReclassTable::builtin() : ReclassTable::from_csv_file(a.reclass);
  if (!a.reclass.empty()) m.add_input(a.reclass);

  IngestReport report;
  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw InputError("cannot open " + a.input);
  const auto records = stage("read", [&] { return read_incidents(in, a.columns, report); });

  AggregateOptions opts;
  if (!a.start.empty()) opts.window_start = YearMonth::parse(a.start);
  if (!a.end.empty()) opts.window_end = YearMonth::parse(a.end);
  opts.fixed_districts = split(a.districts, ',');
  opts.declared_categories = split(a.categories, ',');
  const CountTensor tensor = stage("aggregate", [&] { return aggregate(records, table, opts, report); });

  {
    auto f = open_out(out, "tensor.json", m);
    write_tensor_json(tensor, f);
  }
  if (a.binary) {
    auto f = open_out(out, "tensor.bin", m);
    write_tensor_binary(tensor, f);
  }
  json r{{"rows_read", report.rows_read},
         {"records_kept", report.records_kept},
         {"out_of_window", report.out_of_window},
         {"missing_district", report.missing_district},
         {"duplicate_rows", report.duplicate_rows},
         {"unmapped_miscellaneous", report.reclass.unmapped_miscellaneous},
         {"unmapped_iucr", report.reclass.unmapped_iucr},
         {"K", tensor.K},
         {"Q", tensor.Q},
         {"T", tensor.T},
         {"start", tensor.start.str()},
         {"total_count", tensor.total()}};
  {
    auto f = open_out(out, "ingest_report.json", m);
    f << r.dump(2) << '\n';
  }
  m.write(out);
  std::cout << "ingest: K=" << tensor.K << " Q=" << tensor.Q << " T=" << tensor.T << " from " << tensor.start.str()
            << ", " << report.records_kept << " records kept, " << report.reclass.unmapped_miscellaneous
            << " unmapped miscellaneous\n";
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
  Common common;
  std::string tensor;
};

void cmd_preprocess(PreprocessArgs& a, CLI::App* sub) {
  require(a.tensor, "--tensor");
  const fs::path out = prepare_out(a.common.out);
  Manifest m("preprocess");
  m.record_options(sub);
  m.add_input(a.tensor);
  const CountTensor tensor = stage("load", [&] { return load_tensor(a.tensor); });
  const AdjustedTensor adj = stage("preprocess", [&] { return fit_adjust(log1p_transform(tensor)); });
  const ResidualDiagnostics diag = stage("diagnostics", [&] { return diagnostics(adj); });
  {
    auto f = open_out(out, "trend_models.csv", m);
    write_trend_csv(adj, f);
  }
  {
    auto f = open_out(out, "diagnostics.csv", m);
    write_diagnostics_csv(diag, adj.category_labels, adj.district_labels, f);
  }
  m.write(out);
  std::cout << "preprocess: " << adj.K() * adj.Q() << " series over " << adj.T() << " months\n";
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  Common common;
  GibbsOptions gibbs;
  std::string tensor, centroids;
  long ra = 11, rb = 5;
  std::uint64_t community_seed = 2019;
};

void write_network_outputs(const fs::path& out, const std::string& prefix, const PartialCorrelationNetwork& net,
                           std::uint64_t seed, Manifest& m, json& summary) {
  const CommunityAssignment comm = detect_communities(net, seed);
  {
    auto f = open_out(out, prefix + "_network.csv", m);
    write_network_csv(net, f);
  }
  {
    auto f = open_out(out, prefix + "_communities.csv", m);
    write_communities_csv(comm, net.nodes, f);
  }
  {
    auto f = open_out(out, prefix + "_graph.graphml", m);
    write_graphml(net, comm, f);
  }
  {
    auto f = open_out(out, prefix + "_graph_edges.csv", m);
    write_edge_csv(net, f);
  }
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < net.size(); ++i)
    for (Eigen::Index j = i + 1; j < net.size(); ++j) {
      lo = std::min(lo, net.weights(i, j));
      hi = std::max(hi, net.weights(i, j));
    }
  summary[prefix + "_network"] = {{"communities", comm.count()},
                                  {"modularity", comm.modularity},
                                  {"skipped_draws", net.skipped_draws},
                                  {"min_partial_correlation", lo},
                                  {"max_partial_correlation", hi}};
}

void cmd_fit(FitArgs& a, CLI::App* sub) {
  require(a.tensor, "--tensor");
  const fs::path out = prepare_out(a.common.out);
  Manifest m("fit");
  m.record_options(sub);
  m.add_input(a.tensor);
  m.set("seed", a.gibbs.config.seed);

  const CountTensor tensor = stage("load", [&] { return load_tensor(a.tensor); });
  const AdjustedTensor adj = stage("preprocess", [&] { return fit_adjust(log1p_transform(tensor)); });
  {
    auto f = open_out(out, "trend_models.csv", m);
    write_trend_csv(adj, f);
  }
  const ModelDims dims{adj.K(), adj.Q(), a.ra, a.rb};
  if (a.ra < 1 || a.rb < 1 || a.ra > adj.K() || a.rb > adj.Q())
    throw StageError("sampler", "ranks must satisfy 1 <= ra <= K = " + std::to_string(adj.K()) +
                                    " and 1 <= rb <= Q = " + std::to_string(adj.Q()),
                     kUsage);
  const PosteriorDraws draws = stage("sampler", [&] { return run_chain(adj, dims, a.gibbs.config); });

  if (draws.empty()) {
    m.write(out);
    std::cout << "fit: --draws 0, no posterior draws retained; summaries, networks and diagnostics not written\n";
    return;
  }

  stage("analysis", [&] {
    {
      auto f = open_out(out, "draws.jsonl", m);
      write_draws_jsonl(draws, f);
    }
    {
      auto f = open_out(out, "A_summary.csv", m);
      write_summary_csv(summarize_dynamics(draws, Side::A), adj.category_labels, adj.category_labels, f);
    }
    {
      auto f = open_out(out, "B_summary.csv", m);
      write_summary_csv(summarize_dynamics(draws, Side::B), adj.district_labels, adj.district_labels, f);
    }
    json summary;
    summary["dims"] = {{"K", dims.K}, {"Q", dims.Q}, {"R_A", dims.R_A}, {"R_B", dims.R_B}};
    summary["T"] = adj.T();
    summary["retained_draws"] = draws.size();
    json traces = json::array();
    for (const auto& t : trace_summaries(draws))
      traces.push_back({{"name", t.name}, {"mean", t.mean}, {"sd", t.sd}, {"ess", t.ess}});
    summary["traces"] = std::move(traces);

    const auto cat_net = partial_correlations(draws, Side::A, adj.category_labels);
    const auto dist_net = partial_correlations(draws, Side::B, adj.district_labels);
    write_network_outputs(out, "category", cat_net, a.community_seed, m, summary);
    write_network_outputs(out, "district", dist_net, a.community_seed, m, summary);

    if (!a.centroids.empty()) {
      m.add_input(a.centroids);
      std::ifstream cin(a.centroids, std::ios::binary);
      if (!cin) throw InputError("cannot open " + a.centroids);
      const DistanceTable table = distance_correlation_table(dist_net, read_centroids_csv(cin));
      auto f = open_out(out, "distance_correlation.csv", m);
      write_distance_csv(table, f);
      summary["distance_pairs_skipped"] = table.skipped;
    }

    // Model residuals at the posterior-mean coefficients.
    const Matrix A = draws.mean_A(), B = draws.mean_B();
    MatrixSeries resid;
    for (std::size_t t = 1; t < adj.values.size(); ++t)
      resid.push_back(adj.values[t] - bilinear_step(A, B, adj.values[t - 1]));
    const ResidualDiagnostics diag = diagnostics(resid, adj.start.plus(1).month);
    {
      auto f = open_out(out, "diagnostics.csv", m);
      write_diagnostics_csv(diag, adj.category_labels, adj.district_labels, f);
    }
    auto f = open_out(out, "chain_summary.json", m);
    f << summary.dump(2) << '\n';
    return 0;
  });
  m.write(out);
  std::cout << "fit: " << draws.size() << " draws, ranks (" << dims.R_A << ", " << dims.R_B << ")\n";
}

// ---------------------------------------------------------------------------
// backtest / rank-search

struct BacktestArgs {
  Common common;
  GibbsOptions gibbs;
  std::string tensor;
  int train_len = 204, windows = 24, threads = 0;
  std::string models = "low_rank_11x5";
  std::string grid;
  double tolerance = 0.01;

  void add(CLI::App* sub) {
    common.add(sub);
    gibbs.add(sub, GibbsConfig::backtest_budget().n_draws, GibbsConfig::backtest_budget().n_burnin);
    sub->add_option("--tensor", tensor, "Count tensor (JSON or binary)");
    sub->add_option("--train-len", train_len, "Training window length in months")->capture_default_str();
    sub->add_option("--windows", windows, "Number of rolling windows")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads (0 = all cores); results do not depend on it")
        ->capture_default_str();
  }

  BacktestConfig config() const {
    BacktestConfig c;
    c.train_len = train_len;
    c.n_windows = windows;
    c.threads = resolve_threads(threads);
    c.models.clear();
    for (const auto& name : split(models, ',')) c.models.push_back(ModelSpec::parse(name));
    return c;
  }
};

void cmd_backtest(BacktestArgs& a, CLI::App* sub) {
  require(a.tensor, "--tensor");
  const BacktestConfig bc = a.config();
  const fs::path out = prepare_out(a.common.out);
  Manifest m("backtest");
  m.record_options(sub);
  m.add_input(a.tensor);
  m.set("seed", a.gibbs.config.seed);
  const CountTensor tensor = stage("load", [&] { return load_tensor(a.tensor); });
  const ForecastReport report = stage("backtest", [&] { return backtest(tensor, bc, a.gibbs.config); });
  {
    auto f = open_out(out, "backtest_windows.csv", m);
    write_backtest_csv(report, f);
  }
  {
    auto f = open_out(out, "backtest_summary.json", m);
    write_backtest_json(report, f);
  }
  m.write(out);
  for (const auto& agg : report.aggregates)
    std::cout << agg.model << ": rmse " << agg.window_mean.rmse << ", mae " << agg.window_mean.mae << ", corr "
              << (agg.window_mean.corr ? std::to_string(*agg.window_mean.corr) : std::string("undefined")) << '\n';
}

void cmd_rank_search(BacktestArgs& a, CLI::App* sub) {
  require(a.tensor, "--tensor");
  const std::vector<RankPair> grid = parse_grid(a.grid);
  BacktestConfig bc = a.config();
  const fs::path out = prepare_out(a.common.out);
  Manifest m("rank-search");
  m.record_options(sub);
  m.add_input(a.tensor);
  m.set("seed", a.gibbs.config.seed);
  const CountTensor tensor = stage("load", [&] { return load_tensor(a.tensor); });
  const RankSearchResult res =
      stage("rank-search", [&] { return rank_search(log1p_transform(tensor), bc, a.gibbs.config, grid, a.tolerance); });
  {
    auto f = open_out(out, "rank_search.csv", m);
    write_rank_search_csv(res, f);
  }
  {
    auto f = open_out(out, "backtest_windows.csv", m);
    write_backtest_csv(res.report, f);
  }
  m.set("selected", {{"R_A", res.selected.R_A}, {"R_B", res.selected.R_B}, {"within_tolerance", res.any_within}});
  m.write(out);
  std::cout << "selected R_A=" << res.selected.R_A << " R_B=" << res.selected.R_B
            << (res.any_within ? " (smallest factor size within " : " (no pair within ") << a.tolerance * 100.0
            << "% of full-rank rmse " << res.full_rank.rmse
            << (res.any_within ? ")" : "; lowest rmse chosen)") << '\n';
}

// ---------------------------------------------------------------------------
// export-graph

struct ExportArgs {
  Common common;
  std::string draws, tensor, side = "A";
  std::uint64_t community_seed = 2019;
};

void cmd_export_graph(ExportArgs& a, CLI::App* sub) {
  require(a.draws, "--draws");
  if (a.side != "A" && a.side != "B") throw InputError("--side must be A or B");
  const fs::path out = prepare_out(a.common.out);
  Manifest m("export-graph");
  m.record_options(sub);
  m.add_input(a.draws);
  std::ifstream in(a.draws, std::ios::binary);
  if (!in) throw InputError("cannot open " + a.draws);
  const PosteriorDraws draws = stage("load", [&] { return read_draws_jsonl(in); });
  if (draws.empty()) throw InputError(a.draws + " contains no draws");
  std::vector<std::string> labels;
  if (!a.tensor.empty()) {
    m.add_input(a.tensor);
    const CountTensor t = load_tensor(a.tensor);
    labels = a.side == "A" ? t.category_labels : t.district_labels;
  }
  const Side side = a.side == "A" ? Side::A : Side::B;
  const auto net = stage("analysis", [&] { return partial_correlations(draws, side, labels); });
  const auto comm = detect_communities(net, a.community_seed);
  {
    auto f = open_out(out, "network.csv", m);
    write_network_csv(net, f);
  }
  {
    auto f = open_out(out, "communities.csv", m);
    write_communities_csv(comm, net.nodes, f);
  }
  {
    auto f = open_out(out, "graph.graphml", m);
    write_graphml(net, comm, f);
  }
  {
    auto f = open_out(out, "graph_edges.csv", m);
    write_edge_csv(net, f);
  }
  m.write(out);
  std::cout << "export-graph: " << net.size() << " nodes, " << comm.count() << " communities, modularity "
            << comm.modularity << '\n';
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  Common common;
  long K = 3, Q = 2, ra = 1, rb = 1, T = 60;
  double rho = 0.5, level = 3.0, seasonal = 0.3;
  std::uint64_t seed = 1;
};

void cmd_simulate(SimulateArgs& a, CLI::App* sub) {
  const fs::path out = prepare_out(a.common.out);
  Manifest m("simulate");
  m.record_options(sub);
  m.set("seed", a.seed);
  SyntheticSpec spec;
  spec.dims = {a.K, a.Q, a.ra, a.rb};
  spec.T = a.T;
  spec.seed = a.seed;
  spec.spectral_target = a.rho;
  const SyntheticData sim = stage("simulate", [&] { return simulate(spec); });

  CountTensor t;
  t.K = static_cast<std::size_t>(a.K);
  t.Q = static_cast<std::size_t>(a.Q);
  t.T = static_cast<std::size_t>(a.T);
  t.start = sim.data.start;
  for (long k = 0; k < a.K; ++k) t.category_labels.push_back("category_" + std::to_string(k + 1));
  for (long q = 0; q < a.Q; ++q) t.district_labels.push_back(std::to_string(q + 1));
  t.counts.assign(t.K * t.Q * t.T, 0);
  for (std::size_t k = 0; k < t.K; ++k)
    for (std::size_t q = 0; q < t.Q; ++q)
      for (std::size_t s = 0; s < t.T; ++s) {
        const double season = a.seasonal * std::sin(2.0 * std::numbers::pi * static_cast<double>(s) / 12.0);
        const double v = a.level + season + sim.data.values[s](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(q));
        t.at(k, q, s) = std::max<std::int64_t>(0, std::llround(std::expm1(v)));
      }
  {
    auto f = open_out(out, "tensor.json", m);
    write_tensor_json(t, f);
  }
  {
    auto f = open_out(out, "truth.json", m);
    f << state_to_json(sim.truth) << '\n';
  }
  m.write(out);
  std::cout << "simulate: K=" << a.K << " Q=" << a.Q << " T=" << a.T << '\n';
}

const char* kFooter = R"(Output files (fixed names, written under --out):
  ingest        tensor.json, tensor.bin (--binary), ingest_report.json
  preprocess    trend_models.csv, diagnostics.csv
  fit           draws.jsonl, chain_summary.json, A_summary.csv, B_summary.csv,
                category_network.csv, district_network.csv,
                category_communities.csv, district_communities.csv,
                category_graph.graphml, category_graph_edges.csv,
                district_graph.graphml, district_graph_edges.csv,
                trend_models.csv, diagnostics.csv,
                distance_correlation.csv (--centroids)
  backtest      backtest_windows.csv, backtest_summary.json
  rank-search   rank_search.csv, backtest_windows.csv
  export-graph  network.csv, communities.csv, graph.graphml, graph_edges.csv
  simulate      tensor.json, truth.json
Every command also writes manifest.json.
Exit codes: 0 success, 2 usage or input error, 3 numerical failure.)";

}  // namespace

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return hex64(h);
}

std::vector<RankPair> parse_grid(const std::string& expr) {
  const auto bad = [&](const std::string& why) {
    return InputError("grid '" + expr + "': " + why + " (expected e.g. 1..3x1..2 or 2,4x1)");
  };
  if (expr.find_first_not_of(" \t") == std::string::npos) throw bad("empty expression");
  const auto x = expr.find('x');
  if (x == std::string::npos || expr.find('x', x + 1) != std::string::npos) throw bad("need exactly one 'x'");
  auto side = [&](const std::string& s) {
    std::vector<long> v;
    for (const auto& part : split(s, ',')) {
      const auto dots = part.find("..");
      try {
        std::size_t used = 0;
        if (dots == std::string::npos) {
          v.push_back(std::stol(part, &used));
          if (used != part.size()) throw bad("bad number '" + part + "'");
        } else {
          const std::string a = part.substr(0, dots), b = part.substr(dots + 2);
          const long lo = std::stol(a, &used);
          if (used != a.size()) throw bad("bad number '" + a + "'");
          const long hi = std::stol(b, &used);
          if (used != b.size()) throw bad("bad number '" + b + "'");
          if (hi < lo) throw bad("empty range '" + part + "'");
          for (long r = lo; r <= hi; ++r) v.push_back(r);
        }
      } catch (const std::logic_error&) {
        throw bad("bad number in '" + part + "'");
      }
    }
    if (v.empty()) throw bad("empty side");
    for (long r : v)
      if (r < 1) throw bad("ranks must be positive");
    return v;
  };
  const auto ra = side(expr.substr(0, x)), rb = side(expr.substr(x + 1));
  std::vector<RankPair> out;
  for (long a : ra)
    for (long b : rb) {
      const RankPair p{a, b};
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
  return out;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Bilinear matrix autoregression for crime count tensors", "tvar"};
  app.footer(kFooter);
  app.set_version_flag("--version", TVAR_VERSION);
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Aggregate an incident CSV into a monthly count tensor");
  ingest.common.add(s_ingest);
  s_ingest->add_option("--input", ingest.input, "Incident CSV with a header row");
  s_ingest->add_option("--reclass", ingest.reclass, "Reclassification table CSV (iucr,target_label); default built in");
  s_ingest->add_option("--start", ingest.start, "First month YYYY-MM (default: earliest record)");
  s_ingest->add_option("--end", ingest.end, "Last month YYYY-MM (default: latest record)");
  s_ingest->add_option("--districts", ingest.districts, "Fixed comma-separated district list");
  s_ingest->add_option("--categories", ingest.categories, "Extra comma-separated category labels");
  s_ingest->add_option("--date-col", ingest.columns.date, "Date column")->capture_default_str();
  s_ingest->add_option("--district-col", ingest.columns.district, "District column")->capture_default_str();
  s_ingest->add_option("--fbi-col", ingest.columns.fbi_code, "FBI code column")->capture_default_str();
  s_ingest->add_option("--iucr-col", ingest.columns.iucr, "IUCR column")->capture_default_str();
  s_ingest->add_flag("--binary", ingest.binary, "Also write tensor.bin");

  PreprocessArgs pre;
  auto* s_pre = app.add_subcommand("preprocess", "Detrend and deseasonalize; write trend models and diagnostics");
  pre.common.add(s_pre);
  s_pre->add_option("--tensor", pre.tensor, "Count tensor (JSON or binary)");

  FitArgs fit;
  auto* s_fit = app.add_subcommand("fit", "Run the Gibbs sampler and write posterior summaries");
  fit.common.add(s_fit);
  fit.gibbs.add(s_fit, 3000, 1000);
  s_fit->add_option("--tensor", fit.tensor, "Count tensor (JSON or binary)");
  s_fit->add_option("--ra", fit.ra, "Rank of A")->capture_default_str();
  s_fit->add_option("--rb", fit.rb, "Rank of B")->capture_default_str();
  s_fit->add_option("--centroids", fit.centroids, "District centroids CSV (district,lat,lon)");
  s_fit->add_option("--community-seed", fit.community_seed, "Tie-breaking seed for community detection")
      ->capture_default_str();

  BacktestArgs bt;
  auto* s_bt = app.add_subcommand("backtest", "Rolling one-step-ahead forecast evaluation");
  bt.add(s_bt);
  s_bt->add_option("--models", bt.models,
                   "Comma-separated models: low_rank_<RA>x<RB>, full_rank, persistence, diagonal_ar")
      ->capture_default_str();

  BacktestArgs rs;
  rs.models.clear();
  auto* s_rs = app.add_subcommand("rank-search", "Backtest a grid of rank pairs and apply the 1% selection rule");
  rs.add(s_rs);
  s_rs->add_option("--grid", rs.grid, "Rank grid, e.g. 1..3x1..2");
  s_rs->add_option("--tolerance", rs.tolerance, "Allowed relative rmse loss against full rank")->capture_default_str();

  ExportArgs ex;
  auto* s_ex = app.add_subcommand("export-graph", "Partial-correlation network from saved draws");
  ex.common.add(s_ex);
  s_ex->add_option("--draws", ex.draws, "draws.jsonl written by fit");
  s_ex->add_option("--tensor", ex.tensor, "Tensor supplying node labels (optional)");
  s_ex->add_option("--side", ex.side, "A (categories) or B (districts)")->capture_default_str();
  s_ex->add_option("--community-seed", ex.community_seed, "Tie-breaking seed for community detection")
      ->capture_default_str();

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Write a synthetic count tensor from a random low-rank model");
  sim.common.add(s_sim);
  s_sim->add_option("--K", sim.K, "Categories")->capture_default_str();
  s_sim->add_option("--Q", sim.Q, "Districts")->capture_default_str();
  s_sim->add_option("--ra", sim.ra, "Rank of A")->capture_default_str();
  s_sim->add_option("--rb", sim.rb, "Rank of B")->capture_default_str();
  s_sim->add_option("--T", sim.T, "Months")->capture_default_str();
  s_sim->add_option("--rho", sim.rho, "Spectral radius of B (x) A")->capture_default_str();
  s_sim->add_option("--level", sim.level, "Mean log(1 + count)")->capture_default_str();
  s_sim->add_option("--seasonal", sim.seasonal, "Amplitude of the annual cycle")->capture_default_str();
  s_sim->add_option("--seed", sim.seed, "Random seed")->capture_default_str();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    auto with_config = [](CLI::App* sub, const std::string& path) {
      if (!path.empty()) apply_config(sub, path);
    };
    if (s_ingest->parsed()) {
      with_config(s_ingest, ingest.common.config);
      cmd_ingest(ingest, s_ingest);
    } else if (s_pre->parsed()) {
      with_config(s_pre, pre.common.config);
      cmd_preprocess(pre, s_pre);
    } else if (s_fit->parsed()) {
      with_config(s_fit, fit.common.config);
      cmd_fit(fit, s_fit);
    } else if (s_bt->parsed()) {
      with_config(s_bt, bt.common.config);
      cmd_backtest(bt, s_bt);
    } else if (s_rs->parsed()) {
      with_config(s_rs, rs.common.config);
      cmd_rank_search(rs, s_rs);
    } else if (s_ex->parsed()) {
      with_config(s_ex, ex.common.config);
      cmd_export_graph(ex, s_ex);
    } else if (s_sim->parsed()) {
      with_config(s_sim, sim.common.config);
      cmd_simulate(sim, s_sim);
    }
  } catch (const StageError& e) {
    std::cerr << "tvar " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return e.exit_code;
  } catch (const NumericalError& e) {
    std::cerr << "tvar: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "tvar: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "tvar: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace tvar::cli
