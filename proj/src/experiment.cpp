#include "sbmlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "sbmlab/bruteforce.hpp"
#include "sbmlab/errors.hpp"
#include "sbmlab/graph.hpp"
#include "sbmlab/nonbacktracking.hpp"
#include "sbmlab/rng.hpp"
#include "sbmlab/spectrum.hpp"
#include "sbmlab/threshold.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sbmlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_header(std::ostream& os, const ExperimentConfig& cfg) {
  os << "# sbmlab config_version=" << cfg.version << " experiment=" << cfg.kind
     << " config_hash=" << hex64(cfg.config_hash) << " seed=" << cfg.seed << "\n";
}

std::ofstream open_out(const ExperimentConfig& cfg, const std::string& name, bool header = true) {
  fs::create_directories(cfg.out_dir);
  const std::string path = cfg.out_dir + "/" + name;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open output file " + path);
  if (header) write_header(f, cfg);
  return f;
}

double median_of(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  long n = 0;
  for (double x : v)
    if (!std::isnan(x)) {
      s += x;
      ++n;
    }
  return n ? s / n : kNaN;
}

void parallel_for(long jobs, int workers, const std::function<void(long)>& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || jobs <= 1) {
    for (long i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

SquareMatrix parse_matrix(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("config: pattern must be a square array");
  const int n = static_cast<int>(j.size());
  SquareMatrix m(n);
  for (int r = 0; r < n; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != n)
      throw ConfigError("config: pattern must be square");
    for (int c = 0; c < n; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

std::vector<double> parse_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string("config: ") + what + " must be an array");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

}  // namespace

std::vector<double> InitSpec::initial_x(const std::vector<double>& planted_x, double omega) const {
  if (mode == Mode::fixed) {
    if (fixed_x.size() != planted_x.size())
      throw ConfigError("init: fixed x length != number of labels");
    return fixed_x;
  }
  std::vector<double> x(planted_x.size());
  for (size_t a = 0; a < planted_x.size(); ++a) {
    const double sign = planted_x[a] >= omega ? 1.0 : -1.0;
    x[a] = std::clamp(omega + sign * offset, 0.0, 1.0);
  }
  return x;
}

ModelParams ExperimentConfig::planted_params() const { return params_at(strengths); }

ModelParams ExperimentConfig::params_at(const std::vector<double>& x) const {
  if (x.size() != degrees.size())
    throw ConfigError("config: strengths length != degrees length");
  std::vector<LabelParams> ls(x.size());
  for (size_t a = 0; a < x.size(); ++a) ls[a] = {degrees[a], x[a]};
  ModelParams p;
  p.gamma = gamma;
  p.labels = std::move(ls);
  return p;
}

uint64_t job_seed(uint64_t master, long cell, int sample) {
  return derive_seed(master, {0x6a6f62ULL, static_cast<uint64_t>(cell),
                              static_cast<uint64_t>(sample)});
}

ExperimentConfig parse_config(const json& j, const std::string& expected_kind) {
  ExperimentConfig cfg;
  {
    json semantic = j;  // hash identifies the experiment, not where it is written
    semantic.erase("output");
    cfg.config_hash = fnv1a64(semantic.dump());
  }

  if (!j.contains("version")) throw ConfigError("config: missing \"version\"");
  cfg.version = j["version"].get<int>();
  if (cfg.version != 1) throw ConfigError("config: unsupported version (expected 1)");

  cfg.kind = j.value("experiment", expected_kind);
  if (!expected_kind.empty() && cfg.kind != expected_kind)
    throw ConfigError("config: experiment kind \"" + cfg.kind + "\" does not match subcommand \"" +
                      expected_kind + "\"");

  if (!j.contains("model")) throw ConfigError("config: missing \"model\" block");
  const json& jm = j["model"];
  const int q = jm.value("q", 0);
  if (q < 2) throw ConfigError("config: model.q must be >= 2");

  if (jm.contains("pattern_per_label")) {
    std::vector<SquareMatrix> mats;
    for (const auto& pm : jm["pattern_per_label"]) mats.push_back(parse_matrix(pm));
    cfg.pattern = make_pattern(mats);
  } else if (jm.contains("pattern") && jm["pattern"].is_string()) {
    if (jm["pattern"].get<std::string>() != "identity")
      throw ConfigError("config: pattern string must be \"identity\"");
    SquareMatrix eye(q);
    for (int i = 0; i < q; ++i) eye(i, i) = 1.0;
    cfg.pattern = make_pattern(eye);
  } else if (jm.contains("pattern")) {
    cfg.pattern = make_pattern(parse_matrix(jm["pattern"]));
  } else {
    throw ConfigError("config: model.pattern required (\"identity\" or a 0/1 matrix)");
  }
  if (cfg.pattern.q != q) throw ConfigError("config: pattern size != model.q");

  if (!jm.contains("degrees")) throw ConfigError("config: model.degrees (c_alpha list) required");
  cfg.degrees = parse_vector(jm["degrees"], "model.degrees");
  if (cfg.degrees.empty()) throw ConfigError("config: model.degrees must be non-empty");
  if (cfg.pattern.has_per_label() &&
      cfg.pattern.per_label.size() != cfg.degrees.size())
    throw ConfigError("config: pattern_per_label count != degrees count");

  cfg.gamma = jm.contains("gamma") ? parse_vector(jm["gamma"], "model.gamma")
                                   : std::vector<double>(q, 1.0 / q);
  if (static_cast<int>(cfg.gamma.size()) != q) throw ConfigError("config: gamma length != q");

  if (jm.contains("strengths")) cfg.strengths = parse_vector(jm["strengths"], "model.strengths");

  const json jr = j.value("run", json::object());
  cfg.n = jr.value("n", 1000);
  cfg.samples = jr.value("samples", 5);
  cfg.seed = jr.value("seed", 1ULL);
  cfg.workers = jr.value("workers", 2);
  if (cfg.samples < 1) throw ConfigError("config: run.samples must be >= 1");

  const json je = jr.value("em", json::object());
  cfg.em.max_steps = je.value("max_steps", 2000);
  cfg.em.tol = je.value("tol", 1e-6);
  cfg.em.sweeps_per_mstep = je.value("sweeps_per_mstep", 1);
  cfg.em.learning_rate = je.value("learning_rate", 1.0);
  cfg.em.restrict_affinity = je.value("restrict_affinity", true);
  cfg.em.damping = je.value("damping", 0.0);
  cfg.em.validate();

  if (jr.contains("bias")) {
    const json& jb = jr["bias"];
    cfg.em.bias_weight = jb.value("weight", 0.0);
    if (jb.contains("target") && jb["target"].is_array()) {
      for (const auto& t : jb["target"]) cfg.em.bias_target.push_back(t.get<int>());
    } else if (jb.value("target", "planted") == "planted") {
      cfg.em.bias_toward_planted = true;
    } else if (jb.value("target", "") == "random") {
      cfg.em.bias_random = true;
    } else {
      throw ConfigError(
          "config: bias.target must be \"planted\", \"random\", or an assignment array");
    }
  }

  if (jr.contains("init")) {
    const json& ji = jr["init"];
    const std::string mode = ji.value("mode", "matched-corner");
    if (mode == "fixed") {
      cfg.init.mode = InitSpec::Mode::fixed;
      if (!ji.contains("x")) throw ConfigError("config: init.mode=fixed needs init.x");
      cfg.init.fixed_x = parse_vector(ji["x"], "init.x");
    } else if (mode == "matched-corner") {
      cfg.init.mode = InitSpec::Mode::matched_corner;
      cfg.init.offset = ji.value("offset", 0.4);
    } else {
      throw ConfigError("config: init.mode must be \"fixed\" or \"matched-corner\"");
    }
  }

  if (j.contains("grid")) {
    auto parse_axis = [](const json& ja) {
      GridAxis ax;
      ax.min = ja.value("min", 0.0);
      ax.max = ja.value("max", 1.0);
      ax.count = ja.value("count", 11);
      if (ax.count < 1) throw ConfigError("config: grid count must be >= 1");
      if (ax.count == 1 && ax.min != ax.max)
        throw ConfigError("config: 1-cell grid axis needs min == max");
      return ax;
    };
    cfg.grid_x1 = parse_axis(j["grid"].value("x1", json::object()));
    cfg.grid_x2 = parse_axis(j["grid"].value("x2", json::object()));
  }
  cfg.contour_delta = j.value("contour_delta", 0.03);

  if (j.contains("c2_list")) cfg.c2_list = parse_vector(j["c2_list"], "c2_list");

  if (j.contains("planted_list"))
    for (const auto& row : j["planted_list"])
      cfg.planted_list.push_back(parse_vector(row, "planted_list row"));

  if (j.contains("spectrum_steps"))
    for (const auto& s : j["spectrum_steps"]) cfg.spectrum_steps.push_back(s.get<int>());

  if (j.contains("estimates") && j["estimates"].contains("strengths"))
    cfg.estimate_strengths = parse_vector(j["estimates"]["strengths"], "estimates.strengths");
  cfg.spectrum_mode = j.value("spectrum_mode", "dense");

  cfg.graph_file = j.value("graph_file", "");
  cfg.dump_marginals = j.value("dump_marginals", false);

  cfg.out_dir = j.value("output", json::object()).value("dir", "out");
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path, const std::string& expected_kind) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j, expected_kind);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------------------

void run_generate(const ExperimentConfig& cfg) {
  if (cfg.strengths.empty()) throw ConfigError("generate: model.strengths required");
  const LabeledGraph g =
      generate(cfg.pattern, cfg.planted_params(), cfg.n, derive_seed(job_seed(cfg.seed, 0, 0), {0x67ULL}));
  fs::create_directories(cfg.out_dir);
  const std::string path = cfg.out_dir + "/graph.txt";
  write_graph_file(path, g);

  auto meta = open_out(cfg, "graph_meta.json", false);
  json m;
  m["n"] = g.n;
  m["q"] = g.q;
  m["p"] = g.p;
  m["edges"] = g.edge_count();
  m["edges_per_label"] = g.edge_counts_per_label();
  m["config_hash"] = hex64(cfg.config_hash);
  m["seed"] = cfg.seed;
  meta << m.dump(2) << "\n";
}

namespace {

struct SingleRun {
  EmResult em;
  LabeledGraph graph;
};

SingleRun execute_single(const ExperimentConfig& cfg, const std::vector<double>& planted_x,
                         long cell, int sample, const EmObserver& obs = {}) {
  const uint64_t job = job_seed(cfg.seed, cell, sample);
  SingleRun r;
  if (!cfg.graph_file.empty())
    r.graph = read_graph_file(cfg.graph_file);
  else
    r.graph = generate(cfg.pattern, cfg.params_at(planted_x), cfg.n, derive_seed(job, {0x67ULL}));

  std::vector<double> x0;
  if (cfg.init.mode == InitSpec::Mode::fixed && planted_x.empty()) {
    x0 = cfg.init.fixed_x;  // graph from file: no planted strengths needed
    if (x0.size() != cfg.degrees.size())
      throw ConfigError("init: fixed x length != number of labels");
  } else {
    if (planted_x.empty())
      throw ConfigError("init: matched-corner mode needs planted strengths; "
                        "use a fixed init with graph_file inputs");
    x0 = cfg.init.initial_x(planted_x, cfg.pattern.omega(cfg.gamma, 0));
  }
  ModelParams init = cfg.params_at(x0);
  r.em = run_em(r.graph, cfg.pattern, init, cfg.em, derive_seed(job, {0x656dULL}), obs);
  return r;
}

void write_trajectory_csv(const ExperimentConfig& cfg, const std::string& name, const EmResult& em,
                          int p, int q) {
  auto f = open_out(cfg, name);
  f << "step";
  for (int a = 1; a <= p; ++a) f << ",x" << a << "_hat";
  for (int s = 1; s <= q; ++s) f << ",gamma_" << s;
  f << ",delta_tv";
  for (int a = 1; a <= p; ++a) f << ",xi_mean_" << a;
  for (int a = 1; a <= p; ++a) f << ",xi_var_" << a;
  f << ",max_change\n";
  for (size_t t = 0; t < em.steps.size(); ++t) {
    const EmStep& st = em.steps[t];
    f << t;
    for (int a = 0; a < p; ++a) f << ',' << format_number(st.x_hat[static_cast<size_t>(a)]);
    for (int s = 0; s < q; ++s) f << ',' << format_number(st.gamma_hat[static_cast<size_t>(s)]);
    f << ',' << format_number(st.delta_tv);
    for (int a = 0; a < p; ++a) f << ',' << format_number(st.xi_mean[static_cast<size_t>(a)]);
    for (int a = 0; a < p; ++a) {
      const double m = st.xi_mean[static_cast<size_t>(a)];
      const double v = st.xi_second[static_cast<size_t>(a)] - m * m;
      f << ',' << format_number(v);
    }
    f << ',' << format_number(st.max_change) << '\n';
  }
}

}  // namespace

void run_infer(const ExperimentConfig& cfg) {
  if (cfg.graph_file.empty() && cfg.strengths.empty())
    throw ConfigError("infer: need model.strengths (to generate) or graph_file");

  std::ofstream marg_dump;
  EmObserver obs;
  if (cfg.dump_marginals) {
    marg_dump = open_out(cfg, "marginals.csv");
    marg_dump << "step,vertex";
    for (int s = 1; s <= cfg.pattern.q; ++s) marg_dump << ",psi_" << s;
    marg_dump << "\n";
    obs = [&](int step, const MessageSet& ms, const std::vector<double>&,
              const std::vector<double>&) {
      const long n = static_cast<long>(ms.marginal.size()) / ms.q;
      for (long v = 0; v < n; ++v) {
        marg_dump << step << ',' << v;
        for (int s = 0; s < ms.q; ++s) marg_dump << ',' << format_number(ms.node(static_cast<int>(v))[s]);
        marg_dump << '\n';
      }
    };
  }

  SingleRun r = execute_single(cfg, cfg.strengths, 0, 0, obs);

  write_trajectory_csv(cfg, "trajectory.csv", r.em, r.graph.p, r.graph.q);
  {
    auto f = open_out(cfg, "assignment.csv");
    f << "vertex,label\n";
    for (size_t v = 0; v < r.em.assignment.size(); ++v) f << v << ',' << r.em.assignment[v] << '\n';
  }
  {
    auto f = open_out(cfg, "infer_summary.json", false);
    json s;
    s["overlap"] = r.em.overlap_value;
    s["converged"] = r.em.converged;
    s["steps"] = r.em.steps.size() - 1;
    s["clamped_terms"] = r.em.clamped_terms;
    s["config_hash"] = hex64(cfg.config_hash);
    s["seed"] = cfg.seed;
    f << s.dump(2) << "\n";
  }
}

void run_spectrum(const ExperimentConfig& cfg) {
  if (cfg.strengths.empty()) throw ConfigError("spectrum: model.strengths required");
  LabeledGraph g;
  if (!cfg.graph_file.empty())
    g = read_graph_file(cfg.graph_file);
  else
    g = generate(cfg.pattern, cfg.planted_params(), cfg.n,
                 derive_seed(job_seed(cfg.seed, 0, 0), {0x67ULL}));

  const std::vector<double> est_x =
      cfg.estimate_strengths.empty() ? cfg.strengths : cfg.estimate_strengths;
  const ModelParams estimates = cfg.params_at(est_x);

  SpectrumOptions opts;
  opts.mode = cfg.spectrum_mode == "iterative" ? SpectrumMode::iterative : SpectrumMode::dense;
  opts.seed = cfg.seed;
  double iso_pred = kNaN, plus_pred = kNaN;
  try {
    const IsolatedEigenvalues iso =
        isolated_eigenvalue_formula(cfg.pattern, cfg.planted_params(), estimates);
    iso_pred = iso.iso;
    plus_pred = iso.plus;
    opts.predictions = {iso.iso, iso.plus};
  } catch (const ConfigError&) {
    // Predictions need the threshold assumptions; spectra work without them.
  }

  const SpectrumSummary sum = empirical_spectrum(g, cfg.pattern, estimates, opts);

  {
    auto f = open_out(cfg, "spectrum.csv");
    f << "re,im\n";
    for (const auto& ev : sum.eigenvalues)
      f << format_number(ev.real()) << ',' << format_number(ev.imag()) << '\n';
  }
  {
    auto f = open_out(cfg, "spectrum_summary.json", false);
    json s;
    s["band_radius_formula"] = sum.band_radius_formula;
    s["band_radius_empirical"] = sum.band_radius_empirical;
    s["lambda_iso_formula"] = iso_pred;
    s["lambda_plus_formula"] = plus_pred;
    s["leading_real"] = sum.leading_real;
    json iso_list = json::array();
    for (const auto& ev : sum.isolated) iso_list.push_back({ev.real(), ev.imag()});
    s["isolated_matched"] = iso_list;
    s["mode"] = cfg.spectrum_mode;
    s["converged"] = sum.converged;
    s["residual"] = sum.residual;
    s["config_hash"] = hex64(cfg.config_hash);
    s["seed"] = cfg.seed;
    f << s.dump(2) << "\n";
  }
}

namespace {

struct CellResult {
  std::vector<double> overlaps;  // per sample; NaN when skipped
  bool skipped = false;
};

// Cell checkpoint files double as the resume unit.
std::string cell_file(const ExperimentConfig& cfg, const std::string& prefix, long idx) {
  return cfg.out_dir + "/cells/" + prefix + "_" + std::to_string(idx) + ".csv";
}

bool read_cell_file(const std::string& path, int samples, CellResult& out) {
  std::ifstream f(path);
  if (!f) return false;
  std::string line;
  std::vector<double> vals;
  bool skipped = false;
  while (std::getline(f, line)) {
    if (line.rfind("# skipped", 0) == 0) skipped = true;
    if (line.empty() || line[0] == '#' || line.rfind("sample", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) return false;
    const std::string v = line.substr(comma + 1);
    vals.push_back(v == "nan" ? kNaN : std::stod(v));
  }
  if (static_cast<int>(vals.size()) != samples && !skipped) return false;
  out.overlaps = std::move(vals);
  out.skipped = skipped;
  return true;
}

void write_cell_file(const ExperimentConfig& cfg, const std::string& path, const CellResult& r) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open checkpoint file " + path);
  write_header(f, cfg);
  if (r.skipped) f << "# skipped\n";
  f << "sample,overlap\n";
  for (size_t s = 0; s < r.overlaps.size(); ++s)
    f << s << ',' << format_number(r.overlaps[s]) << '\n';
}

}  // namespace

void run_phase_diagram(const ExperimentConfig& cfg) {
  if (cfg.degrees.size() != 2)
    throw ConfigError("phase-diagram: grid sweeps need exactly p=2 labels");
  const long n1 = cfg.grid_x1.count, n2 = cfg.grid_x2.count;
  const long cells = n1 * n2;
  fs::create_directories(cfg.out_dir + "/cells");

  std::vector<CellResult> results(cells);
  std::vector<char> cached(cells, 0);
  for (long idx = 0; idx < cells; ++idx)
    if (read_cell_file(cell_file(cfg, "cell", idx), cfg.samples, results[idx])) cached[idx] = 1;

  parallel_for(cells, cfg.workers, [&](long idx) {
    if (cached[idx]) return;
    const long i = idx / n2, j = idx % n2;
    const std::vector<double> planted{cfg.grid_x1.value(static_cast<int>(i)),
                                      cfg.grid_x2.value(static_cast<int>(j))};
    CellResult r;
    r.overlaps.assign(cfg.samples, kNaN);
    try {
      for (int s = 0; s < cfg.samples; ++s)
        r.overlaps[static_cast<size_t>(s)] = execute_single(cfg, planted, idx, s).em.overlap_value;
    } catch (const ConfigError&) {
      r.skipped = true;  // infeasible parametrization: mark, keep sweeping
    } catch (const NumericError&) {
      r.skipped = true;  // degenerate run (e.g. emptied module): mark, keep sweeping
    }
    write_cell_file(cfg, cell_file(cfg, "cell", idx), r);
    results[idx] = std::move(r);
  });

  // Aggregate.
  std::vector<double> med(cells, kNaN);
  {
    auto f = open_out(cfg, "cells.csv");
    f << "x1,x2,mean_overlap,median_overlap,samples,skipped\n";
    for (long idx = 0; idx < cells; ++idx) {
      const long i = idx / n2, j = idx % n2;
      med[idx] = median_of(results[idx].overlaps);
      f << format_number(cfg.grid_x1.value(static_cast<int>(i))) << ','
        << format_number(cfg.grid_x2.value(static_cast<int>(j))) << ','
        << format_number(mean_of(results[idx].overlaps)) << ',' << format_number(med[idx]) << ','
        << cfg.samples << ',' << (results[idx].skipped ? 1 : 0) << '\n';
    }
  }

  // Analytic overlays (need the threshold assumptions; skip quietly otherwise).
  try {
    auto f = open_out(cfg, "boundary_analytic.csv");
    f << "x1,x2,kind\n";
    for (const auto& bp : nishimori_boundary(cfg.pattern, cfg.degrees, 256))
      f << format_number(bp.x1) << ',' << format_number(bp.x2) << ",nishimori\n";
    const double omega = cfg.pattern.omega_uniform;
    if (cfg.init.mode == InitSpec::Mode::matched_corner) {
      // One tangent plane per orthant, clipped to its orthant: the simplex.
      for (int s1 : {-1, 1})
        for (int s2 : {-1, 1}) {
          const std::vector<double> corner{std::clamp(omega + s1 * cfg.init.offset, 0.0, 1.0),
                                           std::clamp(omega + s2 * cfg.init.offset, 0.0, 1.0)};
          const AdtBoundary b = adt_boundary(cfg.pattern, cfg.degrees, corner, 512);
          if (b.dead_init) continue;
          for (const auto& bp : b.plus) {
            if (bp.x1 < 0 || bp.x1 > 1 || bp.x2 < 0 || bp.x2 > 1) continue;
            if (s1 * (bp.x1 - omega) < -1e-9 || s2 * (bp.x2 - omega) < -1e-9) continue;
            f << format_number(bp.x1) << ',' << format_number(bp.x2) << ",adt_plus\n";
          }
        }
    } else {
      const AdtBoundary b = adt_boundary(cfg.pattern, cfg.degrees, cfg.init.fixed_x, 512);
      for (const auto& bp : b.plus)
        f << format_number(bp.x1) << ',' << format_number(bp.x2) << ",adt_plus\n";
      for (const auto& bp : b.minus)
        f << format_number(bp.x1) << ',' << format_number(bp.x2) << ",adt_minus\n";
    }
  } catch (const ConfigError&) {
  }

  // Empirical boundary: overlap = 0.5 + delta crossings along rows and columns.
  {
    auto f = open_out(cfg, "boundary_empirical.csv");
    f << "x1,x2,kind\n";
    const double level = 0.5 + cfg.contour_delta;
    auto emit = [&](double x1, double x2) {
      f << format_number(x1) << ',' << format_number(x2) << ",empirical\n";
    };
    for (long i = 0; i < n1; ++i)
      for (long j = 0; j + 1 < n2; ++j) {
        const double a = med[i * n2 + j], b = med[i * n2 + j + 1];
        if (std::isnan(a) || std::isnan(b) || (a - level) * (b - level) > 0) continue;
        const double t = (a == b) ? 0.5 : (level - a) / (b - a);
        emit(cfg.grid_x1.value(static_cast<int>(i)),
             cfg.grid_x2.value(static_cast<int>(j)) +
                 t * (cfg.grid_x2.value(static_cast<int>(j + 1)) - cfg.grid_x2.value(static_cast<int>(j))));
      }
    for (long j = 0; j < n2; ++j)
      for (long i = 0; i + 1 < n1; ++i) {
        const double a = med[i * n2 + j], b = med[(i + 1) * n2 + j];
        if (std::isnan(a) || std::isnan(b) || (a - level) * (b - level) > 0) continue;
        const double t = (a == b) ? 0.5 : (level - a) / (b - a);
        emit(cfg.grid_x1.value(static_cast<int>(i)) +
                 t * (cfg.grid_x1.value(static_cast<int>(i + 1)) - cfg.grid_x1.value(static_cast<int>(i))),
             cfg.grid_x2.value(static_cast<int>(j)));
      }
  }
}

void run_infeasibility(const ExperimentConfig& cfg) {
  if (cfg.c2_list.empty()) throw ConfigError("infeasibility: c2_list must be non-empty");
  if (cfg.degrees.empty()) throw ConfigError("infeasibility: model.degrees gives c1");
  if (cfg.strengths.size() != 2) throw ConfigError("infeasibility: need planted (x1, x2)");
  const double c1 = cfg.degrees[0];

  // Analytic window first: it does not depend on the sweep.
  const InfeasibilityWindow win = infeasibility_window(cfg.pattern, c1, cfg.strengths);
  {
    auto f = open_out(cfg, "window.json", false);
    json w;
    if (win.c2_window) w["c2_window"] = {win.c2_window->first, win.c2_window->second};
    w["roots"] = win.roots;
    w["alpha1_detectable"] = win.alpha1_detectable;
    w["alpha1_threshold"] = win.alpha1_threshold;
    w["config_hash"] = hex64(cfg.config_hash);
    f << w.dump(2) << "\n";
  }

  const long points = static_cast<long>(cfg.c2_list.size());
  fs::create_directories(cfg.out_dir + "/cells");
  std::vector<CellResult> results(points);
  std::vector<char> cached(points, 0);
  for (long idx = 0; idx < points; ++idx)
    if (read_cell_file(cell_file(cfg, "c2point", idx), cfg.samples, results[idx])) cached[idx] = 1;

  parallel_for(points, cfg.workers, [&](long idx) {
    if (cached[idx]) return;
    ExperimentConfig local = cfg;  // same master seed; job seeds are per (point, sample)
    local.degrees = {c1, cfg.c2_list[static_cast<size_t>(idx)]};
    CellResult r;
    r.overlaps.assign(cfg.samples, kNaN);
    try {
      for (int s = 0; s < cfg.samples; ++s)
        r.overlaps[static_cast<size_t>(s)] =
            execute_single(local, cfg.strengths, idx, s).em.overlap_value;
    } catch (const ConfigError&) {
      r.skipped = true;
    } catch (const NumericError&) {
      r.skipped = true;
    }
    write_cell_file(cfg, cell_file(cfg, "c2point", idx), r);
    results[idx] = std::move(r);
  });

  {
    auto f = open_out(cfg, "overlaps.csv");
    f << "c2,sample,overlap\n";
    for (long idx = 0; idx < points; ++idx)
      for (size_t s = 0; s < results[idx].overlaps.size(); ++s)
        f << format_number(cfg.c2_list[static_cast<size_t>(idx)]) << ',' << s << ','
          << format_number(results[idx].overlaps[s]) << '\n';
  }
  {
    auto f = open_out(cfg, "medians.csv");
    f << "c2,median_overlap,mean_overlap\n";
    for (long idx = 0; idx < points; ++idx)
      f << format_number(cfg.c2_list[static_cast<size_t>(idx)]) << ','
        << format_number(median_of(results[idx].overlaps)) << ','
        << format_number(mean_of(results[idx].overlaps)) << '\n';
  }
}

void run_trajectory(const ExperimentConfig& cfg) {
  std::vector<std::vector<double>> runs = cfg.planted_list;
  if (runs.empty()) {
    if (cfg.strengths.empty())
      throw ConfigError("trajectory: need model.strengths or planted_list");
    runs.push_back(cfg.strengths);
  }
  if (!cfg.spectrum_steps.empty() && cfg.n > 500)
    throw ConfigError("trajectory: dense spectrum snapshots are guarded at N <= 500 "
                      "(requested N=" + std::to_string(cfg.n) + ")");

  for (size_t run = 0; run < runs.size(); ++run) {
    const std::vector<double>& planted = runs[run];
    EmObserver obs;
    std::vector<std::pair<int, SpectrumSummary>> snapshots;
    LabeledGraph* graph_ptr = nullptr;
    LabeledGraph graph_local;
    if (!cfg.spectrum_steps.empty()) {
      obs = [&](int step, const MessageSet&, const std::vector<double>& x_hat,
                const std::vector<double>& gamma_hat) {
        if (std::find(cfg.spectrum_steps.begin(), cfg.spectrum_steps.end(), step) ==
            cfg.spectrum_steps.end())
          return;
        std::vector<LabelParams> ls(x_hat.size());
        for (size_t a = 0; a < x_hat.size(); ++a) ls[a] = {cfg.degrees[a], x_hat[a]};
        ModelParams est;
        est.gamma = gamma_hat;
        est.labels = std::move(ls);
        SpectrumOptions opts;
        opts.seed = cfg.seed;
        snapshots.emplace_back(step, empirical_spectrum(*graph_ptr, cfg.pattern, est, opts));
      };
    }

    const uint64_t job = job_seed(cfg.seed, static_cast<long>(run), 0);
    graph_local = generate(cfg.pattern, cfg.params_at(planted), cfg.n, derive_seed(job, {0x67ULL}));
    graph_ptr = &graph_local;
    const double omega = cfg.pattern.omega(cfg.gamma, 0);
    ModelParams init = cfg.params_at(cfg.init.initial_x(planted, omega));
    EmResult em = run_em(graph_local, cfg.pattern, init, cfg.em, derive_seed(job, {0x656dULL}), obs);

    const std::string tag = "run" + std::to_string(run);
    write_trajectory_csv(cfg, "trajectory_" + tag + ".csv", em, graph_local.p, graph_local.q);
    {
      auto f = open_out(cfg, "summary_" + tag + ".json", false);
      json s;
      s["planted"] = planted;
      s["overlap"] = em.overlap_value;
      s["converged"] = em.converged;
      s["steps"] = em.steps.size() - 1;
      s["config_hash"] = hex64(cfg.config_hash);
      s["seed"] = cfg.seed;
      f << s.dump(2) << "\n";
    }
    for (const auto& [step, sum] : snapshots) {
      auto f = open_out(cfg, "spectrum_" + tag + "_step" + std::to_string(step) + ".csv");
      f << "re,im\n";
      for (const auto& ev : sum.eigenvalues)
        f << format_number(ev.real()) << ',' << format_number(ev.imag()) << '\n';
    }
  }
}

void run_experiment(const ExperimentConfig& cfg) {
  if (cfg.kind == "generate")
    run_generate(cfg);
  else if (cfg.kind == "infer")
    run_infer(cfg);
  else if (cfg.kind == "spectrum")
    run_spectrum(cfg);
  else if (cfg.kind == "phase-diagram")
    run_phase_diagram(cfg);
  else if (cfg.kind == "infeasibility")
    run_infeasibility(cfg);
  else if (cfg.kind == "trajectory")
    run_trajectory(cfg);
  else
    throw ConfigError("unknown experiment kind \"" + cfg.kind + "\"");
}

}  // namespace sbmlab
