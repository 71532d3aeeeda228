#pragma once

// Reproduction driver behind the CLI: JSON experiment configs, seeded sweeps
// with (cell, sample) sub-seeding, cell-level checkpoint files, and CSV/JSON
// emission for every figure-class experiment.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbmlab/em.hpp"
#include "sbmlab/params.hpp"
#include "sbmlab/pattern.hpp"

namespace sbmlab {

struct GridAxis {
  double min = 0.0;
  double max = 1.0;
  int count = 11;
  double value(int i) const { return count < 2 ? min : min + (max - min) * i / (count - 1); }
};

struct InitSpec {
  enum class Mode { fixed, matched_corner } mode = Mode::matched_corner;
  std::vector<double> fixed_x;  // mode == fixed
  double offset = 0.4;          // mode == matched_corner: x_init = Omega +- offset

  std::vector<double> initial_x(const std::vector<double>& planted_x, double omega) const;
};

struct ExperimentConfig {
  int version = 1;
  std::string kind;  // generate | infer | spectrum | phase-diagram | infeasibility | trajectory

  // model
  ModularPattern pattern;
  std::vector<double> gamma;     // default uniform
  std::vector<double> degrees;   // c_alpha
  std::vector<double> strengths;  // planted x_alpha (where applicable)

  // run
  int n = 1000;
  int samples = 5;
  uint64_t seed = 1;
  EmConfig em;
  InitSpec init;

  // phase-diagram
  GridAxis grid_x1, grid_x2;
  double contour_delta = 0.03;  // empirical boundary at overlap = 0.5 + delta

  // infeasibility
  std::vector<double> c2_list;

  // trajectory
  std::vector<std::vector<double>> planted_list;  // one run per planted vector
  std::vector<int> spectrum_steps;                // dense snapshot steps (N <= 500)

  // spectrum
  std::vector<double> estimate_strengths;
  std::string spectrum_mode = "dense";

  // infer / generate
  std::string graph_file;  // infer: read instead of generating
  bool dump_marginals = false;

  std::string out_dir = "out";
  int workers = 2;

  uint64_t config_hash = 0;

  ModelParams planted_params() const;
  ModelParams params_at(const std::vector<double>& x) const;
};

ExperimentConfig parse_config(const nlohmann::json& j, const std::string& expected_kind);
ExperimentConfig load_config_file(const std::string& path, const std::string& expected_kind);

// Shared sub-seeding so a 1-cell sweep and a single run agree exactly.
uint64_t job_seed(uint64_t master, long cell, int sample);

void run_generate(const ExperimentConfig& cfg);
void run_infer(const ExperimentConfig& cfg);
void run_spectrum(const ExperimentConfig& cfg);
void run_phase_diagram(const ExperimentConfig& cfg);
void run_infeasibility(const ExperimentConfig& cfg);
void run_trajectory(const ExperimentConfig& cfg);

// Dispatch by cfg.kind (the CLI subcommand must match the config).
void run_experiment(const ExperimentConfig& cfg);

// Deterministic double formatting used in every CSV cell.
std::string format_number(double v);

}  // namespace sbmlab
