#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "detnet/simulator.hpp"

namespace detnet {

// One reproducible experiment setup. Loadable from a line-oriented
// key=value file; unset keys keep the desk-scale defaults.
struct Scenario {
  // topology: either a file or a generated core with access trees
  std::string topology_file;
  std::string gen_core = "desk8";
  int n_access = 4;
  int cqf_per_access = 2;
  BitsPerSecond access_bw = 1'000'000'000;
  Microseconds access_delay_us = 1;

  // timing
  Microseconds cqf_cycle_us = 20;
  Microseconds dip_cycle_us = 10;
  std::string timings_file;

  // flows: either a file or generated
  std::string flows_file;
  int flows_per_access = 50;
  BitsPerSecond rate_bps = 8'000'000;
  Microseconds period_us = 1000;
  Microseconds deadline_us = 1000;
  std::uint64_t seed = 1;

  // scheduler
  int k_paths = 4;
  bool shaping = true;
  bool path_selection = true;

  // simulation
  std::vector<double> interference_mbps = {0, 100, 400, 700};
  std::int64_t horizon_hypercycles = 100;
  Bits be_packet_bits = 12'000;

  // experiment 2 load ladder (flows per access)
  std::vector<int> load_levels = {25, 50, 75, 100, 125, 150};

  static Scenario desk_default();
  static Scenario paper_scale();
  static Scenario from_file(const std::filesystem::path& path);

  std::vector<std::string> validate() const;
};

// Assembled scenario pieces, built once and shared across runs.
struct ScenarioBuild {
  NetworkGraph graph;
  std::vector<DomainConfig> domains;
  HypercycleSpec hc;
  AlignmentTable table;
  TimingMap timings;
  FlowSet flows;
};

ScenarioBuild build_scenario(const Scenario& sc);

struct Experiment1Row {
  double rate_mbps = 0;
  DelayStats best_effort;
  DelayStats scheduled;
};

struct Experiment1Result {
  std::string observed_flow;
  std::vector<Experiment1Row> rows;
  // (rate, mode) -> CDF of the observed flow
  std::vector<std::tuple<double, std::string, std::vector<std::pair<double, double>>>> cdfs;
  std::vector<std::pair<double, SimTrace>> be_traces;
  std::vector<std::pair<double, SimTrace>> sched_traces;
  int rejected_flows = 0;
};

// Both disciplines on the same flow set and seeds, one row per interference
// rate. The observed flow is a seeded pick among accepted flows.
Experiment1Result run_experiment1(const Scenario& sc);

struct Experiment2Cell {
  int load_level = 0;
  std::string strategy;  // joint | no-path-selection | no-shaping
  int rejected = 0;
  int accepted = 0;
  double objective = 0;
};

struct Experiment2Result {
  std::vector<Experiment2Cell> cells;
};

Experiment2Result run_experiment2(const Scenario& sc);

// Writes exp1_stats.json, exp1_cdf.csv, per-run traces and
// exp2_rejections.csv into out_dir. Reruns are byte-identical.
void emit_report(const std::optional<Experiment1Result>& e1,
                 const std::optional<Experiment2Result>& e2,
                 const std::filesystem::path& out_dir);

}  // namespace detnet
