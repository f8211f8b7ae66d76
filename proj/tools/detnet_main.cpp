#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "detnet/report.hpp"
#include "detnet/scheduler.hpp"
#include "detnet/simulator.hpp"
#include "json.hpp"

namespace {

using namespace detnet;

BitsPerSecond parse_rate(const std::string& s) {
  if (s.empty()) throw CLI::ValidationError("--rate", "empty rate");
  std::string num = s;
  std::int64_t mult = 1;
  char suffix = s.back();
  if (suffix == 'k' || suffix == 'K') mult = 1'000;
  else if (suffix == 'M') mult = 1'000'000;
  else if (suffix == 'G') mult = 1'000'000'000;
  if (mult != 1) num = s.substr(0, s.size() - 1);
  try {
    size_t used = 0;
    double v = std::stod(num, &used);
    if (used != num.size() || v < 0) throw std::invalid_argument(num);
    return static_cast<BitsPerSecond>(v * static_cast<double>(mult));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--rate", "cannot parse rate: " + s);
  }
}

struct Cli {
  std::string config;
  bool paper_scale = false;
  std::string topology, gen_core, timings, flows_file, rate;
  int n_access = -1, cqf_per_access = -1, gen_flows = -1, k_paths = -1;
  std::int64_t horizon = -1;
  std::int64_t seed = -1;
  bool no_shaping = false, no_path_selection = false;
  std::vector<double> interference;
  std::string mode = "scheduled";
  std::string out_dir;
  std::string schedule_file;
};

Scenario make_scenario(const Cli& c) {
  Scenario sc = c.paper_scale ? Scenario::paper_scale() : Scenario::desk_default();
  if (!c.config.empty()) {
    Scenario base = Scenario::from_file(c.config);
    if (c.paper_scale)
      throw std::runtime_error("--paper-scale and --config are mutually exclusive");
    sc = base;
  }
  if (!c.topology.empty()) sc.topology_file = c.topology;
  if (!c.gen_core.empty()) sc.gen_core = c.gen_core;
  if (c.n_access >= 0) sc.n_access = c.n_access;
  if (c.cqf_per_access >= 0) sc.cqf_per_access = c.cqf_per_access;
  if (!c.timings.empty()) sc.timings_file = c.timings;
  if (!c.flows_file.empty()) sc.flows_file = c.flows_file;
  if (c.gen_flows >= 0) sc.flows_per_access = c.gen_flows;
  if (!c.rate.empty()) sc.rate_bps = parse_rate(c.rate);
  if (c.seed >= 0) sc.seed = static_cast<std::uint64_t>(c.seed);
  if (c.k_paths >= 1) sc.k_paths = c.k_paths;
  if (c.no_shaping) sc.shaping = false;
  if (c.no_path_selection) sc.path_selection = false;
  if (!c.interference.empty()) sc.interference_mbps = c.interference;
  if (c.horizon >= 1) sc.horizon_hypercycles = c.horizon;
  return sc;
}

void print_stats(const char* label, const DelayStats& s) {
  std::printf("%s: %lld packets, delay mean %.3f us, min %.3f, max %.3f, jitter %.3f, "
              "beyond deadline %lld\n",
              label, static_cast<long long>(s.count), s.mean_us, s.min_us, s.max_us,
              s.jitter_us, static_cast<long long>(s.beyond_deadline));
}

void print_diag(const SimDiagnostics& d) {
  std::printf("released %lld, delivered %lld, gate overruns %lld, late cqf receptions %lld, "
              "be served %lld, be unserved %lld, max active cqf slots %lld\n",
              static_cast<long long>(d.ts_released), static_cast<long long>(d.ts_delivered),
              static_cast<long long>(d.gate_overruns),
              static_cast<long long>(d.cqf_late_receptions),
              static_cast<long long>(d.be_served), static_cast<long long>(d.be_unserved),
              static_cast<long long>(d.max_active_cqf_slots));
}

int cmd_validate(const Cli& c) {
  Scenario sc = make_scenario(c);
  auto bad = sc.validate();
  if (bad.empty()) {
    try {
      ScenarioBuild b = build_scenario(sc);
      for (const auto& v : b.graph.validate()) bad.push_back(v);
      for (const auto& v : validate_domains(b.graph, b.domains)) bad.push_back(v);
      if (bad.empty()) {
        std::printf("ok: %d nodes, %d links, %zu domains, hypercycle %lld us, %zu flows\n",
                    b.graph.node_count(), b.graph.link_count(), b.domains.size(),
                    static_cast<long long>(b.hc.hc_len_us), b.flows.flows.size());
        return 0;
      }
    } catch (const std::exception& e) {
      bad.push_back(e.what());
    }
  }
  for (const auto& v : bad) std::fprintf(stderr, "invalid: %s\n", v.c_str());
  return 1;
}

int cmd_schedule(const Cli& c) {
  Scenario sc = make_scenario(c);
  ScenarioBuild b = build_scenario(sc);
  SchedulingContext ctx(b.graph, b.domains, b.hc, b.table);
  Schedule s = greedy_schedule(ctx, b.flows, {sc.k_paths, sc.shaping, sc.path_selection});
  int acc = 0, rej = 0;
  for (const auto& [id, dec] : s.decisions) (dec.accepted ? acc : rej)++;
  std::printf("scheduled %d flows: %d accepted, %d rejected, objective %.6f\n",
              acc + rej, acc, rej, s.objective);
  std::filesystem::path out = c.schedule_file.empty()
                                  ? std::filesystem::path(c.out_dir.empty() ? "." : c.out_dir) /
                                        "schedule.json"
                                  : std::filesystem::path(c.schedule_file);
  if (!out.parent_path().empty()) std::filesystem::create_directories(out.parent_path());
  save_schedule(s, b.graph, out);
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

int cmd_simulate(const Cli& c) {
  Scenario sc = make_scenario(c);
  if (c.mode != "scheduled" && c.mode != "besteffort")
    throw std::runtime_error("--mode must be scheduled or besteffort");
  ScenarioBuild b = build_scenario(sc);
  SchedulingContext ctx(b.graph, b.domains, b.hc, b.table);

  InterferenceSpec spec;
  double mbps = sc.interference_mbps.empty() ? 0.0 : sc.interference_mbps.front();
  if (c.interference.size() == 1) mbps = c.interference.front();
  spec.rate_bps = static_cast<BitsPerSecond>(mbps * 1e6);
  spec.packet_size_bits = sc.be_packet_bits;
  spec.seed = sc.seed;
  SimOptions opt;
  opt.horizon_hypercycles = sc.horizon_hypercycles;
  opt.timings = b.timings;

  SimTrace trace;
  if (c.mode == "scheduled") {
    Schedule s;
    if (!c.schedule_file.empty()) {
      s = load_schedule(b.graph, c.schedule_file);
    } else {
      s = greedy_schedule(ctx, b.flows, {sc.k_paths, sc.shaping, sc.path_selection});
    }
    trace = run_simulation(ctx, s, b.flows, spec, opt);
  } else {
    trace = run_best_effort(ctx, b.flows, spec, opt);
  }

  FlowStatsReport stats = summarize(trace, sc.deadline_us);
  std::printf("mode %s, interference %g Mbps per gigabit, horizon %lld hypercycles\n",
              c.mode.c_str(), mbps, static_cast<long long>(sc.horizon_hypercycles));
  print_stats("aggregate", stats.aggregate);
  print_diag(trace.diag);

  if (!c.out_dir.empty()) {
    std::filesystem::create_directories(c.out_dir);
    auto tp = std::filesystem::path(c.out_dir) / ("trace_" + c.mode + ".csv");
    write_trace_csv(trace, tp);
    nlohmann::json j;
    j["mode"] = c.mode;
    j["interference_mbps"] = mbps;
    j["aggregate"] = {{"count", stats.aggregate.count},
                      {"mean_us", stats.aggregate.mean_us},
                      {"min_us", stats.aggregate.min_us},
                      {"max_us", stats.aggregate.max_us},
                      {"jitter_us", stats.aggregate.jitter_us},
                      {"beyond_deadline", stats.aggregate.beyond_deadline}};
    j["diagnostics"] = {{"ts_released", trace.diag.ts_released},
                        {"ts_delivered", trace.diag.ts_delivered},
                        {"gate_overruns", trace.diag.gate_overruns},
                        {"cqf_late_receptions", trace.diag.cqf_late_receptions},
                        {"be_served", trace.diag.be_served},
                        {"be_unserved", trace.diag.be_unserved},
                        {"max_active_cqf_slots", trace.diag.max_active_cqf_slots}};
    auto sp = std::filesystem::path(c.out_dir) / ("stats_" + c.mode + ".json");
    std::ofstream out(sp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + sp.string());
    out << j.dump(2) << "\n";
    std::printf("wrote %s and %s\n", tp.string().c_str(), sp.string().c_str());
  }
  return 0;
}

int cmd_exp1(const Cli& c) {
  Scenario sc = make_scenario(c);
  Experiment1Result r = run_experiment1(sc);
  std::printf("observed flow %s, %d rejected at admission\n", r.observed_flow.c_str(),
              r.rejected_flows);
  for (const auto& row : r.rows) {
    std::printf("-- interference %g Mbps per gigabit\n", row.rate_mbps);
    print_stats("  besteffort", row.best_effort);
    print_stats("  scheduled ", row.scheduled);
  }
  std::string out = c.out_dir.empty() ? "out" : c.out_dir;
  emit_report(r, std::nullopt, out);
  std::printf("wrote report files under %s\n", out.c_str());
  return 0;
}

int cmd_exp2(const Cli& c) {
  Scenario sc = make_scenario(c);
  Experiment2Result r = run_experiment2(sc);
  std::printf("load_level strategy accepted rejected objective\n");
  for (const auto& cell : r.cells)
    std::printf("%10d %-17s %8d %8d %.6f\n", cell.load_level, cell.strategy.c_str(),
                cell.accepted, cell.rejected, cell.objective);
  std::string out = c.out_dir.empty() ? "out" : c.out_dir;
  emit_report(std::nullopt, r, out);
  std::printf("wrote report files under %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic networking toolkit: converged CQF access + DIP core"};
  app.require_subcommand(1);

  Cli c;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "scenario file (key=value lines)");
    sub->add_flag("--paper-scale", c.paper_scale, "use the full-scale preset");
    sub->add_option("--topology", c.topology, "topology file");
    sub->add_option("--gen-core", c.gen_core, "built-in core name (atlanta15, desk8)");
    sub->add_option("--n-access", c.n_access, "number of access networks");
    sub->add_option("--cqf-per-access", c.cqf_per_access, "plain switches per access");
    sub->add_option("--timings", c.timings, "timing offsets file");
    sub->add_option("--flows", c.flows_file, "flow set file");
    sub->add_option("--gen-flows", c.gen_flows, "generated flows per access");
    sub->add_option("--rate", c.rate, "flow rate, accepts k/M/G suffix");
    sub->add_option("--seed", c.seed, "base RNG seed");
    sub->add_option("--k-paths", c.k_paths, "candidate paths per flow");
    sub->add_flag("--no-shaping", c.no_shaping, "disable shift search");
    sub->add_flag("--no-path-selection", c.no_path_selection, "first path only");
    sub->add_option("--interference-mbps", c.interference,
                    "interference per gigabit of port capacity")
        ->delimiter(',');
    sub->add_option("--horizon", c.horizon, "simulated hypercycles");
    sub->add_option("--out", c.out_dir, "output directory");
  };

  CLI::App* v_schedule = app.add_subcommand("schedule", "admit flows and save the schedule");
  add_common(v_schedule);
  v_schedule->add_option("--schedule", c.schedule_file, "schedule output path");

  CLI::App* v_simulate = app.add_subcommand("simulate", "run one simulation");
  add_common(v_simulate);
  v_simulate->add_option("--mode", c.mode, "scheduled or besteffort");
  v_simulate->add_option("--schedule", c.schedule_file, "saved schedule to replay");

  CLI::App* v_exp1 = app.add_subcommand("exp1", "delay comparison across interference rates");
  add_common(v_exp1);

  CLI::App* v_exp2 = app.add_subcommand("exp2", "admission comparison across load levels");
  add_common(v_exp2);

  CLI::App* v_validate = app.add_subcommand("validate", "check scenario consistency");
  add_common(v_validate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (v_schedule->parsed()) return cmd_schedule(c);
    if (v_simulate->parsed()) return cmd_simulate(c);
    if (v_exp1->parsed()) return cmd_exp1(c);
    if (v_exp2->parsed()) return cmd_exp2(c);
    if (v_validate->parsed()) return cmd_validate(c);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
