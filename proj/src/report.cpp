#include "detnet/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "detnet/scheduler.hpp"
#include "json.hpp"

namespace detnet {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    std::int64_t r = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw std::runtime_error("bad integer for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("bad boolean for " + key + ": " + v);
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& v, F conv) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(conv(item));
  }
  return out;
}

std::string rate_label(double mbps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", mbps);
  return buf;
}

}  // namespace

Scenario Scenario::desk_default() { return Scenario{}; }

Scenario Scenario::paper_scale() {
  Scenario sc;
  sc.gen_core = "atlanta15";
  sc.n_access = 10;
  sc.cqf_per_access = 2;
  sc.cqf_cycle_us = 25;
  sc.dip_cycle_us = 10;
  sc.flows_per_access = 200;
  sc.rate_bps = 500'000;
  sc.interference_mbps = {131, 229, 534, 698};
  sc.load_levels = {800, 1000, 1200, 1500, 1700, 1725, 1800};
  return sc;
}

Scenario Scenario::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path.string());
  Scenario sc;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "topology") sc.topology_file = val;
    else if (key == "gen_core") sc.gen_core = val;
    else if (key == "n_access") sc.n_access = static_cast<int>(to_int(key, val));
    else if (key == "cqf_per_access") sc.cqf_per_access = static_cast<int>(to_int(key, val));
    else if (key == "access_bw") sc.access_bw = to_int(key, val);
    else if (key == "access_delay_us") sc.access_delay_us = to_int(key, val);
    else if (key == "cqf_cycle_us") sc.cqf_cycle_us = to_int(key, val);
    else if (key == "dip_cycle_us") sc.dip_cycle_us = to_int(key, val);
    else if (key == "timings") sc.timings_file = val;
    else if (key == "flows") sc.flows_file = val;
    else if (key == "flows_per_access") sc.flows_per_access = static_cast<int>(to_int(key, val));
    else if (key == "rate_bps") sc.rate_bps = to_int(key, val);
    else if (key == "period_us") sc.period_us = to_int(key, val);
    else if (key == "deadline_us") sc.deadline_us = to_int(key, val);
    else if (key == "seed") sc.seed = static_cast<std::uint64_t>(to_int(key, val));
    else if (key == "k_paths") sc.k_paths = static_cast<int>(to_int(key, val));
    else if (key == "shaping") sc.shaping = to_bool(key, val);
    else if (key == "path_selection") sc.path_selection = to_bool(key, val);
    else if (key == "interference_mbps")
      sc.interference_mbps = to_list<double>(val, [&](const std::string& s) {
        return static_cast<double>(to_int(key, s));
      });
    else if (key == "horizon") sc.horizon_hypercycles = to_int(key, val);
    else if (key == "be_packet_bits") sc.be_packet_bits = to_int(key, val);
    else if (key == "load_levels")
      sc.load_levels = to_list<int>(val, [&](const std::string& s) {
        return static_cast<int>(to_int(key, s));
      });
    else
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": unknown scenario key: " + key);
  }
  return sc;
}

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> bad;
  if (cqf_cycle_us <= 0) bad.push_back("cqf_cycle_us must be positive");
  if (dip_cycle_us <= 0) bad.push_back("dip_cycle_us must be positive");
  if (period_us <= 0) bad.push_back("period_us must be positive");
  if (deadline_us <= 0) bad.push_back("deadline_us must be positive");
  if (k_paths < 1) bad.push_back("k_paths must be at least 1");
  if (horizon_hypercycles < 1) bad.push_back("horizon must be at least 1");
  if (be_packet_bits <= 0) bad.push_back("be_packet_bits must be positive");
  if (flows_file.empty()) {
    if (flows_per_access < 0) bad.push_back("flows_per_access must be non-negative");
    if (rate_bps <= 0) bad.push_back("rate_bps must be positive");
    else if (rate_bps * period_us % 1'000'000 != 0)
      bad.push_back("rate_bps * period_us is not a whole number of bits");
    if (topology_file.empty() && n_access < 2)
      bad.push_back("generated flows need at least 2 access networks");
  }
  if (topology_file.empty()) {
    if (n_access < 1) bad.push_back("n_access must be at least 1");
    if (cqf_per_access < 0) bad.push_back("cqf_per_access must be non-negative");
    if (access_bw <= 0) bad.push_back("access_bw must be positive");
    if (access_delay_us < 0) bad.push_back("access_delay_us must be non-negative");
  } else if (!std::filesystem::exists(topology_file)) {
    bad.push_back("topology file not found: " + topology_file);
  }
  if (!flows_file.empty() && !std::filesystem::exists(flows_file))
    bad.push_back("flows file not found: " + flows_file);
  if (!timings_file.empty() && !std::filesystem::exists(timings_file))
    bad.push_back("timings file not found: " + timings_file);
  if (interference_mbps.empty()) bad.push_back("interference ladder is empty");
  for (double r : interference_mbps)
    if (r < 0 || r > 1000)
      bad.push_back("interference rate outside [0, 1000] Mbps per gigabit: " + rate_label(r));
  if (load_levels.empty()) bad.push_back("load_levels is empty");
  for (size_t i = 0; i < load_levels.size(); ++i) {
    if (load_levels[i] < 0) bad.push_back("negative load level");
    if (i > 0 && load_levels[i] <= load_levels[i - 1]) {
      bad.push_back("load_levels must be strictly ascending");
      break;
    }
  }
  return bad;
}

ScenarioBuild build_scenario(const Scenario& sc) {
  auto bad = sc.validate();
  if (!bad.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw std::runtime_error(msg);
  }

  ScenarioBuild out;
  if (!sc.topology_file.empty()) {
    out.graph = load_topology(sc.topology_file);
  } else {
    AccessParams ap;
    ap.n_access = sc.n_access;
    ap.cqf_per_access = sc.cqf_per_access;
    ap.access_bw = sc.access_bw;
    ap.access_delay_us = sc.access_delay_us;
    out.graph = generate_hierarchical(generate_core(sc.gen_core), ap);
  }

  // one config per domain; sync mode follows the roles living in it
  std::map<DomainId, bool> has_dip;
  for (const auto& n : out.graph.nodes()) {
    bool dip = n.role == NodeRole::DipRouter || n.role == NodeRole::DipEdgeRouter;
    auto [it, fresh] = has_dip.emplace(n.domain, dip);
    if (!fresh) it->second = it->second || dip;
  }
  for (const auto& [dom, dip] : has_dip) {
    DomainConfig dc;
    dc.id = dom;
    dc.cycle_len_us = dip ? sc.dip_cycle_us : sc.cqf_cycle_us;
    dc.sync = dip ? SyncMode::FrequencyOnly : SyncMode::PerfectTime;
    out.domains.push_back(dc);
  }

  std::vector<Microseconds> periods;
  if (!sc.flows_file.empty()) {
    out.flows = load_flows(sc.flows_file);
    std::set<Microseconds> distinct;
    for (const auto& f : out.flows.flows) distinct.insert(f.period_us);
    periods.assign(distinct.begin(), distinct.end());
  } else {
    periods.push_back(sc.period_us);
  }
  out.hc = compute_hypercycle(out.domains, periods);

  if (!sc.timings_file.empty()) out.timings = load_timings(sc.timings_file);
  out.table = build_alignment_table(out.graph, out.domains, out.hc, out.timings);

  if (sc.flows_file.empty()) {
    FlowGenParams fp;
    fp.per_access = sc.flows_per_access;
    fp.rate_bps = sc.rate_bps;
    fp.period_us = sc.period_us;
    fp.deadline_us = sc.deadline_us;
    fp.seed = sc.seed;
    out.flows = generate_flows(out.graph, out.hc, out.domains, fp);
  }
  return out;
}

Experiment1Result run_experiment1(const Scenario& sc) {
  ScenarioBuild b = build_scenario(sc);
  SchedulingContext ctx(b.graph, b.domains, b.hc, b.table);
  SchedulerOptions sopt{sc.k_paths, sc.shaping, sc.path_selection};
  Schedule schedule = greedy_schedule(ctx, b.flows, sopt);

  Experiment1Result res;
  std::vector<std::string> accepted;
  for (const auto& [id, dec] : schedule.decisions) {
    if (dec.accepted) accepted.push_back(id);
    else res.rejected_flows++;
  }
  if (accepted.empty()) throw std::runtime_error("no flow was accepted; nothing to observe");
  std::mt19937_64 pick(mix64(sc.seed ^ 0xA11CE5ULL));
  res.observed_flow = accepted[pick() % accepted.size()];

  SimOptions opt;
  opt.horizon_hypercycles = sc.horizon_hypercycles;
  opt.timings = b.timings;
  for (double mbps : sc.interference_mbps) {
    InterferenceSpec spec;
    spec.rate_bps = static_cast<BitsPerSecond>(mbps * 1e6);
    spec.packet_size_bits = sc.be_packet_bits;
    spec.seed = sc.seed;
    SimTrace be = run_best_effort(ctx, b.flows, spec, opt);
    SimTrace sched = run_simulation(ctx, schedule, b.flows, spec, opt);

    Experiment1Row row;
    row.rate_mbps = mbps;
    row.best_effort = summarize(be, sc.deadline_us).aggregate;
    row.scheduled = summarize(sched, sc.deadline_us).aggregate;
    res.rows.push_back(row);
    res.cdfs.emplace_back(mbps, "besteffort", delay_cdf(be, res.observed_flow));
    res.cdfs.emplace_back(mbps, "scheduled", delay_cdf(sched, res.observed_flow));
    res.be_traces.emplace_back(mbps, std::move(be));
    res.sched_traces.emplace_back(mbps, std::move(sched));
  }
  return res;
}

Experiment2Result run_experiment2(const Scenario& sc) {
  ScenarioBuild b = build_scenario(sc);
  SchedulingContext ctx(b.graph, b.domains, b.hc, b.table);

  Experiment2Result res;
  struct Strat {
    const char* name;
    SchedulerOptions opt;
  };
  std::vector<Strat> strategies = {
      {"joint", {sc.k_paths, true, true}},
      {"no-path-selection", {sc.k_paths, true, false}},
      {"no-shaping", {sc.k_paths, false, true}},
  };
  for (int level : sc.load_levels) {
    FlowGenParams fp;
    fp.per_access = level;
    fp.rate_bps = sc.rate_bps;
    fp.period_us = sc.period_us;
    fp.deadline_us = sc.deadline_us;
    fp.seed = sc.seed;
    FlowSet flows = generate_flows(b.graph, b.hc, b.domains, fp);
    for (const auto& st : strategies) {
      Schedule s = greedy_schedule(ctx, flows, st.opt);
      Experiment2Cell cell;
      cell.load_level = level;
      cell.strategy = st.name;
      for (const auto& [id, dec] : s.decisions)
        (dec.accepted ? cell.accepted : cell.rejected)++;
      cell.objective = s.objective;
      res.cells.push_back(cell);
    }
  }
  return res;
}

namespace {

nlohmann::json stats_json(const DelayStats& s) {
  return {{"count", s.count},         {"mean_us", s.mean_us},
          {"min_us", s.min_us},       {"max_us", s.max_us},
          {"jitter_us", s.jitter_us}, {"beyond_deadline", s.beyond_deadline}};
}

void open_out(std::ofstream& out, const std::filesystem::path& p) {
  out.open(p, std::ios::binary);  // binary keeps reruns byte-identical everywhere
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

void close_out(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace

void emit_report(const std::optional<Experiment1Result>& e1,
                 const std::optional<Experiment2Result>& e2,
                 const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string());

  if (e1) {
    nlohmann::json j;
    j["observed_flow"] = e1->observed_flow;
    j["rejected_flows"] = e1->rejected_flows;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : e1->rows) {
      j["rows"].push_back({{"rate_mbps", row.rate_mbps},
                           {"besteffort", stats_json(row.best_effort)},
                           {"scheduled", stats_json(row.scheduled)}});
    }
    auto p = out_dir / "exp1_stats.json";
    std::ofstream out;
    open_out(out, p);
    out << j.dump(2) << "\n";
    close_out(out, p);

    auto pc = out_dir / "exp1_cdf.csv";
    std::ofstream cdf;
    open_out(cdf, pc);
    cdf << "rate_mbps,mode,delay_us,fraction\n";
    char buf[96];
    for (const auto& [rate, mode, points] : e1->cdfs) {
      for (const auto& [delay, frac] : points) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%.6f\n", rate_label(rate).c_str(),
                      mode.c_str(), delay, frac);
        cdf << buf;
      }
    }
    close_out(cdf, pc);

    for (const auto& [rate, trace] : e1->be_traces)
      write_trace_csv(trace, out_dir / ("exp1_trace_besteffort_" + rate_label(rate) + ".csv"));
    for (const auto& [rate, trace] : e1->sched_traces)
      write_trace_csv(trace, out_dir / ("exp1_trace_scheduled_" + rate_label(rate) + ".csv"));
  }

  if (e2) {
    auto p = out_dir / "exp2_rejections.csv";
    std::ofstream out;
    open_out(out, p);
    out << "load_level,strategy,accepted,rejected,objective\n";
    char buf[128];
    for (const auto& c : e2->cells) {
      std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%.6f\n", c.load_level, c.strategy.c_str(),
                    c.accepted, c.rejected, c.objective);
      out << buf;
    }
    close_out(out, p);
  }
}

}  // namespace detnet
