#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "detnet/flows.hpp"
#include "detnet/scheduler.hpp"
#include "detnet/timebase.hpp"
#include "detnet/topology.hpp"
#include "doctest.h"

using namespace detnet;

namespace {

struct World {
  NetworkGraph g;
  std::vector<DomainConfig> domains;
  HypercycleSpec hc;
  AlignmentTable table;
  World(NetworkGraph graph, std::vector<DomainConfig> ds, std::vector<Microseconds> periods)
      : g(std::move(graph)), domains(std::move(ds)) {
    hc = compute_hypercycle(domains, periods);
    table = build_alignment_table(g, domains, hc, {}, true);
  }
  SchedulingContext ctx() const { return SchedulingContext(g, domains, hc, table); }
};

// One synced access domain, a star: two hosts feed a switch that reaches two
// sinks. bw_bps controls how many payloads fit per cycle.
World star_world(BitsPerSecond bw_bps) {
  NetworkGraph g;
  g.add_node({"h1", NodeRole::Source, "acc"});
  g.add_node({"h2", NodeRole::Source, "acc"});
  g.add_node({"s", NodeRole::CqfSwitch, "acc"});
  g.add_node({"d1", NodeRole::Destination, "acc"});
  g.add_node({"d2", NodeRole::Destination, "acc"});
  g.add_link({"h1", "s", 1, bw_bps});
  g.add_link({"h2", "s", 1, bw_bps});
  g.add_link({"s", "d1", 1, bw_bps});
  g.add_link({"s", "d2", 1, bw_bps});
  return World(std::move(g), {{"acc", 25, SyncMode::PerfectTime}}, {1000});
}

TsFlow mk_flow(const std::string& id, const std::string& src, const std::string& dst,
               double weight, std::int64_t release, Microseconds deadline = 1000) {
  TsFlow f;
  f.id = id;
  f.src = src;
  f.dst = dst;
  f.period_us = 1000;
  f.payload_bits = 500;
  f.deadline_us = deadline;
  f.weight = weight;
  f.release_cycle = release;
  return f;
}

World desk_world() {
  AccessParams ap;
  NetworkGraph g = generate_hierarchical(generate_core("desk8"), ap);
  std::vector<DomainConfig> ds;
  for (int k = 0; k < ap.n_access; ++k)
    ds.push_back({"acc" + std::to_string(k), 20, SyncMode::PerfectTime});
  ds.push_back({"dip", 10, SyncMode::FrequencyOnly});
  return World(std::move(g), std::move(ds), {1000});
}

}  // namespace

TEST_CASE("store-and-forward delay window per hop count") {
  CHECK(cqf_bounds(3, 25) == std::pair<Microseconds, Microseconds>{100, 50});
  CHECK(cqf_bounds(1, 50) == std::pair<Microseconds, Microseconds>{100, 0});
  CHECK(cqf_bounds(2, 10) == std::pair<Microseconds, Microseconds>{30, 10});
  CHECK_THROWS_AS(cqf_bounds(0, 25), std::invalid_argument);
  CHECK_THROWS_AS(cqf_bounds(2, 0), std::invalid_argument);
}

TEST_CASE("delay bound sums per-node holds and wire delays") {
  // Source in a 25us domain holding two extra cycles, then a 10us-domain
  // router retransmitting next cycle: 3*25 + 1 + 2*10 + 150 = 246.
  NetworkGraph g;
  g.add_node({"h", NodeRole::Source, "acc"});
  g.add_node({"r", NodeRole::DipEdgeRouter, "core"});
  g.add_node({"d", NodeRole::Destination, "core"});
  g.add_link({"h", "r", 1, 1'000'000'000});
  g.add_link({"r", "d", 150, 10'000'000'000});
  World w(std::move(g), {{"acc", 25, SyncMode::PerfectTime}, {"core", 10, SyncMode::FrequencyOnly}},
          {1000});
  SchedulingContext ctx = w.ctx();

  std::vector<int> path{*w.g.node_index("h"), *w.g.node_index("r"), *w.g.node_index("d")};
  Shifts sh;
  sh.r = {2, 1, 0};
  CHECK(delay_upper_bound(ctx, path, sh) == 246);

  sh.r = {0, 1, 0};
  CHECK(delay_upper_bound(ctx, path, sh) == 196);  // dropping the hold drops 2 cycles

  Shifts bad;
  bad.r = {2, 1};
  CHECK_THROWS_AS(delay_upper_bound(ctx, path, bad), std::invalid_argument);
  std::vector<int> tiny{path[0]};
  CHECK_THROWS_AS(delay_upper_bound(ctx, tiny, sh), std::invalid_argument);
}

TEST_CASE("transmit cycles walk the alignment table") {
  World w = star_world(1'000'000'000);
  SchedulingContext ctx = w.ctx();
  std::vector<int> path{*w.g.node_index("h1"), *w.g.node_index("s"), *w.g.node_index("d1")};

  // Synced domain: alignment is the identity, so each retransmission lands
  // one cycle after the previous transmit.
  Shifts sh;
  sh.r = {0, 1, 0};
  CHECK(transmit_cycles(ctx, path, 5, sh) == std::vector<std::int64_t>{5, 6});
  sh.r = {3, 1, 0};
  CHECK(transmit_cycles(ctx, path, 5, sh) == std::vector<std::int64_t>{8, 9});
  // wraps at the hypercycle boundary (40 cycles of 25us)
  CHECK(transmit_cycles(ctx, path, 39, sh) == std::vector<std::int64_t>{2, 3});
}

TEST_CASE("per-cycle ledger reserves and releases atomically") {
  World w = star_world(20'000'000);  // 20 kbps * 25 us = 500 bits per cycle
  SchedulingContext ctx = w.ctx();
  CycleLedger ledger(ctx);

  CHECK(ledger.residual(0, 0) == 500);
  CHECK(ledger.fits(0, 0, 500));
  CHECK(!ledger.fits(0, 0, 501));
  ledger.reserve(0, 0, 500);
  CHECK(ledger.residual(0, 0) == 0);
  CHECK(ledger.residual(0, 1) == 500);  // other cycles untouched
  CHECK_THROWS_AS(ledger.reserve(0, 0, 1), std::logic_error);
  ledger.release(0, 0, 500);
  CHECK(ledger.residual(0, 0) == 500);
  CHECK_THROWS_AS(ledger.release(0, 0, 1), std::logic_error);
}

TEST_CASE("admission rejects each broken input with a specific reason") {
  World w = star_world(20'000'000);
  SchedulingContext ctx = w.ctx();
  CycleLedger ledger(ctx);
  std::vector<int> path{*w.g.node_index("h1"), *w.g.node_index("s"), *w.g.node_index("d1")};
  TsFlow f = mk_flow("f0", "h1", "d1", 0.5, 5);

  Shifts ok;
  ok.r = {0, 1, 0};
  CHECK(admissible(ctx, f, path, ok, ledger).ok);

  Shifts wrong_len;
  wrong_len.r = {0, 1};
  CHECK(admissible(ctx, f, path, wrong_len, ledger).reason == "shift vector length mismatch");

  Shifts interior;
  interior.r = {0, 2, 0};
  CHECK(admissible(ctx, f, path, interior, ledger).reason == "interior shift must be 1 at s");

  Shifts dest;
  dest.r = {0, 1, 1};
  CHECK(admissible(ctx, f, path, dest, ledger).reason == "destination shift must be 0");

  Shifts range;
  range.r = {40, 1, 0};
  CHECK(admissible(ctx, f, path, range, ledger).reason == "shift out of range at h1");

  TsFlow tight = mk_flow("f1", "h1", "d1", 0.5, 5, 51);  // the cheapest pattern needs 77us
  CHECK(admissible(ctx, tight, path, ok, ledger).reason == "deadline");

  TsFlow fat = mk_flow("f2", "h1", "d1", 0.5, 5);
  fat.payload_bits = 501;  // one bit over the 500-bit cycle budget
  auto adm = admissible(ctx, fat, path, ok, ledger);
  CHECK(!adm.ok);
  CHECK(adm.reason == "capacity at node h1 cycle 5");

  TsFlow mismatch = mk_flow("f3", "h2", "d1", 0.5, 5);
  CHECK(admissible(ctx, mismatch, path, ok, ledger).reason == "path endpoints do not match flow");

  TsFlow offbeat = mk_flow("f4", "h1", "d1", 0.5, 5);
  offbeat.period_us = 30;  // not a divisor of the 1000us hypercycle
  CHECK(admissible(ctx, offbeat, path, ok, ledger).reason == "period does not divide hypercycle");
}

TEST_CASE("source shifts unlock a cycle-saturated port") {
  World w = star_world(20'000'000);  // exactly one payload per cycle
  SchedulingContext ctx = w.ctx();
  FlowSet fs;
  fs.flows.push_back(mk_flow("f0", "h1", "d1", 0.9, 5));
  fs.flows.push_back(mk_flow("f1", "h1", "d2", 0.8, 5));

  SchedulerOptions with;
  Schedule s1 = greedy_schedule(ctx, fs, with);
  CHECK(s1.decisions.at("f0").accepted);
  CHECK(s1.decisions.at("f1").accepted);
  CHECK(s1.objective == doctest::Approx(1.7));
  // the lighter flow paid for the detour with one held cycle
  CHECK(s1.decisions.at("f0").shifts.r[0] == 0);
  CHECK(s1.decisions.at("f1").shifts.r[0] == 1);
  CHECK(s1.decisions.at("f1").delay_bound_us == s1.decisions.at("f0").delay_bound_us + 25);

  SchedulerOptions without;
  without.shaping = false;
  Schedule s2 = greedy_schedule(ctx, fs, without);
  CHECK(s2.decisions.at("f0").accepted);
  CHECK(!s2.decisions.at("f1").accepted);
  CHECK(s2.decisions.at("f1").reject_reason == "capacity at node h1 cycle 5");
  CHECK(s2.objective == doctest::Approx(0.9));
}

TEST_CASE("heavier flows are admitted first") {
  World w = star_world(20'000'000);
  SchedulingContext ctx = w.ctx();
  // Tight deadline leaves a single candidate pattern per flow, so the two
  // flows fight for the same cycle and weight decides, not id order.
  FlowSet fs;
  fs.flows.push_back(mk_flow("a_light", "h1", "d1", 0.3, 5, 77));
  fs.flows.push_back(mk_flow("b_heavy", "h1", "d2", 0.7, 5, 77));
  Schedule s = greedy_schedule(ctx, fs, {});
  CHECK(s.decisions.at("b_heavy").accepted);
  CHECK(!s.decisions.at("a_light").accepted);
}

TEST_CASE("greedy is deterministic and the exact solver beats its trap") {
  World w = star_world(20'000'000);
  SchedulingContext ctx = w.ctx();
  // One heavy flow whose only pattern blocks two lighter flows that are
  // mutually compatible. Greedy grabs the heavy one; exhaustive search
  // takes the pair.
  FlowSet fs;
  fs.flows.push_back(mk_flow("fa", "h1", "d1", 0.9, 5, 77));
  fs.flows.push_back(mk_flow("fb", "h1", "d2", 0.6, 5, 77));  // shares h1->s with fa
  fs.flows.push_back(mk_flow("fc", "h2", "d1", 0.6, 5, 77));  // shares s->d1 with fa

  Schedule g1 = greedy_schedule(ctx, fs, {});
  Schedule g2 = greedy_schedule(ctx, fs, {});
  CHECK(g1.objective == g2.objective);
  for (auto& [id, d] : g1.decisions) {
    CHECK(d.accepted == g2.decisions.at(id).accepted);
    CHECK(d.path == g2.decisions.at(id).path);
    CHECK(d.shifts.r == g2.decisions.at(id).shifts.r);
  }

  CHECK(g1.decisions.at("fa").accepted);
  CHECK(!g1.decisions.at("fb").accepted);
  CHECK(!g1.decisions.at("fc").accepted);
  CHECK(g1.objective == doctest::Approx(0.9));

  Schedule ex = exact_schedule_small(ctx, fs, {});
  CHECK(!ex.decisions.at("fa").accepted);
  CHECK(ex.decisions.at("fb").accepted);
  CHECK(ex.decisions.at("fc").accepted);
  CHECK(ex.objective == doctest::Approx(1.2));
  CHECK(ex.objective >= g1.objective);
}

TEST_CASE("exact solver enforces its instance limits") {
  World w = star_world(1'000'000'000);
  SchedulingContext ctx = w.ctx();
  // deadline 77 pins each flow to its single zero-shift pattern, keeping the
  // exhaustive search trivial even with extra flows
  FlowSet fs;
  for (int i = 0; i < 11; ++i)
    fs.flows.push_back(mk_flow("f" + std::to_string(i), "h1", "d1", 0.5, i % 40, 77));
  CHECK_THROWS_WITH_AS(exact_schedule_small(ctx, fs, {}),
                       "instance too large for exact solver", std::runtime_error);

  ExactLimits roomy;
  roomy.max_flows = 16;
  Schedule s = exact_schedule_small(ctx, fs, {}, roomy);
  int accepted = 0;
  for (auto& [id, d] : s.decisions) accepted += d.accepted;
  CHECK(accepted == 11);  // ample capacity, nothing contends

  // a single slack-rich flow has dozens of shift patterns on offer
  FlowSet loose;
  loose.flows.push_back(mk_flow("f0", "h1", "d1", 0.5, 5));
  ExactLimits narrow;
  narrow.max_patterns = 5;
  CHECK_THROWS_WITH_AS(exact_schedule_small(ctx, loose, {}, narrow),
                       "instance too large for exact solver", std::runtime_error);
}

TEST_CASE("schedule validation rejects malformed flow sets") {
  World w = star_world(1'000'000'000);
  SchedulingContext ctx = w.ctx();

  FlowSet dup;
  dup.flows.push_back(mk_flow("f0", "h1", "d1", 0.5, 0));
  dup.flows.push_back(mk_flow("f0", "h2", "d2", 0.5, 0));
  CHECK_THROWS_WITH_AS(greedy_schedule(ctx, dup, {}), "duplicate flow id: f0",
                       std::runtime_error);

  FlowSet ghost;
  ghost.flows.push_back(mk_flow("f0", "nope", "d1", 0.5, 0));
  CHECK_THROWS_AS(greedy_schedule(ctx, ghost, {}), std::runtime_error);

  FlowSet swapped;
  swapped.flows.push_back(mk_flow("f0", "d1", "h1", 0.5, 0));
  CHECK_THROWS_AS(greedy_schedule(ctx, swapped, {}), std::runtime_error);

  FlowSet late;
  late.flows.push_back(mk_flow("f0", "h1", "d1", 0.5, 40));  // only 40 cycles exist
  CHECK_THROWS_AS(greedy_schedule(ctx, late, {}), std::runtime_error);
}

TEST_CASE("desk-scale schedule lands on its frozen shape") {
  World w = desk_world();
  SchedulingContext ctx = w.ctx();
  FlowGenParams fp;
  fp.per_access = 50;
  fp.rate_bps = 8'000'000;
  fp.seed = 1;
  FlowSet fs = generate_flows(w.g, w.hc, w.domains, fp);
  Schedule s = greedy_schedule(ctx, fs, {});

  int accepted = 0;
  for (auto& [id, d] : s.decisions) accepted += d.accepted;
  CHECK(accepted == 200);
  CHECK(s.objective == doctest::Approx(96.703322).epsilon(1e-6));

  // First flow crosses access 0 to access 2 over two core cables: holds of
  // 330us across twelve transmitting nodes plus 310us of wire.
  const FlowDecision& d0 = s.decisions.at("f00000");
  REQUIRE(d0.accepted);
  CHECK(d0.delay_bound_us == 640);
  CHECK(d0.path.size() == 13);
  CHECK(d0.shifts.r ==
        std::vector<std::int64_t>{0, 1, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 0});

  for (auto& [id, d] : s.decisions) {
    if (!d.accepted) continue;
    CHECK(d.delay_bound_us <= 1000);
    Microseconds props = 0;
    for (size_t i = 0; i + 1 < d.path.size(); ++i)
      props += w.g.link(*w.g.link_index(d.path[i], d.path[i + 1])).prop_delay_us;
    CHECK(d.delay_bound_us >= props);
  }

  // Every accepted decision replays cleanly against a fresh ledger.
  CycleLedger replay(ctx);
  std::map<std::string, const TsFlow*> by_id;
  for (const auto& f : fs.flows) by_id[f.id] = &f;
  for (auto& [id, d] : s.decisions) {
    if (!d.accepted) continue;
    const TsFlow& f = *by_id.at(id);
    REQUIRE(admissible(ctx, f, d.path, d.shifts, replay).ok);
    auto cyc = transmit_cycles(ctx, d.path, f.release_cycle, d.shifts);
    for (size_t i = 0; i + 1 < d.path.size(); ++i) {
      int link = *w.g.link_index(d.path[i], d.path[i + 1]);
      std::int64_t n = ctx.cycle_count(d.path[i]);
      std::int64_t stride = f.period_us / ctx.cycle_len_us(d.path[i]);
      for (std::int64_t j = 0; j < w.hc.hc_len_us / f.period_us; ++j)
        replay.reserve(link, (cyc[i] + j * stride) % n, f.payload_bits);
    }
  }
}

TEST_CASE("schedules survive a save and load cycle") {
  World w = star_world(20'000'000);
  SchedulingContext ctx = w.ctx();
  FlowSet fs;
  fs.flows.push_back(mk_flow("f0", "h1", "d1", 0.9, 5));
  fs.flows.push_back(mk_flow("f1", "h1", "d2", 0.8, 5));
  fs.flows.push_back(mk_flow("f2", "h2", "d1", 0.7, 5, 51));  // deadline < bound, rejected
  Schedule s = greedy_schedule(ctx, fs, {});
  REQUIRE(!s.decisions.at("f2").accepted);

  auto tmp = std::filesystem::temp_directory_path() / "det_sched_rt.json";
  save_schedule(s, w.g, tmp);
  Schedule back = load_schedule(w.g, tmp);
  CHECK(back.objective == doctest::Approx(s.objective));
  REQUIRE(back.decisions.size() == s.decisions.size());
  for (auto& [id, d] : s.decisions) {
    const FlowDecision& b = back.decisions.at(id);
    CHECK(b.accepted == d.accepted);
    CHECK(b.path == d.path);
    CHECK(b.shifts.r == d.shifts.r);
    CHECK(b.delay_bound_us == d.delay_bound_us);
    CHECK(b.reject_reason == d.reject_reason);
  }
  std::filesystem::remove(tmp);

  CHECK_THROWS_AS(load_schedule(w.g, "/nonexistent/schedule.json"), std::runtime_error);
}
