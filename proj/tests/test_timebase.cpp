#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "detnet/timebase.hpp"
#include "detnet/topology.hpp"
#include "doctest.h"

using namespace detnet;

namespace {

// Reference mapping, derived by search instead of closed form: the last
// destination cycle T whose window (T*den, (T+1)*den] still contains the
// latest possible arrival instant num. Deliberately dumb so it cannot share
// a bug with the production formula.
std::int64_t ref_last_cycle(std::int64_t num, std::int64_t den) {
  std::int64_t t = num / den - 2;
  while (!((t * den < num) && (num <= (t + 1) * den))) ++t;
  return t;
}

std::int64_t ref_mod(std::int64_t a, std::int64_t n) {
  std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

DomainConfig dom(const std::string& id, Microseconds cyc, SyncMode s) {
  DomainConfig d;
  d.id = id;
  d.cycle_len_us = cyc;
  d.sync = s;
  return d;
}

}  // namespace

TEST_CASE("dip alignment matches hand-checked adjacencies") {
  // 10us cycles, three per hypercycle, 12us of wire plus a 5us clock offset:
  // cycle 0 ends at 10, so its last packet can land as late as 27 on the
  // downstream clock, i.e. inside downstream cycle 2.
  AdjacencyTiming t{"a", "b", 5, 12};
  CHECK(align_dip(0, 10, 3, t) == 2);
  CHECK(align_dip(0, 10, 3, t) == ref_mod(ref_last_cycle(1 * 10 + 12 + 5, 10), 3));

  // Ideal adjacency: no wire, no offset. A cycle's traffic lands in the
  // same-numbered cycle, with the boundary instant counting backwards.
  AdjacencyTiming zero{"a", "b", 0, 0};
  CHECK(align_dip(0, 10, 3, zero) == 0);
  CHECK(align_dip(1, 10, 3, zero) == 1);
  CHECK(align_dip(2, 10, 3, zero) == 2);

  CHECK(align_cqf(0) == 0);
  CHECK(align_cqf(7) == 7);
}

TEST_CASE("cross-domain alignment matches hand-checked adjacency") {
  // 4us source cycles against 5us destination cycles under a 20us
  // hypercycle. Source cycle 1 ends at 8; 5us wire + 4us offset puts the
  // last arrival at 17, inside destination cycle 3.
  AdjacencyTiming t{"a", "b", 4, 5};
  CHECK(align_cross(1, 4, 5, 20, t) == 3);
  CHECK(align_cross(1, 4, 5, 20, t) == ref_mod(ref_last_cycle(2 * 4 + 5 + 4, 5), 4));

  CHECK_THROWS_WITH_AS(align_cross(0, 0, 5, 20, t), "align_cross: bad cycle config",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(align_cross(0, 4, 5, 21, t),
                       "align_cross: hypercycle not a multiple of both cycle lengths",
                       std::invalid_argument);
  CHECK_THROWS_AS(align_dip(0, 10, 0, t), std::invalid_argument);
}

TEST_CASE("alignment is periodic, in range, and matches the search oracle") {
  std::mt19937_64 rng(20260817ull);
  int mismatches = 0;
  for (int it = 0; it < 400; ++it) {
    std::int64_t cyc = 1 + static_cast<std::int64_t>(rng() % 60);
    std::int64_t n = 2 + static_cast<std::int64_t>(rng() % 12);
    AdjacencyTiming t{"u", "v", static_cast<Microseconds>(rng() % (cyc * n)),
                      static_cast<Microseconds>(rng() % (3 * cyc))};
    for (std::int64_t x = 0; x < n; ++x) {
      std::int64_t phi = align_dip(x, cyc, n, t);
      if (phi < 0 || phi >= n) ++mismatches;
      if (phi != align_dip(x + n, cyc, n, t)) ++mismatches;
      if (phi != align_dip(x - 3 * n, cyc, n, t)) ++mismatches;
      std::int64_t num = ((x + 1) % n) * cyc + t.prop_delay_us + t.hco_us;
      if (phi != ref_mod(ref_last_cycle(num, cyc), n)) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("cross-domain alignment degenerates to the single-domain form") {
  std::mt19937_64 rng(99ull);
  int mismatches = 0;
  for (int it = 0; it < 100; ++it) {
    std::int64_t cyc = 1 + static_cast<std::int64_t>(rng() % 40);
    std::int64_t n = 2 + static_cast<std::int64_t>(rng() % 10);
    AdjacencyTiming t{"u", "v", static_cast<Microseconds>(rng() % (cyc * n)),
                      static_cast<Microseconds>(rng() % (4 * cyc))};
    for (std::int64_t x = 0; x < n; ++x)
      if (align_cross(x, cyc, cyc, cyc * n, t) != align_dip(x, cyc, n, t)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("shifting the clock offset by one destination cycle shifts the mapping") {
  std::mt19937_64 rng(7ull);
  int mismatches = 0;
  for (int it = 0; it < 200; ++it) {
    std::int64_t hc = 120;
    std::int64_t src = std::vector<std::int64_t>{3, 4, 5, 6}[rng() % 4];
    std::int64_t dst = std::vector<std::int64_t>{4, 5, 8, 10}[rng() % 4];
    std::int64_t n_src = hc / src;
    std::int64_t n_dst = hc / dst;
    AdjacencyTiming t{"u", "v", static_cast<Microseconds>(rng() % (hc - dst)),
                      static_cast<Microseconds>(rng() % 20)};
    AdjacencyTiming t2 = t;
    t2.hco_us += dst;
    for (std::int64_t x = 0; x < n_src; ++x) {
      std::int64_t a = align_cross(x, src, dst, hc, t);
      std::int64_t b = align_cross(x, src, dst, hc, t2);
      if (b != (a + 1) % n_dst) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("randomized wall-clock timeline never outruns the alignment table") {
  // The mapping promises: every packet transmitted during source cycle x is
  // on the destination wire no later than the end of the mapped destination
  // cycle. Check it at nanosecond resolution against uniformly sampled
  // departure instants, and check the mapped cycle is actually reached.
  std::mt19937_64 r2(424242ull);
  const std::int64_t kConfigs = 1000;
  const std::int64_t kSamples = 1000;
  std::int64_t late = 0, unreachable = 0, label_mismatch = 0;
  const std::vector<std::int64_t> divs{2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 24, 30, 40, 60};
  for (std::int64_t c = 0; c < kConfigs; ++c) {
    std::int64_t hc = 120 * (1 + static_cast<std::int64_t>(r2() % 4));  // 120..480us
    std::int64_t src = divs[r2() % divs.size()];
    std::int64_t dst = divs[r2() % divs.size()];
    while (hc % src != 0) src = divs[r2() % divs.size()];
    while (hc % dst != 0) dst = divs[r2() % divs.size()];
    std::int64_t n_src = hc / src;
    std::int64_t n_dst = hc / dst;
    AdjacencyTiming t{"u", "v", static_cast<Microseconds>(r2() % hc),
                      static_cast<Microseconds>(r2() % (2 * hc))};
    std::int64_t x = static_cast<std::int64_t>(r2() % static_cast<std::uint64_t>(4 * n_src));
    std::int64_t phi = align_cross(x, src, dst, hc, t);

    // Unreduced window index on a shared wall clock whose zero is the
    // destination hypercycle start; the table entry is its residue.
    std::int64_t num_u = (x + 1) * src + t.prop_delay_us + t.hco_us;
    std::int64_t tu = ref_last_cycle(num_u, dst);
    if (ref_mod(tu, n_dst) != phi) ++label_mismatch;

    // Latest possible arrival must land inside window tu, not after it.
    if (!(tu * dst * 1000 < num_u * 1000 && num_u * 1000 <= (tu + 1) * dst * 1000))
      ++unreachable;

    for (std::int64_t s = 0; s < kSamples; ++s) {
      std::int64_t delta_ns = 1 + static_cast<std::int64_t>(r2() % (src * 1000ull));
      std::int64_t arrival_ns = (x * src + t.prop_delay_us + t.hco_us) * 1000 + delta_ns;
      if (arrival_ns > (tu + 1) * dst * 1000) ++late;
    }
  }
  CHECK(late == 0);
  CHECK(unreachable == 0);
  CHECK(label_mismatch == 0);
}

TEST_CASE("hypercycle spans cycle lengths and flow periods") {
  std::vector<DomainConfig> ds{dom("acc", 25, SyncMode::PerfectTime),
                               dom("core", 10, SyncMode::FrequencyOnly)};
  std::vector<Microseconds> periods{1000};
  HypercycleSpec hc = compute_hypercycle(ds, periods);
  CHECK(hc.hc_len_us == 1000);
  CHECK(hc.cycles_per_domain.at("acc") == 40);
  CHECK(hc.cycles_per_domain.at("core") == 100);
  CHECK(hc.flow_multiple == 1);

  std::vector<Microseconds> mixed{500, 250};
  HypercycleSpec hc2 = compute_hypercycle(ds, mixed);
  CHECK(hc2.hc_len_us == 500);
  CHECK(hc2.cycles_per_domain.at("acc") == 20);
  CHECK(hc2.cycles_per_domain.at("core") == 50);
  CHECK(hc2.flow_multiple == 2);

  std::vector<DomainConfig> nf{dom("a", 10, SyncMode::PerfectTime),
                               dom("b", 15, SyncMode::FrequencyOnly)};
  HypercycleSpec hc3 = compute_hypercycle(nf, {});
  CHECK(hc3.hc_len_us == 30);
  CHECK(hc3.cycles_per_domain.at("a") == 3);
  CHECK(hc3.cycles_per_domain.at("b") == 2);
  CHECK(hc3.flow_multiple == 1);
}

TEST_CASE("hypercycle rejects degenerate and overflowing configs") {
  CHECK_THROWS_WITH_AS(compute_hypercycle({}, {}), "no domains", std::invalid_argument);

  std::vector<DomainConfig> zero{dom("a", 0, SyncMode::PerfectTime)};
  CHECK_THROWS_AS(compute_hypercycle(zero, {}), std::invalid_argument);

  std::vector<DomainConfig> one{dom("a", 10, SyncMode::PerfectTime)};
  std::vector<Microseconds> p0{0};
  CHECK_THROWS_WITH_AS(compute_hypercycle(one, p0), "non-positive flow period",
                       std::invalid_argument);

  // A ping-pong domain spanning its whole hypercycle has nowhere to
  // alternate: 10us cycle, 10us period gives one cycle per hypercycle.
  std::vector<Microseconds> p10{10};
  CHECK_THROWS_AS(compute_hypercycle(one, p10), std::runtime_error);
  try {
    compute_hypercycle(one, p10);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("below the queue minimum") != std::string::npos);
  }

  // Two cycles per hypercycle is enough only on the frequency-synced side.
  std::vector<DomainConfig> two_pt{dom("a", 10, SyncMode::PerfectTime)};
  std::vector<DomainConfig> two_fo{dom("a", 10, SyncMode::FrequencyOnly)};
  std::vector<Microseconds> p20{20};
  CHECK_THROWS_AS(compute_hypercycle(two_pt, p20), std::runtime_error);
  CHECK(compute_hypercycle(two_fo, p20).cycles_per_domain.at("a") == 2);

  std::vector<DomainConfig> primes{dom("a", 999983, SyncMode::FrequencyOnly),
                                   dom("b", 999979, SyncMode::FrequencyOnly)};
  CHECK_THROWS_WITH_AS(compute_hypercycle(primes, {}), "hypercycle overflow",
                       std::overflow_error);
}

TEST_CASE("hypercycle is the least common multiple, not just a common one") {
  std::mt19937_64 rng(5150ull);
  const std::vector<Microseconds> pool{2, 3, 4, 5, 6, 8, 9, 10, 12, 15};
  int tested = 0;
  for (int it = 0; it < 100; ++it) {
    Microseconds c1 = pool[rng() % pool.size()];
    Microseconds c2 = pool[rng() % pool.size()];
    Microseconds p = pool[rng() % pool.size()];
    std::vector<DomainConfig> ds{dom("a", c1, SyncMode::FrequencyOnly),
                                 dom("b", c2, SyncMode::FrequencyOnly)};
    std::vector<Microseconds> ps{p};
    HypercycleSpec hc;
    try {
      hc = compute_hypercycle(ds, ps);
    } catch (const std::runtime_error&) {
      continue;  // cycle count below minimum; fine for this property
    }
    ++tested;
    REQUIRE(hc.hc_len_us % c1 == 0);
    REQUIRE(hc.hc_len_us % c2 == 0);
    REQUIRE(hc.hc_len_us % p == 0);
    for (Microseconds d = 1; d < hc.hc_len_us; ++d)
      if (d % c1 == 0 && d % c2 == 0 && d % p == 0) REQUIRE(d == hc.hc_len_us);
  }
  CHECK(tested >= 50);
}

namespace {

// Two-domain chain: host -> switch -> gateway inside a time-synced access
// domain, then gateway -> router into a frequency-synced core.
NetworkGraph chain_graph(Microseconds cqf_prop) {
  NetworkGraph g;
  g.add_node({"h", NodeRole::Source, "acc"});
  g.add_node({"s", NodeRole::CqfSwitch, "acc"});
  g.add_node({"gw", NodeRole::CqfEdgeSwitch, "acc"});
  g.add_node({"r", NodeRole::DipEdgeRouter, "core"});
  g.add_link({"h", "s", cqf_prop, 1'000'000'000});
  g.add_link({"s", "gw", cqf_prop, 1'000'000'000});
  g.add_link({"gw", "r", 12, 10'000'000'000});
  return g;
}

std::vector<DomainConfig> chain_domains() {
  return {dom("acc", 25, SyncMode::PerfectTime), dom("core", 10, SyncMode::FrequencyOnly)};
}

}  // namespace

TEST_CASE("alignment table mirrors the per-link formulas") {
  NetworkGraph g = chain_graph(1);
  auto ds = chain_domains();
  std::vector<Microseconds> periods{1000};
  HypercycleSpec hc = compute_hypercycle(ds, periods);
  TimingMap timings;
  timings[{"gw", "r"}] = 5;
  AlignmentTable table = build_alignment_table(g, ds, hc, timings);

  REQUIRE(table.size() == 3);
  for (int li = 0; li < 2; ++li)
    for (std::int64_t x = 0; x < 40; ++x) CHECK(table.phi(li, x) == x);

  AdjacencyTiming t{"gw", "r", 5, 12};
  for (std::int64_t x = 0; x < 40; ++x)
    CHECK(table.phi(2, x) == align_cross(x, 25, 10, 1000, t));

  // Negative cycle index is the same residue class.
  CHECK(table.phi(2, -1) == table.phi(2, 39));
  CHECK_THROWS_AS(table.phi(9, 0), std::out_of_range);
}

TEST_CASE("alignment table rejects broken timing setups") {
  auto ds = chain_domains();
  std::vector<Microseconds> periods{1000};
  HypercycleSpec hc = compute_hypercycle(ds, periods);

  NetworkGraph g = chain_graph(1);
  CHECK_NOTHROW(build_alignment_table(g, ds, hc, {}, true));
  CHECK_THROWS_WITH_AS(build_alignment_table(g, ds, hc, {}, false),
                       "missing timing entry for link h->s", std::runtime_error);

  TimingMap over;
  over[{"gw", "r"}] = 1000;  // offsets live inside one hypercycle
  CHECK_THROWS_WITH_AS(build_alignment_table(g, ds, hc, over, true),
                       "hypercycle offset out of range on link gw->r", std::runtime_error);

  // Wire longer than the cycle breaks same-cycle reception in the synced
  // domain; the 25us link must be flagged.
  NetworkGraph slow = chain_graph(25);
  CHECK_THROWS_WITH_AS(build_alignment_table(slow, ds, hc, {}, true),
                       "CQF in-cycle reception violated on link h->s", std::runtime_error);

  NetworkGraph ghost;
  ghost.add_node({"h", NodeRole::Source, "nowhere"});
  ghost.add_node({"s", NodeRole::CqfSwitch, "acc"});
  ghost.add_link({"h", "s", 1, 1'000'000'000});
  CHECK_THROWS_WITH_AS(build_alignment_table(ghost, ds, hc, {}, true),
                       "no domain config for nowhere", std::runtime_error);
}

TEST_CASE("timing files round-trip and reject junk") {
  auto tmp = std::filesystem::temp_directory_path() / "det_time_ok.txt";
  {
    std::ofstream out(tmp);
    out << "# per-link clock offsets\n";
    out << "timing gw r 5\n";
    out << "\n";
    out << "timing r gw 995   # reverse direction\n";
  }
  TimingMap m = load_timings(tmp);
  CHECK(m.size() == 2);
  CHECK(m.at({"gw", "r"}) == 5);
  CHECK(m.at({"r", "gw"}) == 995);
  std::filesystem::remove(tmp);

  auto bad = std::filesystem::temp_directory_path() / "det_time_bad.txt";
  {
    std::ofstream out(bad);
    out << "timing a b 1\n";
    out << "offset a b 2\n";
  }
  CHECK_THROWS_WITH_AS(load_timings(bad), (bad.string() + ":2: unknown keyword offset").c_str(),
                       std::runtime_error);
  {
    std::ofstream out(bad);
    out << "timing a b\n";
  }
  CHECK_THROWS_WITH_AS(load_timings(bad), (bad.string() + ":1: malformed timing line").c_str(),
                       std::runtime_error);
  std::filesystem::remove(bad);

  CHECK_THROWS_AS(load_timings("/nonexistent/timings.txt"), std::runtime_error);
}

TEST_CASE("domain validation flags sync-role mismatches") {
  NetworkGraph g;
  g.add_node({"r", NodeRole::DipRouter, "acc"});  // router in the synced domain
  g.add_node({"s", NodeRole::CqfSwitch, "acc"});
  g.add_link({"r", "s", 1, 1'000'000'000});
  auto ds = chain_domains();
  auto bad = validate_domains(g, ds);
  CHECK(!bad.empty());

  NetworkGraph ok;
  ok.add_node({"s", NodeRole::CqfSwitch, "acc"});
  ok.add_node({"gw", NodeRole::CqfEdgeSwitch, "acc"});
  ok.add_link({"s", "gw", 1, 1'000'000'000});
  CHECK(validate_domains(ok, ds).empty());
}
