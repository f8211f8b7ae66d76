#include "detnet/timebase.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace detnet {

HypercycleSpec compute_hypercycle(std::span<const DomainConfig> domains,
                                  std::span<const Microseconds> flow_periods,
                                  Microseconds cap_us) {
  if (domains.empty()) throw std::invalid_argument("no domains");
  std::int64_t hc = 1;
  for (const auto& d : domains) {
    if (d.cycle_len_us <= 0) throw std::invalid_argument("non-positive cycle length in domain " + d.id);
    hc = lcm_capped(hc, d.cycle_len_us, cap_us);
  }
  for (Microseconds p : flow_periods) {
    if (p <= 0) throw std::invalid_argument("non-positive flow period");
    hc = lcm_capped(hc, p, cap_us);
  }

  HypercycleSpec spec;
  spec.hc_len_us = hc;
  for (const auto& d : domains) {
    std::int64_t n = hc / d.cycle_len_us;
    // a CQF port alternates two queues, so fewer than 3 cycles per hypercycle
    // degenerates; a frequency-synced domain needs at least 2
    std::int64_t min_n = d.sync == SyncMode::PerfectTime ? 3 : 2;
    if (n < min_n) {
      throw std::runtime_error("cycle count " + std::to_string(n) + " in domain " + d.id +
                               " is below the queue minimum");
    }
    spec.cycles_per_domain[d.id] = n;
  }
  spec.flow_multiple = 1;
  for (Microseconds p : flow_periods) spec.flow_multiple = std::max(spec.flow_multiple, hc / p);
  return spec;
}

std::int64_t align_cqf(std::int64_t x) {
  return x;
}

namespace {

// ceil(num/den - 1) == floor((num - 1) / den), exactly, for integral num/den.
// num is the latest possible arrival instant in the downstream clock, den the
// downstream cycle length; the result is the last cycle that can still see a
// packet of upstream cycle x arrive.
std::int64_t last_arrival_cycle(std::int64_t num, std::int64_t den) {
  return floor_div(num - 1, den);
}

}  // namespace

std::int64_t align_dip(std::int64_t x, Microseconds dip_cycle_us, std::int64_t n_dip,
                       const AdjacencyTiming& t) {
  if (dip_cycle_us <= 0 || n_dip <= 0) throw std::invalid_argument("align_dip: bad cycle config");
  std::int64_t xr = positive_mod(x, n_dip);
  std::int64_t num = positive_mod(xr + 1, n_dip) * dip_cycle_us + t.prop_delay_us + t.hco_us;
  return positive_mod(last_arrival_cycle(num, dip_cycle_us), n_dip);
}

std::int64_t align_cross(std::int64_t x, Microseconds src_cycle_us, Microseconds dst_cycle_us,
                         Microseconds hc_us, const AdjacencyTiming& t) {
  if (src_cycle_us <= 0 || dst_cycle_us <= 0 || hc_us <= 0)
    throw std::invalid_argument("align_cross: bad cycle config");
  if (hc_us % src_cycle_us != 0 || hc_us % dst_cycle_us != 0)
    throw std::invalid_argument("align_cross: hypercycle not a multiple of both cycle lengths");
  std::int64_t n_src = hc_us / src_cycle_us;
  std::int64_t n_dst = hc_us / dst_cycle_us;
  std::int64_t xr = positive_mod(x, n_src);
  std::int64_t num = positive_mod(xr + 1, n_src) * src_cycle_us + t.prop_delay_us + t.hco_us;
  return positive_mod(last_arrival_cycle(num, dst_cycle_us), n_dst);
}

void AlignmentTable::set(int link, std::vector<std::int64_t> phi) {
  table_[link] = std::move(phi);
}

bool AlignmentTable::has(int link) const {
  return table_.count(link) != 0;
}

std::int64_t AlignmentTable::phi(int link, std::int64_t src_cycle) const {
  auto it = table_.find(link);
  if (it == table_.end()) throw std::out_of_range("no alignment entry for link " + std::to_string(link));
  const auto& v = it->second;
  return v[static_cast<size_t>(positive_mod(src_cycle, static_cast<std::int64_t>(v.size())))];
}

AlignmentTable build_alignment_table(const NetworkGraph& g,
                                     std::span<const DomainConfig> domains,
                                     const HypercycleSpec& hc, const TimingMap& timings,
                                     bool fill_missing_hco) {
  std::map<DomainId, const DomainConfig*> by_id;
  for (const auto& d : domains) by_id[d.id] = &d;

  AlignmentTable table;
  for (int li = 0; li < g.link_count(); ++li) {
    const Link& l = g.link(li);
    const Node& a = g.node(*g.node_index(l.src));
    const Node& b = g.node(*g.node_index(l.dst));
    auto ita = by_id.find(a.domain);
    auto itb = by_id.find(b.domain);
    if (ita == by_id.end()) throw std::runtime_error("no domain config for " + a.domain);
    if (itb == by_id.end()) throw std::runtime_error("no domain config for " + b.domain);
    const DomainConfig& da = *ita->second;
    const DomainConfig& db = *itb->second;

    AdjacencyTiming t{l.src, l.dst, 0, l.prop_delay_us};
    auto itt = timings.find({l.src, l.dst});
    if (itt != timings.end()) {
      t.hco_us = itt->second;
    } else if (!fill_missing_hco) {
      throw std::runtime_error("missing timing entry for link " + l.src + "->" + l.dst);
    }
    if (t.hco_us < 0 || t.hco_us >= hc.hc_len_us)
      throw std::runtime_error("hypercycle offset out of range on link " + l.src + "->" + l.dst);

    std::int64_t n_src = hc.hc_len_us / da.cycle_len_us;
    std::vector<std::int64_t> phi(static_cast<size_t>(n_src));
    if (da.id == db.id && da.sync == SyncMode::PerfectTime) {
      // same-cycle reception requires the packet to land within its cycle
      if (l.prop_delay_us >= da.cycle_len_us)
        throw std::runtime_error("CQF in-cycle reception violated on link " + l.src + "->" + l.dst);
      for (std::int64_t x = 0; x < n_src; ++x) phi[static_cast<size_t>(x)] = align_cqf(x);
    } else if (da.id == db.id) {
      for (std::int64_t x = 0; x < n_src; ++x)
        phi[static_cast<size_t>(x)] = align_dip(x, da.cycle_len_us, n_src, t);
    } else {
      for (std::int64_t x = 0; x < n_src; ++x)
        phi[static_cast<size_t>(x)] =
            align_cross(x, da.cycle_len_us, db.cycle_len_us, hc.hc_len_us, t);
    }
    table.set(li, std::move(phi));
  }
  return table;
}

TimingMap load_timings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open timing file: " + path.string());
  TimingMap m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw != "timing")
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": unknown keyword " + kw);
    NodeId s, d;
    Microseconds hco;
    if (!(ls >> s >> d >> hco))
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed timing line");
    m[{s, d}] = hco;
  }
  return m;
}

std::vector<std::string> validate_domains(const NetworkGraph& g,
                                          std::span<const DomainConfig> domains) {
  std::vector<std::string> bad;
  std::map<DomainId, const DomainConfig*> by_id;
  for (const auto& d : domains) by_id[d.id] = &d;
  for (const auto& n : g.nodes()) {
    auto it = by_id.find(n.domain);
    if (it == by_id.end()) {
      bad.push_back("node " + n.id + " references unconfigured domain " + n.domain);
      continue;
    }
    bool dip_role = n.role == NodeRole::DipRouter || n.role == NodeRole::DipEdgeRouter;
    if (dip_role && it->second->sync != SyncMode::FrequencyOnly)
      bad.push_back("node " + n.id + " is a DIP device in a perfect-time domain " + n.domain);
    if (!dip_role && it->second->sync != SyncMode::PerfectTime)
      bad.push_back("node " + n.id + " is a CQF-side device in a frequency-only domain " + n.domain);
  }
  return bad;
}

}  // namespace detnet
