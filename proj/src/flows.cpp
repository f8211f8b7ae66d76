#include "detnet/flows.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace detnet {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_open_closed(std::mt19937_64& rng) {
  // (0, 1], exact at the top end so a weight of 1.0 stays legal
  return (static_cast<double>(rng() >> 11) + 1.0) / 9007199254740992.0;
}

}  // namespace

FlowSet generate_flows(const NetworkGraph& g, const HypercycleSpec& hc,
                       std::span<const DomainConfig> domains, const FlowGenParams& p) {
  if (p.per_access < 0) throw std::invalid_argument("per_access must be non-negative");
  if ((p.rate_bps * p.period_us) % 1'000'000 != 0)
    throw std::runtime_error("rate times period is not an integral number of bits");
  Bits payload = p.rate_bps * p.period_us / 1'000'000;
  if (payload <= 0) throw std::runtime_error("payload must be positive");

  // access networks keyed by their perfect-time domain, sorted by domain id
  std::map<DomainId, std::vector<int>> sources, sinks;
  std::map<DomainId, SyncMode> sync;
  for (const auto& d : domains) sync[d.id] = d.sync;
  for (int i = 0; i < g.node_count(); ++i) {
    const Node& n = g.node(i);
    if (n.role == NodeRole::Source) sources[n.domain].push_back(i);
    if (n.role == NodeRole::Destination) sinks[n.domain].push_back(i);
  }
  if (sources.size() < 2 && p.per_access > 0)
    throw std::runtime_error("flow generation needs at least two access networks");

  std::vector<DomainId> access;
  for (auto& [dom, v] : sources) access.push_back(dom);
  std::sort(access.begin(), access.end());

  FlowSet fs;
  int global = 0;
  for (size_t a = 0; a < access.size(); ++a) {
    const DomainId& dom = access[a];
    auto itn = hc.cycles_per_domain.find(dom);
    if (itn == hc.cycles_per_domain.end())
      throw std::runtime_error("no hypercycle entry for domain " + dom);
    std::int64_t n_cycles = itn->second;

    // destinations outside this access network, in id order
    std::vector<int> cands;
    for (auto& [d2, v] : sinks)
      if (d2 != dom)
        for (int idx : v) cands.push_back(idx);
    std::sort(cands.begin(), cands.end(),
              [&](int x, int y) { return g.node(x).id < g.node(y).id; });
    if (cands.empty()) throw std::runtime_error("no destinations outside access network " + dom);

    for (int i = 0; i < p.per_access; ++i, ++global) {
      // per-flow stream keyed by (access, index): shorter runs are prefixes
      std::mt19937_64 rng(splitmix64(p.seed ^ splitmix64((a << 20) + static_cast<std::uint64_t>(i))));
      TsFlow f;
      std::ostringstream id;
      id << "f" << (global < 10000 ? "0" : "") << (global < 1000 ? "0" : "")
         << (global < 100 ? "0" : "") << (global < 10 ? "0" : "") << global;
      f.id = id.str();
      f.src = g.node(sources[dom].front()).id;
      f.dst = g.node(cands[rng() % cands.size()]).id;
      f.period_us = p.period_us;
      f.payload_bits = payload;
      f.deadline_us = p.deadline_us;
      f.weight = unit_open_closed(rng);
      f.release_cycle = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n_cycles));
      fs.flows.push_back(std::move(f));
    }
  }
  (void)sync;
  return fs;
}

FlowSet load_flows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open flow file: " + path.string());
  FlowSet fs;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    auto fail = [&](const std::string& what) -> std::runtime_error {
      return std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + what);
    };
    if (kw != "flow") throw fail("unknown keyword: " + kw);
    TsFlow f;
    if (!(ls >> f.id >> f.src >> f.dst >> f.period_us >> f.payload_bits >> f.deadline_us >>
          f.weight >> f.release_cycle))
      throw fail("malformed flow line");
    if (!seen.insert(f.id).second) throw fail("duplicate flow id: " + f.id);
    if (f.weight <= 0.0 || f.weight > 1.0) throw fail("weight must be in (0,1]: " + f.id);
    if (f.period_us <= 0 || f.payload_bits <= 0 || f.deadline_us <= 0)
      throw fail("non-positive period, payload or deadline: " + f.id);
    fs.flows.push_back(std::move(f));
  }
  return fs;
}

void save_flows(const FlowSet& fs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write flow file: " + path.string());
  out.precision(17);
  for (const auto& f : fs.flows)
    out << "flow " << f.id << ' ' << f.src << ' ' << f.dst << ' ' << f.period_us << ' '
        << f.payload_bits << ' ' << f.deadline_us << ' ' << f.weight << ' ' << f.release_cycle
        << '\n';
  if (!out) throw std::runtime_error("cannot write flow file: " + path.string());
}

}  // namespace detnet
