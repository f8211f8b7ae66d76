#pragma once

#include <filesystem>
#include <vector>

#include "detnet/timebase.hpp"
#include "detnet/topology.hpp"
#include "detnet/types.hpp"

namespace detnet {

// One packet of payload_bits per period. release_cycle is the source-domain
// cycle in which the application hands the packet down.
struct TsFlow {
  std::string id;
  NodeId src;
  NodeId dst;
  Microseconds period_us = 0;
  Bits payload_bits = 0;
  Microseconds deadline_us = 0;
  double weight = 0.0;  // in (0, 1]
  std::int64_t release_cycle = 0;
};

struct FlowSet {
  std::vector<TsFlow> flows;
};

struct FlowGenParams {
  int per_access = 50;
  BitsPerSecond rate_bps = 500'000;
  Microseconds period_us = 1000;
  Microseconds deadline_us = 1000;
  std::uint64_t seed = 1;
};

// per_access flows from each access network's Source host to a seeded uniform
// Destination host in another access network. payload = rate * period, which
// must be integral. Weights uniform (0,1], release cycles uniform over the
// source domain. Flow attributes are keyed by (access, index) so shorter
// generations are prefixes of longer ones under the same seed.
FlowSet generate_flows(const NetworkGraph& g, const HypercycleSpec& hc,
                       std::span<const DomainConfig> domains, const FlowGenParams& p);

// Line format:
// flow <id> <src> <dst> <period_us> <bits> <deadline_us> <weight> <release_cycle>
FlowSet load_flows(const std::filesystem::path& path);
void save_flows(const FlowSet& fs, const std::filesystem::path& path);

}  // namespace detnet
