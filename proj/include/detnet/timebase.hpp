#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "detnet/topology.hpp"
#include "detnet/types.hpp"

namespace detnet {

enum class SyncMode {
  PerfectTime,    // CQF side: switches share absolute time
  FrequencyOnly,  // DIP side: same frequency, arbitrary phase
};

struct DomainConfig {
  DomainId id;
  Microseconds cycle_len_us = 0;  // > 0
  SyncMode sync = SyncMode::PerfectTime;
};

struct HypercycleSpec {
  Microseconds hc_len_us = 0;
  std::map<DomainId, std::int64_t> cycles_per_domain;
  std::int64_t flow_multiple = 1;  // largest per-flow repetition count
};

// Directed adjacency timing. hco_us is the configured hypercycle start offset
// of the upstream clock relative to the downstream clock, in [0, hc).
struct AdjacencyTiming {
  NodeId src;
  NodeId dst;
  Microseconds hco_us = 0;
  Microseconds prop_delay_us = 0;
};

// Least common hypercycle of all domain cycle lengths and flow periods.
// Throws ("hypercycle overflow") past cap_us, and rejects degenerate cycle
// counts: a CQF domain needs at least 3 cycles per hypercycle so the two
// ping-pong queues alternate meaningfully, a DIP domain at least 2.
HypercycleSpec compute_hypercycle(std::span<const DomainConfig> domains,
                                  std::span<const Microseconds> flow_periods,
                                  Microseconds cap_us = 1'000'000'000);

// Within a synchronized CQF domain a packet sent in cycle i is received in
// cycle i; the identity holds whenever prop delay stays inside one cycle.
std::int64_t align_cqf(std::int64_t x);

// Frequency-synced DIP adjacency: cycle x at the upstream maps to the last
// downstream cycle that can still see one of its packets arrive. Exact
// integer arithmetic; x is reduced mod n_dip.
std::int64_t align_dip(std::int64_t x, Microseconds dip_cycle_us, std::int64_t n_dip,
                       const AdjacencyTiming& t);

// Cross-domain flavor: source and destination run different cycle lengths
// under one hypercycle hc_us (which both lengths must divide).
std::int64_t align_cross(std::int64_t x, Microseconds src_cycle_us, Microseconds dst_cycle_us,
                         Microseconds hc_us, const AdjacencyTiming& t);

class AlignmentTable {
 public:
  // phi per directed link, indexed by upstream local cycle.
  void set(int link, std::vector<std::int64_t> phi);
  bool has(int link) const;
  std::int64_t phi(int link, std::int64_t src_cycle) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<int, std::vector<std::int64_t>> table_;
};

using TimingMap = std::map<std::pair<NodeId, NodeId>, Microseconds>;

// Builds phi for every directed link. Same-domain PerfectTime links use the
// identity and must satisfy prop < cycle; others use the dip/cross formulas.
// timings may omit links only when fill_missing_hco is set (offset 0).
AlignmentTable build_alignment_table(const NetworkGraph& g,
                                     std::span<const DomainConfig> domains,
                                     const HypercycleSpec& hc, const TimingMap& timings,
                                     bool fill_missing_hco = true);

// Line format: timing <src> <dst> <hco_us>
TimingMap load_timings(const std::filesystem::path& path);

// Domain/role consistency: every node's domain configured, DIP roles in
// FrequencyOnly domains, CQF-side roles in PerfectTime domains.
std::vector<std::string> validate_domains(const NetworkGraph& g,
                                          std::span<const DomainConfig> domains);

}  // namespace detnet
