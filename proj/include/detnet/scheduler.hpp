#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "detnet/flows.hpp"
#include "detnet/timebase.hpp"
#include "detnet/topology.hpp"
#include "detnet/types.hpp"

namespace detnet {

// Per-hop retransmission delays in cycles. Entry i belongs to path node i;
// the destination entry is always 0 (delivery, no retransmission). Interior
// switches and routers are pinned to 1; the source and the two cross-domain
// edge devices on the path carry the searched values in [0, N-1].
struct Shifts {
  std::vector<std::int64_t> r;
};

struct FlowDecision {
  bool accepted = false;
  std::vector<int> path;  // node indices, empty when rejected
  Shifts shifts;
  Microseconds delay_bound_us = 0;
  std::string reject_reason;
};

struct Schedule {
  std::map<std::string, FlowDecision> decisions;
  double objective = 0.0;  // sum of accepted weights, accumulated in id order
};

// Everything the admission math needs in index form: per-node cycle length
// and cycle count, per-link capacity per cycle, the alignment table.
class SchedulingContext {
 public:
  SchedulingContext(const NetworkGraph& g, std::span<const DomainConfig> domains,
                    const HypercycleSpec& hc, const AlignmentTable& table);

  const NetworkGraph& graph() const { return *g_; }
  const HypercycleSpec& hypercycle() const { return hc_; }
  const AlignmentTable& table() const { return *table_; }
  Microseconds cycle_len_us(int node) const { return cycle_len_[static_cast<size_t>(node)]; }
  std::int64_t cycle_count(int node) const { return cycle_count_[static_cast<size_t>(node)]; }
  Bits capacity_bits(int link) const { return capacity_[static_cast<size_t>(link)]; }
  SyncMode sync_mode(int node) const { return sync_[static_cast<size_t>(node)]; }

 private:
  const NetworkGraph* g_;
  HypercycleSpec hc_;
  const AlignmentTable* table_;
  std::vector<Microseconds> cycle_len_;
  std::vector<std::int64_t> cycle_count_;
  std::vector<SyncMode> sync_;
  std::vector<Bits> capacity_;
};

// Residual bits per (link, upstream local cycle). Reservations are atomic
// per flow: either all repetitions of all hops fit or nothing is committed.
class CycleLedger {
 public:
  explicit CycleLedger(const SchedulingContext& ctx);
  Bits residual(int link, std::int64_t cycle) const;
  bool fits(int link, std::int64_t cycle, Bits bits) const;
  void reserve(int link, std::int64_t cycle, Bits bits);   // throws on overdraw
  void release(int link, std::int64_t cycle, Bits bits);   // throws below zero

 private:
  const SchedulingContext* ctx_;
  std::vector<std::vector<Bits>> residual_;
};

// Worst/best case end-to-end delay across h store-and-forward CQF hops with
// cycle length d: ((h+1)*d, (h-1)*d).
std::pair<Microseconds, Microseconds> cqf_bounds(int hops, Microseconds d);

// Local transmit cycle per transmitting path node (destination excluded):
// source sends at (release + r0) mod N, every later node at
// (phi(previous cycle) + r) mod N.
std::vector<std::int64_t> transmit_cycles(const SchedulingContext& ctx,
                                          std::span<const int> path,
                                          std::int64_t release_cycle, const Shifts& shifts);

// Sum over transmitting nodes of (r_i + 1) * cycle_len(v_i) + link_delay(e_i).
Microseconds delay_upper_bound(const SchedulingContext& ctx, std::span<const int> path,
                               const Shifts& shifts);

struct Admissibility {
  bool ok = false;
  std::string reason;
};

// Deadline plus per-cycle capacity for every repetition of the flow within
// the hypercycle, against the current ledger.
Admissibility admissible(const SchedulingContext& ctx, const TsFlow& flow,
                         std::span<const int> path, const Shifts& shifts,
                         const CycleLedger& ledger);

struct SchedulerOptions {
  int k_paths = 4;
  bool shaping = true;
  bool path_selection = true;
};

// Flows by descending weight (ties: ascending id); per flow the first
// admissible pattern over candidate paths (enumerate_paths order) and shift
// vectors (ascending total shift duration, ties lexicographic) is committed.
Schedule greedy_schedule(const SchedulingContext& ctx, const FlowSet& flows,
                         const SchedulerOptions& opt);

struct ExactLimits {
  int max_flows = 10;
  int max_patterns = 50;
};

// Exhaustive optimum over the same candidate pattern space, for oracle-sized
// instances only. Ties resolved toward the lexicographically smallest
// accepted-set indicator over flows sorted by id, then smallest pattern
// indices. Throws "instance too large for exact solver" past the limits.
Schedule exact_schedule_small(const SchedulingContext& ctx, const FlowSet& flows,
                              const SchedulerOptions& opt, const ExactLimits& lim = {});

void save_schedule(const Schedule& s, const NetworkGraph& g, const std::filesystem::path& path);
Schedule load_schedule(const NetworkGraph& g, const std::filesystem::path& path);

}  // namespace detnet
