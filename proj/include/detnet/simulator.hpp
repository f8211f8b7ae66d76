#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "detnet/scheduler.hpp"

namespace detnet {

// Background traffic: independent Poisson packet streams injected at every
// output port of the edge devices (CQF edge switches and DIP edge routers).
// rate_bps is read as a load per gigabit of port capacity, so each port runs
// at the same utilization regardless of its speed. Streams are drawn at full
// utilization and thinned per packet, making a higher rate a superset of a
// lower one under the same seed.
struct InterferenceSpec {
  BitsPerSecond rate_bps = 0;  // utilization = rate_bps / 1e9, at most 1.0
  Bits packet_size_bits = 12'000;
  std::uint64_t seed = 1;
  std::string model = "poisson";
};

struct DeliveryRecord {
  std::string flow;
  std::int64_t seq = 0;
  Nanoseconds send_ns = 0;
  Nanoseconds recv_ns = 0;
  bool deadline_met = true;
};

struct SimDiagnostics {
  std::int64_t ts_released = 0;
  std::int64_t ts_delivered = 0;
  std::int64_t gate_overruns = 0;        // TS packet left inside a closing window
  std::int64_t cqf_late_receptions = 0;  // intra-CQF arrival outside the send cycle
  std::int64_t be_served = 0;
  std::int64_t be_unserved = 0;
  std::int64_t max_active_cqf_slots = 0;  // calendar occupancy on plain CQF ports
};

struct SimTrace {
  std::vector<DeliveryRecord> records;
  SimDiagnostics diag;
};

struct SimOptions {
  std::int64_t horizon_hypercycles = 100;
  // Hypercycle offsets between adjacent devices; local clocks are derived
  // from these (empty map = all clocks share one epoch). Must be globally
  // consistent over the graph.
  TimingMap timings;
};

// Cycle-gated run of an admitted schedule. Rejected flows send nothing.
SimTrace run_simulation(const SchedulingContext& ctx, const Schedule& schedule,
                        const FlowSet& flows, const InterferenceSpec& interference,
                        const SimOptions& opt);

// Plain FIFO baseline: same releases, minimum-hop paths, no gating, BE and TS
// share each port in arrival order.
SimTrace run_best_effort(const SchedulingContext& ctx, const FlowSet& flows,
                         const InterferenceSpec& interference, const SimOptions& opt);

struct DelayStats {
  std::int64_t count = 0;
  double mean_us = 0.0;
  double min_us = 0.0;
  double max_us = 0.0;
  double jitter_us = 0.0;  // max - min
  std::int64_t beyond_deadline = 0;
};

struct FlowStatsReport {
  std::map<std::string, DelayStats> per_flow;
  DelayStats aggregate;
};

FlowStatsReport summarize(const SimTrace& trace, Microseconds deadline_us);

// Up to max_points (delay_us, cumulative fraction) samples of one flow's
// delay distribution; empty id means all records.
std::vector<std::pair<double, double>> delay_cdf(const SimTrace& trace,
                                                 const std::string& flow_id,
                                                 int max_points = 512);

// Header: flow,seq,send_us,recv_us,delay_us,met
void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path);

}  // namespace detnet
