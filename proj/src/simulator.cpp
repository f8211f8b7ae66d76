#include "detnet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <limits>
#include <queue>
#include <random>

namespace detnet {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double unit_open_closed(std::mt19937_64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * (1.0 / 9007199254740992.0);
}

struct SimPacket {
  int flow = -1;  // index into flow runs; -1 for interference
  std::int64_t seq = 0;
  int hop = 0;  // path position the packet sits at / arrives to
  Bits bits = 0;
  Nanoseconds send_ns = 0;
  std::int64_t sender_abs_cycle = 0;  // sender-clock cycle of the last transmission
};

// Event kinds, ordered so same-instant queue insertions settle before service.
enum EvKind : int { EvRelease = 0, EvArrival = 1, EvInterference = 2, EvKick = 3 };

struct Event {
  Nanoseconds t = 0;
  int kind = 0;
  std::int64_t a = 0;  // release: flow run; arrival: packet; interference/kick: port
  std::int64_t b = 0;  // release: seq
};

struct EventAfter {
  bool operator()(const Event& x, const Event& y) const {
    if (x.t != y.t) return x.t > y.t;
    if (x.kind != y.kind) return x.kind > y.kind;
    if (x.a != y.a) return x.a > y.a;
    return x.b > y.b;
  }
};

struct Port {
  int link = -1;
  int src = -1;  // transmitting node
  int dst = -1;
  BitsPerSecond bw = 0;
  Nanoseconds prop_ns = 0;
  Nanoseconds cyc_ns = 0;
  std::int64_t n = 0;  // cycles per hypercycle at the transmitting node
  Nanoseconds epoch_ns = 0;
  bool track_slots = false;  // plain CQF switch port: calendar stays ping-pong sized

  std::map<std::int64_t, std::deque<int>> cal;  // absolute cycle -> queued packets
  std::deque<int> be;
  // warm-up runs in negative time, so idle-since-forever must predate it
  Nanoseconds busy_until = std::numeric_limits<Nanoseconds>::min() / 4;
  std::vector<Bits> expected;           // booked bits per local cycle
  std::map<std::int64_t, Bits> sent;    // transmitted bits per absolute cycle
  bool interfered = false;
  double keep = 0.0;
  double mean_gap_ns = 0.0;
  std::mt19937_64 rng;
};

struct FlowRun {
  const TsFlow* f = nullptr;
  std::vector<int> path;
  std::vector<std::int64_t> hop_local;   // first-repetition transmit cycle per hop
  std::vector<std::int64_t> hop_stride;  // period in local cycles per hop
  std::int64_t src_shift = 0;
  std::int64_t stride_src = 0;  // period in source cycles
  Nanoseconds deadline_ns = 0;
};

Nanoseconds serialization_ns(Bits bits, BitsPerSecond bw) {
  return ceil_div(bits * 1'000'000'000, bw);
}

class Engine {
 public:
  Engine(const SchedulingContext& ctx, bool gated, const InterferenceSpec& spec,
         const SimOptions& opt)
      : ctx_(ctx), g_(ctx.graph()), gated_(gated) {
    if (opt.horizon_hypercycles < 1) throw std::invalid_argument("horizon must be at least 1");
    if (spec.model != "poisson") throw std::runtime_error("unknown interference model: " + spec.model);
    if (spec.packet_size_bits <= 0) throw std::runtime_error("interference packet size must be positive");
    if (spec.rate_bps < 0 || spec.rate_bps > 1'000'000'000)
      throw std::runtime_error("interference utilization above one");
    horizon_end_ = opt.horizon_hypercycles * ctx.hypercycle().hc_len_us * kNsPerUs;
    hard_stop_ = horizon_end_ * 11;

    compute_epochs(opt.timings);

    ports_.resize(static_cast<size_t>(g_.link_count()));
    double util = static_cast<double>(spec.rate_bps) / 1e9;
    for (int li = 0; li < g_.link_count(); ++li) {
      const Link& l = g_.link(li);
      Port& p = ports_[static_cast<size_t>(li)];
      p.link = li;
      p.src = *g_.node_index(l.src);
      p.dst = *g_.node_index(l.dst);
      p.bw = l.bandwidth_bps;
      p.prop_ns = l.prop_delay_us * kNsPerUs;
      p.cyc_ns = ctx.cycle_len_us(p.src) * kNsPerUs;
      p.n = ctx.cycle_count(p.src);
      p.epoch_ns = epoch_[static_cast<size_t>(p.src)];
      p.track_slots = gated_ && g_.node(p.src).role == NodeRole::CqfSwitch;
      if (gated_) p.expected.assign(static_cast<size_t>(p.n), 0);
      NodeRole sr = g_.node(p.src).role;
      bool edge_dev = sr == NodeRole::CqfEdgeSwitch || sr == NodeRole::DipEdgeRouter;
      if (edge_dev && util > 0.0) {
        p.interfered = true;
        p.keep = util;
        p.mean_gap_ns = static_cast<double>(spec.packet_size_bits) * 1e9 /
                        static_cast<double>(p.bw);
        p.rng.seed(mix64(spec.seed ^ mix64(static_cast<std::uint64_t>(li) + 1)));
      }
    }
    if_bits_ = spec.packet_size_bits;
  }

  SimDiagnostics& diag() { return diag_; }

  void add_flow_run(FlowRun fr) { runs_.push_back(std::move(fr)); }

  // Gated runs start one deadline's worth of hypercycles early so recorded
  // packets queue behind the same wrapped-around traffic every repetition;
  // without it the first lap rides an artificially empty pipeline.
  void set_warmup(std::int64_t laps) { warm_laps_ = laps; }

  void book_expected() {
    // Bits the schedule promises per (port, local cycle); the BE guard keeps
    // best-effort service out of windows that still owe these bits.
    for (const auto& fr : runs_) {
      std::int64_t reps = ctx_.hypercycle().hc_len_us / fr.f->period_us;
      for (size_t i = 0; i + 1 < fr.path.size(); ++i) {
        int li = *g_.link_index(fr.path[i], fr.path[i + 1]);
        Port& p = ports_[static_cast<size_t>(li)];
        std::int64_t stride = fr.f->period_us / ctx_.cycle_len_us(fr.path[i]);
        for (std::int64_t j = 0; j < reps; ++j) {
          std::int64_t local = positive_mod(fr.hop_local[i] + j * stride, p.n);
          p.expected[static_cast<size_t>(local)] += fr.f->payload_bits;
        }
      }
    }
  }

  SimTrace run() {
    for (size_t fi = 0; fi < runs_.size(); ++fi) {
      const FlowRun& fr = runs_[static_cast<size_t>(fi)];
      std::int64_t n_src = ctx_.cycle_count(fr.path[0]);
      push_release(static_cast<int>(fi), -warm_laps_ * (n_src / fr.stride_src));
    }
    for (size_t pi = 0; pi < ports_.size(); ++pi)
      if (ports_[pi].interfered) push_next_interference(static_cast<int>(pi), 0);

    while (!pq_.empty()) {
      Event ev = pq_.top();
      pq_.pop();
      if (ev.t > hard_stop_) break;
      switch (ev.kind) {
        case EvRelease: on_release(static_cast<int>(ev.a), ev.b, ev.t); break;
        case EvArrival: on_arrival(static_cast<int>(ev.a), ev.t); break;
        case EvInterference: on_interference(static_cast<int>(ev.a), ev.t); break;
        case EvKick: serve(static_cast<int>(ev.a), ev.t); break;
      }
    }
    for (const auto& p : ports_) diag_.be_unserved += static_cast<std::int64_t>(p.be.size());
    std::sort(trace_.records.begin(), trace_.records.end(),
              [](const DeliveryRecord& a, const DeliveryRecord& b) {
                if (a.flow != b.flow) return a.flow < b.flow;
                return a.seq < b.seq;
              });
    trace_.diag = diag_;
    return std::move(trace_);
  }

 private:
  void compute_epochs(const TimingMap& timings) {
    epoch_.assign(static_cast<size_t>(g_.node_count()), 0);
    if (g_.node_count() == 0) return;
    std::vector<char> seen(static_cast<size_t>(g_.node_count()), 0);
    auto hco_ns = [&](int a, int b) -> Nanoseconds {
      auto it = timings.find({g_.node(a).id, g_.node(b).id});
      return it == timings.end() ? 0 : it->second * kNsPerUs;
    };
    // adjacency over both directions
    std::vector<std::vector<int>> adj(static_cast<size_t>(g_.node_count()));
    for (int li = 0; li < g_.link_count(); ++li) {
      const Link& l = g_.link(li);
      adj[static_cast<size_t>(*g_.node_index(l.src))].push_back(li);
      adj[static_cast<size_t>(*g_.node_index(l.dst))].push_back(li);
    }
    for (int root = 0; root < g_.node_count(); ++root) {
      if (seen[static_cast<size_t>(root)]) continue;
      seen[static_cast<size_t>(root)] = 1;
      std::deque<int> bfs{root};
      while (!bfs.empty()) {
        int u = bfs.front();
        bfs.pop_front();
        for (int li : adj[static_cast<size_t>(u)]) {
          const Link& l = g_.link(li);
          int s = *g_.node_index(l.src);
          int d = *g_.node_index(l.dst);
          // downstream clock reads hco more than upstream at any instant
          Nanoseconds es, ed;
          if (s == u) {
            es = epoch_[static_cast<size_t>(s)];
            ed = es - hco_ns(s, d);
          } else {
            ed = epoch_[static_cast<size_t>(d)];
            es = ed + hco_ns(s, d);
          }
          int other = s == u ? d : s;
          Nanoseconds eo = s == u ? ed : es;
          if (!seen[static_cast<size_t>(other)]) {
            seen[static_cast<size_t>(other)] = 1;
            epoch_[static_cast<size_t>(other)] = eo;
            bfs.push_back(other);
          } else if (positive_mod(epoch_[static_cast<size_t>(other)] - eo,
                                  ctx_.hypercycle().hc_len_us * kNsPerUs) != 0) {
            // epochs a whole hypercycle apart gate identically, so only the
            // residue has to agree
            throw std::runtime_error("inconsistent timing offsets around " + g_.node(other).id);
          }
        }
      }
    }
  }

  void push(Event e) { pq_.push(e); }

  void push_release(int fi, std::int64_t q) {
    const FlowRun& fr = runs_[static_cast<size_t>(fi)];
    int src = fr.path[0];
    Nanoseconds cyc = ctx_.cycle_len_us(src) * kNsPerUs;
    std::int64_t abs_cycle = fr.f->release_cycle + q * fr.stride_src;
    Nanoseconds t = epoch_[static_cast<size_t>(src)] + abs_cycle * cyc;
    if (t >= horizon_end_) return;
    push({t, EvRelease, fi, q});
  }

  void push_next_interference(int pi, Nanoseconds from) {
    Port& p = ports_[static_cast<size_t>(pi)];
    Nanoseconds t = from;
    while (t < horizon_end_) {
      double u = unit_open_closed(p.rng);
      auto gap = static_cast<Nanoseconds>(std::ceil(-std::log(u) * p.mean_gap_ns));
      t += std::max<Nanoseconds>(1, gap);
      if (t >= horizon_end_) return;
      if (unit_open_closed(p.rng) <= p.keep) {
        push({t, EvInterference, pi, 0});
        return;
      }
    }
  }

  std::int64_t arrival_cycle(const Port& p, Nanoseconds t) const {
    // a last bit landing exactly on a boundary belongs to the ending cycle
    return floor_div(t - p.epoch_ns - 1, p.cyc_ns);
  }

  Nanoseconds window_start(const Port& p, std::int64_t abs_cycle) const {
    return p.epoch_ns + abs_cycle * p.cyc_ns;
  }

  void enqueue_gated(int pi, int pk, std::int64_t slot_abs, Nanoseconds now) {
    Port& p = ports_[static_cast<size_t>(pi)];
    p.cal[slot_abs].push_back(pk);
    if (p.track_slots)
      diag_.max_active_cqf_slots =
          std::max<std::int64_t>(diag_.max_active_cqf_slots,
                                 static_cast<std::int64_t>(p.cal.size()));
    push({std::max(now, window_start(p, slot_abs)), EvKick, pi, 0});
  }

  void on_release(int fi, std::int64_t q, Nanoseconds t) {
    const FlowRun& fr = runs_[static_cast<size_t>(fi)];
    if (q >= 0) diag_.ts_released++;
    int pk = static_cast<int>(pool_.size());
    pool_.push_back({fi, q, 0, fr.f->payload_bits, t, 0});
    int pi = *g_.link_index(fr.path[0], fr.path[1]);
    if (gated_) {
      std::int64_t abs_cycle = fr.f->release_cycle + q * fr.stride_src;
      std::int64_t slot = abs_cycle + fr.src_shift;
      pool_[static_cast<size_t>(pk)].sender_abs_cycle = slot;
      enqueue_gated(pi, pk, slot, t);
    } else {
      ports_[static_cast<size_t>(pi)].be.push_back(pk);
      push({t, EvKick, pi, 0});
    }
    push_release(fi, q + 1);
  }

  void on_arrival(int pk, Nanoseconds t) {
    SimPacket& pkt = pool_[static_cast<size_t>(pk)];
    const FlowRun& fr = runs_[static_cast<size_t>(pkt.flow)];
    int pos = pkt.hop;
    if (pos + 1 == static_cast<int>(fr.path.size())) {
      if (pkt.seq >= 0) {  // warm-up repetitions are not observations
        Nanoseconds delay = t - pkt.send_ns;
        trace_.records.push_back(
            {fr.f->id, pkt.seq, pkt.send_ns, t, delay <= fr.deadline_ns});
        diag_.ts_delivered++;
      }
      return;
    }
    int pi = *g_.link_index(fr.path[pos], fr.path[pos + 1]);
    Port& p = ports_[static_cast<size_t>(pi)];
    if (gated_) {
      std::int64_t arr = arrival_cycle(p, t);
      // intra-CQF hops promise same-cycle reception
      int prev = fr.path[pos - 1];
      if (g_.node(prev).domain == g_.node(p.src).domain &&
          ctx_.sync_mode(p.src) == SyncMode::PerfectTime && arr > pkt.sender_abs_cycle)
        diag_.cqf_late_receptions++;
      std::int64_t target =
          positive_mod(fr.hop_local[pos] + pkt.seq * fr.hop_stride[pos], p.n);
      std::int64_t slot = arr + positive_mod(target - arr, p.n);
      pkt.sender_abs_cycle = slot;
      enqueue_gated(pi, pk, slot, t);
    } else {
      p.be.push_back(pk);
      push({t, EvKick, pi, 0});
    }
  }

  void on_interference(int pi, Nanoseconds t) {
    Port& p = ports_[static_cast<size_t>(pi)];
    int pk = static_cast<int>(pool_.size());
    pool_.push_back({-1, 0, 0, if_bits_, t, 0});
    p.be.push_back(pk);
    push({t, EvKick, pi, 0});
    push_next_interference(pi, t);
  }

  void depart(Port& p, int pk, Nanoseconds done) {
    SimPacket& pkt = pool_[static_cast<size_t>(pk)];
    if (pkt.flow < 0) {
      diag_.be_served++;  // interference evaporates past its port
      return;
    }
    pkt.hop++;
    push({done + p.prop_ns, EvArrival, pk, 0});
  }

  void serve(int pi, Nanoseconds t) {
    Port& p = ports_[static_cast<size_t>(pi)];
    if (t < p.busy_until) return;
    while (true) {
      std::int64_t c = floor_div(t - p.epoch_ns, p.cyc_ns);
      while (!p.sent.empty() && p.sent.begin()->first < c - 2 * p.n)
        p.sent.erase(p.sent.begin());
      Nanoseconds w_end = window_start(p, c + 1);
      // windows that closed with traffic still queued: push them a full round out
      while (!p.cal.empty() && p.cal.begin()->first < c) {
        auto it = p.cal.begin();
        std::int64_t slot2 = it->first + p.n;
        diag_.gate_overruns += static_cast<std::int64_t>(it->second.size());
        auto& dst = p.cal[slot2];
        for (int pk : it->second) dst.push_back(pk);
        p.cal.erase(it);
        push({window_start(p, slot2), EvKick, pi, 0});
      }
      if (!p.cal.empty() && p.cal.begin()->first == c) {
        auto it = p.cal.begin();
        int pk = it->second.front();
        Nanoseconds ser = serialization_ns(pool_[static_cast<size_t>(pk)].bits, p.bw);
        if (t + ser <= w_end) {
          it->second.pop_front();
          if (it->second.empty()) p.cal.erase(it);
          p.busy_until = t + ser;
          p.sent[c] += pool_[static_cast<size_t>(pk)].bits;
          depart(p, pk, p.busy_until);
          push({p.busy_until, EvKick, pi, 0});
          return;
        }
        // cannot finish before the gate closes
        std::int64_t slot2 = c + p.n;
        diag_.gate_overruns += static_cast<std::int64_t>(it->second.size());
        auto& dst = p.cal[slot2];
        for (int q : it->second) dst.push_back(q);
        p.cal.erase(it);
        push({window_start(p, slot2), EvKick, pi, 0});
        continue;
      }
      if (!p.be.empty()) {
        int pk = p.be.front();
        Nanoseconds ser = serialization_ns(pool_[static_cast<size_t>(pk)].bits, p.bw);
        bool ok = true;
        if (gated_) {
          // look-ahead guard: BE may not overlap any window still owing
          // scheduled bits, nor run past windows with queued slots
          std::int64_t last_w = floor_div(t + ser - p.epoch_ns - 1, p.cyc_ns);
          if (!p.cal.empty() && p.cal.begin()->first <= last_w) ok = false;
          for (std::int64_t w = c; ok && w <= last_w; ++w) {
            Bits want = p.expected[static_cast<size_t>(positive_mod(w, p.n))];
            if (want > 0) {
              auto its = p.sent.find(w);
              Bits done = its == p.sent.end() ? 0 : its->second;
              if (done < want) ok = false;
            }
          }
        }
        if (ok) {
          p.be.pop_front();
          p.busy_until = t + ser;
          depart(p, pk, p.busy_until);
          push({p.busy_until, EvKick, pi, 0});
          return;
        }
        push({w_end, EvKick, pi, 0});
        return;
      }
      return;
    }
  }

  const SchedulingContext& ctx_;
  const NetworkGraph& g_;
  bool gated_ = true;
  std::int64_t warm_laps_ = 0;
  Nanoseconds horizon_end_ = 0;
  Nanoseconds hard_stop_ = 0;
  Bits if_bits_ = 12'000;
  std::vector<Nanoseconds> epoch_;
  std::vector<Port> ports_;
  std::vector<SimPacket> pool_;
  std::vector<FlowRun> runs_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> pq_;
  SimDiagnostics diag_;
  SimTrace trace_;
};

}  // namespace

SimTrace run_simulation(const SchedulingContext& ctx, const Schedule& schedule,
                        const FlowSet& flows, const InterferenceSpec& interference,
                        const SimOptions& opt) {
  const NetworkGraph& g = ctx.graph();
  std::map<std::string, const TsFlow*> by_id;
  for (const auto& f : flows.flows) by_id[f.id] = &f;

  // replay the admission checks so a stale or hand-edited schedule fails loudly
  CycleLedger ledger(ctx);
  std::vector<FlowRun> runs;
  for (const auto& [id, dec] : schedule.decisions) {
    if (!dec.accepted) continue;
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::runtime_error("schedule references unknown flow " + id);
    const TsFlow& f = *it->second;
    auto adm = admissible(ctx, f, dec.path, dec.shifts, ledger);
    if (!adm.ok)
      throw std::runtime_error("schedule validation failed for flow " + id + ": " + adm.reason);
    auto cycles = transmit_cycles(ctx, dec.path, f.release_cycle, dec.shifts);
    std::int64_t reps = ctx.hypercycle().hc_len_us / f.period_us;
    for (size_t i = 0; i + 1 < dec.path.size(); ++i) {
      int li = *g.link_index(dec.path[i], dec.path[i + 1]);
      std::int64_t stride = f.period_us / ctx.cycle_len_us(dec.path[i]);
      std::int64_t n = ctx.cycle_count(dec.path[i]);
      for (std::int64_t j = 0; j < reps; ++j)
        ledger.reserve(li, positive_mod(cycles[i] + j * stride, n), f.payload_bits);
    }
    FlowRun fr;
    fr.f = &f;
    fr.path = dec.path;
    fr.hop_local = cycles;
    fr.hop_stride.reserve(cycles.size());
    for (size_t i = 0; i + 1 < dec.path.size(); ++i)
      fr.hop_stride.push_back(f.period_us / ctx.cycle_len_us(dec.path[i]));
    fr.src_shift = dec.shifts.r[0];
    fr.stride_src = fr.hop_stride[0];
    fr.deadline_ns = f.deadline_us * kNsPerUs;
    runs.push_back(std::move(fr));
  }
  std::sort(runs.begin(), runs.end(),
            [](const FlowRun& a, const FlowRun& b) { return a.f->id < b.f->id; });

  Engine eng(ctx, true, interference, opt);
  std::int64_t warm = 1;
  for (const auto& fr : runs)
    warm = std::max(warm, ceil_div(fr.f->deadline_us, ctx.hypercycle().hc_len_us));
  eng.set_warmup(warm);
  for (auto& fr : runs) eng.add_flow_run(std::move(fr));
  eng.book_expected();
  return eng.run();
}

SimTrace run_best_effort(const SchedulingContext& ctx, const FlowSet& flows,
                         const InterferenceSpec& interference, const SimOptions& opt) {
  const NetworkGraph& g = ctx.graph();
  std::map<std::pair<int, int>, std::vector<int>> path_cache;
  std::vector<FlowRun> runs;
  for (const auto& f : flows.flows) {
    auto s = g.node_index(f.src);
    auto d = g.node_index(f.dst);
    if (!s || !d) throw std::runtime_error("flow " + f.id + " references unknown node");
    if (f.period_us <= 0 || f.period_us % ctx.cycle_len_us(*s) != 0)
      throw std::runtime_error("period incompatible with source cycle: flow " + f.id);
    if (f.release_cycle < 0 || f.release_cycle >= ctx.cycle_count(*s))
      throw std::runtime_error("release_cycle out of range: flow " + f.id);
    auto key = std::make_pair(*s, *d);
    auto pit = path_cache.find(key);
    if (pit == path_cache.end()) {
      auto paths = enumerate_paths(g, *s, *d, 1);
      if (paths.empty()) throw std::runtime_error("no path for flow " + f.id);
      pit = path_cache.emplace(key, std::move(paths[0])).first;
    }
    FlowRun fr;
    fr.f = &f;
    fr.path = pit->second;
    fr.stride_src = f.period_us / ctx.cycle_len_us(*s);
    fr.deadline_ns = f.deadline_us * kNsPerUs;
    runs.push_back(std::move(fr));
  }
  std::sort(runs.begin(), runs.end(),
            [](const FlowRun& a, const FlowRun& b) { return a.f->id < b.f->id; });

  Engine eng(ctx, false, interference, opt);
  for (auto& fr : runs) eng.add_flow_run(std::move(fr));
  return eng.run();
}

FlowStatsReport summarize(const SimTrace& trace, Microseconds deadline_us) {
  FlowStatsReport rep;
  std::map<std::string, std::vector<Nanoseconds>> delays;
  for (const auto& r : trace.records) delays[r.flow].push_back(r.recv_ns - r.send_ns);
  auto fill = [&](DelayStats& s, const std::vector<Nanoseconds>& v) {
    s.count = static_cast<std::int64_t>(v.size());
    if (v.empty()) return;
    Nanoseconds lo = v[0], hi = v[0];
    double sum = 0;
    for (Nanoseconds d : v) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      sum += static_cast<double>(d);
      if (d > deadline_us * kNsPerUs) s.beyond_deadline++;
    }
    s.mean_us = sum / static_cast<double>(v.size()) / 1000.0;
    s.min_us = static_cast<double>(lo) / 1000.0;
    s.max_us = static_cast<double>(hi) / 1000.0;
    s.jitter_us = static_cast<double>(hi - lo) / 1000.0;
  };
  std::vector<Nanoseconds> all;
  for (auto& [id, v] : delays) {
    fill(rep.per_flow[id], v);
    all.insert(all.end(), v.begin(), v.end());
  }
  fill(rep.aggregate, all);
  return rep;
}

std::vector<std::pair<double, double>> delay_cdf(const SimTrace& trace,
                                                 const std::string& flow_id, int max_points) {
  std::vector<Nanoseconds> v;
  for (const auto& r : trace.records)
    if (flow_id.empty() || r.flow == flow_id) v.push_back(r.recv_ns - r.send_ns);
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  if (v.empty() || max_points < 1) return out;
  auto n = static_cast<std::int64_t>(v.size());
  std::int64_t m = std::min<std::int64_t>(max_points, n);
  for (std::int64_t i = 1; i <= m; ++i) {
    std::int64_t idx = i * n / m - 1;
    out.emplace_back(static_cast<double>(v[static_cast<size_t>(idx)]) / 1000.0,
                     static_cast<double>(idx + 1) / static_cast<double>(n));
  }
  return out;
}

void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path.string());
  out << "flow,seq,send_us,recv_us,delay_us,met\n";
  char buf[160];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%s,%lld,%.3f,%.3f,%.3f,%d\n", r.flow.c_str(),
                  static_cast<long long>(r.seq), static_cast<double>(r.send_ns) / 1000.0,
                  static_cast<double>(r.recv_ns) / 1000.0,
                  static_cast<double>(r.recv_ns - r.send_ns) / 1000.0, r.deadline_met ? 1 : 0);
    out << buf;
  }
  if (!out) throw std::runtime_error("cannot write trace file: " + path.string());
}

}  // namespace detnet
