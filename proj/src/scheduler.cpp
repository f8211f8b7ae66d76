#include "detnet/scheduler.hpp"

#include <algorithm>
#include <cassert>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace detnet {

SchedulingContext::SchedulingContext(const NetworkGraph& g, std::span<const DomainConfig> domains,
                                     const HypercycleSpec& hc, const AlignmentTable& table)
    : g_(&g), hc_(hc), table_(&table) {
  std::map<DomainId, const DomainConfig*> by_id;
  for (const auto& d : domains) by_id[d.id] = &d;
  cycle_len_.resize(static_cast<size_t>(g.node_count()));
  cycle_count_.resize(static_cast<size_t>(g.node_count()));
  sync_.resize(static_cast<size_t>(g.node_count()));
  for (int i = 0; i < g.node_count(); ++i) {
    auto it = by_id.find(g.node(i).domain);
    if (it == by_id.end()) throw std::runtime_error("no domain config for " + g.node(i).domain);
    cycle_len_[static_cast<size_t>(i)] = it->second->cycle_len_us;
    sync_[static_cast<size_t>(i)] = it->second->sync;
    auto itn = hc.cycles_per_domain.find(it->second->id);
    if (itn == hc.cycles_per_domain.end())
      throw std::runtime_error("no hypercycle entry for domain " + it->second->id);
    cycle_count_[static_cast<size_t>(i)] = itn->second;
  }
  capacity_.resize(static_cast<size_t>(g.link_count()));
  for (int li = 0; li < g.link_count(); ++li) {
    const Link& l = g.link(li);
    int src = *g.node_index(l.src);
    // bits one cycle of the upstream node can move onto this link
    capacity_[static_cast<size_t>(li)] =
        cycle_len_[static_cast<size_t>(src)] * l.bandwidth_bps / 1'000'000;
  }
}

CycleLedger::CycleLedger(const SchedulingContext& ctx) : ctx_(&ctx) {
  const NetworkGraph& g = ctx.graph();
  residual_.resize(static_cast<size_t>(g.link_count()));
  for (int li = 0; li < g.link_count(); ++li) {
    int src = *g.node_index(g.link(li).src);
    residual_[static_cast<size_t>(li)].assign(
        static_cast<size_t>(ctx.cycle_count(src)), ctx.capacity_bits(li));
  }
}

Bits CycleLedger::residual(int link, std::int64_t cycle) const {
  const auto& v = residual_[static_cast<size_t>(link)];
  return v[static_cast<size_t>(positive_mod(cycle, static_cast<std::int64_t>(v.size())))];
}

bool CycleLedger::fits(int link, std::int64_t cycle, Bits bits) const {
  return residual(link, cycle) >= bits;
}

void CycleLedger::reserve(int link, std::int64_t cycle, Bits bits) {
  auto& v = residual_[static_cast<size_t>(link)];
  auto& r = v[static_cast<size_t>(positive_mod(cycle, static_cast<std::int64_t>(v.size())))];
  if (r < bits) throw std::logic_error("cycle ledger overdraw");
  r -= bits;
}

void CycleLedger::release(int link, std::int64_t cycle, Bits bits) {
  auto& v = residual_[static_cast<size_t>(link)];
  auto& r = v[static_cast<size_t>(positive_mod(cycle, static_cast<std::int64_t>(v.size())))];
  r += bits;
  int src = *ctx_->graph().node_index(ctx_->graph().link(link).src);
  (void)src;
  if (r > ctx_->capacity_bits(link)) throw std::logic_error("cycle ledger release above capacity");
}

std::pair<Microseconds, Microseconds> cqf_bounds(int hops, Microseconds d) {
  if (hops < 1 || d <= 0) throw std::invalid_argument("cqf_bounds: bad arguments");
  return {(hops + 1) * d, (hops - 1) * d};
}

namespace {

enum class ShiftKind { SearchedSource, SearchedEdge, Interior, Destination };

// Which path positions carry a searched shift: the source host, the DIP edge
// router entered from a CQF edge switch, and the CQF edge switch entered from
// a DIP edge router. Everything else retransmits next cycle.
std::vector<ShiftKind> classify_positions(const SchedulingContext& ctx, std::span<const int> path) {
  std::vector<ShiftKind> kinds(path.size(), ShiftKind::Interior);
  if (path.empty()) return kinds;
  kinds[0] = ShiftKind::SearchedSource;
  kinds[path.size() - 1] = ShiftKind::Destination;
  const NetworkGraph& g = ctx.graph();
  for (size_t i = 1; i + 1 < path.size(); ++i) {
    NodeRole cur = g.node(path[i]).role;
    NodeRole prev = g.node(path[i - 1]).role;
    if (cur == NodeRole::DipEdgeRouter && prev == NodeRole::CqfEdgeSwitch)
      kinds[i] = ShiftKind::SearchedEdge;
    if (cur == NodeRole::CqfEdgeSwitch && prev == NodeRole::DipEdgeRouter)
      kinds[i] = ShiftKind::SearchedEdge;
  }
  return kinds;
}

std::string check_shifts(const SchedulingContext& ctx, std::span<const int> path,
                         const Shifts& shifts) {
  if (shifts.r.size() != path.size()) return "shift vector length mismatch";
  auto kinds = classify_positions(ctx, path);
  for (size_t i = 0; i < path.size(); ++i) {
    std::int64_t r = shifts.r[i];
    std::int64_t n = ctx.cycle_count(path[i]);
    switch (kinds[i]) {
      case ShiftKind::SearchedSource:
      case ShiftKind::SearchedEdge:
        if (r < 0 || r >= n) return "shift out of range at " + ctx.graph().node(path[i]).id;
        break;
      case ShiftKind::Interior:
        if (r != 1) return "interior shift must be 1 at " + ctx.graph().node(path[i]).id;
        break;
      case ShiftKind::Destination:
        if (r != 0) return "destination shift must be 0";
        break;
    }
  }
  return {};
}

}  // namespace

std::vector<std::int64_t> transmit_cycles(const SchedulingContext& ctx,
                                          std::span<const int> path,
                                          std::int64_t release_cycle, const Shifts& shifts) {
  if (path.size() < 2) throw std::invalid_argument("transmit_cycles: path too short");
  if (shifts.r.size() != path.size())
    throw std::invalid_argument("transmit_cycles: shift vector length mismatch");
  std::vector<std::int64_t> cycles(path.size() - 1);
  std::int64_t n0 = ctx.cycle_count(path[0]);
  cycles[0] = positive_mod(release_cycle + shifts.r[0], n0);
  for (size_t i = 1; i + 1 <= path.size() - 1; ++i) {
    auto link = ctx.graph().link_index(path[i - 1], path[i]);
    if (!link) throw std::invalid_argument("transmit_cycles: path edge missing");
    std::int64_t mapped = ctx.table().phi(*link, cycles[i - 1]);
    cycles[i] = positive_mod(mapped + shifts.r[i], ctx.cycle_count(path[i]));
  }
  return cycles;
}

Microseconds delay_upper_bound(const SchedulingContext& ctx, std::span<const int> path,
                               const Shifts& shifts) {
  if (path.size() < 2) throw std::invalid_argument("delay_upper_bound: path too short");
  if (shifts.r.size() != path.size())
    throw std::invalid_argument("delay_upper_bound: shift vector length mismatch");
  Microseconds total = 0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    auto link = ctx.graph().link_index(path[i], path[i + 1]);
    if (!link) throw std::invalid_argument("delay_upper_bound: path edge missing");
    total += (shifts.r[i] + 1) * ctx.cycle_len_us(path[i]);
    total += ctx.graph().link(*link).prop_delay_us;
  }
  return total;
}

namespace {

struct HopOccupancy {
  int link = -1;
  std::int64_t first_cycle = 0;
  std::int64_t stride = 0;
  std::int64_t count = 0;  // repetitions per hypercycle
  std::int64_t n = 0;      // upstream cycle count
};

// Per-hop cycles the flow occupies, for both admission and commit.
std::string hop_occupancy(const SchedulingContext& ctx, const TsFlow& flow,
                          std::span<const int> path, const Shifts& shifts,
                          std::vector<HopOccupancy>& out) {
  const NetworkGraph& g = ctx.graph();
  Microseconds hc = ctx.hypercycle().hc_len_us;
  if (hc % flow.period_us != 0) return "period does not divide hypercycle";
  std::int64_t reps = hc / flow.period_us;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    if (flow.period_us % ctx.cycle_len_us(path[i]) != 0)
      return "period incompatible with node cycle at " + g.node(path[i]).id;
    (void)i;
  }
  auto cycles = transmit_cycles(ctx, path, flow.release_cycle, shifts);
  out.clear();
  out.reserve(path.size() - 1);
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    HopOccupancy h;
    h.link = *g.link_index(path[i], path[i + 1]);
    h.first_cycle = cycles[i];
    h.stride = flow.period_us / ctx.cycle_len_us(path[i]);
    h.count = reps;
    h.n = ctx.cycle_count(path[i]);
    out.push_back(h);
  }
  return {};
}

}  // namespace

Admissibility admissible(const SchedulingContext& ctx, const TsFlow& flow,
                         std::span<const int> path, const Shifts& shifts,
                         const CycleLedger& ledger) {
  if (path.size() < 2) return {false, "path too short"};
  const NetworkGraph& g = ctx.graph();
  if (g.node(path[0]).id != flow.src || g.node(path[path.size() - 1]).id != flow.dst)
    return {false, "path endpoints do not match flow"};
  if (auto err = check_shifts(ctx, path, shifts); !err.empty()) return {false, err};

  Microseconds bound = delay_upper_bound(ctx, path, shifts);
  if (bound > flow.deadline_us) return {false, "deadline"};

  std::vector<HopOccupancy> hops;
  if (auto err = hop_occupancy(ctx, flow, path, shifts, hops); !err.empty()) return {false, err};
  for (const auto& h : hops) {
    for (std::int64_t j = 0; j < h.count; ++j) {
      std::int64_t c = positive_mod(h.first_cycle + j * h.stride, h.n);
      if (!ledger.fits(h.link, c, flow.payload_bits)) {
        const Link& l = g.link(h.link);
        return {false, "capacity at node " + l.src + " cycle " + std::to_string(c)};
      }
    }
  }
  return {true, {}};
}

namespace {

struct ShiftTuple {
  Microseconds duration = 0;
  std::vector<std::int64_t> values;  // per searched position
};

// All shift assignments for the searched positions whose added delay fits the
// slack, ascending total duration, ties lexicographic.
std::vector<ShiftTuple> enumerate_shift_tuples(const std::vector<std::int64_t>& caps,
                                               const std::vector<Microseconds>& cycle_lens,
                                               Microseconds slack) {
  std::vector<ShiftTuple> out;
  std::vector<std::int64_t> cur(caps.size(), 0);
  std::function<void(size_t, Microseconds)> rec = [&](size_t i, Microseconds used) {
    if (i == caps.size()) {
      out.push_back({used, cur});
      return;
    }
    for (std::int64_t r = 0; r <= caps[i]; ++r) {
      Microseconds add = r * cycle_lens[i];
      if (used + add > slack) break;
      cur[i] = r;
      rec(i + 1, used + add);
    }
    cur[i] = 0;
  };
  if (slack >= 0) rec(0, 0);
  std::stable_sort(out.begin(), out.end(), [](const ShiftTuple& a, const ShiftTuple& b) {
    if (a.duration != b.duration) return a.duration < b.duration;
    return a.values < b.values;
  });
  return out;
}

struct Candidate {
  size_t path_idx = 0;
  Shifts shifts;
};

// Candidate patterns for one flow on one path, minimum resources first.
void append_candidates(const SchedulingContext& ctx, const TsFlow& flow,
                       const std::vector<std::vector<int>>& paths, size_t pi, bool shaping,
                       std::vector<Candidate>& out) {
  const auto& path = paths[pi];
  auto kinds = classify_positions(ctx, path);
  Shifts base;
  base.r.assign(path.size(), 1);
  base.r[0] = 0;
  base.r[path.size() - 1] = 0;
  std::vector<size_t> searched;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    if (kinds[i] == ShiftKind::SearchedSource || kinds[i] == ShiftKind::SearchedEdge) {
      base.r[i] = 0;
      searched.push_back(i);
    }
  }
  if (!shaping) {
    out.push_back({pi, base});
    return;
  }
  Microseconds base_bound = delay_upper_bound(ctx, path, base);
  Microseconds slack = flow.deadline_us - base_bound;
  if (slack < 0) {
    out.push_back({pi, base});  // will report the deadline violation
    return;
  }
  std::vector<std::int64_t> caps;
  std::vector<Microseconds> lens;
  for (size_t i : searched) {
    Microseconds len = ctx.cycle_len_us(path[i]);
    caps.push_back(std::min<std::int64_t>(ctx.cycle_count(path[i]) - 1, slack / len));
    lens.push_back(len);
  }
  for (auto& t : enumerate_shift_tuples(caps, lens, slack)) {
    Candidate c{pi, base};
    for (size_t k = 0; k < searched.size(); ++k) c.shifts.r[searched[k]] = t.values[k];
    out.push_back(std::move(c));
  }
}

void validate_flow_set(const SchedulingContext& ctx, const FlowSet& flows) {
  const NetworkGraph& g = ctx.graph();
  std::set<std::string> ids;
  for (const auto& f : flows.flows) {
    if (!ids.insert(f.id).second) throw std::runtime_error("duplicate flow id: " + f.id);
    if (f.weight <= 0.0 || f.weight > 1.0)
      throw std::runtime_error("weight must be in (0,1]: flow " + f.id);
    auto s = g.node_index(f.src);
    auto d = g.node_index(f.dst);
    if (!s) throw std::runtime_error("flow " + f.id + " references unknown node " + f.src);
    if (!d) throw std::runtime_error("flow " + f.id + " references unknown node " + f.dst);
    if (*s == *d) throw std::runtime_error("flow " + f.id + " has equal endpoints");
    if (g.node(*s).role != NodeRole::Source)
      throw std::runtime_error("flow " + f.id + " source is not a source host");
    if (g.node(*d).role != NodeRole::Destination)
      throw std::runtime_error("flow " + f.id + " destination is not a destination host");
    if (ctx.hypercycle().hc_len_us % f.period_us != 0)
      throw std::runtime_error("period does not divide hypercycle: flow " + f.id);
    std::int64_t n_src = ctx.cycle_count(*s);
    if (f.release_cycle < 0 || f.release_cycle >= n_src)
      throw std::runtime_error("release_cycle out of range: flow " + f.id);
    if (f.payload_bits <= 0) throw std::runtime_error("non-positive payload: flow " + f.id);
  }
}

double canonical_objective(const FlowSet& flows, const std::map<std::string, FlowDecision>& dec) {
  std::map<std::string, double> weight;
  for (const auto& f : flows.flows) weight[f.id] = f.weight;
  double total = 0;
  for (const auto& [id, d] : dec)
    if (d.accepted) total += weight[id];
  return total;
}

}  // namespace

Schedule greedy_schedule(const SchedulingContext& ctx, const FlowSet& flows,
                         const SchedulerOptions& opt) {
  validate_flow_set(ctx, flows);
  const NetworkGraph& g = ctx.graph();

  std::vector<const TsFlow*> order;
  for (const auto& f : flows.flows) order.push_back(&f);
  std::sort(order.begin(), order.end(), [](const TsFlow* a, const TsFlow* b) {
    if (a->weight != b->weight) return a->weight > b->weight;
    return a->id < b->id;
  });

  int k_eff = opt.path_selection ? opt.k_paths : 1;
  std::map<std::pair<int, int>, std::vector<std::vector<int>>> path_cache;

  CycleLedger ledger(ctx);
  Schedule sched;
  for (const TsFlow* fp : order) {
    const TsFlow& f = *fp;
    int s = *g.node_index(f.src);
    int d = *g.node_index(f.dst);
    auto key = std::make_pair(s, d);
    auto pit = path_cache.find(key);
    if (pit == path_cache.end()) pit = path_cache.emplace(key, enumerate_paths(g, s, d, k_eff)).first;
    const auto& paths = pit->second;

    FlowDecision dec;
    if (paths.empty()) {
      dec.reject_reason = "no path";
      sched.decisions[f.id] = std::move(dec);
      continue;
    }
    std::vector<Candidate> cands;
    for (size_t pi = 0; pi < paths.size(); ++pi)
      append_candidates(ctx, f, paths, pi, opt.shaping, cands);

    std::string reason;
    for (const auto& c : cands) {
      auto adm = admissible(ctx, f, paths[c.path_idx], c.shifts, ledger);
      if (adm.ok) {
        std::vector<HopOccupancy> hops;
        auto err = hop_occupancy(ctx, f, paths[c.path_idx], c.shifts, hops);
        assert(err.empty());
        (void)err;
        for (const auto& h : hops)
          for (std::int64_t j = 0; j < h.count; ++j)
            ledger.reserve(h.link, positive_mod(h.first_cycle + j * h.stride, h.n), f.payload_bits);
        dec.accepted = true;
        dec.path = paths[c.path_idx];
        dec.shifts = c.shifts;
        dec.delay_bound_us = delay_upper_bound(ctx, dec.path, dec.shifts);
        break;
      }
      if (reason.empty() || (reason == "deadline" && adm.reason != "deadline")) reason = adm.reason;
    }
    if (!dec.accepted) dec.reject_reason = reason.empty() ? "no admissible pattern" : reason;
    sched.decisions[f.id] = std::move(dec);
  }
  sched.objective = canonical_objective(flows, sched.decisions);
  return sched;
}

Schedule exact_schedule_small(const SchedulingContext& ctx, const FlowSet& flows,
                              const SchedulerOptions& opt, const ExactLimits& lim) {
  validate_flow_set(ctx, flows);
  const NetworkGraph& g = ctx.graph();
  if (static_cast<int>(flows.flows.size()) > lim.max_flows)
    throw std::runtime_error("instance too large for exact solver");

  std::vector<const TsFlow*> order;
  for (const auto& f : flows.flows) order.push_back(&f);
  std::sort(order.begin(), order.end(),
            [](const TsFlow* a, const TsFlow* b) { return a->id < b->id; });

  int k_eff = opt.path_selection ? opt.k_paths : 1;
  struct FlowCands {
    const TsFlow* flow;
    std::vector<std::vector<int>> paths;
    std::vector<Candidate> cands;
  };
  std::vector<FlowCands> fc;
  for (const TsFlow* fp : order) {
    FlowCands c;
    c.flow = fp;
    c.paths = enumerate_paths(g, *g.node_index(fp->src), *g.node_index(fp->dst), k_eff);
    for (size_t pi = 0; pi < c.paths.size(); ++pi)
      append_candidates(ctx, *fp, c.paths, pi, opt.shaping, c.cands);
    // deadline violations are state independent, drop them up front
    std::vector<Candidate> kept;
    for (auto& cand : c.cands)
      if (delay_upper_bound(ctx, c.paths[cand.path_idx], cand.shifts) <= fp->deadline_us)
        kept.push_back(std::move(cand));
    c.cands = std::move(kept);
    if (static_cast<int>(c.cands.size()) > lim.max_patterns)
      throw std::runtime_error("instance too large for exact solver");
    fc.push_back(std::move(c));
  }

  size_t n = fc.size();
  std::vector<double> suffix_weight(n + 1, 0.0);
  for (size_t i = n; i > 0; --i) suffix_weight[i - 1] = suffix_weight[i] + fc[i - 1].flow->weight;

  // choice per flow: -1 reject, otherwise candidate index
  std::vector<int> choice(n, -1), best_choice;
  std::vector<char> best_accept;
  double best_obj = -1.0;
  bool have_best = false;
  CycleLedger ledger(ctx);

  auto better = [&](double obj, const std::vector<int>& ch) {
    if (!have_best || obj > best_obj) return true;
    if (obj < best_obj) return false;
    // lexicographically smallest accepted-set indicator, then pattern indices
    std::vector<char> acc(n);
    for (size_t i = 0; i < n; ++i) acc[i] = ch[i] >= 0;
    if (acc != best_accept) return acc < best_accept;
    return ch < best_choice;
  };

  std::function<void(size_t, double)> rec = [&](size_t i, double obj) {
    if (have_best && obj + suffix_weight[i] < best_obj) return;
    if (i == n) {
      if (better(obj, choice)) {
        best_obj = obj;
        best_choice = choice;
        best_accept.assign(n, 0);
        for (size_t j = 0; j < n; ++j) best_accept[j] = choice[j] >= 0;
        have_best = true;
      }
      return;
    }
    const TsFlow& f = *fc[i].flow;
    for (size_t ci = 0; ci < fc[i].cands.size(); ++ci) {
      const auto& cand = fc[i].cands[ci];
      const auto& path = fc[i].paths[cand.path_idx];
      if (!admissible(ctx, f, path, cand.shifts, ledger).ok) continue;
      std::vector<HopOccupancy> hops;
      hop_occupancy(ctx, f, path, cand.shifts, hops);
      for (const auto& h : hops)
        for (std::int64_t j = 0; j < h.count; ++j)
          ledger.reserve(h.link, positive_mod(h.first_cycle + j * h.stride, h.n), f.payload_bits);
      choice[i] = static_cast<int>(ci);
      rec(i + 1, obj + f.weight);
      choice[i] = -1;
      for (const auto& h : hops)
        for (std::int64_t j = 0; j < h.count; ++j)
          ledger.release(h.link, positive_mod(h.first_cycle + j * h.stride, h.n), f.payload_bits);
    }
    rec(i + 1, obj);  // reject
  };
  rec(0, 0.0);

  Schedule sched;
  for (size_t i = 0; i < n; ++i) {
    const TsFlow& f = *fc[i].flow;
    FlowDecision dec;
    if (have_best && best_choice[i] >= 0) {
      const auto& cand = fc[i].cands[static_cast<size_t>(best_choice[i])];
      dec.accepted = true;
      dec.path = fc[i].paths[cand.path_idx];
      dec.shifts = cand.shifts;
      dec.delay_bound_us = delay_upper_bound(ctx, dec.path, dec.shifts);
    } else {
      dec.reject_reason = "rejected by exact solver";
    }
    sched.decisions[f.id] = std::move(dec);
  }
  FlowSet ordered;
  for (const auto& f : flows.flows) ordered.flows.push_back(f);
  sched.objective = canonical_objective(ordered, sched.decisions);
  return sched;
}

void save_schedule(const Schedule& s, const NetworkGraph& g, const std::filesystem::path& path) {
  nlohmann::json j;
  j["objective"] = s.objective;
  nlohmann::json flows = nlohmann::json::object();
  for (const auto& [id, dec] : s.decisions) {
    nlohmann::json d;
    d["accepted"] = dec.accepted;
    if (dec.accepted) {
      nlohmann::json p = nlohmann::json::array();
      for (int n : dec.path) p.push_back(g.node(n).id);
      d["path"] = p;
      d["shifts"] = dec.shifts.r;
      d["delay_bound_us"] = dec.delay_bound_us;
    } else {
      d["reason"] = dec.reject_reason;
    }
    flows[id] = d;
  }
  j["flows"] = flows;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write schedule file: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write schedule file: " + path.string());
}

Schedule load_schedule(const NetworkGraph& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schedule file: " + path.string());
  nlohmann::json j;
  in >> j;
  Schedule s;
  s.objective = j.value("objective", 0.0);
  for (auto& [id, d] : j.at("flows").items()) {
    FlowDecision dec;
    dec.accepted = d.at("accepted").get<bool>();
    if (dec.accepted) {
      for (const auto& nid : d.at("path")) {
        auto idx = g.node_index(nid.get<std::string>());
        if (!idx) throw std::runtime_error("schedule references unknown node " + nid.get<std::string>());
        dec.path.push_back(*idx);
      }
      dec.shifts.r = d.at("shifts").get<std::vector<std::int64_t>>();
      dec.delay_bound_us = d.value("delay_bound_us", 0);
    } else {
      dec.reject_reason = d.value("reason", "");
    }
    s.decisions[id] = std::move(dec);
  }
  return s;
}

}  // namespace detnet
