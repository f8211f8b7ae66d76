#include "detnet/topology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace detnet {

namespace {

const std::vector<int> kNoLinks;

std::string link_name(const NodeId& a, const NodeId& b) {
  return a + "->" + b;
}

}  // namespace

const char* role_name(NodeRole r) {
  switch (r) {
    case NodeRole::Source: return "source";
    case NodeRole::Destination: return "destination";
    case NodeRole::CqfSwitch: return "cqf_switch";
    case NodeRole::CqfEdgeSwitch: return "cqf_edge_switch";
    case NodeRole::DipRouter: return "dip_router";
    case NodeRole::DipEdgeRouter: return "dip_edge_router";
  }
  return "?";
}

std::optional<NodeRole> role_from_name(const std::string& s) {
  if (s == "source") return NodeRole::Source;
  if (s == "destination") return NodeRole::Destination;
  if (s == "cqf_switch") return NodeRole::CqfSwitch;
  if (s == "cqf_edge_switch") return NodeRole::CqfEdgeSwitch;
  if (s == "dip_router") return NodeRole::DipRouter;
  if (s == "dip_edge_router") return NodeRole::DipEdgeRouter;
  return std::nullopt;
}

bool roles_adjacent(NodeRole a, NodeRole b) {
  auto pair_is = [&](NodeRole x, NodeRole y) {
    return (a == x && b == y) || (a == y && b == x);
  };
  return pair_is(NodeRole::Source, NodeRole::CqfSwitch) ||
         pair_is(NodeRole::Destination, NodeRole::CqfSwitch) ||
         pair_is(NodeRole::CqfSwitch, NodeRole::CqfSwitch) ||
         pair_is(NodeRole::CqfSwitch, NodeRole::CqfEdgeSwitch) ||
         pair_is(NodeRole::CqfEdgeSwitch, NodeRole::DipEdgeRouter) ||
         pair_is(NodeRole::DipEdgeRouter, NodeRole::DipRouter) ||
         pair_is(NodeRole::DipRouter, NodeRole::DipRouter);
}

void NetworkGraph::add_node(const Node& n) {
  if (index_.count(n.id)) throw std::runtime_error("duplicate node id: " + n.id);
  index_[n.id] = static_cast<int>(nodes_.size());
  nodes_.push_back(n);
  out_.emplace_back();
}

void NetworkGraph::add_link(const Link& l) {
  auto s = node_index(l.src);
  auto d = node_index(l.dst);
  if (!s) throw std::runtime_error("link references unknown node: " + l.src);
  if (!d) throw std::runtime_error("link references unknown node: " + l.dst);
  if (*s == *d) throw std::runtime_error("self link at node: " + l.src);
  auto key = std::make_pair(*s, *d);
  if (link_index_.count(key)) throw std::runtime_error("duplicate link: " + link_name(l.src, l.dst));
  link_index_[key] = static_cast<int>(links_.size());
  out_[static_cast<size_t>(*s)].push_back(static_cast<int>(links_.size()));
  links_.push_back(l);
}

std::optional<int> NetworkGraph::node_index(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> NetworkGraph::link_index(int src, int dst) const {
  auto it = link_index_.find({src, dst});
  if (it == link_index_.end()) return std::nullopt;
  return it->second;
}

const std::vector<int>& NetworkGraph::out_links(int node) const {
  if (node < 0 || node >= node_count()) return kNoLinks;
  return out_[static_cast<size_t>(node)];
}

std::vector<std::string> NetworkGraph::validate() const {
  std::vector<std::string> bad;
  if (nodes_.empty()) {
    bad.push_back("no nodes");
    return bad;
  }
  for (const auto& l : links_) {
    const Node& a = nodes_[static_cast<size_t>(*node_index(l.src))];
    const Node& b = nodes_[static_cast<size_t>(*node_index(l.dst))];
    if (!roles_adjacent(a.role, b.role)) {
      bad.push_back("illegal role adjacency on link " + link_name(l.src, l.dst) + " (" +
                    role_name(a.role) + " to " + role_name(b.role) + ")");
    }
    if (l.bandwidth_bps <= 0) bad.push_back("non-positive bandwidth on link " + link_name(l.src, l.dst));
    if (l.prop_delay_us < 0) bad.push_back("negative delay on link " + link_name(l.src, l.dst));
  }
  return bad;
}

NetworkGraph load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open topology file: " + path.string());
  NetworkGraph g;
  std::string line;
  int lineno = 0;
  // links may reference nodes declared later, so collect them first
  std::vector<Link> pending;
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
    if (kw == "node") {
      std::string id, role, domain;
      if (!(ls >> id >> role >> domain)) throw fail("malformed node line");
      auto r = role_from_name(role);
      if (!r) throw fail("unknown role: " + role);
      g.add_node({id, *r, domain});
    } else if (kw == "link") {
      Link l;
      if (!(ls >> l.src >> l.dst >> l.prop_delay_us >> l.bandwidth_bps)) throw fail("malformed link line");
      pending.push_back(l);
    } else {
      throw fail("unknown keyword: " + kw);
    }
  }
  for (const auto& l : pending) g.add_link(l);
  return g;
}

void save_topology(const NetworkGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write topology file: " + path.string());
  for (const auto& n : g.nodes())
    out << "node " << n.id << ' ' << role_name(n.role) << ' ' << n.domain << '\n';
  for (const auto& l : g.links())
    out << "link " << l.src << ' ' << l.dst << ' ' << l.prop_delay_us << ' ' << l.bandwidth_bps << '\n';
  if (!out) throw std::runtime_error("cannot write topology file: " + path.string());
}

namespace {

NetworkGraph core_from_cables(int n, const std::vector<std::pair<int, int>>& cables,
                              Microseconds delay_us, BitsPerSecond bw) {
  NetworkGraph g;
  auto name = [](int i) {
    std::ostringstream s;
    s << "dr" << (i < 10 ? "0" : "") << i;
    return s.str();
  };
  for (int i = 0; i < n; ++i) g.add_node({name(i), NodeRole::DipRouter, "dip"});
  for (auto [a, b] : cables) {
    g.add_link({name(a), name(b), delay_us, bw});
    g.add_link({name(b), name(a), delay_us, bw});
  }
  return g;
}

}  // namespace

NetworkGraph generate_core(const std::string& name) {
  // 30 km of fiber at 5 us/km
  const Microseconds core_delay = 150;
  const BitsPerSecond core_bw = 10'000'000'000;
  if (name == "atlanta15") {
    // 15 routers, 22 cables: ring plus seven chords, diameter 4.
    std::vector<std::pair<int, int>> cables;
    for (int i = 0; i < 15; ++i) cables.push_back({i, (i + 1) % 15});
    for (auto c : {std::pair{0, 5}, {1, 7}, {2, 8}, {3, 10}, {4, 11}, {6, 12}, {9, 14}})
      cables.push_back(c);
    return core_from_cables(15, cables, core_delay, core_bw);
  }
  if (name == "desk8") {
    std::vector<std::pair<int, int>> cables;
    for (int i = 0; i < 8; ++i) cables.push_back({i, (i + 1) % 8});
    cables.push_back({0, 4});
    cables.push_back({2, 6});
    return core_from_cables(8, cables, core_delay, core_bw);
  }
  throw std::runtime_error("unknown core generator: " + name);
}

NetworkGraph generate_hierarchical(const NetworkGraph& core, const AccessParams& p) {
  if (p.n_access < 1) throw std::runtime_error("n_access must be at least 1");
  if (p.cqf_per_access < 1) throw std::runtime_error("cqf_per_access must be at least 1");
  for (const auto& n : core.nodes())
    if (n.role != NodeRole::DipRouter)
      throw std::runtime_error("core must contain only dip_router nodes, found " + n.id);
  if (p.n_access > core.node_count() * p.attach_fanout)
    throw std::runtime_error("n_access exceeds core attachment capacity");

  NetworkGraph g;
  for (const auto& n : core.nodes()) g.add_node(n);
  for (const auto& l : core.links()) g.add_link(l);

  std::vector<NodeId> routers;
  for (const auto& n : core.nodes()) routers.push_back(n.id);
  std::sort(routers.begin(), routers.end());

  auto both = [&g](const NodeId& a, const NodeId& b, Microseconds d, BitsPerSecond bw) {
    g.add_link({a, b, d, bw});
    g.add_link({b, a, d, bw});
  };

  for (int k = 0; k < p.n_access; ++k) {
    std::string acc = "a" + std::to_string(k);
    DomainId dom = "acc" + std::to_string(k);
    std::vector<NodeId> chain;
    for (int i = 0; i < p.cqf_per_access; ++i) {
      NodeId sw = acc + "s" + std::to_string(i);
      g.add_node({sw, NodeRole::CqfSwitch, dom});
      chain.push_back(sw);
    }
    NodeId edge = acc + "e";
    NodeId gw = acc + "g";
    g.add_node({edge, NodeRole::CqfEdgeSwitch, dom});
    g.add_node({gw, NodeRole::DipEdgeRouter, p.dip_domain});
    g.add_node({acc + "h0", NodeRole::Source, dom});
    g.add_node({acc + "h1", NodeRole::Destination, dom});

    both(acc + "h0", chain.front(), p.access_delay_us, p.access_bw);
    both(acc + "h1", chain.front(), p.access_delay_us, p.access_bw);
    for (size_t i = 0; i + 1 < chain.size(); ++i)
      both(chain[i], chain[i + 1], p.access_delay_us, p.access_bw);
    both(chain.back(), edge, p.access_delay_us, p.access_bw);
    both(edge, gw, p.access_delay_us, p.access_bw);
    // gateway sits with its core router; DIP-side ports run at core speed
    const NodeId& attach = routers[static_cast<size_t>(k) % routers.size()];
    BitsPerSecond core_bw = 0;
    for (int li : core.out_links(*core.node_index(attach))) core_bw = core.link(li).bandwidth_bps;
    if (core_bw == 0) core_bw = p.access_bw;
    both(gw, attach, p.access_delay_us, core_bw);
  }
  return g;
}

namespace {

struct PathCollector {
  const NetworkGraph& g;
  int dst;
  size_t max_len;  // nodes
  std::vector<int> cur;
  std::vector<char> used;
  std::vector<std::vector<int>> found;

  void dfs(int node) {
    if (node == dst) {
      found.push_back(cur);
      return;
    }
    if (cur.size() >= max_len) return;
    // deterministic expansion: neighbors by node id
    std::vector<std::pair<NodeId, int>> next;
    for (int li : g.out_links(node)) {
      const Link& l = g.link(li);
      int d = *g.node_index(l.dst);
      if (used[static_cast<size_t>(d)]) continue;
      NodeRole r = g.node(d).role;
      if (!roles_adjacent(g.node(node).role, r)) continue;
      // hosts terminate paths: only the requested destination may appear
      if ((r == NodeRole::Source || r == NodeRole::Destination) && d != dst) continue;
      next.push_back({l.dst, d});
    }
    std::sort(next.begin(), next.end());
    for (auto& [id, d] : next) {
      used[static_cast<size_t>(d)] = 1;
      cur.push_back(d);
      dfs(d);
      cur.pop_back();
      used[static_cast<size_t>(d)] = 0;
    }
  }
};

// shortest role-legal hop distance, or -1
int bfs_hops(const NetworkGraph& g, int src, int dst) {
  std::vector<int> dist(static_cast<size_t>(g.node_count()), -1);
  std::vector<int> queue{src};
  dist[static_cast<size_t>(src)] = 0;
  for (size_t h = 0; h < queue.size(); ++h) {
    int u = queue[h];
    if (u == dst) return dist[static_cast<size_t>(u)];
    for (int li : g.out_links(u)) {
      int d = *g.node_index(g.link(li).dst);
      NodeRole r = g.node(d).role;
      if (!roles_adjacent(g.node(u).role, r)) continue;
      if ((r == NodeRole::Source || r == NodeRole::Destination) && d != dst) continue;
      if (dist[static_cast<size_t>(d)] < 0) {
        dist[static_cast<size_t>(d)] = dist[static_cast<size_t>(u)] + 1;
        queue.push_back(d);
      }
    }
  }
  return -1;
}

}  // namespace

std::vector<std::vector<int>> enumerate_paths(const NetworkGraph& g, int src, int dst, int k) {
  if (k <= 0) return {};
  if (src < 0 || dst < 0 || src >= g.node_count() || dst >= g.node_count())
    throw std::invalid_argument("enumerate_paths: node index out of range");
  if (src == dst) throw std::invalid_argument("enumerate_paths: src equals dst");
  int shortest = bfs_hops(g, src, dst);
  if (shortest < 0) return {};

  // bounded detour keeps enumeration cheap and still yields k alternatives
  PathCollector pc{g, dst, static_cast<size_t>(shortest) + 5, {}, {}, {}};
  pc.used.assign(static_cast<size_t>(g.node_count()), 0);
  pc.used[static_cast<size_t>(src)] = 1;
  pc.cur.push_back(src);
  pc.dfs(src);

  auto id_seq = [&](const std::vector<int>& p) {
    std::vector<NodeId> s;
    s.reserve(p.size());
    for (int n : p) s.push_back(g.node(n).id);
    return s;
  };
  std::sort(pc.found.begin(), pc.found.end(), [&](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return id_seq(a) < id_seq(b);
  });
  if (pc.found.size() > static_cast<size_t>(k)) pc.found.resize(static_cast<size_t>(k));
  return pc.found;
}

}  // namespace detnet
