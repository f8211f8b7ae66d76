#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detnet/types.hpp"

namespace detnet {

enum class NodeRole {
  Source,
  Destination,
  CqfSwitch,
  CqfEdgeSwitch,
  DipRouter,
  DipEdgeRouter,
};

const char* role_name(NodeRole r);
std::optional<NodeRole> role_from_name(const std::string& s);

struct Node {
  NodeId id;
  NodeRole role;
  DomainId domain;
};

// Directed link. Physical cables appear as two entries, one per direction.
struct Link {
  NodeId src;
  NodeId dst;
  Microseconds prop_delay_us = 0;  // >= 0
  BitsPerSecond bandwidth_bps = 0;  // > 0
};

// Which role pairs may be directly cabled. Hosts hang off plain CQF switches,
// CQF edge switches face DIP edge routers, and the DIP core is router-router.
bool roles_adjacent(NodeRole a, NodeRole b);

class NetworkGraph {
 public:
  void add_node(const Node& n);  // throws on duplicate id
  void add_link(const Link& l);  // throws on unknown endpoint or duplicate pair

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int link_count() const { return static_cast<int>(links_.size()); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const Node& node(int idx) const { return nodes_[static_cast<size_t>(idx)]; }
  const Link& link(int idx) const { return links_[static_cast<size_t>(idx)]; }

  std::optional<int> node_index(const NodeId& id) const;
  std::optional<int> link_index(int src, int dst) const;
  const std::vector<int>& out_links(int node) const;

  // Structural checks: role adjacency per link, positive bandwidth,
  // non-negative delay, non-empty node set. Returns human-readable
  // violations; empty means valid.
  std::vector<std::string> validate() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::map<NodeId, int> index_;
  std::map<std::pair<int, int>, int> link_index_;
  std::vector<std::vector<int>> out_;
};

// Line format:
//   node <id> <role> <domain>
//   link <src> <dst> <delay_us> <bw_bps>
// '#' starts a comment. Roles: source destination cqf_switch cqf_edge_switch
// dip_router dip_edge_router.
NetworkGraph load_topology(const std::filesystem::path& path);
void save_topology(const NetworkGraph& g, const std::filesystem::path& path);

// Built-in DIP cores: "atlanta15" (15 routers, 22 cables, 150 us, 10 Gbps)
// and "desk8" (8 routers, 10 cables, desk-scale experiments).
NetworkGraph generate_core(const std::string& name);

struct AccessParams {
  int n_access = 4;
  int cqf_per_access = 2;  // plain switches per access, edge switch excluded
  BitsPerSecond access_bw = 1'000'000'000;
  Microseconds access_delay_us = 1;
  int attach_fanout = 4;  // max access networks per core router
  DomainId dip_domain = "dip";
};

// Attaches n_access CQF access trees to a DIP-only core, round-robin over
// core routers sorted by id. Each access k contributes one Source host
// a<k>h0, one Destination host a<k>h1, cqf_per_access switches a<k>s<i>, an
// edge switch a<k>e and a gateway DIP edge router a<k>g, all in fresh domain
// acc<k> except the gateway, which joins the DIP domain.
NetworkGraph generate_hierarchical(const NetworkGraph& core, const AccessParams& p);

// Up to k loop-free role-legal paths from src to dst, hop count ascending,
// ties by lexicographic node-id sequence. Hosts never appear in the interior.
// Deterministic; empty when disconnected.
std::vector<std::vector<int>> enumerate_paths(const NetworkGraph& g, int src, int dst, int k);

}  // namespace detnet
