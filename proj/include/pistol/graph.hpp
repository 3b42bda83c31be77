#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "pistol/domain.hpp"

namespace pistol {

struct NodeId {
  std::size_t index = 0;
  std::string label;

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::Company;

  friend bool operator==(const Node&, const Node&) = default;
};

/// An undirected contract edge. `first` is the endpoint whose label sorts
/// first; for sales contracts it is the seller.
struct Edge {
  std::size_t first = 0;
  std::size_t second = 0;
  ContractDomain domain = ContractDomain::SalesOfGoods;
  std::string label;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Label for the edge between two node labels: the lexicographically sorted
/// labels concatenated ("A"+"B" -> "AB"), joined with '-' when either label
/// is longer than one character so that numeric labels stay unambiguous.
std::string edge_label(std::string_view a, std::string_view b);

struct NodeSpec {
  std::string label;
  NodeKind kind = NodeKind::Company;
};

struct EdgeSpec {
  std::string a;
  std::string b;
  /// Unset means "derive from endpoint kinds".
  std::optional<ContractDomain> domain;
};

/// Immutable knowledge graph of entities (nodes) and contracts (edges).
/// Edges are stored sorted by label.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Validates and builds. Throws InvalidParameter on duplicate labels,
  /// self-loops, duplicate edges, or a domain that contradicts node kinds.
  KnowledgeGraph(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Node& node(std::size_t index) const { return nodes_.at(index); }

  std::size_t degree(std::size_t index) const { return adjacency_.at(index).size(); }
  std::size_t degree(std::string_view label) const;

  /// Edge indices incident to node `index`.
  const std::vector<std::size_t>& incident(std::size_t index) const {
    return adjacency_.at(index);
  }

  std::optional<std::size_t> find_node(std::string_view label) const;
  std::optional<std::size_t> find_edge(std::string_view label) const;

  /// Throws NotFound.
  const Edge& edge(std::string_view label) const;
  const Node& node(std::string_view label) const;

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::unordered_map<std::string, std::size_t> node_index_;
  std::unordered_map<std::string, std::size_t> edge_index_;
};

/// deg(u) + deg(v) - 1 for the edge with this label. Throws NotFound.
std::size_t edge_interconnectivity(const KnowledgeGraph& g, std::string_view edge);
std::size_t edge_interconnectivity(const KnowledgeGraph& g, const Edge& e);

// Builders. Generated graphs label nodes "0".."n-1"; all nodes are companies
// and all edges are sales contracts.

KnowledgeGraph build_dataset1();
KnowledgeGraph build_chain(std::size_t n);
KnowledgeGraph build_complete(std::size_t n);
/// Chain backbone plus (e - n + 1) distinct extra edges drawn from `seed`.
KnowledgeGraph build_semi_dense(std::size_t n, std::size_t e, std::uint64_t seed);
/// Three disjoint 10-node components: chain on 0-9, semi-dense on 10-19,
/// complete on 20-29.
KnowledgeGraph build_dataset2(std::size_t semi_dense_edges, std::uint64_t seed);

/// Parse the versioned edge-list format ("# pistol-edges 1" header, then
/// `node <label> <company|person>` and `edge <a> <b> [sales|employment]`
/// lines). Throws Parse with the offending line number.
KnowledgeGraph parse_edge_list(std::string_view text);
std::string format_edge_list(const KnowledgeGraph& g);

struct Dataset1Topology {
  friend bool operator==(const Dataset1Topology&, const Dataset1Topology&) = default;
};
struct Dataset2Topology {
  std::size_t semi_dense_edges = 21;
  std::uint64_t seed = 0;
  friend bool operator==(const Dataset2Topology&, const Dataset2Topology&) = default;
};
struct ChainTopology {
  std::size_t n = 0;
  friend bool operator==(const ChainTopology&, const ChainTopology&) = default;
};
struct SemiDenseTopology {
  std::size_t n = 0;
  std::size_t e = 0;
  std::uint64_t seed = 0;
  friend bool operator==(const SemiDenseTopology&, const SemiDenseTopology&) = default;
};
struct CompleteTopology {
  std::size_t n = 0;
  friend bool operator==(const CompleteTopology&, const CompleteTopology&) = default;
};
struct CustomTopology {
  /// Edge-list text in the `parse_edge_list` format.
  std::string edge_list;
  friend bool operator==(const CustomTopology&, const CustomTopology&) = default;
};

using TopologySpec = std::variant<Dataset1Topology, Dataset2Topology, ChainTopology,
                                  SemiDenseTopology, CompleteTopology, CustomTopology>;

KnowledgeGraph build(const TopologySpec& spec);

/// Short name: dataset1, dataset2, chain, semi-dense, complete, custom.
std::string topology_name(const TopologySpec& spec);

}  // namespace pistol
