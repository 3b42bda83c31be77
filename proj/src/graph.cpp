#include "pistol/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "pistol/error.hpp"
#include "pistol/fixtures.hpp"
#include "pistol/rng.hpp"

namespace pistol {

std::string edge_label(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  std::string out(a);
  if (a.size() > 1 || b.size() > 1) out += '-';
  out += b;
  return out;
}

KnowledgeGraph::KnowledgeGraph(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges) {
  nodes_.reserve(nodes.size());
  for (auto& spec : nodes) {
    if (spec.label.empty()) fail(ErrorKind::InvalidParameter, "node label must be non-empty");
    const std::size_t index = nodes_.size();
    if (!node_index_.emplace(spec.label, index).second) {
      fail(ErrorKind::InvalidParameter, "duplicate node label '" + spec.label + "'");
    }
    nodes_.push_back(Node{NodeId{index, std::move(spec.label)}, spec.kind});
  }

  for (const auto& spec : edges) {
    auto a = find_node(spec.a);
    auto b = find_node(spec.b);
    if (!a || !b) {
      fail(ErrorKind::InvalidParameter,
           "edge " + spec.a + "-" + spec.b + " references an unknown node");
    }
    if (*a == *b) fail(ErrorKind::InvalidParameter, "self-loop on node '" + spec.a + "'");
    if (nodes_[*b].id.label < nodes_[*a].id.label) std::swap(a, b);

    const NodeKind ka = nodes_[*a].kind;
    const NodeKind kb = nodes_[*b].kind;
    const int persons = (ka == NodeKind::Person) + (kb == NodeKind::Person);
    ContractDomain domain =
        spec.domain.value_or(persons == 0 ? ContractDomain::SalesOfGoods : ContractDomain::Employment);
    if (domain == ContractDomain::SalesOfGoods && persons != 0) {
      fail(ErrorKind::InvalidParameter, "sales edge " + spec.a + "-" + spec.b +
                                            " must connect two companies");
    }
    if (domain == ContractDomain::Employment && persons != 1) {
      fail(ErrorKind::InvalidParameter, "employment edge " + spec.a + "-" + spec.b +
                                            " needs exactly one person endpoint");
    }
    edges_.push_back(Edge{*a, *b, domain, edge_label(nodes_[*a].id.label, nodes_[*b].id.label)});
  }

  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& x, const Edge& y) { return x.label < y.label; });
  adjacency_.assign(nodes_.size(), {});
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    const auto key = std::minmax(e.first, e.second);
    if (!pairs.insert(key).second) {
      fail(ErrorKind::InvalidParameter, "duplicate edge " + e.label);
    }
    if (!edge_index_.emplace(e.label, i).second) {
      fail(ErrorKind::InvalidParameter, "edge label collision on '" + e.label + "'");
    }
    adjacency_[e.first].push_back(i);
    adjacency_[e.second].push_back(i);
  }
}

std::size_t KnowledgeGraph::degree(std::string_view label) const {
  return degree(node(label).id.index);
}

std::optional<std::size_t> KnowledgeGraph::find_node(std::string_view label) const {
  auto it = node_index_.find(std::string(label));
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> KnowledgeGraph::find_edge(std::string_view label) const {
  auto it = edge_index_.find(std::string(label));
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

const Edge& KnowledgeGraph::edge(std::string_view label) const {
  auto i = find_edge(label);
  if (!i) fail(ErrorKind::NotFound, "no edge labelled '" + std::string(label) + "'");
  return edges_[*i];
}

const Node& KnowledgeGraph::node(std::string_view label) const {
  auto i = find_node(label);
  if (!i) fail(ErrorKind::NotFound, "no node labelled '" + std::string(label) + "'");
  return nodes_[*i];
}

std::size_t edge_interconnectivity(const KnowledgeGraph& g, std::string_view edge) {
  return edge_interconnectivity(g, g.edge(edge));
}

std::size_t edge_interconnectivity(const KnowledgeGraph& g, const Edge& e) {
  auto idx = g.find_edge(e.label);
  if (!idx || !(g.edges()[*idx] == e)) {
    fail(ErrorKind::NotFound, "edge '" + e.label + "' is not part of the graph");
  }
  return g.degree(e.first) + g.degree(e.second) - 1;
}

namespace {

std::vector<NodeSpec> numbered_companies(std::size_t n, std::size_t offset = 0) {
  std::vector<NodeSpec> nodes;
  nodes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes.push_back({std::to_string(offset + i), NodeKind::Company});
  }
  return nodes;
}

void require_nodes(std::size_t n, const char* what) {
  if (n < 2) {
    fail(ErrorKind::InvalidParameter,
         std::string(what) + " needs at least 2 nodes, got " + std::to_string(n));
  }
}

std::vector<std::pair<std::size_t, std::size_t>> chain_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i + 1 < n; ++i) out.emplace_back(i, i + 1);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> complete_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> semi_dense_pairs(std::size_t n, std::size_t e,
                                                                  std::uint64_t seed) {
  require_nodes(n, "semi-dense graph");
  const std::size_t max_edges = n * (n - 1) / 2;
  if (e + 1 < n || e > max_edges) {
    fail(ErrorKind::InvalidParameter, "semi-dense graph on " + std::to_string(n) +
                                          " nodes needs between " + std::to_string(n - 1) +
                                          " and " + std::to_string(max_edges) + " edges, got " +
                                          std::to_string(e));
  }
  auto pairs = chain_pairs(n);
  std::vector<std::pair<std::size_t, std::size_t>> extra;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) extra.emplace_back(i, j);
  }
  Stream rng(derive_seed(seed, "semi-dense:" + std::to_string(n) + ":" + std::to_string(e)));
  rng.shuffle(std::span(extra));
  extra.resize(e - (n - 1));
  std::sort(extra.begin(), extra.end());
  pairs.insert(pairs.end(), extra.begin(), extra.end());
  return pairs;
}

void append_edges(std::vector<EdgeSpec>& out, const std::vector<NodeSpec>& nodes,
                  const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                  std::size_t offset = 0) {
  for (auto [a, b] : pairs) {
    out.push_back({nodes[offset + a].label, nodes[offset + b].label, ContractDomain::SalesOfGoods});
  }
}

KnowledgeGraph from_pairs(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  auto nodes = numbered_companies(n);
  std::vector<EdgeSpec> edges;
  append_edges(edges, nodes, pairs);
  return KnowledgeGraph(std::move(nodes), std::move(edges));
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

KnowledgeGraph build_dataset1() { return parse_edge_list(fixtures::dataset1_edges()); }

KnowledgeGraph build_chain(std::size_t n) {
  require_nodes(n, "chain");
  return from_pairs(n, chain_pairs(n));
}

KnowledgeGraph build_complete(std::size_t n) {
  require_nodes(n, "complete graph");
  return from_pairs(n, complete_pairs(n));
}

KnowledgeGraph build_semi_dense(std::size_t n, std::size_t e, std::uint64_t seed) {
  return from_pairs(n, semi_dense_pairs(n, e, seed));
}

KnowledgeGraph build_dataset2(std::size_t semi_dense_edges, std::uint64_t seed) {
  constexpr std::size_t kComponent = 10;
  auto nodes = numbered_companies(3 * kComponent);
  std::vector<EdgeSpec> edges;
  append_edges(edges, nodes, chain_pairs(kComponent), 0);
  append_edges(edges, nodes, semi_dense_pairs(kComponent, semi_dense_edges, seed), kComponent);
  append_edges(edges, nodes, complete_pairs(kComponent), 2 * kComponent);
  return KnowledgeGraph(std::move(nodes), std::move(edges));
}

KnowledgeGraph parse_edge_list(std::string_view text) {
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  std::vector<std::size_t> edge_lines;
  bool header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto where = [&] { return "edge list line " + std::to_string(line_no) + ": "; };
    auto fields = split_ws(line);
    if (!header) {
      if (fields.size() == 3 && fields[0] == "#" && fields[1] == "pistol-edges") {
        if (fields[2] != "1") fail(ErrorKind::Parse, where() + "unsupported version " + std::string(fields[2]));
        header = true;
        continue;
      }
      if (fields.empty()) continue;
      fail(ErrorKind::Parse, where() + "expected '# pistol-edges 1' header");
    }
    if (fields.empty() || fields[0].front() == '#') continue;
    try {
      if (fields[0] == "node" && fields.size() == 3) {
        nodes.push_back({std::string(fields[1]), parse_node_kind(fields[2])});
      } else if (fields[0] == "edge" && (fields.size() == 3 || fields.size() == 4)) {
        EdgeSpec e{std::string(fields[1]), std::string(fields[2]), std::nullopt};
        if (fields.size() == 4) e.domain = parse_domain(fields[3]);
        edges.push_back(std::move(e));
        edge_lines.push_back(line_no);
      } else {
        fail(ErrorKind::Parse, "unrecognised record");
      }
    } catch (const Error& err) {
      fail(ErrorKind::Parse, where() + err.what());
    }
  }
  if (!header) fail(ErrorKind::Parse, "edge list is missing the '# pistol-edges 1' header");
  // Per-edge problems are reported against the edge's line.
  std::set<std::string> known;
  for (const auto& n : nodes) known.insert(n.label);
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const std::string where = "edge list line " + std::to_string(edge_lines[i]) + ": ";
    for (const auto& end : {e.a, e.b}) {
      if (!known.contains(end)) fail(ErrorKind::Parse, where + "edge references unknown node " + end);
    }
    if (e.a == e.b) fail(ErrorKind::Parse, where + "self-loop on " + e.a);
    if (!seen.insert(std::minmax(e.a, e.b)).second) {
      fail(ErrorKind::Parse, where + "duplicate edge " + e.a + " " + e.b);
    }
  }
  try {
    return KnowledgeGraph(std::move(nodes), std::move(edges));
  } catch (const Error& err) {
    fail(ErrorKind::Parse, std::string("edge list: ") + err.what());
  }
}

std::string format_edge_list(const KnowledgeGraph& g) {
  std::ostringstream out;
  out << "# pistol-edges 1\n";
  for (const auto& n : g.nodes()) out << "node " << n.id.label << ' ' << to_string(n.kind) << '\n';
  for (const auto& e : g.edges()) {
    out << "edge " << g.node(e.first).id.label << ' ' << g.node(e.second).id.label << ' '
        << to_string(e.domain) << '\n';
  }
  return out.str();
}

KnowledgeGraph build(const TopologySpec& spec) {
  return std::visit(
      [](const auto& s) -> KnowledgeGraph {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Dataset1Topology>) {
          return build_dataset1();
        } else if constexpr (std::is_same_v<T, Dataset2Topology>) {
          return build_dataset2(s.semi_dense_edges, s.seed);
        } else if constexpr (std::is_same_v<T, ChainTopology>) {
          return build_chain(s.n);
        } else if constexpr (std::is_same_v<T, SemiDenseTopology>) {
          return build_semi_dense(s.n, s.e, s.seed);
        } else if constexpr (std::is_same_v<T, CompleteTopology>) {
          return build_complete(s.n);
        } else {
          return parse_edge_list(s.edge_list);
        }
      },
      spec);
}

std::string topology_name(const TopologySpec& spec) {
  static constexpr const char* names[] = {"dataset1", "dataset2", "chain",
                                          "semi-dense", "complete", "custom"};
  return names[spec.index()];
}

}  // namespace pistol
