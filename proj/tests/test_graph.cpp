#include <gtest/gtest.h>

#include <algorithm>
#include <queue>
#include <set>

#include "pistol/dataset.hpp"
#include "pistol/error.hpp"
#include "pistol/graph.hpp"

using namespace pistol;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected pistol::Error";
  return ErrorKind::Io;
}

// Component containing `start`, found by breadth-first search over edges.
std::set<std::string> component(const KnowledgeGraph& g, const std::string& start) {
  std::set<std::string> seen{start};
  std::queue<std::size_t> todo;
  todo.push(*g.find_node(start));
  while (!todo.empty()) {
    const std::size_t u = todo.front();
    todo.pop();
    for (std::size_t ei : g.incident(u)) {
      const Edge& e = g.edges()[ei];
      const std::size_t v = e.first == u ? e.second : e.first;
      if (seen.insert(g.node(v).id.label).second) todo.push(v);
    }
  }
  return seen;
}

bool connected(const KnowledgeGraph& g) {
  return component(g, g.nodes().front().id.label).size() == g.node_count();
}

}  // namespace

TEST(Graph, Dataset1Shape) {
  const KnowledgeGraph g = build_dataset1();
  EXPECT_EQ(g.node_count(), 24u);
  EXPECT_EQ(g.edge_count(), 20u);
  EXPECT_EQ(g.degree("A"), 8u);
  EXPECT_EQ(g.degree("B"), 7u);
  EXPECT_EQ(g.degree("C"), 1u);
  EXPECT_EQ(g.edge("AB").domain, ContractDomain::SalesOfGoods);
  EXPECT_EQ(g.edge("AC").domain, ContractDomain::SalesOfGoods);
  EXPECT_EQ(g.edge("An").domain, ContractDomain::Employment);
  EXPECT_EQ(g.node("n").kind, NodeKind::Person);
  EXPECT_EQ(edge_interconnectivity(g, "AB"), 14u);
  EXPECT_EQ(edge_interconnectivity(g, "AC"), 8u);
}

TEST(Graph, Dataset1IsolatedSubgraph) {
  const KnowledgeGraph g = build_dataset1();
  const auto iso = component(g, "E");
  EXPECT_EQ(iso, (std::set<std::string>{"E", "F", "q"}));
  EXPECT_EQ(g.edge("EF").domain, ContractDomain::SalesOfGoods);
  EXPECT_EQ(g.edge("Eq").domain, ContractDomain::Employment);
  EXPECT_FALSE(component(g, "A").contains("E"));
}

TEST(Graph, Dataset1InvariantsHold) {
  const KnowledgeGraph g = build_dataset1();
  std::size_t degree_sum = 0;
  for (std::size_t i = 0; i < g.node_count(); ++i) degree_sum += g.degree(i);
  EXPECT_EQ(degree_sum, 2 * g.edge_count());
  for (const auto& e : g.edges()) {
    const auto k1 = g.node(e.first).kind;
    const auto k2 = g.node(e.second).kind;
    if (e.domain == ContractDomain::SalesOfGoods) {
      EXPECT_TRUE(k1 == NodeKind::Company && k2 == NodeKind::Company) << e.label;
    } else {
      EXPECT_NE(k1 == NodeKind::Person, k2 == NodeKind::Person) << e.label;
    }
  }
}

TEST(Graph, Chain) {
  EXPECT_EQ(build_chain(10).edge_count(), 9u);
  EXPECT_EQ(build_chain(2).edge_count(), 1u);
  const KnowledgeGraph g = build_chain(5);
  std::vector<std::size_t> deg;
  for (std::size_t i = 0; i < 5; ++i) deg.push_back(g.degree(i));
  EXPECT_EQ(deg, (std::vector<std::size_t>{1, 2, 2, 2, 1}));
  for (const auto& n : g.nodes()) EXPECT_EQ(n.kind, NodeKind::Company);
  EXPECT_EQ(kind_of([] { build_chain(1); }), ErrorKind::InvalidParameter);
}

TEST(Graph, Complete) {
  EXPECT_EQ(build_complete(10).edge_count(), 45u);
  EXPECT_EQ(build_complete(2).edge_count(), 1u);
  const KnowledgeGraph g = build_complete(4);
  EXPECT_EQ(g.edge_count(), 6u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(g.degree(i), 3u);
  EXPECT_EQ(kind_of([] { build_complete(1); }), ErrorKind::InvalidParameter);
}

TEST(Graph, SemiDense) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const KnowledgeGraph g = build_semi_dense(10, 21, seed);
    EXPECT_EQ(g.edge_count(), 21u);
    EXPECT_TRUE(connected(g));
    for (std::size_t i = 0; i + 1 < 10; ++i) {
      EXPECT_TRUE(g.find_edge(edge_label(std::to_string(i), std::to_string(i + 1)))) << i;
    }
  }
  EXPECT_EQ(build_semi_dense(10, 9, 3), build_chain(10));
  EXPECT_EQ(build_semi_dense(10, 45, 3).edge_count(), 45u);
  EXPECT_EQ(build_semi_dense(10, 21, 5), build_semi_dense(10, 21, 5));
  EXPECT_EQ(kind_of([] { build_semi_dense(10, 8, 0); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { build_semi_dense(10, 46, 0); }), ErrorKind::InvalidParameter);
}

TEST(Graph, Dataset2) {
  const KnowledgeGraph g = build_dataset2(21, 0);
  EXPECT_EQ(g.node_count(), 30u);
  EXPECT_EQ(g.edge_count(), 9u + 21u + 45u);
  EXPECT_EQ(component(g, "0").size(), 10u);
  EXPECT_EQ(component(g, "10").size(), 10u);
  EXPECT_EQ(component(g, "20").size(), 10u);
}

TEST(Graph, Interconnectivity) {
  const KnowledgeGraph g = build_chain(2);
  EXPECT_EQ(edge_interconnectivity(g, "01"), 1u);
  EXPECT_EQ(kind_of([&] { edge_interconnectivity(g, "12"); }), ErrorKind::NotFound);
}

TEST(Graph, EdgeLabels) {
  EXPECT_EQ(edge_label("B", "A"), "AB");
  EXPECT_EQ(edge_label("3", "12"), "12-3");
  EXPECT_EQ(edge_label("1", "2"), "12");
}

TEST(Graph, ValidationRejectsBadGraphs) {
  using N = std::vector<NodeSpec>;
  using E = std::vector<EdgeSpec>;
  EXPECT_EQ(kind_of([] { KnowledgeGraph(N{{"A"}, {"A"}}, E{}); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { KnowledgeGraph(N{{"A"}}, E{{"A", "A"}}); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { KnowledgeGraph(N{{"A"}, {"B"}}, E{{"A", "B"}, {"B", "A"}}); }),
            ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] {
              KnowledgeGraph(N{{"A"}, {"p", NodeKind::Person}}, E{{"A", "p", ContractDomain::SalesOfGoods}});
            }),
            ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] {
              KnowledgeGraph(N{{"p", NodeKind::Person}, {"q", NodeKind::Person}}, E{{"p", "q"}});
            }),
            ErrorKind::InvalidParameter);
}

TEST(Graph, EdgeListRoundTrip) {
  for (const auto& g : {build_dataset1(), build_dataset2(21, 4), build_complete(5)}) {
    EXPECT_EQ(parse_edge_list(format_edge_list(g)), g);
  }
}

TEST(Graph, EdgeListErrorsNameLine) {
  const std::string text = "# pistol-edges 1\nnode A company\nnode B company\nedge A Z\n";
  try {
    parse_edge_list(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  EXPECT_EQ(kind_of([] { parse_edge_list("node A company\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_edge_list("# pistol-edges 1\nnode A robot\n"); }), ErrorKind::Parse);
}

TEST(Graph, TopologyJsonRoundTrip) {
  const std::vector<TopologySpec> specs{Dataset1Topology{}, Dataset2Topology{21, 3}, ChainTopology{6},
                                        SemiDenseTopology{8, 12, 2}, CompleteTopology{5},
                                        CustomTopology{format_edge_list(build_chain(3))}};
  for (const auto& s : specs) {
    EXPECT_EQ(topology_from_json(nlohmann::json::parse(topology_to_json(s).dump())), s) << topology_name(s);
  }
  EXPECT_EQ(kind_of([] { topology_from_json({{"kind", "torus"}}); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { topology_from_json({{"kind", "chain"}}); }), ErrorKind::Parse);
}
