#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "pistol/dataset.hpp"
#include "pistol/error.hpp"
#include "test_util.hpp"

using namespace pistol;
namespace fs = std::filesystem;

TEST(Dataset, Dataset1Cardinality) {
  const CompiledDataset ds = compile(Dataset1Topology{}, 7);
  EXPECT_EQ(ds.qa.size(), 400u);
  EXPECT_EQ(ds.contracts.size(), 20u);
  EXPECT_EQ(ds.profiles.size(), 24u);
  std::map<std::string, int> per_edge;
  for (const auto& q : ds.qa) ++per_edge[q.edge];
  EXPECT_EQ(per_edge.size(), 20u);
  for (const auto& [e, n] : per_edge) EXPECT_EQ(n, 20) << e;
}

TEST(Dataset, CompleteCardinality) {
  EXPECT_EQ(compile(CompleteTopology{10}, 1).qa.size(), 900u);
}

TEST(Dataset, AnswersRegenerateFromSlots) {
  const CompiledDataset ds = compile(Dataset1Topology{}, 11);
  for (const auto& q : ds.qa) {
    const auto& c = ds.contracts[*ds.graph.find_edge(q.edge)];
    ASSERT_EQ(c.edge, q.edge);
    EXPECT_EQ(q.answer, c.attributes[static_cast<std::size_t>(q.slot - 1)].value);
    const ContractRecord again = fill_contract(ds.graph.edge(q.edge), c.parties, ds.seed);
    EXPECT_EQ(again, c);
  }
}

TEST(Dataset, ProfilesMatchNodeKindsAndAreUnique) {
  const CompiledDataset ds = compile(Dataset2Topology{21, 0}, 3);
  std::set<std::string> names;
  for (std::size_t i = 0; i < ds.profiles.size(); ++i) {
    EXPECT_EQ(ds.profiles[i].kind, ds.graph.node(i).kind);
    EXPECT_TRUE(names.insert(ds.profiles[i].name).second) << ds.profiles[i].name;
  }
}

TEST(Dataset, ByteIdenticalRecompilation) {
  const auto a = format_qa_jsonl(compile(Dataset1Topology{}, 5).qa);
  const auto b = format_qa_jsonl(compile(Dataset1Topology{}, 5).qa);
  EXPECT_EQ(digest_hex(a), digest_hex(b));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, format_qa_jsonl(compile(Dataset1Topology{}, 6).qa));
}

TEST(Dataset, SplitPartition) {
  const CompiledDataset ds = compile(Dataset1Topology{}, 1);
  const ForgetSplit ab = split_forget(ds, {"AB"});
  EXPECT_EQ(ab.forget.size(), 20u);
  EXPECT_EQ(ab.retain.size(), 380u);
  for (const auto& q : ab.forget) EXPECT_EQ(q.edge, "AB");
  for (const auto& q : ab.retain) EXPECT_NE(q.edge, "AB");

  const ForgetSplit none = split_forget(ds, {});
  EXPECT_TRUE(none.forget.empty());
  EXPECT_EQ(none.retain.size(), 400u);

  std::set<std::string> all;
  for (const auto& e : ds.graph.edges()) all.insert(e.label);
  const ForgetSplit everything = split_forget(ds, all);
  EXPECT_EQ(everything.forget.size(), 400u);
  EXPECT_TRUE(everything.retain.empty());
}

TEST(Dataset, UnknownEdgeListsValidLabels) {
  const CompiledDataset ds = compile(Dataset1Topology{}, 1);
  try {
    split_forget(ds, {"ZZ"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    EXPECT_NE(std::string(e.what()).find("ZZ"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("AB"), std::string::npos);
  }
}

TEST(Dataset, SampleForgetEdge) {
  const KnowledgeGraph g = build_dataset2(21, 0);
  std::set<std::string> chain;
  for (std::size_t i = 0; i + 1 < 10; ++i) chain.insert(edge_label(std::to_string(i), std::to_string(i + 1)));
  Stream rng(3);
  for (int i = 0; i < 200; ++i) EXPECT_TRUE(chain.contains(sample_forget_edge(g, {0, 9}, rng)));
  Stream a(9), b(9);
  EXPECT_EQ(sample_forget_edge(g, {20, 29}, a), sample_forget_edge(g, {20, 29}, b));

  const KnowledgeGraph one = build_chain(2);
  Stream r(1);
  EXPECT_EQ(sample_forget_edge(one, {0, 1}, r), "01");
  EXPECT_THROW(sample_forget_edge(g, {0, 0}, r), Error);
}

TEST(Dataset, SampleForgetEdgeIsUniform) {
  const KnowledgeGraph g = build_complete(10);
  std::map<std::string, int> counts;
  Stream rng(17);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[sample_forget_edge(g, {0, 9}, rng)];
  ASSERT_EQ(counts.size(), 45u);
  const double expected = draws / 45.0;
  for (const auto& [e, n] : counts) {
    EXPECT_GT(n, 0.8 * expected) << e;
    EXPECT_LT(n, 1.2 * expected) << e;
  }
}

TEST(Dataset, NodeRangeParse) {
  const NodeRange r = parse_node_range("10-19");
  EXPECT_EQ(r.lo, 10u);
  EXPECT_EQ(r.hi, 19u);
  for (const char* bad : {"", "1", "9-0", "a-b", "1-2-3", "-3"}) {
    EXPECT_THROW(parse_node_range(bad), Error) << bad;
  }
}

TEST(Dataset, JsonlRoundTrip) {
  const CompiledDataset ds = compile(Dataset1Topology{}, 2);
  const auto parsed = parse_qa_jsonl(format_qa_jsonl(ds.qa), false);
  ASSERT_EQ(parsed.size(), ds.qa.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].qa, ds.qa[i]);
    EXPECT_FALSE(parsed[i].split);
  }
}

TEST(Dataset, HandWrittenRecord) {
  const std::string line =
      R"({"question":"What was the effective date of the contract between Abcdef Co and Ghijkl Inc?","answer":"2015-03-04","edge":"AB"})"
      "\n";
  const auto parsed = parse_qa_jsonl(line, false);
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0].qa.answer, "2015-03-04");
  EXPECT_EQ(parsed[0].qa.edge, "AB");
  EXPECT_EQ(parsed[0].qa.slot, 1);
}

TEST(Dataset, MalformedRecordsNameTheLine) {
  const CompiledDataset ds = compile(Dataset1Topology{}, 2);
  std::string text = format_qa_jsonl(std::vector<QAPair>(ds.qa.begin(), ds.qa.begin() + 3));
  const std::string missing_edge = R"({"question":"q","answer":"a"})";
  const std::vector<std::string> bad{missing_edge, "not json", "[1,2]", "",
                                     R"({"question":"q","answer":"a","edge":"AB","extra":1})",
                                     R"({"question":"q","answer":7,"edge":"AB"})"};
  for (const auto& b : bad) {
    const std::string input = text + b + "\n";
    test::expect_error(ErrorKind::Parse, "line 4", [&] { parse_qa_jsonl(input, false); });
  }
}

TEST(Dataset, DuplicateAndUnmatchedQuestionsRejected) {
  const CompiledDataset ds = compile(Dataset1Topology{}, 2);
  std::vector<QAPair> dup{ds.qa[0], ds.qa[0]};
  EXPECT_THROW(parse_qa_jsonl(format_qa_jsonl(dup), false), Error);
  QAPair odd = ds.qa[0];
  odd.question = "Who are you?";
  test::expect_error(ErrorKind::Parse, "line 1", [&] { parse_qa_jsonl(format_qa_jsonl({odd}), false); });
}

TEST(Dataset, ExportImportWithManifest) {
  test::TempDir dir;
  const CompiledDataset ds = compile(Dataset2Topology{21, 0}, 4);
  const fs::path path = dir.path() / "d2.jsonl";
  export_dataset(ds, path);
  EXPECT_TRUE(fs::exists(manifest_path(path)));
  const CompiledDataset back = import_dataset(path);
  EXPECT_EQ(back, ds);

  const auto manifest = nlohmann::json::parse(read_file(manifest_path(path)));
  EXPECT_EQ(manifest["format"], "pistol-dataset");
  EXPECT_EQ(manifest["counts"]["qa"], 1500);
  EXPECT_EQ(manifest["digest"], "fnv1a64:" + digest_hex(read_file(path)));
}

TEST(Dataset, ManifestMismatchIsParseError) {
  test::TempDir dir;
  const CompiledDataset ds = compile(Dataset1Topology{}, 4);
  const fs::path path = dir.path() / "d1.jsonl";
  export_dataset(ds, path);
  std::vector<QAPair> qa = ds.qa;
  qa[5].answer = "tampered";
  write_file(path, format_qa_jsonl(qa));
  EXPECT_THROW(import_dataset(path), Error);
  try {
    import_dataset(path);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
  }
}

TEST(Dataset, ImportWithoutManifestKeepsQa) {
  test::TempDir dir;
  const CompiledDataset ds = compile(Dataset1Topology{}, 4);
  const fs::path path = dir.path() / "bare.jsonl";
  write_file(path, format_qa_jsonl(ds.qa));
  const CompiledDataset back = import_dataset(path);
  EXPECT_FALSE(back.has_topology());
  EXPECT_EQ(back.qa, ds.qa);
  EXPECT_EQ(split_forget(back.qa, {"AB"}).forget.size(), 20u);
}

TEST(Dataset, SplitFilesRoundTrip) {
  test::TempDir dir;
  const CompiledDataset ds = compile(Dataset1Topology{}, 4);
  const ForgetSplit split = split_forget(ds, {"AB", "EF"});
  export_split(split, dir.path() / "f.jsonl", dir.path() / "r.jsonl");
  const ForgetSplit back = import_split(dir.path() / "f.jsonl", dir.path() / "r.jsonl");
  EXPECT_EQ(back.forget_edges, split.forget_edges);
  EXPECT_EQ(back.forget, split.forget);
  EXPECT_EQ(back.retain, split.retain);

  // Swapping the files breaks the split markers.
  EXPECT_THROW(import_split(dir.path() / "r.jsonl", dir.path() / "f.jsonl"), Error);
  EXPECT_THROW(import_split(dir.path() / "missing.jsonl", dir.path() / "r.jsonl"), Error);
}

TEST(Dataset, ReadMissingFileIsIo) {
  test::expect_error(ErrorKind::Io, "", [] { read_file("/nonexistent/dir/file"); });
}
