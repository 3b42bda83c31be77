#include "pistol/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "detail/jsonl.hpp"
#include "pistol/error.hpp"

namespace pistol {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using detail::jsonl_lines;
using detail::line_error;
using detail::parse_object_line;
using detail::require_keys;
using detail::string_field;

std::pair<EntityProfile, EntityProfile> parties_for(const KnowledgeGraph& g,
                                                    const std::vector<EntityProfile>& profiles,
                                                    const Edge& e) {
  const EntityProfile& a = profiles[e.first];
  const EntityProfile& b = profiles[e.second];
  if (e.domain == ContractDomain::Employment && g.node(e.first).kind == NodeKind::Person) {
    return {b, a};
  }
  return {a, b};
}

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& l : labels) {
    if (!out.empty()) out += ", ";
    out += l;
  }
  return out;
}

std::uint64_t uint_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    fail(ErrorKind::Parse, std::string("topology field \"") + key + "\" must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

}  // namespace

std::vector<EntityProfile> generate_profiles(const KnowledgeGraph& g, std::uint64_t seed) {
  std::vector<EntityProfile> out;
  out.reserve(g.node_count());
  std::unordered_set<std::string> names;
  for (const Node& n : g.nodes()) {
    bool placed = false;
    for (int retry = 0; retry <= kMaxNameRetries && !placed; ++retry) {
      Stream rng(derive_seed(seed, "node:" + n.id.label, static_cast<std::uint64_t>(retry)));
      EntityProfile p;
      p.kind = n.kind;
      p.name = n.kind == NodeKind::Company ? gen_company_name(rng) : gen_person_name(rng);
      p.address = gen_address(rng);
      if (names.insert(p.name).second) {
        out.push_back(std::move(p));
        placed = true;
      }
    }
    if (!placed) {
      fail(ErrorKind::InvalidParameter, "could not draw a unique name for node " + n.id.label +
                                            " within " + std::to_string(kMaxNameRetries) + " retries");
    }
  }
  return out;
}

CompiledDataset compile(const TopologySpec& spec, std::uint64_t seed) {
  CompiledDataset ds;
  ds.spec = spec;
  ds.seed = seed;
  ds.graph = build(spec);
  ds.profiles = generate_profiles(ds.graph, seed);
  ds.contracts.reserve(ds.graph.edge_count());
  ds.qa.reserve(ds.graph.edge_count() * kSlotsPerContract);
  for (const Edge& e : ds.graph.edges()) {
    ds.contracts.push_back(fill_contract(e, parties_for(ds.graph, ds.profiles, e), seed));
    for (auto& qa : render_qa(ds.contracts.back())) ds.qa.push_back(std::move(qa));
  }
  std::stable_sort(ds.qa.begin(), ds.qa.end(), [](const QAPair& a, const QAPair& b) {
    return std::tie(a.edge, a.slot) < std::tie(b.edge, b.slot);
  });
  return ds;
}

ForgetSplit split_forget(const std::vector<QAPair>& qa, const std::set<std::string>& edges) {
  std::set<std::string> known;
  for (const auto& q : qa) known.insert(q.edge);
  std::vector<std::string> unknown;
  for (const auto& e : edges) {
    if (!known.contains(e)) unknown.push_back(e);
  }
  if (!unknown.empty()) {
    fail(ErrorKind::NotFound, "unknown edge label(s): " + join_labels(unknown) +
                                  "; valid labels: " +
                                  join_labels(std::vector<std::string>(known.begin(), known.end())));
  }
  ForgetSplit split;
  split.forget_edges = edges;
  for (const auto& q : qa) (edges.contains(q.edge) ? split.forget : split.retain).push_back(q);
  return split;
}

ForgetSplit split_forget(const CompiledDataset& ds, const std::set<std::string>& edges) {
  if (ds.has_topology()) {
    std::vector<std::string> unknown;
    for (const auto& e : edges) {
      if (!ds.graph.find_edge(e)) unknown.push_back(e);
    }
    if (!unknown.empty()) {
      std::vector<std::string> valid;
      for (const auto& e : ds.graph.edges()) valid.push_back(e.label);
      fail(ErrorKind::NotFound, "unknown edge label(s): " + join_labels(unknown) +
                                    "; valid labels: " + join_labels(valid));
    }
  }
  return split_forget(ds.qa, edges);
}

NodeRange parse_node_range(std::string_view text) {
  const auto bad = [&]() -> NodeRange {
    fail(ErrorKind::Parse, "node range '" + std::string(text) + "' is not of the form <lo>-<hi>");
  };
  const std::size_t dash = text.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 == text.size()) return bad();
  NodeRange r;
  const auto lo = text.substr(0, dash);
  const auto hi = text.substr(dash + 1);
  for (auto part : {lo, hi}) {
    if (!std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; })) return bad();
  }
  r.lo = std::stoull(std::string(lo));
  r.hi = std::stoull(std::string(hi));
  if (r.lo > r.hi) return bad();
  return r;
}

std::string sample_forget_edge(const KnowledgeGraph& g, NodeRange range, Stream& rng) {
  std::vector<const Edge*> candidates;
  const auto inside = [&](std::size_t i) { return i >= range.lo && i <= range.hi; };
  for (const Edge& e : g.edges()) {
    if (inside(e.first) && inside(e.second)) candidates.push_back(&e);
  }
  if (candidates.empty()) {
    fail(ErrorKind::InvalidParameter, "no edge has both endpoints in node range " +
                                          std::to_string(range.lo) + "-" + std::to_string(range.hi));
  }
  return candidates[rng.index(candidates.size())]->label;
}

std::string format_qa_jsonl(const std::vector<QAPair>& qa) {
  std::string out;
  for (const auto& q : qa) {
    ordered_json j;
    j["question"] = q.question;
    j["answer"] = q.answer;
    j["edge"] = q.edge;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string format_split_jsonl(const std::vector<QAPair>& qa, std::string_view split) {
  std::string out;
  for (const auto& q : qa) {
    ordered_json j;
    j["question"] = q.question;
    j["answer"] = q.answer;
    j["edge"] = q.edge;
    j["split"] = split;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ParsedRecord> parse_qa_jsonl(std::string_view text, bool expect_split) {
  const auto lines = jsonl_lines(text);
  std::vector<ParsedRecord> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const json j = parse_object_line(lines[i], i + 1);
    if (expect_split) {
      require_keys(j, {"question", "answer", "edge", "split"}, i + 1);
    } else {
      require_keys(j, {"question", "answer", "edge"}, i + 1);
    }
    ParsedRecord r;
    r.qa.question = string_field(j, "question", i + 1);
    r.qa.answer = string_field(j, "answer", i + 1);
    r.qa.edge = string_field(j, "edge", i + 1);
    if (r.qa.edge.empty()) fail(ErrorKind::Parse, line_error(i + 1, "\"edge\" is empty"));
    if (expect_split) {
      r.split = string_field(j, "split", i + 1);
      if (*r.split != "forget" && *r.split != "retain") {
        fail(ErrorKind::Parse, line_error(i + 1, "\"split\" must be \"forget\" or \"retain\""));
      }
    }
    out.push_back(std::move(r));
  }

  // Slots are recovered per contract so shared-shape templates can be resolved
  // from the party names bound by the contract's other questions.
  std::map<std::string, std::vector<std::size_t>> by_edge;
  for (std::size_t i = 0; i < out.size(); ++i) by_edge[out[i].qa.edge].push_back(i);
  for (const auto& [edge, rows] : by_edge) {
    std::vector<std::string> questions;
    for (auto r : rows) questions.push_back(out[r].qa.question);
    const auto slots = infer_slots(questions);
    std::set<int> seen;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (!slots[k]) {
        const bool none = match_question(questions[k]).empty();
        fail(ErrorKind::Parse,
             line_error(rows[k] + 1, none ? "question does not match any contract template"
                                          : "question slot is ambiguous within edge " + edge));
      }
      if (!seen.insert(*slots[k]).second) {
        fail(ErrorKind::Parse, line_error(rows[k] + 1, "duplicate question for slot " +
                                                           std::to_string(*slots[k]) + " of edge " + edge));
      }
      out[rows[k]].qa.slot = *slots[k];
    }
  }
  return out;
}

std::string digest_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

ordered_json topology_to_json(const TopologySpec& spec) {
  ordered_json j;
  j["kind"] = topology_name(spec);
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, Dataset2Topology>) {
          j["semi_dense_edges"] = t.semi_dense_edges;
          j["seed"] = t.seed;
        } else if constexpr (std::is_same_v<T, ChainTopology> || std::is_same_v<T, CompleteTopology>) {
          j["n"] = t.n;
        } else if constexpr (std::is_same_v<T, SemiDenseTopology>) {
          j["n"] = t.n;
          j["e"] = t.e;
          j["seed"] = t.seed;
        } else if constexpr (std::is_same_v<T, CustomTopology>) {
          j["edge_list"] = t.edge_list;
        }
      },
      spec);
  return j;
}

TopologySpec topology_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    fail(ErrorKind::Parse, "topology must be an object with a string \"kind\"");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "dataset1") return Dataset1Topology{};
  if (kind == "dataset2") return Dataset2Topology{uint_field(j, "semi_dense_edges"), uint_field(j, "seed")};
  if (kind == "chain") return ChainTopology{uint_field(j, "n")};
  if (kind == "complete") return CompleteTopology{uint_field(j, "n")};
  if (kind == "semi-dense") {
    return SemiDenseTopology{uint_field(j, "n"), uint_field(j, "e"), uint_field(j, "seed")};
  }
  if (kind == "custom") {
    if (!j.contains("edge_list") || !j["edge_list"].is_string()) {
      fail(ErrorKind::Parse, "custom topology needs a string \"edge_list\"");
    }
    return CustomTopology{j["edge_list"].get<std::string>()};
  }
  fail(ErrorKind::Parse, "unknown topology kind '" + kind + "'");
}

std::string manifest_json(const CompiledDataset& ds, std::string_view jsonl_bytes) {
  if (!ds.spec) fail(ErrorKind::InvalidParameter, "dataset has no topology to record in a manifest");
  ordered_json j;
  j["format"] = "pistol-dataset";
  j["version"] = kDatasetFormatVersion;
  j["topology"] = topology_to_json(*ds.spec);
  j["seed"] = ds.seed;
  j["counts"] = {{"nodes", ds.graph.node_count()},
                 {"edges", ds.graph.edge_count()},
                 {"qa", ds.qa.size()}};
  j["digest"] = "fnv1a64:" + digest_hex(jsonl_bytes);
  return j.dump(2) + "\n";
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset_path) {
  std::filesystem::path p = dataset_path;
  p += ".manifest.json";
  return p;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, "error reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "error writing " + path.string());
}

void export_dataset(const CompiledDataset& ds, const std::filesystem::path& path) {
  const std::string body = format_qa_jsonl(ds.qa);
  write_file(path, body);
  if (ds.spec) write_file(manifest_path(path), manifest_json(ds, body));
}

CompiledDataset import_dataset(const std::filesystem::path& path) {
  const std::string body = read_file(path);
  auto records = parse_qa_jsonl(body, false);
  const auto mpath = manifest_path(path);
  if (std::filesystem::exists(mpath)) {
    json m;
    try {
      m = json::parse(read_file(mpath));
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Parse, mpath.string() + ": invalid JSON (" + e.what() + ")");
    }
    if (!m.is_object() || m.value("format", "") != "pistol-dataset") {
      fail(ErrorKind::Parse, mpath.string() + ": not a dataset manifest");
    }
    if (!m.contains("version") || m["version"] != kDatasetFormatVersion) {
      fail(ErrorKind::Parse, mpath.string() + ": unsupported manifest version");
    }
    if (!m.contains("seed") || !m["seed"].is_number_unsigned() || !m.contains("topology")) {
      fail(ErrorKind::Parse, mpath.string() + ": manifest needs \"topology\" and \"seed\"");
    }
    CompiledDataset ds = compile(topology_from_json(m["topology"]), m["seed"].get<std::uint64_t>());
    if (format_qa_jsonl(ds.qa) != body) {
      fail(ErrorKind::Parse, path.string() + " does not match the dataset its manifest describes");
    }
    return ds;
  }
  CompiledDataset ds;
  ds.qa.reserve(records.size());
  for (auto& r : records) ds.qa.push_back(std::move(r.qa));
  std::stable_sort(ds.qa.begin(), ds.qa.end(), [](const QAPair& a, const QAPair& b) {
    return std::tie(a.edge, a.slot) < std::tie(b.edge, b.slot);
  });
  return ds;
}

void export_split(const ForgetSplit& split, const std::filesystem::path& forget_path,
                  const std::filesystem::path& retain_path) {
  write_file(forget_path, format_split_jsonl(split.forget, "forget"));
  write_file(retain_path, format_split_jsonl(split.retain, "retain"));
}

ForgetSplit import_split(const std::filesystem::path& forget_path,
                         const std::filesystem::path& retain_path) {
  ForgetSplit split;
  const auto load = [](const std::filesystem::path& p, std::string_view want,
                       std::vector<QAPair>& into) {
    const auto records = parse_qa_jsonl(read_file(p), true);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (*records[i].split != want) {
        fail(ErrorKind::Parse, p.string() + ": " +
                                   line_error(i + 1, "record is marked \"" + *records[i].split +
                                                         "\" in a " + std::string(want) + " file"));
      }
      into.push_back(records[i].qa);
    }
  };
  load(forget_path, "forget", split.forget);
  load(retain_path, "retain", split.retain);
  for (const auto& q : split.forget) split.forget_edges.insert(q.edge);
  for (const auto& q : split.retain) {
    if (split.forget_edges.contains(q.edge)) {
      fail(ErrorKind::Parse, "edge " + q.edge + " appears in both the forget and the retain file");
    }
  }
  return split;
}

}  // namespace pistol
