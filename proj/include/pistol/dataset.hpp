#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pistol/graph.hpp"
#include "pistol/rng.hpp"
#include "pistol/templates.hpp"

namespace pistol {

inline constexpr int kDatasetFormatVersion = 1;

struct CompiledDataset {
  /// Absent for datasets imported without a manifest; such datasets carry
  /// QA pairs only (enough for splitting and scoring).
  std::optional<TopologySpec> spec;
  std::uint64_t seed = 0;
  KnowledgeGraph graph;
  /// One profile per graph node, in node order.
  std::vector<EntityProfile> profiles;
  /// One contract per graph edge, in edge order.
  std::vector<ContractRecord> contracts;
  /// Ordered by (edge label, slot).
  std::vector<QAPair> qa;

  bool has_topology() const noexcept { return spec.has_value(); }

  friend bool operator==(const CompiledDataset&, const CompiledDataset&) = default;
};

struct ForgetSplit {
  std::set<std::string> forget_edges;
  std::vector<QAPair> forget;
  std::vector<QAPair> retain;
};

/// Maximum regeneration attempts when an entity name collides.
inline constexpr int kMaxNameRetries = 64;

CompiledDataset compile(const TopologySpec& spec, std::uint64_t seed);

/// Entity profiles for every node of `g`, unique by name.
std::vector<EntityProfile> generate_profiles(const KnowledgeGraph& g, std::uint64_t seed);

/// Throws NotFound naming the unknown labels (and listing valid ones).
ForgetSplit split_forget(const CompiledDataset& ds, const std::set<std::string>& edges);
/// Same partition over a bare QA list.
ForgetSplit split_forget(const std::vector<QAPair>& qa, const std::set<std::string>& edges);

struct NodeRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive
};

/// Throws Parse for text other than "<lo>-<hi>" with lo <= hi.
NodeRange parse_node_range(std::string_view text);

/// Uniform draw over edges whose endpoints both lie in `range` (node
/// indices). Throws InvalidParameter when no edge qualifies.
std::string sample_forget_edge(const KnowledgeGraph& g, NodeRange range, Stream& rng);

// ---- file formats -------------------------------------------------------

/// One JSON object per line with keys question, answer, edge.
std::string format_qa_jsonl(const std::vector<QAPair>& qa);
/// Lines of split files additionally carry "split": "forget"|"retain".
std::string format_split_jsonl(const std::vector<QAPair>& qa, std::string_view split);

struct ParsedRecord {
  QAPair qa;
  std::optional<std::string> split;
};

/// Strict line parser: every line must be an object with exactly the
/// expected keys. Throws Parse naming the 1-based line number. Slots are
/// recovered by matching the question against the schemas.
std::vector<ParsedRecord> parse_qa_jsonl(std::string_view text, bool expect_split);

std::string manifest_json(const CompiledDataset& ds, std::string_view jsonl_bytes);
std::filesystem::path manifest_path(const std::filesystem::path& dataset_path);

/// Writes `path` and its manifest sidecar.
void export_dataset(const CompiledDataset& ds, const std::filesystem::path& path);
/// Reads `path`; when the manifest sidecar exists the dataset is recompiled
/// from its topology and seed and checked against the file contents.
CompiledDataset import_dataset(const std::filesystem::path& path);

void export_split(const ForgetSplit& split, const std::filesystem::path& forget_path,
                  const std::filesystem::path& retain_path);
ForgetSplit import_split(const std::filesystem::path& forget_path,
                         const std::filesystem::path& retain_path);

/// Topology snapshot as stored in manifests and run configs.
nlohmann::ordered_json topology_to_json(const TopologySpec& spec);
/// Throws Parse on unknown kinds or missing fields.
TopologySpec topology_from_json(const nlohmann::json& j);

/// Hex digest of the bytes (fnv1a64), used in manifests.
std::string digest_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace pistol
