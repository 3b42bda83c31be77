#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pistol/domain.hpp"
#include "pistol/entity_gen.hpp"
#include "pistol/graph.hpp"

namespace pistol {

inline constexpr std::size_t kSlotsPerContract = 20;

struct SlotSpec {
  int index = 0;  // 1-based, as in the QA list
  std::string id;
  ValueKind kind = ValueKind::Text;
  /// Question with {seller name}/{customer name}/{employer name}/
  /// {employee name}/{effective date}/{start date} placeholders.
  std::string question;
};

struct AttributeSchema {
  ContractDomain domain = ContractDomain::SalesOfGoods;
  std::array<SlotSpec, kSlotsPerContract> slots;

  const SlotSpec& slot(int index) const { return slots.at(static_cast<std::size_t>(index - 1)); }
  /// Throws NotFound.
  const SlotSpec& slot(std::string_view id) const;
};

const AttributeSchema& schema(ContractDomain domain);

struct ContractRecord {
  std::string edge;
  ContractDomain domain = ContractDomain::SalesOfGoods;
  /// (seller, customer) for sales; (employer, employee) for employment.
  std::pair<EntityProfile, EntityProfile> parties;
  /// In schema slot order.
  std::array<TermValue, kSlotsPerContract> attributes;

  const TermValue& attribute(std::string_view slot_id) const;

  friend bool operator==(const ContractRecord&, const ContractRecord&) = default;
};

struct QAPair {
  std::string question;
  std::string answer;
  std::string edge;
  int slot = 0;  // 1-based

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

/// Fills every slot of the edge's contract. Party name/address slots come from
/// `parties`; independent slots from gen_term with sub-seeds keyed by
/// (master, edge label, slot id); total price and workday finish are derived.
/// Throws InvalidParameter when party kinds do not fit the edge's domain.
ContractRecord fill_contract(const Edge& edge,
                             std::pair<EntityProfile, EntityProfile> parties,
                             std::uint64_t master_seed);

std::vector<QAPair> render_qa(const ContractRecord& contract);

/// Plain-text contract prose with every blank filled.
std::string render_contract_text(const ContractRecord& contract);

struct SlotMatch {
  ContractDomain domain = ContractDomain::SalesOfGoods;
  int slot = 0;
  /// Placeholder name (without braces) -> text it matched.
  std::vector<std::pair<std::string, std::string>> captures;
};

/// Every schema question the rendered text could have come from, in schema
/// order. More than one candidate happens for templates whose literal text
/// is identical (e.g. the seller/customer address questions).
std::vector<SlotMatch> match_question(std::string_view question);

/// Resolve the slot of each question of one contract, using placeholder
/// values bound by unambiguous questions to settle ambiguous ones. Returns
/// one slot per question, or nullopt for a question that cannot be resolved.
std::vector<std::optional<int>> infer_slots(std::span<const std::string> questions);

}  // namespace pistol
