#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "pistol/domain.hpp"
#include "pistol/rng.hpp"

namespace pistol {

struct EntityProfile {
  NodeKind kind = NodeKind::Company;
  std::string name;
  std::string address;

  friend bool operator==(const EntityProfile&, const EntityProfile&) = default;
};

enum class ValueKind {
  IntegerDays,
  IntegerWeeks,
  IntegerMonths,
  IntegerYears,
  Percent,
  Money,
  HourOfDay,
  Count,
  Date,
  EnumChoice,
  Text,
};

std::string_view to_string(ValueKind kind) noexcept;
ValueKind parse_value_kind(std::string_view text);

/// A filled attribute slot. `value` is the rendered string that also serves
/// as the QA answer.
struct TermValue {
  std::string slot;
  std::string value;
  ValueKind kind = ValueKind::Text;

  friend bool operator==(const TermValue&, const TermValue&) = default;
};

/// Integer payload of a numeric/date term: days since 1970-01-01 for dates,
/// the hour for HourOfDay, the number otherwise. Throws Parse when `value`
/// is not a canonical rendering for `kind`.
std::int64_t parse_term_number(ValueKind kind, std::string_view value);
/// Inverse of parse_term_number.
std::string render_term_number(ValueKind kind, std::int64_t number);

std::string gen_company_name(Stream& rng);
std::string gen_person_name(Stream& rng);
std::string gen_address(Stream& rng);

/// Draw a value for an independently random slot of either schema.
/// Throws InvalidParameter for unknown slots and for slots that are filled
/// from party profiles or derived from other slots.
TermValue gen_term(std::string_view slot, Stream& rng);

/// Closed value sets shipped as fixture files.
std::span<const std::string> us_states();
std::span<const std::string> goods_list();
std::span<const std::string> positions_list();
std::span<const std::string> benefits_list();
std::span<const std::string> company_suffixes();
std::span<const std::string> street_types();
std::span<const std::string> payment_frequencies();

/// Inclusive integer range used for a numeric slot, if it has one.
struct IntRange {
  std::int64_t lo;
  std::int64_t hi;
};
IntRange term_range(std::string_view slot);

}  // namespace pistol
