#include "pistol/entity_gen.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pistol/error.hpp"
#include "pistol/fixtures.hpp"

namespace pistol {
namespace {

std::vector<std::string> parse_wordlist(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    out.emplace_back(line);
  }
  return out;
}

struct TermDomain {
  ValueKind kind;
  IntRange range{0, 0};
  std::span<const std::string> (*choices)() = nullptr;
};

std::span<const std::string> party_roles() {
  static const std::vector<std::string> roles{"Seller", "Customer"};
  return roles;
}

constexpr std::chrono::sys_days kFirstDate{std::chrono::year{2010} / 1 / 1};
constexpr std::chrono::sys_days kLastDate{std::chrono::year{2023} / 12 / 31};

const std::map<std::string, TermDomain, std::less<>>& term_domains() {
  static const std::map<std::string, TermDomain, std::less<>> domains = [] {
    const IntRange dates{kFirstDate.time_since_epoch().count(), kLastDate.time_since_epoch().count()};
    std::map<std::string, TermDomain, std::less<>> d;
    // Sales of goods.
    d["effective-date"] = {ValueKind::Date, dates};
    d["goods"] = {ValueKind::EnumChoice, {}, &goods_list};
    d["quantity"] = {ValueKind::Count, {10, 5000}};
    d["unit-price"] = {ValueKind::Money, {1, 500}};
    d["invoice-days"] = {ValueKind::IntegerDays, {5, 60}};
    d["payment-days"] = {ValueKind::IntegerDays, {5, 60}};
    d["penalty-days"] = {ValueKind::IntegerDays, {5, 60}};
    d["late-payment-percent"] = {ValueKind::Percent, {1, 10}};
    d["delivery-address"] = {ValueKind::Text};
    d["shipping-decider"] = {ValueKind::EnumChoice, {}, &party_roles};
    d["shipping-cost-bearer"] = {ValueKind::EnumChoice, {}, &party_roles};
    d["warranty-years"] = {ValueKind::IntegerYears, {1, 5}};
    d["defect-notice-days"] = {ValueKind::IntegerDays, {5, 60}};
    d["cooling-off-days"] = {ValueKind::IntegerDays, {7, 30}};
    d["governing-jurisdiction"] = {ValueKind::EnumChoice, {}, &us_states};
    // Employment.
    d["start-date"] = {ValueKind::Date, dates};
    d["employment-months"] = {ValueKind::IntegerMonths, {6, 60}};
    d["position"] = {ValueKind::EnumChoice, {}, &positions_list};
    d["work-location"] = {ValueKind::Text};
    d["start-hour"] = {ValueKind::HourOfDay, {7, 10}};
    d["hourly-pay"] = {ValueKind::Money, {15, 95}};
    d["payment-frequency"] = {ValueKind::EnumChoice, {}, &payment_frequencies};
    d["benefit"] = {ValueKind::EnumChoice, {}, &benefits_list};
    d["holiday-days"] = {ValueKind::IntegerDays, {10, 30}};
    d["confidentiality-months"] = {ValueKind::IntegerMonths, {6, 36}};
    d["sick-leave-days"] = {ValueKind::IntegerDays, {5, 20}};
    d["termination-notice-weeks"] = {ValueKind::IntegerWeeks, {1, 12}};
    d["non-compete-months"] = {ValueKind::IntegerMonths, {6, 24}};
    d["change-notice-weeks"] = {ValueKind::IntegerWeeks, {1, 12}};
    return d;
  }();
  return domains;
}

// Slots that exist in a schema but are never drawn independently.
constexpr std::array<std::string_view, 10> kNonRandomSlots{
    "seller-name",   "seller-address",   "customer-name", "customer-address",
    "employer-name", "employer-address", "employee-name", "employee-address",
    "total-price",   "finish-hour"};

std::string letters(Stream& rng, std::size_t lower_count) {
  std::string s(1, rng.upper_letter());
  for (std::size_t i = 0; i < lower_count; ++i) s += rng.lower_letter();
  return s;
}

std::optional<std::int64_t> parse_decimal(std::string_view text) {
  if (text.empty() || (text.size() > 1 && text.front() == '0')) return std::nullopt;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(ValueKind kind) noexcept {
  switch (kind) {
    case ValueKind::IntegerDays: return "integer-days";
    case ValueKind::IntegerWeeks: return "integer-weeks";
    case ValueKind::IntegerMonths: return "integer-months";
    case ValueKind::IntegerYears: return "integer-years";
    case ValueKind::Percent: return "percent";
    case ValueKind::Money: return "money";
    case ValueKind::HourOfDay: return "hour-of-day";
    case ValueKind::Count: return "count";
    case ValueKind::Date: return "date";
    case ValueKind::EnumChoice: return "enum-choice";
    case ValueKind::Text: return "text";
  }
  return "text";
}

ValueKind parse_value_kind(std::string_view text) {
  static constexpr std::array kinds{ValueKind::IntegerDays, ValueKind::IntegerWeeks,
                                    ValueKind::IntegerMonths, ValueKind::IntegerYears,
                                    ValueKind::Percent,       ValueKind::Money,
                                    ValueKind::HourOfDay,     ValueKind::Count,
                                    ValueKind::Date,          ValueKind::EnumChoice,
                                    ValueKind::Text};
  for (auto k : kinds) {
    if (to_string(k) == text) return k;
  }
  fail(ErrorKind::Parse, "unknown value kind '" + std::string(text) + "'");
}

std::string render_term_number(ValueKind kind, std::int64_t number) {
  switch (kind) {
    case ValueKind::Percent: return std::to_string(number) + "%";
    case ValueKind::HourOfDay: return std::to_string(number) + ":00";
    case ValueKind::Date: {
      const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{number}}};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      return buf;
    }
    case ValueKind::EnumChoice:
    case ValueKind::Text:
      fail(ErrorKind::InvalidParameter, "value kind " + std::string(to_string(kind)) + " is not numeric");
    default: return std::to_string(number);
  }
}

std::int64_t parse_term_number(ValueKind kind, std::string_view value) {
  const auto bad = [&]() -> std::int64_t {
    fail(ErrorKind::Parse, "'" + std::string(value) + "' is not a canonical " +
                               std::string(to_string(kind)) + " value");
  };
  std::optional<std::int64_t> n;
  switch (kind) {
    case ValueKind::Percent:
      if (value.size() < 2 || value.back() != '%') return bad();
      n = parse_decimal(value.substr(0, value.size() - 1));
      break;
    case ValueKind::HourOfDay:
      if (value.size() < 4 || value.substr(value.size() - 3) != ":00") return bad();
      n = parse_decimal(value.substr(0, value.size() - 3));
      break;
    case ValueKind::Date: {
      int y = 0;
      unsigned m = 0, d = 0;
      if (value.size() != 10 || std::sscanf(std::string(value).c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3) {
        return bad();
      }
      const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                            std::chrono::day{d}};
      if (!ymd.ok()) return bad();
      n = std::chrono::sys_days{ymd}.time_since_epoch().count();
      break;
    }
    case ValueKind::EnumChoice:
    case ValueKind::Text: return bad();
    default: n = parse_decimal(value);
  }
  if (!n || render_term_number(kind, *n) != value) return bad();
  return *n;
}

std::string gen_company_name(Stream& rng) {
  std::string name = letters(rng, 5);
  name += ' ';
  name += rng.pick(company_suffixes());
  return name;
}

std::string gen_person_name(Stream& rng) {
  std::string first = letters(rng, 3);
  return first + ' ' + letters(rng, 3);
}

std::string gen_address(Stream& rng) {
  std::string number = std::to_string(rng.uniform(100, 999));
  return number + ' ' + letters(rng, 5) + ' ' + rng.pick(street_types());
}

IntRange term_range(std::string_view slot) {
  auto it = term_domains().find(slot);
  if (it == term_domains().end() || it->second.choices || it->second.kind == ValueKind::Text) {
    fail(ErrorKind::InvalidParameter, "slot '" + std::string(slot) + "' has no numeric range");
  }
  return it->second.range;
}

TermValue gen_term(std::string_view slot, Stream& rng) {
  auto it = term_domains().find(slot);
  if (it == term_domains().end()) {
    for (auto s : kNonRandomSlots) {
      if (s == slot) {
        fail(ErrorKind::InvalidParameter,
             "slot '" + std::string(slot) + "' is filled from party profiles or derived");
      }
    }
    fail(ErrorKind::InvalidParameter, "unknown slot '" + std::string(slot) + "'");
  }
  const TermDomain& d = it->second;
  TermValue out{std::string(slot), {}, d.kind};
  if (d.choices) {
    out.value = rng.pick(d.choices());
  } else if (d.kind == ValueKind::Text) {
    out.value = gen_address(rng);
  } else {
    out.value = render_term_number(d.kind, rng.uniform(d.range.lo, d.range.hi));
  }
  return out;
}

std::span<const std::string> us_states() {
  static const auto list = parse_wordlist(fixtures::us_states());
  return list;
}

std::span<const std::string> goods_list() {
  static const auto list = parse_wordlist(fixtures::goods());
  return list;
}

std::span<const std::string> positions_list() {
  static const auto list = parse_wordlist(fixtures::positions());
  return list;
}

std::span<const std::string> benefits_list() {
  static const auto list = parse_wordlist(fixtures::benefits());
  return list;
}

std::span<const std::string> company_suffixes() {
  static const std::vector<std::string> list{"LLC", "Inc", "Corp", "Ltd", "Co", "Group"};
  return list;
}

std::span<const std::string> street_types() {
  static const std::vector<std::string> list{"Street", "Avenue", "Boulevard", "Road", "Lane", "Drive"};
  return list;
}

std::span<const std::string> payment_frequencies() {
  static const std::vector<std::string> list{"weekly", "biweekly", "monthly"};
  return list;
}

}  // namespace pistol
