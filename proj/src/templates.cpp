#include "pistol/templates.hpp"

#include <functional>
#include <sstream>

#include "pistol/error.hpp"
#include "pistol/fixtures.hpp"
#include "pistol/rng.hpp"

namespace pistol {
namespace {

AttributeSchema parse_schema(ContractDomain domain, std::string_view text) {
  AttributeSchema schema;
  schema.domain = domain;
  std::size_t count = 0;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> cols;
    std::size_t c = 0;
    for (int k = 0; k < 3; ++k) {
      std::size_t tab = line.find('\t', c);
      if (tab == std::string_view::npos) {
        fail(ErrorKind::Parse, "schema line " + std::to_string(line_no) + ": expected 4 columns");
      }
      cols.push_back(line.substr(c, tab - c));
      c = tab + 1;
    }
    cols.push_back(line.substr(c));
    if (count >= kSlotsPerContract) fail(ErrorKind::Parse, "schema has more than 20 slots");
    SlotSpec& s = schema.slots[count++];
    s.index = std::stoi(std::string(cols[0]));
    s.id = std::string(cols[1]);
    s.kind = parse_value_kind(cols[2]);
    s.question = std::string(cols[3]);
    if (s.index != static_cast<int>(count)) {
      fail(ErrorKind::Parse, "schema line " + std::to_string(line_no) + ": slots out of order");
    }
  }
  if (count != kSlotsPerContract) fail(ErrorKind::Parse, "schema must have exactly 20 slots");
  return schema;
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

struct TemplatePart {
  std::string literal;
  std::string placeholder;  // empty for the final literal
};

// Template split into (literal, following placeholder) pairs.
std::vector<TemplatePart> template_parts(std::string_view tmpl) {
  std::vector<TemplatePart> parts(1);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i);
      parts.back().placeholder = std::string(tmpl.substr(i + 1, close - i - 1));
      parts.emplace_back();
      i = close;
    } else {
      parts.back().literal += tmpl[i];
    }
  }
  return parts;
}

// text starts right after parts[k].literal; parts[k].placeholder is pending.
// A placeholder repeated in one template binds the same value everywhere.
bool agrees(const std::vector<std::pair<std::string, std::string>>& captures, const std::string& name,
            std::string_view value) {
  for (const auto& [n, v] : captures) {
    if (n == name && v != value) return false;
  }
  return true;
}

bool match_from(std::string_view text, const std::vector<TemplatePart>& parts, std::size_t k,
                std::vector<std::pair<std::string, std::string>>& captures) {
  if (k + 1 == parts.size()) return text.empty();
  const std::string& next = parts[k + 1].literal;
  const bool last = k + 2 == parts.size();
  if (last) {
    if (text.size() <= next.size() || !text.ends_with(next)) return false;
    const std::string_view value = text.substr(0, text.size() - next.size());
    if (!agrees(captures, parts[k].placeholder, value)) return false;
    captures.emplace_back(parts[k].placeholder, std::string(value));
    return true;
  }
  // Placeholders consume at least one character.
  for (std::size_t at = text.find(next, 1); at != std::string_view::npos; at = text.find(next, at + 1)) {
    if (!agrees(captures, parts[k].placeholder, text.substr(0, at))) continue;
    captures.emplace_back(parts[k].placeholder, std::string(text.substr(0, at)));
    if (match_from(text.substr(at + next.size()), parts, k + 1, captures)) return true;
    captures.pop_back();
  }
  return false;
}

std::optional<std::vector<std::pair<std::string, std::string>>> match_template(
    std::string_view question, std::string_view tmpl) {
  const auto parts = template_parts(tmpl);
  if (!question.starts_with(parts.front().literal)) return std::nullopt;
  std::vector<std::pair<std::string, std::string>> captures;
  if (parts.size() == 1) {
    if (question != parts.front().literal) return std::nullopt;
    return captures;
  }
  if (!match_from(question.substr(parts.front().literal.size()), parts, 0, captures)) {
    return std::nullopt;
  }
  return captures;
}

}  // namespace

const SlotSpec& AttributeSchema::slot(std::string_view id) const {
  for (const auto& s : slots) {
    if (s.id == id) return s;
  }
  fail(ErrorKind::NotFound, "schema " + std::string(to_string(domain)) + " has no slot '" +
                                std::string(id) + "'");
}

const AttributeSchema& schema(ContractDomain domain) {
  static const AttributeSchema sales = parse_schema(ContractDomain::SalesOfGoods, fixtures::sales_schema());
  static const AttributeSchema employment = parse_schema(ContractDomain::Employment, fixtures::employment_schema());
  return domain == ContractDomain::SalesOfGoods ? sales : employment;
}

const TermValue& ContractRecord::attribute(std::string_view slot_id) const {
  for (const auto& a : attributes) {
    if (a.slot == slot_id) return a;
  }
  fail(ErrorKind::NotFound, "contract " + edge + " has no slot '" + std::string(slot_id) + "'");
}

ContractRecord fill_contract(const Edge& edge, std::pair<EntityProfile, EntityProfile> parties,
                             std::uint64_t master_seed) {
  const bool sales = edge.domain == ContractDomain::SalesOfGoods;
  const bool ok = sales ? parties.first.kind == NodeKind::Company &&
                              parties.second.kind == NodeKind::Company
                        : parties.first.kind == NodeKind::Company &&
                              parties.second.kind == NodeKind::Person;
  if (!ok) {
    fail(ErrorKind::InvalidParameter,
         "contract " + edge.label + ": " +
             (sales ? "sales parties must both be companies"
                    : "employment parties must be (company, person)"));
  }

  ContractRecord rec;
  rec.edge = edge.label;
  rec.domain = edge.domain;
  rec.parties = std::move(parties);
  const AttributeSchema& sch = schema(edge.domain);
  const std::string first_role = sales ? "seller" : "employer";
  const std::string second_role = sales ? "customer" : "employee";

  for (std::size_t i = 0; i < kSlotsPerContract; ++i) {
    const SlotSpec& s = sch.slots[i];
    TermValue& v = rec.attributes[i];
    v.slot = s.id;
    v.kind = s.kind;
    if (s.id == first_role + "-name") {
      v.value = rec.parties.first.name;
    } else if (s.id == first_role + "-address") {
      v.value = rec.parties.first.address;
    } else if (s.id == second_role + "-name") {
      v.value = rec.parties.second.name;
    } else if (s.id == second_role + "-address") {
      v.value = rec.parties.second.address;
    } else if (s.id == "total-price" || s.id == "finish-hour") {
      continue;  // derived below
    } else {
      Stream rng(derive_seed(master_seed, "contract:" + edge.label + ":" + s.id));
      v = gen_term(s.id, rng);
    }
  }

  if (sales) {
    const auto q = parse_term_number(ValueKind::Count, rec.attribute("quantity").value);
    const auto p = parse_term_number(ValueKind::Money, rec.attribute("unit-price").value);
    rec.attributes[sch.slot("total-price").index - 1].value =
        render_term_number(ValueKind::Money, q * p);
  } else {
    const auto start = parse_term_number(ValueKind::HourOfDay, rec.attribute("start-hour").value);
    rec.attributes[sch.slot("finish-hour").index - 1].value =
        render_term_number(ValueKind::HourOfDay, start + 8);
  }
  return rec;
}

std::vector<QAPair> render_qa(const ContractRecord& contract) {
  const AttributeSchema& sch = schema(contract.domain);
  const bool sales = contract.domain == ContractDomain::SalesOfGoods;
  std::vector<std::pair<std::string, std::string>> subs;
  if (sales) {
    subs = {{"{seller name}", contract.parties.first.name},
            {"{customer name}", contract.parties.second.name},
            {"{effective date}", contract.attribute("effective-date").value}};
  } else {
    subs = {{"{employer name}", contract.parties.first.name},
            {"{employee name}", contract.parties.second.name},
            {"{start date}", contract.attribute("start-date").value}};
  }
  std::vector<QAPair> out;
  out.reserve(kSlotsPerContract);
  for (std::size_t i = 0; i < kSlotsPerContract; ++i) {
    std::string q = sch.slots[i].question;
    for (const auto& [from, to] : subs) q = replace_all(std::move(q), from, to);
    out.push_back({std::move(q), contract.attributes[i].value, contract.edge, sch.slots[i].index});
  }
  return out;
}

std::string render_contract_text(const ContractRecord& contract) {
  std::string text(contract.domain == ContractDomain::SalesOfGoods ? fixtures::sales_contract()
                                                                   : fixtures::employment_contract());
  for (const auto& a : contract.attributes) {
    text = replace_all(std::move(text), "{" + a.slot + "}", a.value);
  }
  return text;
}

std::vector<SlotMatch> match_question(std::string_view question) {
  std::vector<SlotMatch> out;
  for (auto domain : {ContractDomain::SalesOfGoods, ContractDomain::Employment}) {
    for (const auto& s : schema(domain).slots) {
      if (auto caps = match_template(question, s.question)) {
        out.push_back({domain, s.index, std::move(*caps)});
      }
    }
  }
  return out;
}

std::vector<std::optional<int>> infer_slots(std::span<const std::string> questions) {
  std::vector<std::vector<SlotMatch>> matches;
  matches.reserve(questions.size());
  for (const auto& q : questions) matches.push_back(match_question(q));

  const auto same_slot = [](const std::vector<SlotMatch>& m) {
    for (const auto& c : m) {
      if (c.slot != m.front().slot) return false;
    }
    return !m.empty();
  };

  // Placeholder values agreed on by the unambiguous questions.
  std::vector<std::pair<std::string, std::string>> bound;
  for (const auto& m : matches) {
    if (m.size() != 1) continue;
    for (const auto& cap : m.front().captures) bound.push_back(cap);
  }
  const auto consistent = [&](const SlotMatch& c) {
    for (const auto& [name, value] : c.captures) {
      for (const auto& [bname, bvalue] : bound) {
        if (bname == name && bvalue != value) return false;
      }
    }
    return true;
  };

  std::vector<std::optional<int>> out;
  out.reserve(questions.size());
  for (const auto& m : matches) {
    if (same_slot(m)) {
      out.push_back(m.front().slot);
      continue;
    }
    std::optional<int> pick;
    bool unique = true;
    for (const auto& c : m) {
      if (!consistent(c)) continue;
      if (pick && *pick != c.slot) unique = false;
      pick = c.slot;
    }
    out.push_back(unique ? pick : std::nullopt);
  }
  return out;
}

}  // namespace pistol
