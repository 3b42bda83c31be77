#include "pistol/domain.hpp"

#include "pistol/error.hpp"

namespace pistol {

std::string_view to_string(ContractDomain domain) noexcept {
  return domain == ContractDomain::SalesOfGoods ? "sales" : "employment";
}

std::string_view to_string(NodeKind kind) noexcept {
  return kind == NodeKind::Company ? "company" : "person";
}

ContractDomain parse_domain(std::string_view text) {
  if (text == "sales" || text == "sales-of-goods") return ContractDomain::SalesOfGoods;
  if (text == "employment") return ContractDomain::Employment;
  fail(ErrorKind::Parse, "unknown contract domain '" + std::string(text) + "'");
}

NodeKind parse_node_kind(std::string_view text) {
  if (text == "company") return NodeKind::Company;
  if (text == "person") return NodeKind::Person;
  fail(ErrorKind::Parse, "unknown node kind '" + std::string(text) + "'");
}

}  // namespace pistol
