#pragma once

#include <string>
#include <string_view>

namespace pistol {

enum class ContractDomain { SalesOfGoods, Employment };

enum class NodeKind { Company, Person };

std::string_view to_string(ContractDomain domain) noexcept;
std::string_view to_string(NodeKind kind) noexcept;

/// Accepts "sales", "sales-of-goods", "employment" (case-sensitive).
ContractDomain parse_domain(std::string_view text);
/// Accepts "company" or "person".
NodeKind parse_node_kind(std::string_view text);

}  // namespace pistol
