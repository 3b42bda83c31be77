#pragma once

#include <string_view>

// Versioned fixture files from data/, compiled into the library.
namespace pistol::fixtures {

std::string_view dataset1_edges();
std::string_view sales_schema();
std::string_view employment_schema();
std::string_view sales_contract();
std::string_view employment_contract();
std::string_view us_states();
std::string_view goods();
std::string_view positions();
std::string_view benefits();

}  // namespace pistol::fixtures
