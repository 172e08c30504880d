#pragma once

#include <string_view>

namespace owp {

// Dotted IPv4 or textual IPv6.
bool valid_ip_address(std::string_view text);

}  // namespace owp
