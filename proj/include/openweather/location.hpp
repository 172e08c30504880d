#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace owp {

// UTM grid position, serialised as "<northing> <easting> <zone>", e.g.
// "6672224 385565 35V".
struct UtmLocation {
  std::uint64_t northing = 0;
  std::uint64_t easting = 0;
  std::string zone = "31N";

  static std::optional<UtmLocation> parse(std::string_view text);
  std::string str() const;

  friend bool operator==(const UtmLocation&, const UtmLocation&) = default;
};

// 1-2 digits followed by one uppercase letter.
bool valid_utm_zone(std::string_view zone);

}  // namespace owp
