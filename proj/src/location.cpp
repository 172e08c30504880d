#include "openweather/location.hpp"

#include <charconv>
#include <vector>

namespace owp {
namespace {

std::optional<std::uint64_t> parse_uint(std::string_view s) {
  if (s.empty()) return std::nullopt;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

bool valid_utm_zone(std::string_view zone) {
  if (zone.size() < 2 || zone.size() > 3) return false;
  for (std::size_t i = 0; i + 1 < zone.size(); ++i) {
    if (zone[i] < '0' || zone[i] > '9') return false;
  }
  char band = zone.back();
  return band >= 'A' && band <= 'Z';
}

std::optional<UtmLocation> UtmLocation::parse(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  if (tokens.size() != 3) return std::nullopt;
  auto northing = parse_uint(tokens[0]);
  auto easting = parse_uint(tokens[1]);
  if (!northing || !easting || !valid_utm_zone(tokens[2])) return std::nullopt;
  return UtmLocation{*northing, *easting, std::string(tokens[2])};
}

std::string UtmLocation::str() const {
  return std::to_string(northing) + " " + std::to_string(easting) + " " + zone;
}

}  // namespace owp
