#include "openweather/identity.hpp"

#include <openssl/evp.h>

#include <memory>
#include <random>

#include "openweather/errors.hpp"

namespace owp {
namespace {

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

bool unreserved(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '.' || c == '_' || c == '~';
}

std::string fold(std::string_view component, std::string_view what) {
  std::string out;
  out.reserve(component.size());
  for (char c : component) {
    if (c == ' ') {
      out.push_back('-');
    } else if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      out.push_back(c);
    }
  }
  for (char c : out) {
    if (!unreserved(c)) {
      throw UriEncodingError("owp uri: " + std::string(what) + " '" + std::string(component) +
                             "' contains a character outside the unreserved set");
    }
  }
  return out;
}

}  // namespace

std::optional<NodeId> NodeId::parse(std::string_view hex) {
  NodeId id{std::string(hex)};
  if (!id.valid()) return std::nullopt;
  return id;
}

bool NodeId::valid() const {
  if (hex_.size() != 64) return false;
  for (char c : hex_) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

void check_descriptor(const StationDescriptor& d) {
  if (d.block.size() != 2 || !all_digits(d.block)) {
    throw ArgumentError("station descriptor: block must be 2 digits, got '" + d.block + "'");
  }
  if (d.station.size() != 3 || !all_digits(d.station)) {
    throw ArgumentError("station descriptor: station must be 3 digits, got '" + d.station + "'");
  }
  if (d.place.empty()) throw ArgumentError("station descriptor: place is empty");
  if (d.country.empty()) throw ArgumentError("station descriptor: country is empty");
}

OwpUri make_owp_uri(const StationDescriptor& d) {
  check_descriptor(d);
  return OwpUri{fold(d.country, "country"), fold(d.place, "place"), d.block + d.station};
}

std::string node_id_preimage(const StationDescriptor& d) {
  return d.block + ";" + d.station + ";" + d.place + ";;" + d.country;
}

NodeId derive_node_id(const StationDescriptor& d) {
  check_descriptor(d);
  return NodeId{sha256_hex(node_id_preimage(d))};
}

NodeId random_node_id(std::span<const std::byte, 32> seed) {
  return NodeId{sha256_hex(std::span<const std::byte>(seed))};
}

NodeId random_node_id() {
  std::random_device rd;
  std::array<std::byte, 32> seed{};
  for (std::size_t i = 0; i < seed.size(); i += 4) {
    auto word = rd();
    for (std::size_t j = 0; j < 4; ++j) seed[i + j] = static_cast<std::byte>((word >> (8 * j)) & 0xff);
  }
  return random_node_id(seed);
}

std::string sha256_hex(std::span<const std::byte> data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("sha256: digest computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

}  // namespace owp
