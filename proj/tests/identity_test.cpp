#include "openweather/identity.hpp"

#include <gtest/gtest.h>
#include <sodium.h>

#include <random>

#include "openweather/errors.hpp"

namespace owp {
namespace {

std::string sodium_hex(std::string_view text) {
  unsigned char out[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(out, reinterpret_cast<const unsigned char*>(text.data()), text.size());
  char hex[2 * crypto_hash_sha256_BYTES + 1];
  sodium_bin2hex(hex, sizeof hex, out, sizeof out);
  return hex;
}

const StationDescriptor kHelsinki{"02", "974", "Helsinki-Vantaa", "Finland"};

TEST(Identity, HelsinkiVantaa) {
  EXPECT_EQ(node_id_preimage(kHelsinki), "02;974;Helsinki-Vantaa;;Finland");
  NodeId id = derive_node_id(kHelsinki);
  EXPECT_EQ(id.hex(), "a88a9b6b4c0381e0509ce36cadb5fd06e5446ab23881020b9f212db24b16ee75");
  EXPECT_TRUE(id.valid());
  EXPECT_EQ(make_owp_uri(kHelsinki).str(), "owp://finland/helsinki-vantaa/02974");
}

TEST(Identity, MatchesSodiumForRandomDescriptors) {
  ASSERT_GE(sodium_init(), 0);
  std::mt19937_64 rng(974);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ -.'";
  auto word = [&](std::size_t max) {
    std::string s(1 + rng() % max, 'x');
    for (char& c : s) c = alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int i = 0; i < 200; ++i) {
    StationDescriptor d;
    d.block = std::to_string(10 + rng() % 90);
    d.station = std::to_string(100 + rng() % 900);
    d.place = word(30);
    d.country = word(20);
    std::string pre = d.block + ";" + d.station + ";" + d.place + ";;" + d.country;
    ASSERT_EQ(derive_node_id(d).hex(), sodium_hex(pre)) << pre;
  }
}

TEST(Identity, Sha256OfBytes) {
  EXPECT_EQ(sha256_hex(std::string_view{}), sodium_hex(""));
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Identity, RandomIdFromSeedIsDigestOfSeed) {
  std::array<std::byte, 32> seed{};
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = static_cast<std::byte>(i);
  NodeId a = random_node_id(seed);
  EXPECT_TRUE(a.valid());
  EXPECT_EQ(a.hex(), sodium_hex(std::string_view(reinterpret_cast<const char*>(seed.data()), seed.size())));
  EXPECT_NE(random_node_id().hex(), random_node_id().hex());
}

TEST(Identity, NodeIdParse) {
  EXPECT_TRUE(NodeId::parse(std::string(64, 'a')));
  EXPECT_FALSE(NodeId::parse(std::string(64, 'A')));
  EXPECT_FALSE(NodeId::parse(std::string(63, 'a')));
  EXPECT_FALSE(NodeId::parse(std::string(63, 'a') + "g"));
}

TEST(Identity, UriFolding) {
  StationDescriptor d{"12", "345", "New Town", "United Kingdom"};
  EXPECT_EQ(make_owp_uri(d).str(), "owp://united-kingdom/new-town/12345");
  // Case is folded for the URI only.
  EXPECT_EQ(derive_node_id(d).hex(), sodium_hex("12;345;New Town;;United Kingdom"));
}

TEST(Identity, UriRejectsReservedCharacters) {
  EXPECT_THROW(make_owp_uri({"02", "974", "Helsinki/Vantaa", "Finland"}), UriEncodingError);
  EXPECT_THROW(make_owp_uri({"02", "974", "Ilomantsi", "Suomi\xc3\xa4"}), UriEncodingError);
  EXPECT_THROW(make_owp_uri({"02", "974", "A?b", "Finland"}), UriEncodingError);
}

TEST(Identity, DescriptorShape) {
  EXPECT_THROW(derive_node_id({"2", "974", "X", "Y"}), ArgumentError);
  EXPECT_THROW(derive_node_id({"02", "97a", "X", "Y"}), ArgumentError);
  EXPECT_THROW(derive_node_id({"02", "974", "", "Y"}), ArgumentError);
  EXPECT_THROW(derive_node_id({"02", "974", "X", ""}), ArgumentError);
}

}  // namespace
}  // namespace owp
