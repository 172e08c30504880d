#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "openweather/message.hpp"

namespace owp {

// Canonical wire form: one line of UTF-8 JSON, keys sorted at every depth,
// `" : "` between key and value, `", "` between members, one space inside
// braces. Numeric header fields and "Type" are JSON numbers; identifiers,
// timestamps and all measurement values are strings.
//
// Throws EncodeError naming the first violated field.
std::string encode(const Envelope& message);

// Accepts any key order and whitespace, numeric fields given as strings,
// timestamps without "Z", and the "Retrive" spelling. Throws DecodeError.
Envelope decode(std::string_view bytes);

// Every violated invariant; empty means valid.
std::vector<Violation> validate(const Envelope& message);

// Canonical rendering of just the payload object (the value under
// "Data", "Info" or "Retrieve"); "{ }" when the message has none.
std::string encode_payload(const Envelope& message);

// Canonical rendering of a single payload value.
std::string encode_services(const ServiceCatalog& catalog);
std::string encode_peers(const PeerListing& listing);
std::string encode_data(const WeatherData& data);

}  // namespace owp
