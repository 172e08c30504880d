#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "openweather/weather.hpp"

namespace owp {

// Destination of one vendor key inside a NormalizedSample.
enum class SampleField {
  kAirTemperature,
  kRelativeHumidity,
  kAirPressure,
  kWindDirectionMin,
  kWindDirectionAve,
  kWindDirectionMax,
  kWindSpeedMin,
  kWindSpeedAve,
  kWindSpeedMax,
  kRainAccumulation,
  kRainDuration,
  kRainIntensity,
  kRainPeak,
  kHailAccumulation,
  kHailDuration,
  kHailIntensity,
  kHailPeak,
};

// "PTU.Air-Temperature", "WIND.Direction.min", "PRECIPITATION.Rain.peak", ...
std::string field_path(SampleField f);

struct KeyMapping {
  SampleField field;
  char unit;
};

// Vendor key table. The built-in table covers Ta, Ua and Pa.
class KeyTable {
 public:
  static KeyTable builtin();

  // Lines "key<TAB>group<TAB>field<TAB>unit-letter"; '#' comments allowed.
  // group is PTU, WIND or PRECIPITATION; field is e.g. "Air-Temperature",
  // "Direction.min", "Rain.accumulation". Throws ArgumentError on bad lines.
  void load(std::istream& in);

  void add(std::string key, KeyMapping m) { keys_[std::move(key)] = m; }
  const KeyMapping* find(std::string_view key) const;

 private:
  std::map<std::string, KeyMapping, std::less<>> keys_;
};

// Values recognised on one line. Groups may be partial.
struct SampleFragment {
  std::string tag;
  std::map<SampleField, Decimal> values;
  std::vector<std::string> warnings;

  bool empty() const { return values.empty(); }
};

// Comma-keyed ASCII dialect: "<tag>,<key>=<number><unit>,...". A trailing
// CR or CRLF is stripped. Throws VendorFormatError when the record tag is
// missing or the line is not printable ASCII, VendorValueError when a
// recognised key carries a bad number or unit.
SampleFragment parse_line(std::string_view line, const KeyTable& keys = KeyTable::builtin());

// Assembles complete groups. Incomplete groups are dropped with a warning
// appended to `warnings` when given.
NormalizedSample to_sample(const SampleFragment& fragment, Timestamp ts,
                           std::vector<std::string>* warnings = nullptr);

// Data block for a Type 300/301 message. Missing precipitation is reported
// as all-zero; missing PTU or WIND is left out. Throws EmptySampleError.
WeatherData to_data_block(const NormalizedSample& sample);

}  // namespace owp
