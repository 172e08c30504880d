#include "openweather/vendor_parser.hpp"

#include <array>
#include <istream>
#include <sstream>

#include "openweather/errors.hpp"

namespace owp {

namespace {

constexpr std::array<std::pair<SampleField, std::string_view>, 17> kPaths = {{
    {SampleField::kAirTemperature, "PTU.Air-Temperature"},
    {SampleField::kRelativeHumidity, "PTU.Relative-Humidity"},
    {SampleField::kAirPressure, "PTU.Air-Pressure"},
    {SampleField::kWindDirectionMin, "WIND.Direction.min"},
    {SampleField::kWindDirectionAve, "WIND.Direction.ave"},
    {SampleField::kWindDirectionMax, "WIND.Direction.max"},
    {SampleField::kWindSpeedMin, "WIND.Speed.min"},
    {SampleField::kWindSpeedAve, "WIND.Speed.ave"},
    {SampleField::kWindSpeedMax, "WIND.Speed.max"},
    {SampleField::kRainAccumulation, "PRECIPITATION.Rain.accumulation"},
    {SampleField::kRainDuration, "PRECIPITATION.Rain.duration"},
    {SampleField::kRainIntensity, "PRECIPITATION.Rain.intensity"},
    {SampleField::kRainPeak, "PRECIPITATION.Rain.peak"},
    {SampleField::kHailAccumulation, "PRECIPITATION.Hail.accumulation"},
    {SampleField::kHailDuration, "PRECIPITATION.Hail.duration"},
    {SampleField::kHailIntensity, "PRECIPITATION.Hail.intensity"},
    {SampleField::kHailPeak, "PRECIPITATION.Hail.peak"},
}};

// Keys the dialect is known to emit but that have no place in the sample.
constexpr std::array<std::string_view, 1> kIgnoredKeys = {"Tp"};

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }

std::size_t numeric_prefix(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
  std::size_t start = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == start) return 0;
  if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
  }
  return i;
}

std::optional<std::string> range_problem(SampleField f, const Decimal& d) {
  double v = d.value();
  switch (f) {
    case SampleField::kAirTemperature:
      return std::nullopt;
    case SampleField::kRelativeHumidity:
      if (v < 0 || v > 100) return "relative humidity outside [0,100]";
      return std::nullopt;
    case SampleField::kWindDirectionMin:
    case SampleField::kWindDirectionAve:
    case SampleField::kWindDirectionMax:
      if (v < 0 || v > 360) return "wind direction outside [0,360]";
      return std::nullopt;
    default:
      if (v < 0) return "negative value";
      return std::nullopt;
  }
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string field_path(SampleField f) {
  for (const auto& [field, path] : kPaths) {
    if (field == f) return std::string(path);
  }
  return "?";
}

KeyTable KeyTable::builtin() {
  KeyTable t;
  t.add("Ta", {SampleField::kAirTemperature, 'C'});
  t.add("Ua", {SampleField::kRelativeHumidity, 'P'});
  t.add("Pa", {SampleField::kAirPressure, 'H'});
  return t;
}

void KeyTable::load(std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    auto where = "mapping line " + std::to_string(lineno);
    if (cols.size() != 4) throw ArgumentError(where + ": expected 4 tab-separated columns");
    if (cols[0].empty()) throw ArgumentError(where + ": empty key");
    if (cols[3].size() != 1 || !is_alpha(cols[3][0])) {
      throw ArgumentError(where + ": unit must be a single letter");
    }
    std::string path = std::string(cols[1]) + "." + std::string(cols[2]);
    const SampleField* found = nullptr;
    for (const auto& entry : kPaths) {
      if (entry.second == path) found = &entry.first;
    }
    if (!found) throw ArgumentError(where + ": unknown field " + path);
    add(std::string(cols[0]), {*found, cols[3][0]});
  }
}

const KeyMapping* KeyTable::find(std::string_view key) const {
  auto it = keys_.find(key);
  return it == keys_.end() ? nullptr : &it->second;
}

SampleFragment parse_line(std::string_view line, const KeyTable& keys) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  for (std::size_t i = 0; i < line.size(); ++i) {
    auto c = static_cast<unsigned char>(line[i]);
    if (c < 0x20 || c > 0x7e) {
      throw VendorFormatError("non-printable byte at offset " + std::to_string(i));
    }
  }

  auto tokens = split(line, ',');
  SampleFragment out;
  if (tokens[0].empty() || tokens[0].find('=') != std::string_view::npos) {
    throw VendorFormatError("missing record tag");
  }
  out.tag = std::string(tokens[0]);
  if (tokens.size() == 1) out.warnings.push_back("no fields after record tag");

  for (std::size_t i = 1; i < tokens.size(); ++i) {
    std::string_view tok = tokens[i];
    bool last = i + 1 == tokens.size();
    if (tok.empty()) {
      if (!last || tokens.size() == 2) out.warnings.push_back("no fields after record tag");
      continue;
    }
    auto eq = tok.find('=');
    if (eq == std::string_view::npos) {
      out.warnings.push_back("field without '=': " + std::string(tok));
      continue;
    }
    std::string key(tok.substr(0, eq));
    std::string_view value = tok.substr(eq + 1);

    bool ignored = false;
    for (auto k : kIgnoredKeys) ignored = ignored || k == key;
    if (ignored) {
      out.warnings.push_back("key " + key + " ignored");
      continue;
    }
    const KeyMapping* m = keys.find(key);
    if (!m) {
      out.warnings.push_back("unrecognised key " + key);
      continue;
    }

    std::size_t n = numeric_prefix(value);
    if (n == 0) throw VendorValueError(key, "non-numeric value '" + std::string(value) + "'");
    std::string_view number = value.substr(0, n);
    if (number[0] == '+') number.remove_prefix(1);
    std::string_view unit = value.substr(n);
    if (unit.empty() || unit[0] != m->unit) {
      throw VendorValueError(key, "expected unit '" + std::string(1, m->unit) + "' after value, got '" +
                                      std::string(unit) + "'");
    }
    if (unit.size() > 1) {
      if (!last) throw VendorValueError(key, "unexpected text after unit: '" + std::string(unit) + "'");
      out.warnings.push_back("trailing text '" + std::string(unit.substr(1)) + "' after last field ignored");
    }

    auto d = Decimal::parse(number);
    if (!d) throw VendorValueError(key, "non-numeric value '" + std::string(value) + "'");
    if (auto problem = range_problem(m->field, *d)) throw VendorValueError(key, *problem);
    if (out.values.count(m->field)) out.warnings.push_back("duplicate key " + key + ", last value kept");
    out.values[m->field] = *d;
  }
  return out;
}

NormalizedSample to_sample(const SampleFragment& fragment, Timestamp ts, std::vector<std::string>* warnings) {
  NormalizedSample out;
  out.timestamp = ts;
  const auto& v = fragment.values;
  auto get = [&](SampleField f) -> std::optional<Decimal> {
    auto it = v.find(f);
    if (it == v.end()) return std::nullopt;
    return it->second;
  };
  auto note = [&](const std::string& w) {
    if (warnings) warnings->push_back(w);
  };
  auto count = [&](std::initializer_list<SampleField> fs) {
    int n = 0;
    for (auto f : fs) n += v.count(f) ? 1 : 0;
    return n;
  };

  auto ptu = {SampleField::kAirTemperature, SampleField::kRelativeHumidity, SampleField::kAirPressure};
  int n = count(ptu);
  if (n == 3) {
    out.ptu = PtuReading{*get(SampleField::kAirTemperature), *get(SampleField::kRelativeHumidity),
                         *get(SampleField::kAirPressure)};
  } else if (n > 0) {
    note("incomplete PTU group dropped");
  }

  auto wind = {SampleField::kWindDirectionMin, SampleField::kWindDirectionAve, SampleField::kWindDirectionMax,
               SampleField::kWindSpeedMin,     SampleField::kWindSpeedAve,     SampleField::kWindSpeedMax};
  n = count(wind);
  if (n == 6) {
    WindReading w{{*get(SampleField::kWindDirectionMin), *get(SampleField::kWindDirectionAve),
                   *get(SampleField::kWindDirectionMax)},
                  {*get(SampleField::kWindSpeedMin), *get(SampleField::kWindSpeedAve),
                   *get(SampleField::kWindSpeedMax)}};
    std::vector<Violation> problems;
    check_weather(WeatherData{std::nullopt, w, std::nullopt}, "", problems);
    if (problems.empty()) {
      out.wind = w;
    } else {
      note("WIND group dropped: " + problems.front().message);
    }
  } else if (n > 0) {
    note("incomplete WIND group dropped");
  }

  // Precipitation fields default to zero when only some are reported.
  auto precip = {SampleField::kRainAccumulation, SampleField::kRainDuration,  SampleField::kRainIntensity,
                 SampleField::kRainPeak,         SampleField::kHailAccumulation, SampleField::kHailDuration,
                 SampleField::kHailIntensity,    SampleField::kHailPeak};
  if (count(precip) > 0) {
    auto z = [&](SampleField f) { return get(f).value_or(Decimal::zero()); };
    out.precipitation = PrecipitationReading{
        {z(SampleField::kRainAccumulation), z(SampleField::kRainDuration), z(SampleField::kRainIntensity),
         z(SampleField::kRainPeak)},
        {z(SampleField::kHailAccumulation), z(SampleField::kHailDuration), z(SampleField::kHailIntensity),
         z(SampleField::kHailPeak)}};
  }
  return out;
}

WeatherData to_data_block(const NormalizedSample& sample) {
  if (sample.empty()) throw EmptySampleError("sample has no populated measurement group");
  WeatherData out = weather_of(sample);
  if (!out.precipitation) out.precipitation = PrecipitationReading{};
  return out;
}

}  // namespace owp
