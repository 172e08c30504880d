#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "openweather/timestamp.hpp"

namespace owp {

// Exact decimal text ("-3", "1014.1"). Values are never round-tripped through
// binary floating point on their way to the wire.
class Decimal {
 public:
  Decimal() : text_("0") {}

  // Accepts -?digits(.digits)?
  static std::optional<Decimal> parse(std::string_view text);
  static Decimal zero() { return Decimal{}; }

  // Fixed-point constructor used by the synthetic generator: value/10^places.
  static Decimal from_scaled(long long value, int places);

  const std::string& text() const { return text_; }
  double value() const;
  bool negative() const { return !text_.empty() && text_[0] == '-'; }

  friend bool operator==(const Decimal&, const Decimal&) = default;

 private:
  explicit Decimal(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

enum class Service { kPtu, kWind, kPrecipitation };

inline constexpr std::array<Service, 3> kAllServices = {Service::kPtu, Service::kWind,
                                                        Service::kPrecipitation};

// "PTU", "WIND", "PRECIPITATION"
std::string_view service_name(Service s);
std::optional<Service> parse_service(std::string_view name);

// Units are implied by field: Celsius, percent, hPa.
struct PtuReading {
  Decimal air_temperature;
  Decimal relative_humidity;
  Decimal air_pressure;
  friend bool operator==(const PtuReading&, const PtuReading&) = default;
};

struct MinAveMax {
  Decimal min;
  Decimal ave;
  Decimal max;
  friend bool operator==(const MinAveMax&, const MinAveMax&) = default;
};

// Direction in degrees, speed in m/s.
struct WindReading {
  MinAveMax direction;
  MinAveMax speed;
  friend bool operator==(const WindReading&, const WindReading&) = default;
};

// Rain: mm, s, mm/h, mm/h.  Hail: hits/cm2, s, hits/cm2h, hits/cm2h.
struct PrecipitationEvent {
  Decimal accumulation;
  Decimal duration;
  Decimal intensity;
  Decimal peak;
  friend bool operator==(const PrecipitationEvent&, const PrecipitationEvent&) = default;
};

struct PrecipitationReading {
  PrecipitationEvent rain;
  PrecipitationEvent hail;
  friend bool operator==(const PrecipitationReading&, const PrecipitationReading&) = default;
};

// The "Data" block of a Type 300/301 message.
struct WeatherData {
  std::optional<PtuReading> ptu;
  std::optional<WindReading> wind;
  std::optional<PrecipitationReading> precipitation;

  bool empty() const { return !ptu && !wind && !precipitation; }
  bool has(Service s) const;
  friend bool operator==(const WeatherData&, const WeatherData&) = default;
};

// A measurement as produced by the normalisation layer, stamped at ingestion.
struct NormalizedSample {
  Timestamp timestamp{};
  std::optional<PtuReading> ptu;
  std::optional<WindReading> wind;
  std::optional<PrecipitationReading> precipitation;

  bool empty() const { return !ptu && !wind && !precipitation; }
  friend bool operator==(const NormalizedSample&, const NormalizedSample&) = default;
};

struct Violation {
  std::string field;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

// Range and ordering checks shared by the codec and the normalisation layer.
void check_weather(const WeatherData& data, const std::string& prefix, std::vector<Violation>& out);

inline WeatherData weather_of(const NormalizedSample& s) {
  return WeatherData{s.ptu, s.wind, s.precipitation};
}

}  // namespace owp
