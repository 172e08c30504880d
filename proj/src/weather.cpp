#include "openweather/weather.hpp"

#include <cstdlib>

namespace owp {

std::optional<Decimal> Decimal::parse(std::string_view text) {
  std::size_t i = 0;
  if (i < text.size() && text[i] == '-') ++i;
  std::size_t int_start = i;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
  if (i == int_start) return std::nullopt;
  if (i < text.size() && text[i] == '.') {
    ++i;
    std::size_t frac_start = i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
    if (i == frac_start) return std::nullopt;
  }
  if (i != text.size()) return std::nullopt;
  return Decimal{std::string(text)};
}

Decimal Decimal::from_scaled(long long value, int places) {
  bool neg = value < 0;
  unsigned long long mag = neg ? 0ULL - static_cast<unsigned long long>(value)
                               : static_cast<unsigned long long>(value);
  std::string digits = std::to_string(mag);
  if (places > 0) {
    if (digits.size() <= static_cast<std::size_t>(places)) {
      digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
  }
  if (neg && mag != 0) digits.insert(0, "-");
  return Decimal{digits};
}

double Decimal::value() const { return std::strtod(text_.c_str(), nullptr); }

std::string_view service_name(Service s) {
  switch (s) {
    case Service::kPtu:
      return "PTU";
    case Service::kWind:
      return "WIND";
    case Service::kPrecipitation:
      return "PRECIPITATION";
  }
  return "";
}

std::optional<Service> parse_service(std::string_view name) {
  for (Service s : kAllServices) {
    if (service_name(s) == name) return s;
  }
  return std::nullopt;
}

bool WeatherData::has(Service s) const {
  switch (s) {
    case Service::kPtu:
      return ptu.has_value();
    case Service::kWind:
      return wind.has_value();
    case Service::kPrecipitation:
      return precipitation.has_value();
  }
  return false;
}

namespace {

void non_negative(const Decimal& d, const std::string& field, std::vector<Violation>& out) {
  if (d.value() < 0) out.push_back({field, field + " below 0"});
}

void ordered(const MinAveMax& g, const std::string& field, std::vector<Violation>& out) {
  double lo = g.min.value(), mid = g.ave.value(), hi = g.max.value();
  if (!(lo <= mid && mid <= hi)) out.push_back({field, field + " violates min <= ave <= max"});
}

void check_event(const PrecipitationEvent& e, const std::string& field, std::vector<Violation>& out) {
  non_negative(e.accumulation, field + ".accumulation", out);
  non_negative(e.duration, field + ".duration", out);
  non_negative(e.intensity, field + ".intensity", out);
  non_negative(e.peak, field + ".peak", out);
}

}  // namespace

void check_weather(const WeatherData& data, const std::string& prefix, std::vector<Violation>& out) {
  if (data.ptu) {
    double rh = data.ptu->relative_humidity.value();
    if (rh < 0 || rh > 100) {
      out.push_back({prefix + "PTU.Relative-Humidity", "relative humidity outside [0,100]"});
    }
    if (data.ptu->air_pressure.value() < 0) {
      out.push_back({prefix + "PTU.Air-Pressure", "air pressure below 0"});
    }
  }
  if (data.wind) {
    const auto& dir = data.wind->direction;
    for (const Decimal* d : {&dir.min, &dir.ave, &dir.max}) {
      if (d->value() < 0 || d->value() > 360) {
        out.push_back({prefix + "WIND.Direction", "wind direction outside [0,360]"});
        break;
      }
    }
    ordered(dir, prefix + "WIND.Direction", out);
    const auto& spd = data.wind->speed;
    non_negative(spd.min, prefix + "WIND.Speed.min", out);
    non_negative(spd.ave, prefix + "WIND.Speed.ave", out);
    non_negative(spd.max, prefix + "WIND.Speed.max", out);
    ordered(spd, prefix + "WIND.Speed", out);
  }
  if (data.precipitation) {
    check_event(data.precipitation->rain, prefix + "PRECIPITATION.Rain", out);
    check_event(data.precipitation->hail, prefix + "PRECIPITATION.Hail", out);
  }
}

}  // namespace owp
