#include "openweather/sensor_source.hpp"

#include <algorithm>

#include "openweather/errors.hpp"

namespace owp {

namespace {

// Uniform in [lo, hi] without relying on library distribution details, so
// sequences match across standard libraries.
std::int64_t draw(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

bool chance(std::mt19937_64& rng, double p) {
  if (p <= 0) return false;
  if (p >= 1) return true;
  return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p;
}

std::int64_t walk(std::mt19937_64& rng, std::int64_t value, std::int64_t step, std::int64_t lo,
                  std::int64_t hi) {
  value += draw(rng, -step, step);
  return std::clamp(value, lo, hi);
}

Decimal tenths(std::int64_t v) { return Decimal::from_scaled(v, 1); }
Decimal degrees(std::int64_t v) { return Decimal::from_scaled(v, 0); }

}  // namespace

SampleGenerator::SampleGenerator(const GeneratorConfig& config)
    : config_(config),
      rng_(config.seed),
      temperature_(config.temperature),
      humidity_(std::clamp<std::int64_t>(config.humidity, 0, 1000)),
      pressure_(std::max<std::int64_t>(config.pressure, 0)),
      direction_(std::clamp<std::int64_t>(config.wind_direction, 0, 360)),
      speed_(std::max<std::int64_t>(config.wind_speed, 0)) {
  if (config.interval_ms <= 0) throw ArgumentError("generator interval must be positive");
}

NormalizedSample SampleGenerator::next_sample(Timestamp now) {
  const auto& c = config_;
  temperature_ = walk(rng_, temperature_, c.temperature_step, -900, 600);
  humidity_ = walk(rng_, humidity_, c.humidity_step, 0, 1000);
  pressure_ = walk(rng_, pressure_, c.pressure_step, 0, 20000);
  direction_ = walk(rng_, direction_, c.wind_direction_step, 0, 360);
  speed_ = walk(rng_, speed_, c.wind_speed_step, 0, 1000);

  NormalizedSample s;
  s.timestamp = now;
  s.ptu = PtuReading{tenths(temperature_), tenths(humidity_), tenths(pressure_)};
  s.wind = WindReading{
      {degrees(std::max<std::int64_t>(direction_ - c.direction_lull, 0)), degrees(direction_),
       degrees(std::min<std::int64_t>(direction_ + c.direction_gust, 360))},
      {tenths(std::max<std::int64_t>(speed_ - c.speed_lull, 0)), tenths(speed_), tenths(speed_ + c.speed_gust)}};

  PrecipitationReading p;
  if (chance(rng_, c.precipitation_probability)) {
    std::int64_t intensity = draw(rng_, 1, 20);
    p.rain.intensity = Decimal::from_scaled(intensity, 0);
    p.rain.peak = Decimal::from_scaled(intensity + draw(rng_, 0, 5), 0);
    p.rain.duration = Decimal::from_scaled(std::max<std::int64_t>(c.interval_ms / 1000, 1), 0);
    p.rain.accumulation = Decimal::from_scaled(draw(rng_, 1, 5), 0);
  }
  s.precipitation = p;
  return s;
}

SampleStore::SampleStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ArgumentError("sample store capacity must be at least 1");
}

void SampleStore::insert(const NormalizedSample& sample) {
  if (!samples_.empty() && sample.timestamp <= samples_.rbegin()->first) {
    throw OrderingError("sample at " + format_timestamp(sample.timestamp) + " is not newer than " +
                        format_timestamp(samples_.rbegin()->first));
  }
  samples_.emplace(sample.timestamp, sample);
  while (samples_.size() > capacity_) samples_.erase(samples_.begin());
}

const NormalizedSample* SampleStore::lookup(Timestamp ts) const {
  auto it = samples_.find(ts);
  return it == samples_.end() ? nullptr : &it->second;
}

const NormalizedSample* SampleStore::latest() const {
  return samples_.empty() ? nullptr : &samples_.rbegin()->second;
}

std::optional<NormalizedSample> SerialIngest::feed(std::string_view line, Timestamp now,
                                                   std::vector<std::string>* warnings) const {
  SampleFragment f = parse_line(line, keys_);
  if (warnings) warnings->insert(warnings->end(), f.warnings.begin(), f.warnings.end());
  NormalizedSample s = to_sample(f, now, warnings);
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace owp
