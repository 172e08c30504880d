#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>

#include "openweather/vendor_parser.hpp"
#include "openweather/weather.hpp"

namespace owp {

// Quantities are in tenths of their unit (191 = 19.1 C), except wind
// direction, which is in whole degrees.
struct GeneratorConfig {
  std::int64_t interval_ms = 3000;
  std::uint64_t seed = 0;

  std::int64_t temperature = 191;
  std::int64_t humidity = 694;
  std::int64_t pressure = 10141;
  std::int64_t wind_direction = 160;
  std::int64_t wind_speed = 17;

  // Largest change per step of the walking average.
  std::int64_t temperature_step = 3;
  std::int64_t humidity_step = 5;
  std::int64_t pressure_step = 2;
  std::int64_t wind_direction_step = 5;
  std::int64_t wind_speed_step = 2;

  // Fixed distance of min and max from the average.
  std::int64_t direction_lull = 0;
  std::int64_t direction_gust = 0;
  std::int64_t speed_lull = 0;
  std::int64_t speed_gust = 1;

  // Chance that a step starts or continues a rain episode.
  double precipitation_probability = 0.0;
};

// Bounded random walk. Deterministic for a given seed.
class SampleGenerator {
 public:
  explicit SampleGenerator(const GeneratorConfig& config);

  NormalizedSample next_sample(Timestamp now);
  const GeneratorConfig& config() const { return config_; }

 private:
  GeneratorConfig config_;
  std::mt19937_64 rng_;
  std::int64_t temperature_, humidity_, pressure_, direction_, speed_;
};

inline constexpr std::size_t kDefaultStoreCapacity = 10000;

// Samples keyed by timestamp; the oldest is evicted when full.
class SampleStore {
 public:
  explicit SampleStore(std::size_t capacity = kDefaultStoreCapacity);

  // Throws OrderingError unless the timestamp is newer than every key.
  void insert(const NormalizedSample& sample);

  // Exact timestamp match.
  const NormalizedSample* lookup(Timestamp ts) const;
  const NormalizedSample* latest() const;

  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::map<Timestamp, NormalizedSample>& samples() const { return samples_; }

 private:
  std::size_t capacity_;
  std::map<Timestamp, NormalizedSample> samples_;
};

// Serial-line ingestion: one vendor line in, a stamped sample out (nullopt
// when the line held no complete group). Vendor errors propagate.
class SerialIngest {
 public:
  explicit SerialIngest(KeyTable keys = KeyTable::builtin()) : keys_(std::move(keys)) {}

  std::optional<NormalizedSample> feed(std::string_view line, Timestamp now,
                                       std::vector<std::string>* warnings = nullptr) const;

 private:
  KeyTable keys_;
};

}  // namespace owp
