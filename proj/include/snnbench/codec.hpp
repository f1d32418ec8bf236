#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "snnbench/network.hpp"

namespace snnbench {

enum class EncoderScheme { rate, latency, event };

std::string to_string(EncoderScheme s);
EncoderScheme encoder_scheme_from_string(const std::string& s);

struct EncoderConfig {
  EncoderScheme scheme = EncoderScheme::rate;
  double window_ms = 100.0;
  double dt = 1.0;
  double r_max = 200.0;     // Hz, rate scheme
  double t_max_ms = 200.0;  // latest spike time, latency scheme
  std::uint64_t seed = 1;
  bool split_polarity = false;  // event scheme: OFF events go to unit 2*u+1

  int steps() const;
  double rate_probability() const { return r_max * dt / 1000.0; }
  void validate() const;
};

struct Event {
  std::int64_t t_us = 0;
  std::uint32_t unit = 0;
  int polarity = 1;

  bool operator==(const Event&) const = default;
};

struct EventStream {
  std::vector<Event> events;

  bool operator==(const EventStream&) const = default;
};

// Deterministic RNG used by every stochastic component.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) from 53 random bits; independent of the
// standard library's distribution implementation.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Mixes several integers into one well-spread seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// Bernoulli rate coding: unit i fires each step with probability
// clamp(x_i, 0, 1) * r_max * dt / 1000.
SpikeRaster encode_rate(std::span<const double> intensities, const EncoderConfig& cfg, Rng& rng);
SpikeRaster encode_rate(std::span<const double> intensities, const EncoderConfig& cfg);

// Single spike per unit at step round((1 - a) * t_max / dt); a == 0 never fires.
SpikeRaster encode_latency(std::span<const double> amplitudes, const EncoderConfig& cfg);

// Bins a sorted event stream into consecutive windows of cfg.window_ms.
std::vector<SpikeRaster> encode_events(const EventStream& stream, std::size_t input_size,
                                       const EncoderConfig& cfg);

struct CountDecision {
  std::size_t cls = 0;
  bool silent = false;
};

CountDecision decode_count_argmax(std::span<const std::uint64_t> counts);
CountDecision decode_count_argmax(const SpikeRaster& output);

struct FirstSpike {
  std::size_t cls = 0;
  int latency_steps = 0;
};

// Earliest output spike at or after t0; nullopt is the "no decision" outcome.
std::optional<FirstSpike> decode_first_spike(const SpikeRaster& output, int t0 = 0);
// Same decision with t0 = 0 from per-unit first-spike steps (-1 = silent).
std::optional<FirstSpike> decode_first_spike(std::span<const int> first_spike_steps);

// Event CSV with header "t_us,unit,polarity".
EventStream read_event_csv(std::istream& in);
EventStream read_event_csv_file(const std::string& path);
void write_event_csv(std::ostream& out, const EventStream& stream);

}  // namespace snnbench
