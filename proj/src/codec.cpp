#include "snnbench/codec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "snnbench/error.hpp"

namespace snnbench {

std::string to_string(EncoderScheme s) {
  switch (s) {
    case EncoderScheme::rate: return "rate";
    case EncoderScheme::latency: return "latency";
    case EncoderScheme::event: return "event";
  }
  return "rate";
}

EncoderScheme encoder_scheme_from_string(const std::string& s) {
  if (s == "rate") return EncoderScheme::rate;
  if (s == "latency") return EncoderScheme::latency;
  if (s == "event") return EncoderScheme::event;
  throw ConfigError("unknown encoder scheme '" + s + "'");
}

int EncoderConfig::steps() const { return static_cast<int>(std::llround(window_ms / dt)); }

void EncoderConfig::validate() const {
  if (!(window_ms > 0.0) || !std::isfinite(window_ms))
    throw ConfigError("EncoderConfig: window_ms must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("EncoderConfig: dt must be positive");
  if (steps() < 1) throw ConfigError("EncoderConfig: window shorter than one step");
  if (scheme == EncoderScheme::rate) {
    if (!(r_max >= 0.0) || !std::isfinite(r_max))
      throw ConfigError("EncoderConfig: r_max must be >= 0");
    if (rate_probability() > 1.0)
      throw ConfigError("EncoderConfig: r_max*dt/1000 exceeds 1 (invalid per-step probability)");
  }
  if (scheme == EncoderScheme::latency) {
    if (!(t_max_ms >= 0.0) || !std::isfinite(t_max_ms))
      throw ConfigError("EncoderConfig: t_max_ms must be >= 0");
    if (t_max_ms > window_ms) throw ConfigError("EncoderConfig: t_max_ms exceeds window_ms");
  }
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finaliser applied to a running combination.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(a) ^ b) ^ c);
}

SpikeRaster encode_rate(std::span<const double> intensities, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto steps = static_cast<std::size_t>(cfg.steps());
  SpikeRaster raster(intensities.size(), steps);
  const double p_max = cfg.rate_probability();
  std::vector<std::pair<std::size_t, double>> active;
  for (std::size_t i = 0; i < intensities.size(); ++i) {
    const double x = intensities[i];
    if (std::isnan(x)) throw NumericError("encode_rate: NaN intensity at unit " + std::to_string(i));
    const double p = std::clamp(x, 0.0, 1.0) * p_max;
    if (p > 0.0) active.emplace_back(i, p);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    auto row = raster.step(t);
    for (const auto& [i, p] : active) row[i] = uniform01(rng) < p ? 1 : 0;
  }
  return raster;
}

SpikeRaster encode_rate(std::span<const double> intensities, const EncoderConfig& cfg) {
  Rng rng(cfg.seed);
  return encode_rate(intensities, cfg, rng);
}

SpikeRaster encode_latency(std::span<const double> amplitudes, const EncoderConfig& cfg) {
  cfg.validate();
  const int steps = cfg.steps();
  SpikeRaster raster(amplitudes.size(), static_cast<std::size_t>(steps));
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    const double a = amplitudes[i];
    if (std::isnan(a)) throw NumericError("encode_latency: NaN amplitude");
    if (a <= 0.0) continue;
    const double clamped = std::min(a, 1.0);
    auto step = static_cast<int>(std::llround((1.0 - clamped) * cfg.t_max_ms / cfg.dt));
    // t_max == window puts the faintest inputs one step past the end.
    step = std::min(step, steps - 1);
    raster.set(i, static_cast<std::size_t>(step));
  }
  return raster;
}

std::vector<SpikeRaster> encode_events(const EventStream& stream, std::size_t input_size,
                                       const EncoderConfig& cfg) {
  cfg.validate();
  const auto steps = static_cast<std::size_t>(cfg.steps());
  const double window_us = cfg.window_ms * 1000.0;
  const std::size_t units = cfg.split_polarity ? 2 * input_size : input_size;

  std::int64_t prev = 0;
  for (const auto& e : stream.events) {
    if (e.t_us < 0) throw FormatError("encode_events: negative timestamp");
    if (e.t_us < prev) throw FormatError("encode_events: timestamps must be nondecreasing");
    if (e.unit >= input_size)
      throw DimensionError("encode_events: unit " + std::to_string(e.unit) +
                           " out of range for input size " + std::to_string(input_size));
    prev = e.t_us;
  }

  std::size_t n_windows = 1;
  if (!stream.events.empty())
    n_windows =
        static_cast<std::size_t>(std::floor(static_cast<double>(stream.events.back().t_us) / window_us)) + 1;
  std::vector<SpikeRaster> windows(n_windows, SpikeRaster(units, steps));
  for (const auto& e : stream.events) {
    const auto w = static_cast<std::size_t>(std::floor(static_cast<double>(e.t_us) / window_us));
    const double offset_ms = (static_cast<double>(e.t_us) - static_cast<double>(w) * window_us) / 1000.0;
    auto step = static_cast<std::size_t>(std::floor(offset_ms / cfg.dt));
    step = std::min(step, steps - 1);
    std::size_t unit = e.unit;
    if (cfg.split_polarity) unit = 2 * e.unit + (e.polarity < 0 ? 1 : 0);
    windows[w].set(unit, step);
  }
  return windows;
}

CountDecision decode_count_argmax(std::span<const std::uint64_t> counts) {
  CountDecision d;
  if (counts.empty()) throw DimensionError("decode_count_argmax: no output units");
  std::uint64_t best = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > best) {
      best = counts[i];
      d.cls = i;
    }
  }
  d.silent = best == 0;
  return d;
}

CountDecision decode_count_argmax(const SpikeRaster& output) {
  const auto counts = output.unit_counts();
  return decode_count_argmax(counts);
}

std::optional<FirstSpike> decode_first_spike(const SpikeRaster& output, int t0) {
  if (t0 < 0 || static_cast<std::size_t>(t0) > output.n_steps())
    throw DimensionError("decode_first_spike: t0 outside raster");
  for (auto t = static_cast<std::size_t>(t0); t < output.n_steps(); ++t) {
    auto row = output.step(t);
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i]) return FirstSpike{i, static_cast<int>(t) - t0};
  }
  return std::nullopt;
}

std::optional<FirstSpike> decode_first_spike(std::span<const int> first_spike_steps) {
  std::optional<FirstSpike> best;
  for (std::size_t i = 0; i < first_spike_steps.size(); ++i) {
    const int t = first_spike_steps[i];
    if (t < 0) continue;
    if (!best || t < best->latency_steps) best = FirstSpike{i, t};
  }
  return best;
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line_no) {
  T value{};
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw FormatError("event CSV line " + std::to_string(line_no) + ": bad field '" +
                      std::string(text) + "'");
  return value;
}

}  // namespace

EventStream read_event_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("event CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_us,unit,polarity")
    throw FormatError("event CSV: expected header 't_us,unit,polarity', got '" + line + "'");
  EventStream stream;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view v(line);
    const auto c1 = v.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : v.find(',', c1 + 1);
    if (c2 == std::string_view::npos || v.find(',', c2 + 1) != std::string_view::npos)
      throw FormatError("event CSV line " + std::to_string(line_no) + ": expected 3 fields");
    Event e;
    e.t_us = parse_field<std::int64_t>(v.substr(0, c1), line_no);
    e.unit = parse_field<std::uint32_t>(v.substr(c1 + 1, c2 - c1 - 1), line_no);
    std::string_view pol = v.substr(c2 + 1);
    if (!pol.empty() && pol.front() == '+') pol.remove_prefix(1);
    e.polarity = parse_field<int>(pol, line_no);
    if (e.t_us < 0) throw FormatError("event CSV line " + std::to_string(line_no) + ": negative time");
    if (e.polarity != 1 && e.polarity != -1)
      throw FormatError("event CSV line " + std::to_string(line_no) + ": polarity must be +1 or -1");
    stream.events.push_back(e);
  }
  return stream;
}

EventStream read_event_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open event file '" + path + "'");
  return read_event_csv(in);
}

void write_event_csv(std::ostream& out, const EventStream& stream) {
  out << "t_us,unit,polarity\n";
  for (const auto& e : stream.events) out << e.t_us << ',' << e.unit << ',' << e.polarity << '\n';
}

}  // namespace snnbench
