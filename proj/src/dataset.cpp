#include "snnbench/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "snnbench/error.hpp"

namespace snnbench {

Dataset Dataset::head(std::size_t n) const {
  if (n >= size()) return *this;
  Dataset out;
  out.name = name;
  out.n_features = n_features;
  out.n_classes = n_classes;
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  if (is_static())
    out.x.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n * n_features));
  else
    out.rasters.assign(rasters.begin(), rasters.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

SpikeRaster encode_sample(const Dataset& ds, std::size_t i, const EncoderConfig& cfg,
                          std::uint64_t stream) {
  if (!ds.is_static()) return ds.rasters[i];
  switch (cfg.scheme) {
    case EncoderScheme::rate: {
      Rng rng(mix_seed(cfg.seed, stream, i));
      return encode_rate(ds.features(i), cfg, rng);
    }
    case EncoderScheme::latency:
      return encode_latency(ds.features(i), cfg);
    case EncoderScheme::event:
      break;
  }
  throw ConfigError("encode_sample: event scheme requires an event dataset");
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

Dataset load_mnist_idx(const std::string& image_path, const std::string& label_path) {
  const auto img = read_file(image_path);
  const auto lab = read_file(label_path);
  if (img.size() < 16) throw FormatError("IDX images: truncated header in '" + image_path + "'");
  if (lab.size() < 8) throw FormatError("IDX labels: truncated header in '" + label_path + "'");
  if (be32(img, 0) != 2051)
    throw FormatError("IDX images: bad magic " + std::to_string(be32(img, 0)) + " (expected 2051)");
  if (be32(lab, 0) != 2049)
    throw FormatError("IDX labels: bad magic " + std::to_string(be32(lab, 0)) + " (expected 2049)");
  const std::size_t n = be32(img, 4);
  const std::size_t rows = be32(img, 8);
  const std::size_t cols = be32(img, 12);
  const std::size_t n_labels = be32(lab, 4);
  if (rows != 28 || cols != 28)
    throw FormatError("IDX images: expected 28x28 images, got " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  if (n != n_labels)
    throw FormatError("IDX: image count " + std::to_string(n) + " != label count " +
                      std::to_string(n_labels));
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + n * pixels) throw FormatError("IDX images: truncated data");
  if (lab.size() < 8 + n) throw FormatError("IDX labels: truncated data");

  Dataset ds;
  ds.name = "mnist";
  ds.n_features = pixels;
  ds.n_classes = 10;
  ds.x.resize(n * pixels);
  for (std::size_t i = 0; i < n * pixels; ++i) ds.x[i] = static_cast<double>(img[16 + i]) / 255.0;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = lab[8 + i];
    if (y > 9) throw FormatError("IDX labels: label " + std::to_string(y) + " out of range");
    ds.labels[i] = y;
  }
  return ds;
}

DatasetSplit load_mnist_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  auto pick = [&](const std::string& stem) {
    for (const char* suffix : {"-ubyte", ".idx"}) {
      const auto p = root / (stem + suffix);
      if (fs::exists(p)) return p.string();
    }
    throw FormatError("MNIST file '" + stem + "-ubyte' not found in '" + dir + "'");
  };
  DatasetSplit split;
  split.train = load_mnist_idx(pick("train-images-idx3"), pick("train-labels-idx1"));
  split.test = load_mnist_idx(pick("t10k-images-idx3"), pick("t10k-labels-idx1"));
  return split;
}

EventSet make_synthetic_events(std::size_t classes, std::size_t samples, std::uint64_t seed,
                               const SyntheticEventOptions& opts) {
  if (classes < 2) throw ConfigError("make_synthetic_events: need at least 2 classes");
  if (opts.input_size == 0) throw ConfigError("make_synthetic_events: input_size must be >= 1");
  if (opts.disjoint_units && opts.input_size < classes)
    throw ConfigError("make_synthetic_events: disjoint units need input_size >= classes");
  const auto window_us = static_cast<std::int64_t>(std::llround(opts.window_ms * 1000.0));

  // One motif per class: a fixed list of (unit, time) events.
  std::vector<std::vector<Event>> motifs(classes);
  const std::size_t block = opts.input_size / classes;
  for (std::size_t k = 0; k < classes; ++k) {
    Rng rng(mix_seed(seed, 0x6d6f74ULL, k));
    for (std::size_t e = 0; e < opts.events_per_sample; ++e) {
      Event ev;
      if (opts.disjoint_units)
        ev.unit = static_cast<std::uint32_t>(k * block + rng() % block);
      else
        ev.unit = static_cast<std::uint32_t>(rng() % opts.input_size);
      ev.t_us = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(window_us));
      ev.polarity = (rng() & 1) ? 1 : -1;
      motifs[k].push_back(ev);
    }
  }

  EventSet set;
  set.input_size = opts.input_size;
  set.n_classes = classes;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t k = s % classes;
    Rng rng(mix_seed(seed, 0x736d70ULL, s));
    EventStream stream;
    for (Event ev : motifs[k]) {
      if (opts.jitter_us > 0.0) {
        const double jitter = (2.0 * uniform01(rng) - 1.0) * opts.jitter_us;
        ev.t_us = std::clamp<std::int64_t>(ev.t_us + std::llround(jitter), 0, window_us - 1);
      }
      stream.events.push_back(ev);
    }
    std::stable_sort(stream.events.begin(), stream.events.end(),
                     [](const Event& a, const Event& b) { return a.t_us < b.t_us; });
    set.streams.push_back(std::move(stream));
    set.labels.push_back(static_cast<int>(k));
  }
  return set;
}

Dataset events_to_dataset(const EventSet& set, const EncoderConfig& cfg, const std::string& name) {
  Dataset ds;
  ds.name = name;
  ds.n_classes = set.n_classes;
  ds.n_features = cfg.split_polarity ? 2 * set.input_size : set.input_size;
  for (std::size_t i = 0; i < set.streams.size(); ++i) {
    auto windows = encode_events(set.streams[i], set.input_size, cfg);
    ds.rasters.push_back(std::move(windows.front()));
    ds.labels.push_back(set.labels[i]);
  }
  return ds;
}

}  // namespace snnbench
