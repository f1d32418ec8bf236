#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snnbench/codec.hpp"
#include "snnbench/network.hpp"

namespace snnbench {

// A labelled dataset. Static data (MNIST) keeps normalized intensities and is
// spike-encoded on demand; event data keeps one pre-binned raster per sample.
struct Dataset {
  std::string name;
  std::size_t n_features = 0;
  std::size_t n_classes = 10;
  std::vector<double> x;
  std::vector<SpikeRaster> rasters;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool is_static() const { return rasters.empty(); }
  std::span<const double> features(std::size_t i) const {
    return {x.data() + i * n_features, n_features};
  }

  // First n samples (or all if n >= size()).
  Dataset head(std::size_t n) const;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

// Encoding stream reserved for evaluation, shared by every model family so
// test inputs are identical across families.
inline constexpr std::uint64_t kEvalStream = 0x7e57'e7a1ULL;

// Spike raster for sample i. Static samples are encoded with cfg and a seed
// derived from (cfg.seed, stream, i), so a given (stream, i) always yields the
// same raster.
SpikeRaster encode_sample(const Dataset& ds, std::size_t i, const EncoderConfig& cfg,
                          std::uint64_t stream = 0);

// IDX image/label pair; pixels are divided by 255.
Dataset load_mnist_idx(const std::string& image_path, const std::string& label_path);

// Standard file names inside dir: train-images-idx3-ubyte etc.
DatasetSplit load_mnist_dir(const std::string& dir);

struct SyntheticEventOptions {
  std::size_t input_size = 64;
  std::size_t events_per_sample = 40;
  double window_ms = 150.0;
  double jitter_us = 2000.0;
  // Each class draws its motif units from its own block of input units.
  bool disjoint_units = false;
};

struct EventSet {
  std::vector<EventStream> streams;
  std::vector<int> labels;
  std::size_t input_size = 0;
  std::size_t n_classes = 0;
};

// Class-conditioned spatiotemporal event motifs with timing jitter;
// deterministic for a given seed.
EventSet make_synthetic_events(std::size_t classes, std::size_t samples, std::uint64_t seed,
                               const SyntheticEventOptions& opts = {});

// Bins every stream (first window only) into a raster dataset.
Dataset events_to_dataset(const EventSet& set, const EncoderConfig& cfg, const std::string& name);

}  // namespace snnbench
