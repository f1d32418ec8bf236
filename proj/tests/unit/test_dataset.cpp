#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "snnbench/dataset.hpp"
#include "snnbench/error.hpp"

using namespace snnbench;
namespace fs = std::filesystem;

namespace {

void put_be32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

struct TmpDir {
  fs::path path;
  TmpDir() {
    path = fs::temp_directory_path() / ("snnbench_ds_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
};

// Two tiny 28x28 images with labels 3 and 9.
void write_idx(const fs::path& img, const fs::path& lab, std::uint32_t img_magic = 2051,
               std::uint32_t lab_magic = 2049) {
  std::vector<unsigned char> i, l;
  put_be32(i, img_magic);
  put_be32(i, 2);
  put_be32(i, 28);
  put_be32(i, 28);
  for (int k = 0; k < 2 * 784; ++k) i.push_back(static_cast<unsigned char>(k % 256));
  put_be32(l, lab_magic);
  put_be32(l, 2);
  l.push_back(3);
  l.push_back(9);
  write_bytes(img, i);
  write_bytes(lab, l);
}

EncoderConfig event_cfg() {
  EncoderConfig c;
  c.scheme = EncoderScheme::event;
  c.window_ms = 150.0;
  return c;
}

}  // namespace

TEST_CASE("IDX files load and normalize by 255") {
  TmpDir d;
  write_idx(d.path / "img", d.path / "lab");
  const Dataset ds = load_mnist_idx((d.path / "img").string(), (d.path / "lab").string());
  CHECK(ds.size() == 2);
  CHECK(ds.n_features == 784);
  CHECK(ds.labels == std::vector<int>{3, 9});
  CHECK(ds.x[0] == 0.0);
  CHECK(ds.x[255] == 1.0);
  CHECK(ds.x[784] == static_cast<double>(784 % 256) / 255.0);
  CHECK(ds.is_static());
  CHECK(ds.head(1).size() == 1);
  CHECK(ds.head(1).x.size() == 784);
  CHECK(ds.head(10).size() == 2);
}

TEST_CASE("IDX magic numbers and truncation are checked") {
  TmpDir d;
  write_idx(d.path / "img", d.path / "lab", 2049, 2049);
  CHECK_THROWS_AS(load_mnist_idx((d.path / "img").string(), (d.path / "lab").string()), FormatError);
  write_idx(d.path / "img", d.path / "lab", 2051, 2051);
  CHECK_THROWS_AS(load_mnist_idx((d.path / "img").string(), (d.path / "lab").string()), FormatError);
  write_bytes(d.path / "short", {0, 0, 8, 3});
  CHECK_THROWS_AS(load_mnist_idx((d.path / "short").string(), (d.path / "lab").string()), FormatError);
  CHECK_THROWS_AS(load_mnist_idx((d.path / "missing").string(), (d.path / "lab").string()), FormatError);
  CHECK_THROWS_AS(load_mnist_dir((d.path / "nowhere").string()), FormatError);
}

TEST_CASE("rate-encoded samples depend only on seed, stream and index") {
  Dataset ds;
  ds.n_features = 4;
  ds.n_classes = 2;
  ds.x = {0.1, 0.9, 0.5, 1.0, 0.0, 0.3, 0.7, 0.2};
  ds.labels = {0, 1};
  EncoderConfig c;
  CHECK(encode_sample(ds, 1, c, kEvalStream) == encode_sample(ds, 1, c, kEvalStream));
  CHECK_FALSE(encode_sample(ds, 0, c, kEvalStream) == encode_sample(ds, 0, c, 5));
  c.scheme = EncoderScheme::event;
  CHECK_THROWS_AS(encode_sample(ds, 0, c), ConfigError);
}

TEST_CASE("synthetic events are deterministic") {
  SyntheticEventOptions o;
  const EventSet a = make_synthetic_events(4, 40, 7, o);
  const EventSet b = make_synthetic_events(4, 40, 7, o);
  const EventSet c = make_synthetic_events(4, 40, 8, o);
  CHECK(a.streams == b.streams);
  CHECK(a.labels == b.labels);
  CHECK_FALSE(a.streams == c.streams);
  for (const auto& s : a.streams) {
    CHECK(s.events.size() == o.events_per_sample);
    for (std::size_t i = 1; i < s.events.size(); ++i) CHECK(s.events[i - 1].t_us <= s.events[i].t_us);
    for (const auto& e : s.events) {
      CHECK(e.unit < o.input_size);
      CHECK(e.t_us < 150000);
    }
  }
  CHECK_THROWS_AS(make_synthetic_events(1, 10, 1, o), ConfigError);
}

TEST_CASE("synthetic classes are separable by a nearest-centroid readout") {
  SyntheticEventOptions o;
  o.events_per_sample = 60;
  const std::size_t classes = 4;
  const EventSet set = make_synthetic_events(classes, 200, 3, o);
  const Dataset ds = events_to_dataset(set, event_cfg(), "synthetic");
  CHECK(ds.n_features == 64);
  CHECK_FALSE(ds.is_static());
  // Features: spikes per (unit, 10-step bin).
  const std::size_t bins = 15;
  auto feat = [&](std::size_t i) {
    std::vector<double> f(ds.n_features * bins, 0.0);
    const auto& r = ds.rasters[i];
    for (std::size_t t = 0; t < r.n_steps(); ++t)
      for (std::size_t u = 0; u < r.n_units(); ++u)
        if (r.at(u, t)) f[u * bins + t / 10] += 1;
    return f;
  };
  std::vector<std::vector<double>> centroid(classes, std::vector<double>(ds.n_features * bins, 0.0));
  std::vector<int> n(classes, 0);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto f = feat(i);
    const auto k = static_cast<std::size_t>(ds.labels[i]);
    for (std::size_t j = 0; j < f.size(); ++j) centroid[k][j] += f[j];
    ++n[k];
  }
  for (std::size_t k = 0; k < classes; ++k)
    for (auto& x : centroid[k]) x /= n[k];
  int correct = 0;
  for (std::size_t i = 100; i < 200; ++i) {
    const auto f = feat(i);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t k = 0; k < classes; ++k) {
      double d = 0;
      for (std::size_t j = 0; j < f.size(); ++j) d += (f[j] - centroid[k][j]) * (f[j] - centroid[k][j]);
      if (d < best_d) best_d = d, best = k;
    }
    correct += best == static_cast<std::size_t>(ds.labels[i]);
  }
  CHECK(correct >= 95);
}
